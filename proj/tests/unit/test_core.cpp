#include <doctest.h>

#include <array>
#include <set>

#include "dials/core/history.hpp"
#include "dials/core/rng.hpp"

using namespace dials;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(Rng::philox({0, 0, 0, 0}, {0, 0}) == std::array<uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Rng::philox({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  CHECK(Rng::philox({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = Rng::derive(7, 1, 2), b = Rng::derive(7, 1, 2);
  for (int k = 0; k < 100; ++k) CHECK(a() == b());
  std::set<uint64_t> keys;
  for (uint64_t agent = 0; agent < 16; ++agent)
    for (uint64_t tag = 0; tag < 16; ++tag) keys.insert(Rng::derive(7, agent, tag).key());
  CHECK(keys.size() == 256);
  Rng parent(3);
  const uint32_t first = Rng(3)();
  Rng child = parent.split(1);
  CHECK(parent() == first);  // split consumes nothing
  CHECK(child.key() != parent.key());
}

TEST_CASE("rng distributions") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0;
  std::array<int, 3> counts{};
  const std::array<double, 3> w{1.0, 2.0, 5.0};
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    counts[rng.categorical(w)]++;
    hits += rng.bernoulli(0.3);
    const int m = rng.uniform_int(7);
    REQUIRE(m >= 0);
    REQUIRE(m < 7);
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(counts[2] / double(n) == doctest::Approx(5.0 / 8).epsilon(0.01));
  CHECK(hits / double(n) == doctest::Approx(0.3).epsilon(0.02));
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("local history append semantics") {
  LocalHistory empty;
  CHECK(empty.empty());
  CHECK_THROWS_AS(empty.append(0, LocalState{{1}}), ContractViolation);

  LocalHistory h(LocalState{{1, 2}});
  CHECK(h.length() == 0);
  CHECK(h.num_states() == 1);
  const LocalHistory h1 = append_history(h, 3, LocalState{{4, 5}});
  CHECK(h.length() == 0);  // original untouched
  CHECK(h1.length() == 1);
  CHECK(h1.num_states() == 2);
  CHECK(h1.action(0) == 3);
  CHECK(h1.state_copy(1) == LocalState{{4, 5}});
  CHECK(h1.state_copy(0) == LocalState{{1, 2}});
  CHECK_THROWS_AS(append_history(h1, 0, LocalState{{1}}), ContractViolation);

  LocalHistory hh(LocalState{{0}});
  for (int t = 0; t < 10; ++t) hh.append(t % 2, LocalState{{t}});
  CHECK(hh.length() == 10);
  CHECK(hh.num_states() == 11);
}

TEST_CASE("observation history") {
  ObservationHistory h(2);
  h.append(1, 0);
  CHECK(h.length() == 1);
  CHECK(h.observation(1) == 0);
  CHECK(h.action(0) == 1);
}
