#include "dials/core/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dials {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<uint32_t, 4> Rng::philox(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Rng::Rng(uint64_t key) : key_(key) {}

Rng Rng::derive(uint64_t run_seed, uint64_t agent_id, uint64_t stream_tag) {
  uint64_t k = mix64(run_seed);
  k = mix64(k ^ (agent_id * 0xA24BAED4963EE407ull));
  k = mix64(k ^ (stream_tag * 0x9FB21C651E98DF25ull));
  return Rng(k);
}

Rng Rng::split(uint64_t tag) const {
  return Rng(mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ull)));
}

void Rng::refill() {
  buf_ = philox(ctr_, {static_cast<uint32_t>(key_), static_cast<uint32_t>(key_ >> 32)});
  // 128-bit counter increment
  for (auto& w : ctr_) {
    if (++w != 0) break;
  }
  idx_ = 0;
}

Rng::result_type Rng::operator()() {
  if (idx_ == 4) refill();
  return buf_[idx_++];
}

uint64_t Rng::next_u64() {
  const uint64_t hi = (*this)();
  const uint64_t lo = (*this)();
  return (hi << 32) | lo;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  // Lemire's nearly-divisionless rejection
  const uint32_t range = static_cast<uint32_t>(n);
  uint64_t m = static_cast<uint64_t>((*this)()) * range;
  uint32_t low = static_cast<uint32_t>(m);
  if (low < range) {
    const uint32_t threshold = (0u - range) % range;
    while (low < threshold) {
      m = static_cast<uint64_t>((*this)()) * range;
      low = static_cast<uint32_t>(m);
    }
  }
  return static_cast<int>(m >> 32);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights must have positive mass");
  const double target = uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = static_cast<int>(k);
    if (target < acc) return last_positive;
  }
  return last_positive;
}

double Rng::exponential() {
  // 1 - u lies in (0, 1]
  return -std::log1p(-uniform());
}

}  // namespace dials
