#include <doctest.h>

#include <cmath>

#include "dials/learner/ppo.hpp"

using namespace dials;
using namespace dials::learner;

namespace {

/// Straight double loop over the definition, for comparison with the recursion.
void naive_gae(const Segment& s, double g, double l, std::vector<double>& adv) {
  const int L = s.length();
  adv.assign(static_cast<size_t>(L), 0.0);
  for (int t = 0; t < L; ++t) {
    for (int k = t; k < L; ++k) {
      const double next = k + 1 < L ? s.values[k + 1] : s.bootstrap;
      const double delta = s.rewards[k] + g * next - s.values[k];
      adv[t] += std::pow(g * l, k - t) * delta;
    }
  }
}

Segment random_segment(Rng& rng, int L) {
  Segment s;
  for (int t = 0; t < L; ++t) {
    s.actions.push_back(0);
    s.rewards.push_back(rng.uniform() * 2 - 1);
    s.values.push_back(rng.uniform() * 4 - 2);
  }
  s.bootstrap = rng.uniform();
  return s;
}

PpoBatch random_batch(const nn::Network& net, Rng& rng, int T, int B) {
  PpoBatch b;
  for (int t = 0; t < T; ++t) {
    b.xs.push_back(nn::Matrix::Random(net.spec().input, B));
    b.actions.emplace_back();
    b.logp_old.emplace_back();
    b.adv.emplace_back();
    b.ret.emplace_back();
    b.mask.emplace_back();
    for (int j = 0; j < B; ++j) {
      const bool valid = t < T - j % 2;  // odd columns are one step short
      b.actions[t].push_back(rng.uniform_int(net.spec().heads[0]));
      b.logp_old[t].push_back(std::log(0.2 + 0.3 * rng.uniform()));
      b.adv[t].push_back(rng.uniform() * 2 - 1);
      b.ret[t].push_back(rng.uniform() * 2 - 1);
      b.mask[t].push_back(valid ? 1 : 0);
      b.count += valid;
    }
  }
  b.h0 = nn::Matrix::Zero(net.state_size(), B);
  return b;
}

}  // namespace

TEST_CASE("gae") {
  std::vector<double> adv, ret;
  Segment zero;
  zero.actions.assign(5, 0);
  zero.rewards.assign(5, 0.0);
  zero.values.assign(5, 0.0);
  compute_gae(zero, 0.99, 0.95, adv, ret);
  for (double a : adv) CHECK(a == 0.0);

  Segment one;
  one.actions = {0};
  one.rewards = {1.0};
  one.values = {0.0};
  compute_gae(one, 1.0, 1.0, adv, ret);
  CHECK(adv[0] == 1.0);
  CHECK(ret[0] == 1.0);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Segment s = random_segment(rng, 1 + rng.uniform_int(16));
    const double g = 0.5 + 0.5 * rng.uniform(), l = 0.5 + 0.5 * rng.uniform();
    std::vector<double> want;
    naive_gae(s, g, l, want);
    compute_gae(s, g, l, adv, ret);
    for (int t = 0; t < s.length(); ++t) {
      CHECK(adv[t] == doctest::Approx(want[t]).epsilon(1e-10));
      CHECK(ret[t] == doctest::Approx(want[t] + s.values[t]).epsilon(1e-10));
    }
  }
}

TEST_CASE("ppo loss at the behaviour policy") {
  // rho = 1 everywhere, so the surrogate is -mean(A)
  nn::Network net({nn::Arch::kFeedforward, 3, 8, 8, {4}, true});
  Rng rng(6);
  net.init(rng);
  PpoBatch b = random_batch(net, rng, 1, 10);
  nn::Tape tape;
  net.forward(b.xs, b.h0, tape);
  const nn::Matrix p = nn::softmax(tape.logits[0][0]);
  double mean_adv = 0.0;
  for (int j = 0; j < 10; ++j) {
    b.logp_old[0][j] = std::log(p(b.actions[0][j], j));
    if (b.mask[0][j]) mean_adv += b.adv[0][j] / b.count;
  }
  const PpoLossParts parts = ppo_loss(net, b, PpoConfig{}, nullptr);
  CHECK(parts.policy == doctest::Approx(-mean_adv).epsilon(1e-12));
  CHECK(parts.clip_fraction == 0.0);
  CHECK(std::abs(parts.approx_kl) < 1e-12);
}

TEST_CASE("ppo loss gradient") {
  for (auto arch : {nn::Arch::kFeedforward, nn::Arch::kRecurrent}) {
    for (uint64_t seed = 1; seed <= 3; ++seed) {
      CAPTURE(seed);
      nn::Network net({arch, 4, 6, 5, {3}, true});
      Rng rng(seed);
      net.init(rng);
      const PpoBatch b = random_batch(net, rng, arch == nn::Arch::kRecurrent ? 4 : 1, 6);
      PpoConfig cfg;
      cfg.clip_eps = 0.3;
      nn::Vector grad = nn::Vector::Zero(net.num_params());
      ppo_loss(net, b, cfg, &grad);
      // the clip kink is measure zero; a random point is almost surely off it
      auto loss = [&](const nn::Vector& p) {
        nn::Network n2 = net;
        n2.params() = p;
        return ppo_loss(n2, b, cfg, nullptr).total;
      };
      CHECK(nn::gradient_check(loss, net.params(), grad, rng) <= 1e-4);
    }
  }
}

TEST_CASE("ppo agent basics") {
  PolicyShape shape{nn::Arch::kRecurrent, 8, 8};
  PpoConfig cfg;
  Rng init(3);
  PpoAgent agent(5, 4, shape, cfg, init);
  const std::vector<double> obs{1, 0, 0, 1, 0};

  SUBCASE("zero parameters give a uniform policy and zero value") {
    agent.net().params().setZero();
    double v = 1.0;
    for (double p : agent.probs(obs, &v)) CHECK(p == 0.25);
    CHECK(v == 0.0);
  }
  SUBCASE("actions are a function of the stream") {
    Rng init2(3);
    PpoAgent twin(5, 4, shape, cfg, init2);
    Rng a(11), b(11);
    for (int t = 0; t < 20; ++t) CHECK(agent.act(obs, a) == twin.act(obs, b));
  }
  SUBCASE("zero learning rate leaves parameters unchanged") {
    PpoConfig frozen = cfg;
    frozen.lr = 0.0;
    Rng init2(3);
    PpoAgent still(5, 4, shape, frozen, init2);
    const nn::Vector before = still.net().params();
    Rng rng(2);
    for (int ep = 0; ep < 3; ++ep) {
      still.reset();
      for (int t = 0; t < 50; ++t) {
        still.act(obs, rng);
        still.reward(1.0, t == 49);
      }
    }
    CHECK(still.updates() == 1);
    CHECK(still.net().params() == before);
  }
  SUBCASE("evaluation mode records nothing") {
    agent.set_training(false);
    Rng rng(2);
    for (int t = 0; t < 300; ++t) agent.act(obs, rng);
    CHECK(agent.updates() == 0);
  }
}

TEST_CASE("ppo solves a contextual bandit") {
  // two contexts; the rewarded action is 2 in context 0 and 0 in context 1
  for (auto arch : {nn::Arch::kFeedforward, nn::Arch::kRecurrent}) {
    PolicyShape shape{arch, 16, 16};
    PpoConfig cfg;
    cfg.lr = 3e-3;
    cfg.gamma = 0.1;  // later rewards do not depend on the action; keep their noise out of the returns
    Rng init(5);
    PpoAgent agent(2, 3, shape, cfg, init);
    Rng rng(7);
    Rng ctx_rng(8);
    for (int ep = 0; ep < 600; ++ep) {
      agent.reset();
      for (int t = 0; t < 10; ++t) {
        const int c = ctx_rng.uniform_int(2);
        const std::vector<double> obs{c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0};
        const Action a = agent.act(obs, rng);
        agent.reward(a == (c == 0 ? 2 : 0) ? 1.0 : 0.0, t == 9);
      }
    }
    CHECK(agent.updates() > 20);
    CHECK(agent.probs(std::vector<double>{1, 0})[2] >= 0.95);
    CHECK(agent.probs(std::vector<double>{0, 1})[0] >= 0.95);
  }
}
