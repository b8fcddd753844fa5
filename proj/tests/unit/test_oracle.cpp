#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "dials/oracle/toys.hpp"
#include "dials/oracle/verify.hpp"
#include "stats.hpp"

using namespace dials;
using namespace dials::oracle;

namespace {

JointPolicy random_joint(const TabularFposg& m, uint64_t seed) {
  JointPolicy jp;
  for (int j = 0; j < m.num_agents(); ++j)
    jp.push_back(std::make_shared<RandomPolicy>(mix64(seed * 31 + j), m.agent(j).num_actions));
  return jp;
}

ToyOptions small(int horizon = 3) {
  ToyOptions o;
  o.horizon = horizon;
  o.cost_budget = 2e5;
  return o;
}

/// Expected sum of agent i's rewards in the global model, by enumerating every
/// trajectory (states, joint actions, all observations).
double global_return(const TabularFposg& m, const JointPolicy& jp, int agent) {
  const int n = m.num_agents();
  double total = 0.0;
  std::function<void(int, int, std::vector<HistoryKey>&, double)> rec = [&](int t, int s,
                                                                           std::vector<HistoryKey>& aoh, double p) {
    const int J = m.num_joint_actions();
    for (int ja = 0; ja < J; ++ja) {
      double pa = p;
      for (int j = 0; j < n; ++j) pa *= jp[j]->probs(aoh[j])[m.agent_action(ja, j)];
      if (pa == 0.0) continue;
      total += pa * m.reward(agent, m.local_index(s, agent), m.agent_action(ja, agent));
      if (t + 1 >= m.horizon()) continue;
      for (const Transition& tr : m.transitions(s, ja)) {
        const int O0 = m.agent(0).num_observations, O1 = m.agent(1).num_observations;
        for (int o0 = 0; o0 < O0; ++o0)
          for (int o1 = 0; o1 < O1; ++o1) {
            const double q = pa * tr.p * m.observation_prob(0, m.local_index(tr.next, 0), o0) *
                             m.observation_prob(1, m.local_index(tr.next, 1), o1);
            if (q == 0.0) continue;
            auto next = aoh;
            next[0].push_back(m.agent_action(ja, 0));
            next[0].push_back(o0);
            next[1].push_back(m.agent_action(ja, 1));
            next[1].push_back(o1);
            rec(t + 1, tr.next, next, q);
          }
      }
    }
  };
  REQUIRE(n == 2);
  for (int s = 0; s < m.num_states(); ++s) {
    if (m.initial_prob(s) == 0.0) continue;
    for (int o0 = 0; o0 < m.agent(0).num_observations; ++o0)
      for (int o1 = 0; o1 < m.agent(1).num_observations; ++o1) {
        const double p = m.initial_prob(s) * m.observation_prob(0, m.local_index(s, 0), o0) *
                         m.observation_prob(1, m.local_index(s, 1), o1);
        if (p == 0.0) continue;
        std::vector<HistoryKey> aoh{{o0}, {o1}};
        rec(0, s, aoh, p);
      }
  }
  return total;
}

/// One enumerated IALM trajectory prefix at step t.
struct IalmVisit {
  HistoryKey aoh, alsh;
  double p;  // joint probability of observations and local states given the actions (times policy weights)
};

/// Enumerates IALM trajectories of agent i under influence `inf`. Actions are
/// weighted by `policy` or, when null, every action gets weight 1 so the
/// masses are P(o-seq, l | a-seq).
void enumerate_ialm(const TabularFposg& m, int agent, const InfluenceFunction& inf, const TabularPolicy* policy,
                    const std::function<void(const IalmVisit&, const std::vector<int>& xs,
                                             const std::vector<int>& as)>& visit) {
  const int X = m.num_local_states(agent), O = m.agent(agent).num_observations, A = m.agent(agent).num_actions;
  std::function<void(IalmVisit&, std::vector<int>&, std::vector<int>&)> rec = [&](IalmVisit& v, std::vector<int>& xs,
                                                                                  std::vector<int>& as) {
    visit(v, xs, as);
    if (static_cast<int>(xs.size()) >= m.horizon()) return;
    const auto row = inf(v.alsh);
    for (int a = 0; a < A; ++a) {
      const double pa = policy ? policy->probs(v.aoh)[a] : 1.0;
      if (pa == 0.0) continue;
      std::vector<double> px(static_cast<size_t>(X), 0.0);
      for (int u = 0; u < inf.num_values(); ++u)
        for (const Transition& tr : m.local_transitions(agent, xs.back(), u, a)) px[tr.next] += row[u] * tr.p;
      for (int x = 0; x < X; ++x)
        for (int o = 0; o < O; ++o) {
          const double q = v.p * pa * px[x] * m.observation_prob(agent, x, o);
          if (q == 0.0) continue;
          IalmVisit nv{v.aoh, v.alsh, q};
          nv.aoh.push_back(a);
          nv.aoh.push_back(o);
          nv.alsh.push_back(a);
          nv.alsh.push_back(x);
          xs.push_back(x);
          as.push_back(a);
          rec(nv, xs, as);
          xs.pop_back();
          as.pop_back();
        }
    }
  };
  for (int x = 0; x < X; ++x)
    for (int o = 0; o < O; ++o) {
      const double p = m.local_initial(agent, x) * m.observation_prob(agent, x, o);
      if (p == 0.0) continue;
      IalmVisit v{{o}, {x}, p};
      std::vector<int> xs{x}, as;
      rec(v, xs, as);
    }
}

std::shared_ptr<const InfluenceFunction> exact_for(const TabularFposg& m, int agent, uint64_t seed) {
  JointPolicy jp = random_joint(m, seed);
  jp[agent] = nullptr;
  return std::make_shared<CompletedInfluence>(std::make_shared<ExactInfluence>(compute_exact_influence(m, jp, agent)));
}

}  // namespace

TEST_CASE("tabular model validation") {
  const TabularFposg toy = random_toy(1, small());
  SUBCASE("json round trip preserves every table") {
    std::stringstream ss;
    save_model(ss, toy);
    const TabularFposg back = load_model(ss);
    REQUIRE(back.num_states() == toy.num_states());
    for (int s = 0; s < toy.num_states(); ++s) {
      CHECK(back.initial_prob(s) == toy.initial_prob(s));
      for (int a = 0; a < toy.num_joint_actions(); ++a) {
        const auto t1 = toy.transitions(s, a), t2 = back.transitions(s, a);
        REQUIRE(t1.size() == t2.size());
        for (size_t k = 0; k < t1.size(); ++k) CHECK(t1[k].p == t2[k].p);
      }
    }
  }
  SUBCASE("local variable with an external parent is rejected") {
    auto vars = toy.variables();
    auto agents = toy.agents();
    vars[0].state_parents.push_back(static_cast<int>(vars.size()) - 1);  // x_0 <- y
    vars[0].cpt.resize(vars[0].cpt.size() * 2, 0.5);
    CHECK_THROWS_AS(TabularFposg(vars, agents, 3), ContractViolation);
  }
  SUBCASE("local variable driven by another agent's action is rejected") {
    auto vars = toy.variables();
    vars[0].action_parents.push_back(1);
    vars[0].cpt.resize(vars[0].cpt.size() * 2, 0.5);
    CHECK_THROWS_AS(TabularFposg(vars, toy.agents(), 3), ContractViolation);
  }
  SUBCASE("caps") {
    CHECK_THROWS_AS(TabularFposg(toy.variables(), toy.agents(), 6), ContractViolation);
    auto vars = toy.variables();
    vars[0].cpt[0] += 0.25;
    CHECK_THROWS_AS(TabularFposg(vars, toy.agents(), 3), ContractViolation);
  }
  SUBCASE("malformed documents name the problem") {
    std::stringstream bad(R"({"format": "dials-tabular-fposg", "version": 2})");
    CHECK_THROWS_AS(load_model(bad), ContractViolation);
  }
}

TEST_CASE("recursive influence equals brute-force enumeration") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    ToyOptions opt = small(2 + static_cast<int>(seed % 3));
    opt.coupling = Coupling::kAny;
    const TabularFposg m = random_toy(seed, opt);
    const JointPolicy jp = random_joint(m, seed + 100);
    for (int i = 0; i < m.num_agents(); ++i) {
      const auto a = compute_exact_influence(m, jp, i), b = brute_force_influence(m, jp, i);
      CHECK(linf_distance(a, b) <= 1e-10);
      for (const auto& [l, row] : a.table()) {
        double s = 0.0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("deterministic toy gives identical point masses") {
  ToyOptions opt = small(4);
  opt.deterministic = true;
  const TabularFposg m = random_toy(5, opt);
  JointPolicy jp;
  for (int j = 0; j < 2; ++j) jp.push_back(std::make_shared<RandomPolicy>(j + 9, 2, true));
  const auto a = compute_exact_influence(m, jp, 0), b = brute_force_influence(m, jp, 0);
  // the recursion also covers ALSHs that agent 0's own deterministic policy never plays
  CHECK(b.table().size() <= a.table().size());
  for (const auto& [l, row] : b.table()) {
    REQUIRE(a.contains(l));
    CHECK(a(l) == row);
    for (double v : row) CHECK((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("own policy does not enter the influence") {
  const TabularFposg m = random_toy(3, small());
  JointPolicy jp = random_joint(m, 4);
  const auto with = compute_exact_influence(m, jp, 0);
  jp[0] = nullptr;
  CHECK(linf_distance(with, compute_exact_influence(m, jp, 0)) == 0.0);
}

TEST_CASE("monte carlo influence frequencies") {
  const TabularFposg m = random_toy(2, small());
  const JointPolicy jp = random_joint(m, 2);
  const Lemma1Report rep = verify_lemma1(m, jp, 1, 20000, 77);
  CHECK(rep.agree);
  CHECK(rep.monte_carlo.cells_tested > 0);
  CHECK(rep.monte_carlo.point_mass_mismatches == 0);
  CHECK(rep.monte_carlo.passed);
}

TEST_CASE("transition independence") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    ToyOptions ind = small();
    ind.coupling = Coupling::kIndependent;
    const TabularFposg m = random_toy(seed, ind);
    CHECK(m.transition_independent(0));
    std::vector<JointPolicy> pols;
    for (uint64_t k = 0; k < 20; ++k) pols.push_back(random_joint(m, 1000 + k));
    const Corollary1Report rep = verify_corollary1(m, 0, pols);
    CHECK(rep.holds);
    CHECK_FALSE(rep.coupling_detected);

    ToyOptions cpl = ind;
    cpl.coupling = Coupling::kCoupled;
    const TabularFposg c = random_toy(seed, cpl);
    CHECK_FALSE(c.transition_independent(0));
    CHECK_THROWS_AS(verify_corollary1(c, 0, pols), ContractViolation);
    CHECK(influence_spread(c, 0, pols) > 1e-6);
  }
}

TEST_CASE("ialm value equals the global return under the exact influence") {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const TabularFposg m = random_toy(seed + 20, small());
    JointPolicy jp = random_joint(m, seed);
    for (int i = 0; i < 2; ++i) {
      JointPolicy others = jp;
      others[i] = nullptr;
      auto inf = std::make_shared<CompletedInfluence>(
          std::make_shared<ExactInfluence>(compute_exact_influence(m, others, i)));
      const IalmTree tree(m, i, {inf}, BeliefSemantics::kShared);
      const PolicyTable pi = tree.tabulate(*jp[i]);
      CHECK(tree.value(0, pi, tree.evaluate(0, pi)) == doctest::Approx(global_return(m, jp, i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("ialm q table equals trajectory enumeration") {
  const TabularFposg m = random_toy(31, small());
  const auto inf = std::make_shared<RandomInfluence>(8, m.num_influence_values(0), 2.0);
  const IalmTree tree(m, 0, {inf}, BeliefSemantics::kShared);
  const RandomPolicy pol(12, 2);
  const QTable q = tree.evaluate(0, tree.tabulate(pol));

  std::map<std::pair<HistoryKey, int>, std::pair<double, double>> acc;  // (num, den)
  enumerate_ialm(m, 0, *inf, &pol, [&](const IalmVisit& v, const std::vector<int>& xs, const std::vector<int>& as) {
    if (static_cast<int>(xs.size()) < m.horizon()) return;
    // complete trajectory up to the last state; close it with each final action
    const auto last = pol.probs(v.aoh);
    for (int a = 0; a < 2; ++a) {
      const double p = v.p * last[a];
      std::vector<int> acts = as;
      acts.push_back(a);
      HistoryKey h;
      for (int t = 0; t < m.horizon(); ++t) {
        h = HistoryKey(v.aoh.begin(), v.aoh.begin() + 2 * t + 1);
        double ret = 0.0;
        for (int k = t; k < m.horizon(); ++k) ret += m.reward(0, xs[k], acts[k]);
        auto& cell = acc[{h, acts[t]}];
        cell.first += p * ret;
        cell.second += p;
      }
    }
  });
  int matched = 0;
  for (int n = 0; n < tree.num_nodes(); ++n)
    for (int a = 0; a < 2; ++a) {
      auto it = acc.find({tree.node(n).aoh, a});
      if (it == acc.end() || it->second.second <= 0.0) continue;
      CHECK(q[n][a] == doctest::Approx(it->second.first / it->second.second).epsilon(1e-10));
      ++matched;
    }
  CHECK(matched == 2 * tree.num_nodes());
}

TEST_CASE("ialm closed forms") {
  ToyOptions opt = small(1);
  const TabularFposg m = random_toy(40, opt);
  const auto inf = std::make_shared<RandomInfluence>(1, 2);
  const IalmTree tree(m, 0, {inf}, BeliefSemantics::kShared);
  const QTable q = tree.optimal(0);
  for (int r : tree.roots()) {
    const int o = tree.node(r).obs;
    double norm = 0.0;
    std::vector<double> expect(2, 0.0);
    for (int x = 0; x < m.num_local_states(0); ++x) {
      const double w = m.local_initial(0, x) * m.observation_prob(0, x, o);
      norm += w;
      for (int a = 0; a < 2; ++a) expect[a] += w * m.reward(0, x, a);
    }
    for (int a = 0; a < 2; ++a) CHECK(q[r][a] == doctest::Approx(expect[a] / norm).epsilon(1e-12));
  }

  auto agents = m.agents();
  for (auto& r : agents[0].reward) r = 0.0;
  const TabularFposg zero(m.variables(), agents, 3);
  const IalmTree zt(zero, 0, {inf}, BeliefSemantics::kShared);
  for (const auto& row : zt.optimal(0))
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("backward induction matches monte carlo global return") {
  const TabularFposg m = random_toy(50, small());
  JointPolicy jp = random_joint(m, 50);
  JointPolicy others = jp;
  others[0] = nullptr;
  auto inf =
      std::make_shared<CompletedInfluence>(std::make_shared<ExactInfluence>(compute_exact_influence(m, others, 0)));
  const IalmTree tree(m, 0, {inf}, BeliefSemantics::kShared);
  const PolicyTable pi = tree.tabulate(*jp[0]);
  const double v = tree.value(0, pi, tree.evaluate(0, pi));
  Rng rng(99);
  std::vector<double> returns;
  for (int k = 0; k < 100000; ++k) {
    const Rollout r = sample_rollout(m, jp, rng);
    double g = 0.0;
    for (const auto& step : r.rewards) g += step[0];
    returns.push_back(g);
  }
  const auto [mean, se] = test::mean_se(returns);
  CHECK(std::abs(mean - v) <= 3.0 * se);
}

TEST_CASE("influence distance") {
  const TabularFposg m = random_toy(60, small());
  const auto i1 = std::make_shared<RandomInfluence>(1, 2, 1.5);
  SUBCASE("identical influences") {
    const IalmTree tree(m, 0, {i1, i1}, BeliefSemantics::kShared);
    CHECK(influence_distance(tree) == 0.0);
  }
  SUBCASE("opposite point masses give two") {
    struct Fixed final : InfluenceFunction {
      std::vector<double> row;
      int num_values() const override { return 2; }
      std::vector<double> operator()(const HistoryKey&) const override { return row; }
    };
    auto a = std::make_shared<Fixed>(), b = std::make_shared<Fixed>();
    a->row = {1.0, 0.0};
    b->row = {0.0, 1.0};
    const IalmTree tree(m, 0, {a, b}, BeliefSemantics::kShared);
    CHECK(influence_distance(tree) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("matches a naive per-history loop") {
    const auto i2 = std::make_shared<RandomInfluence>(2, 2, 1.5);
    const IalmTree tree(m, 0, {i1, i2}, BeliefSemantics::kShared);
    const MixtureInfluence mix(i1, i2, 0.5);
    // P(o-seq, l | a-seq) by enumeration, then the premise per history
    std::map<HistoryKey, std::map<HistoryKey, double>> joint;
    enumerate_ialm(m, 0, mix, nullptr,
                   [&](const IalmVisit& v, const std::vector<int>&, const std::vector<int>&) {
                     joint[v.aoh][v.alsh] += v.p;
                   });
    double xi = 0.0;
    for (const auto& [h, ls] : joint) {
      double mass = 0.0, s = 0.0;
      for (const auto& [l, p] : ls) mass += p;
      if (mass <= 1e-15) continue;
      for (const auto& [l, p] : ls) {
        const auto r1 = (*i1)(l), r2 = (*i2)(l);
        for (int u = 0; u < 2; ++u) s += p / mass * std::abs(r1[u] - r2[u]);
      }
      xi = std::max(xi, s);
    }
    CHECK(influence_distance(tree) == doctest::Approx(xi).epsilon(1e-12));
  }
}

TEST_CASE("policy set regimes") {
  const TabularFposg m = random_toy(70, small(2));
  const auto inf = std::make_shared<RandomInfluence>(1, 2);
  const IalmTree tree(m, 0, {inf}, BeliefSemantics::kShared);
  const PolicySet all = policy_set(tree, 1, 1e6);
  CHECK(all.regime == "deterministic-exhaustive");
  CHECK(all.policies.size() == static_cast<size_t>(std::lround(std::pow(2.0, tree.num_nodes()))));
  const PolicySet some = policy_set(tree, 1, 1.0, 17);
  CHECK(some.regime == "random-stochastic");
  CHECK(some.policies.size() == 17);
}

TEST_CASE("value bounds under the shared belief") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const TabularFposg m = random_toy(seed + 80, small());
    const auto i1 = exact_for(m, 0, seed);
    const auto i2 = std::make_shared<RandomInfluence>(seed, 2, 1.0 + seed % 3);
    VerifyOptions opt;
    opt.seed = seed;
    const Lemma2Report l2 = verify_lemma2(m, 0, i1, i2, opt);
    CHECK(l2.holds);
    CHECK(l2.max_ratio <= 1.0 + 1e-9);
    const LemmaA3Report a3 = verify_lemma_a3(m, 0, i1, i2, opt);
    CHECK(a3.holds);
    CHECK(a3.min_slack >= -1e-9);
    const Theorem2Report t2 = verify_theorem2(m, 0, i1, i2, opt);
    CHECK(t2.implication_holds);
  }
}

TEST_CASE("small perturbation keeps the optimal policy") {
  int met = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const TabularFposg m = random_toy(seed + 90, small());
    const auto i1 = exact_for(m, 0, seed);
    const auto i2 = std::make_shared<MixtureInfluence>(i1, std::make_shared<RandomInfluence>(seed, 2), 0.999);
    const Theorem2Report t2 = verify_theorem2(m, 0, i1, i2, VerifyOptions{});
    CHECK(t2.implication_holds);
    if (t2.precondition_met) {
      ++met;
      CHECK(t2.same_argmax);
    }
  }
  CHECK(met > 0);
}

TEST_CASE("per-model beliefs can exceed the value bound") {
  // x' = u; o reports x with a tiny error rate. I1 makes u = 1 rare, I2 rules
  // it out. After observing "1", I1's own posterior puts x = 1 almost surely
  // while I2's keeps x = 0, so Q gaps at depth 1 are near 2 although the
  // premise is only 2 eps at the root and 0 afterwards.
  const double eps = 1e-2, delta = 1e-4;
  VariableSpec x{"x", 2, {1.0, 0.0}, {0, 1}, {0}, {}};
  for (int r = 0; r < 8; ++r) {
    const int u = (r / 2) % 2;  // rows ordered (x, u, a)
    x.cpt.push_back(u == 0 ? 1.0 : 0.0);
    x.cpt.push_back(u == 1 ? 1.0 : 0.0);
  }
  VariableSpec u{"u", 2, {1.0, 0.0}, {}, {}, {0.5, 0.5}};
  AgentSpec ag{"agent0", 2, {0}, {1}, 2, {1 - delta, delta, delta, 1 - delta}, {-1.0, 1.0, 1.0, -1.0}};
  const TabularFposg m({x, u}, {ag}, 2);

  struct ByLength final : InfluenceFunction {
    std::vector<double> first;
    int num_values() const override { return 2; }
    std::vector<double> operator()(const HistoryKey& l) const override {
      return l.size() == 1 ? first : std::vector<double>{0.5, 0.5};
    }
  };
  auto i1 = std::make_shared<ByLength>(), i2 = std::make_shared<ByLength>();
  i1->first = {1 - eps, eps};
  i2->first = {1.0, 0.0};

  VerifyOptions consistent;
  consistent.semantics = BeliefSemantics::kConsistent;
  const Lemma2Report bad = verify_lemma2(m, 0, i1, i2, consistent);
  CHECK(bad.xi == doctest::Approx(2 * eps));
  CHECK_FALSE(bad.holds);
  CHECK(bad.max_q_gap > 1.9);

  const Lemma2Report good = verify_lemma2(m, 0, i1, i2, VerifyOptions{});
  CHECK(good.holds);
  CHECK(good.xi == doctest::Approx(2 * eps));
}
