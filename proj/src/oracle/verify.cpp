#include "dials/oracle/verify.hpp"

#include <algorithm>
#include <cmath>

namespace dials::oracle {

PolicySet policy_set(const IalmTree& tree, uint64_t seed, double cap, int samples) {
  PolicySet set;
  const int A = tree.num_actions();
  const int m = tree.num_nodes();
  const double log_count = m * std::log(static_cast<double>(A));
  if (log_count <= std::log(cap) + 1e-12) {
    set.regime = "deterministic-exhaustive";
    const long count = std::lround(std::pow(static_cast<double>(A), m));
    for (long c = 0; c < count; ++c) {
      PolicyTable pi(static_cast<size_t>(m), std::vector<double>(A, 0.0));
      long rem = c;
      for (int n = 0; n < m; ++n) {
        pi[n][rem % A] = 1.0;
        rem /= A;
      }
      set.policies.push_back(std::move(pi));
    }
  } else {
    set.regime = "random-stochastic";
    for (int k = 0; k < samples; ++k)
      set.policies.push_back(tree.tabulate(RandomPolicy(mix64(seed + 0x9E37u * (k + 1)), A)));
  }
  return set;
}

namespace {

bool counts(const IalmTree& tree, int n) {
  if (tree.node(n).path_prob <= 1e-15) return false;
  for (int k = 0; k < tree.num_models(); ++k)
    if (!tree.reachable(k, n)) return false;
  return true;
}

/// Premise value at a history. Under consistent beliefs the belief P(l|h) is
/// ambiguous, so the most generous of the candidate beliefs is used.
double premise(const IalmTree& tree, int n) {
  double p = premise_at(tree, n, -1);
  if (tree.semantics() == BeliefSemantics::kConsistent)
    for (int k = 0; k < tree.num_models(); ++k) p = std::max(p, premise_at(tree, n, k));
  return p;
}

double xi_of(const IalmTree& tree) {
  double xi = 0.0;
  for (int n = 0; n < tree.num_nodes(); ++n)
    if (counts(tree, n)) xi = std::max(xi, premise(tree, n));
  return xi;
}

}  // namespace

Lemma1Report verify_lemma1(const TabularFposg& model, const JointPolicy& policies, int agent, int rollouts,
                           uint64_t seed) {
  JointPolicy full = policies;
  if (!full.at(agent)) full[agent] = std::make_shared<UniformPolicy>(model.agent(agent).num_actions);
  const ExactInfluence exact = compute_exact_influence(model, full, agent);
  const ExactInfluence brute = brute_force_influence(model, full, agent);
  Lemma1Report rep;
  rep.histories = static_cast<int>(exact.table().size());
  rep.linf = linf_distance(exact, brute);
  rep.agree = rep.linf <= 1e-10;
  if (rollouts > 0) {
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(agent), 0x4d43);
    rep.monte_carlo = monte_carlo_influence_check(model, full, agent, exact, rollouts, rng);
  } else {
    rep.monte_carlo.passed = true;
  }
  rep.holds = rep.agree && rep.monte_carlo.passed;
  return rep;
}

Lemma2Report verify_lemma2(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                           std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt) {
  const IalmTree tree(model, agent, {std::move(i1), std::move(i2)}, opt.semantics);
  const PolicySet set = policy_set(tree, opt.seed, opt.deterministic_cap, opt.random_policies);
  Lemma2Report rep;
  rep.semantics = opt.semantics;
  rep.regime = set.regime;
  rep.num_policies = static_cast<int>(set.policies.size());
  rep.xi = xi_of(tree);
  rep.reward_bound = model.reward_bound(agent);
  const int H = model.horizon();
  for (const auto& pi : set.policies) {
    const QTable q1 = tree.evaluate(0, pi), q2 = tree.evaluate(1, pi);
    for (int n = 0; n < tree.num_nodes(); ++n) {
      if (!counts(tree, n)) continue;
      const int t = tree.node(n).depth;
      const double bound = rep.reward_bound * (H - t) * (H - t + 1) / 2.0 * rep.xi;
      for (int a = 0; a < tree.num_actions(); ++a) {
        const double gap = std::abs(q1[n][a] - q2[n][a]);
        rep.max_q_gap = std::max(rep.max_q_gap, gap);
        if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, gap / bound);
        if (gap > bound + opt.tolerance) rep.violations++;
      }
    }
  }
  rep.holds = rep.violations == 0;
  return rep;
}

LemmaA3Report verify_lemma_a3(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                              std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt) {
  const IalmTree tree(model, agent, {std::move(i1), std::move(i2)}, opt.semantics);
  LemmaA3Report rep;
  rep.semantics = opt.semantics;
  rep.min_slack = std::numeric_limits<double>::infinity();
  const int O = model.agent(agent).num_observations;
  const int X = model.num_local_states(agent);
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (!counts(tree, n) || tree.node(n).depth + 1 >= model.horizon()) continue;
    const double rhs = premise(tree, n);
    rep.max_rhs = std::max(rep.max_rhs, rhs);
    for (int a = 0; a < tree.num_actions(); ++a) {
      double lhs = 0.0, lhs_x = 0.0;
      for (int o = 0; o < O; ++o) lhs += std::abs(tree.next_obs_prob(0, n, a, o) - tree.next_obs_prob(1, n, a, o));
      for (int x = 0; x < X; ++x)
        lhs_x += std::abs(tree.next_local_prob(0, n, a, x) - tree.next_local_prob(1, n, a, x));
      rep.max_lhs = std::max(rep.max_lhs, lhs);
      rep.max_lhs_local = std::max(rep.max_lhs_local, lhs_x);
      rep.min_slack = std::min(rep.min_slack, rhs - std::max(lhs, lhs_x));
      if (lhs > rhs + opt.tolerance || lhs_x > rhs + opt.tolerance) rep.violations++;
    }
  }
  if (!std::isfinite(rep.min_slack)) rep.min_slack = 0.0;
  rep.holds = rep.violations == 0;
  return rep;
}

Theorem2Report verify_theorem2(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                               std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt) {
  const IalmTree tree(model, agent, {std::move(i1), std::move(i2)}, opt.semantics);
  PolicySet set = policy_set(tree, opt.seed, opt.deterministic_cap, opt.random_policies);
  const QTable opt1 = tree.optimal(0), opt2 = tree.optimal(1);
  set.policies.push_back(tree.greedy(opt1));
  set.policies.push_back(tree.greedy(opt2));
  Theorem2Report rep;
  rep.semantics = opt.semantics;
  rep.regime = set.regime;
  rep.num_policies = static_cast<int>(set.policies.size());
  for (const auto& pi : set.policies) {
    const QTable q1 = tree.evaluate(0, pi), q2 = tree.evaluate(1, pi);
    for (int n = 0; n < tree.num_nodes(); ++n) {
      if (!counts(tree, n)) continue;
      for (int a = 0; a < tree.num_actions(); ++a) rep.delta = std::max(rep.delta, std::abs(q1[n][a] - q2[n][a]));
    }
  }
  rep.two_delta = 2.0 * rep.delta;
  rep.min_action_gap = std::numeric_limits<double>::infinity();
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (!counts(tree, n)) continue;
    const int best = argmax_lowest(opt1[n]);
    for (int a = 0; a < tree.num_actions(); ++a)
      if (a != best) rep.min_action_gap = std::min(rep.min_action_gap, opt1[n][best] - opt1[n][a]);
    if (argmax_lowest(opt2[n]) != best) rep.argmax_mismatches++;
  }
  rep.precondition_met = rep.min_action_gap > rep.two_delta + opt.tolerance;
  rep.same_argmax = rep.argmax_mismatches == 0;
  rep.implication_holds = !rep.precondition_met || rep.same_argmax;
  if (!std::isfinite(rep.min_action_gap)) rep.min_action_gap = 1e300;
  return rep;
}

double influence_spread(const TabularFposg& model, int agent, const std::vector<JointPolicy>& policies) {
  std::vector<ExactInfluence> infl;
  for (const auto& jp : policies) infl.push_back(compute_exact_influence(model, jp, agent));
  double d = 0.0;
  for (size_t a = 0; a < infl.size(); ++a)
    for (size_t b = a + 1; b < infl.size(); ++b) d = std::max(d, linf_distance(infl[a], infl[b]));
  return d;
}

Corollary1Report verify_corollary1(const TabularFposg& model, int agent, const std::vector<JointPolicy>& policies) {
  require(model.transition_independent(agent),
          "corollary 1 precondition violated: agent " + std::to_string(agent) +
              "'s influence sources depend on other agents' actions");
  Corollary1Report rep;
  rep.structurally_independent = true;
  rep.num_policies = static_cast<int>(policies.size());
  rep.max_pairwise_linf = influence_spread(model, agent, policies);
  rep.coupling_detected = rep.max_pairwise_linf > 1e-6;
  rep.holds = rep.max_pairwise_linf <= 1e-12;
  return rep;
}

using nlohmann::json;

json to_json(const MonteCarloReport& r) {
  return {{"rollouts", r.rollouts},
          {"cells_tested", r.cells_tested},
          {"cells_beyond_3se", r.cells_beyond_3se},
          {"max_abs_z", r.max_abs_z},
          {"point_mass_mismatches", r.point_mass_mismatches},
          {"passed", r.passed}};
}

json to_json(const Lemma1Report& r) {
  return {{"check", "lemma1"},          {"histories", r.histories}, {"linf", r.linf},
          {"agree", r.agree},           {"monte_carlo", to_json(r.monte_carlo)}, {"holds", r.holds}};
}

json to_json(const Lemma2Report& r) {
  return {{"check", "lemma2"},
          {"belief_semantics", to_string(r.semantics)},
          {"policy_regime", r.regime},
          {"num_policies", r.num_policies},
          {"xi", r.xi},
          {"reward_bound", r.reward_bound},
          {"max_q_gap", r.max_q_gap},
          {"max_gap_to_bound_ratio", r.max_ratio},
          {"violations", r.violations},
          {"holds", r.holds}};
}

json to_json(const LemmaA3Report& r) {
  return {{"check", "lemma_a3"},
          {"belief_semantics", to_string(r.semantics)},
          {"max_lhs", r.max_lhs},
          {"max_lhs_local", r.max_lhs_local},
          {"max_rhs", r.max_rhs},
          {"min_slack", r.min_slack},
          {"violations", r.violations},
          {"holds", r.holds}};
}

json to_json(const Theorem2Report& r) {
  return {{"check", "thm2"},
          {"belief_semantics", to_string(r.semantics)},
          {"policy_regime", r.regime},
          {"num_policies", r.num_policies},
          {"delta", r.delta},
          {"two_delta", r.two_delta},
          {"min_action_gap", r.min_action_gap},
          {"precondition_met", r.precondition_met},
          {"vacuous", !r.precondition_met},
          {"same_argmax", r.same_argmax},
          {"argmax_mismatches", r.argmax_mismatches},
          {"implication_holds", r.implication_holds}};
}

json to_json(const Corollary1Report& r) {
  return {{"check", "cor1"},
          {"structurally_independent", r.structurally_independent},
          {"num_policies", r.num_policies},
          {"max_pairwise_linf", r.max_pairwise_linf},
          {"coupling_detected", r.coupling_detected},
          {"holds", r.holds}};
}

}  // namespace dials::oracle
