#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dials/oracle/ialm.hpp"

namespace dials::oracle {

/// How the "for all policies" quantifier was realized.
struct PolicySet {
  std::string regime;  // "deterministic-exhaustive" or "random-stochastic"
  std::vector<PolicyTable> policies;
};

/// Every deterministic policy over the tree when there are at most `cap` of
/// them, otherwise `samples` seeded random stochastic policies.
PolicySet policy_set(const IalmTree& tree, uint64_t seed, double cap = 1e4, int samples = 200);

struct Lemma1Report {
  int histories = 0;
  double linf = 0.0;  // recursion vs brute force
  bool agree = false;
  MonteCarloReport monte_carlo;
  bool holds = false;
};

struct Lemma2Report {
  BeliefSemantics semantics = BeliefSemantics::kShared;
  std::string regime;
  int num_policies = 0;
  double xi = 0.0;
  double reward_bound = 0.0;
  double max_q_gap = 0.0;
  double max_ratio = 0.0;  // max gap / bound over cells with a positive bound
  int violations = 0;
  bool holds = false;
};

struct LemmaA3Report {
  BeliefSemantics semantics = BeliefSemantics::kShared;
  double max_lhs = 0.0;          // max_{h,a} sum_o' |P1(o'|h,a) - P2(o'|h,a)|
  double max_lhs_local = 0.0;    // same over next local states
  double max_rhs = 0.0;
  double min_slack = 0.0;        // min_{h,a} rhs - lhs
  int violations = 0;
  bool holds = false;
};

struct Theorem2Report {
  BeliefSemantics semantics = BeliefSemantics::kShared;
  std::string regime;
  int num_policies = 0;
  double delta = 0.0;
  double two_delta = 0.0;
  double min_action_gap = 0.0;
  bool precondition_met = false;
  bool same_argmax = false;
  int argmax_mismatches = 0;
  bool implication_holds = false;
};

struct Corollary1Report {
  bool structurally_independent = false;
  int num_policies = 0;
  double max_pairwise_linf = 0.0;
  bool coupling_detected = false;  // some pair differs by more than 1e-6
  bool holds = false;
};

struct VerifyOptions {
  BeliefSemantics semantics = BeliefSemantics::kShared;
  uint64_t seed = 0;
  double deterministic_cap = 1e4;
  int random_policies = 200;
  double tolerance = 1e-9;
};

/// Recursion vs brute-force enumeration, plus the Monte-Carlo frequency check when rollouts > 0.
Lemma1Report verify_lemma1(const TabularFposg& model, const JointPolicy& policies, int agent, int rollouts,
                           uint64_t seed);

Lemma2Report verify_lemma2(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                           std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt = {});

LemmaA3Report verify_lemma_a3(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                              std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt = {});

Theorem2Report verify_theorem2(const TabularFposg& model, int agent, std::shared_ptr<const InfluenceFunction> i1,
                               std::shared_ptr<const InfluenceFunction> i2, const VerifyOptions& opt = {});

/// Max pairwise L-infinity distance between the exact influences induced by the joint policies.
double influence_spread(const TabularFposg& model, int agent, const std::vector<JointPolicy>& policies);

/// Throws ContractViolation when agent i's influence sources are reachable from another agent's action.
Corollary1Report verify_corollary1(const TabularFposg& model, int agent, const std::vector<JointPolicy>& policies);

nlohmann::json to_json(const MonteCarloReport& r);
nlohmann::json to_json(const Lemma1Report& r);
nlohmann::json to_json(const Lemma2Report& r);
nlohmann::json to_json(const LemmaA3Report& r);
nlohmann::json to_json(const Theorem2Report& r);
nlohmann::json to_json(const Corollary1Report& r);

}  // namespace dials::oracle
