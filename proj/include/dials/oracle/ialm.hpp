#pragma once

#include <memory>
#include <vector>

#include "dials/oracle/influence.hpp"

namespace dials::oracle {

/// How the belief P(l | h) over ALSHs is formed when two IALMs are compared.
enum class BeliefSemantics {
  /// Each IALM filters with its own influence: the exact value of each model.
  kConsistent,
  /// Both IALMs use one belief, the filter under the equal-weight mixture of
  /// the compared influences; the models then differ only in P(o'|h, a).
  kShared,
};

const char* to_string(BeliefSemantics s);

/// Q-values per AOH node: q[node][a].
using QTable = std::vector<std::vector<double>>;
/// Action distribution per AOH node.
using PolicyTable = std::vector<std::vector<double>>;

/// Agent i's action-observation-history tree in one or more IALMs that share
/// (X_i, U_i, T_i, O_i, R_i) and differ in their influence distributions.
/// Every node stores, per model, the belief over ALSHs, the expected reward of
/// each action and the next-observation distribution of each action, so any
/// policy can be evaluated by one backward pass.
class IalmTree {
 public:
  struct Node {
    int depth = 0;
    int parent = -1;
    int action = -1;   // action leading here
    int obs = 0;
    HistoryKey aoh;
    double path_prob = 0.0;  // P(o-sequence | action sequence) under the mixture
    std::vector<std::vector<int>> children;  // [a][o], -1 when unreachable
  };

  IalmTree(const TabularFposg& model, int agent, std::vector<std::shared_ptr<const InfluenceFunction>> influences,
           BeliefSemantics semantics);

  const TabularFposg& model() const { return model_; }
  int agent() const { return agent_; }
  int num_models() const { return static_cast<int>(influences_.size()); }
  int num_actions() const { return num_actions_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int n) const { return nodes_[n]; }
  const std::vector<int>& roots() const { return roots_; }
  BeliefSemantics semantics() const { return semantics_; }

  /// P(o^0) (model independent: x^0 does not depend on the influence).
  double root_prob(int n) const { return nodes_[n].path_prob; }
  bool reachable(int k, int n) const { return reachable_[k][n]; }
  const std::vector<std::pair<HistoryKey, double>>& belief(int k, int n) const { return belief_[k][n]; }
  /// Belief used for the influence-distance premise (mixture filter).
  const std::vector<std::pair<HistoryKey, double>>& mixture_belief(int n) const { return mix_belief_[n]; }
  double reward(int k, int n, int a) const { return reward_[k][n][a]; }
  /// P^k(o' | h, a), indexed [a][o'].
  double next_obs_prob(int k, int n, int a, int o) const { return next_[k][n][a][o]; }
  /// P^k(x' | h, a), indexed [a][x'].
  double next_local_prob(int k, int n, int a, int x) const { return next_x_[k][n][a][x]; }
  const std::vector<double>& influence_row(int k, const HistoryKey& alsh) const;

  PolicyTable tabulate(const TabularPolicy& pi) const;
  QTable evaluate(int k, const PolicyTable& pi) const;
  QTable optimal(int k) const;
  /// One-hot greedy policy; ties broken by lowest index within 1e-12.
  PolicyTable greedy(const QTable& q) const;
  /// Expected return from the start: sum_o0 P(o0) sum_a pi(a|o0) Q(o0, a).
  double value(int k, const PolicyTable& pi, const QTable& q) const;

 private:
  void expand(int n);

  const TabularFposg& model_;
  int agent_;
  int num_actions_;
  int num_obs_;
  std::vector<std::shared_ptr<const InfluenceFunction>> influences_;
  std::shared_ptr<const InfluenceFunction> mixture_;
  BeliefSemantics semantics_;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<std::vector<bool>> reachable_;
  std::vector<std::vector<std::vector<std::pair<HistoryKey, double>>>> belief_;
  std::vector<std::vector<std::pair<HistoryKey, double>>> mix_belief_;
  std::vector<std::vector<std::vector<double>>> reward_;
  std::vector<std::vector<std::vector<std::vector<double>>>> next_, next_x_;
  mutable std::vector<HistoryMap<std::vector<double>>> cache_;
  mutable HistoryMap<std::vector<double>> mix_cache_;
};

int argmax_lowest(const std::vector<double>& q, double tol = 1e-12);

/// Smallest xi with sum_{l,u} P(l|h) |I1 - I2| <= xi at every history h with
/// P(h) > 1e-15 (mixture belief); with a policy, only histories it reaches.
double influence_distance(const IalmTree& tree, const PolicyTable* policy = nullptr);

/// Per-history premise value sum_{l,u} P(l|h)|I1 - I2| using model k's belief (or the mixture when k < 0).
double premise_at(const IalmTree& tree, int n, int k = -1);

}  // namespace dials::oracle
