#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dials/core/types.hpp"

namespace dials::oracle {

/// One discrete state variable of the DBN.
struct VariableSpec {
  std::string name;
  int domain = 2;
  std::vector<double> initial;     // independent prior, size domain
  std::vector<int> state_parents;  // variable indices at t-1
  std::vector<int> action_parents; // agent indices whose action at t-1 matters
  /// Rows indexed mixed-radix over (state parents..., action parents...), first
  /// parent most significant; each row holds `domain` probabilities.
  std::vector<double> cpt;
};

struct AgentSpec {
  std::string name;
  int num_actions = 2;
  std::vector<int> local;       // X_i
  std::vector<int> influence;   // U_i
  int num_observations = 2;
  std::vector<double> observation;  // [x_local][o]
  std::vector<double> reward;       // [x_local][a]
};

struct Transition {
  int next;
  double p;
};

/// Tiny local-form fPOSG held in explicit tables.
///
/// Construction validates every table, the size caps (|S| <= 512, H <= 5,
/// n <= 3) and the structural d-separation requirement: every variable of X_i
/// has its state parents inside X_i and U_i and no action parent other than i.
class TabularFposg {
 public:
  static constexpr int kMaxStates = 512;
  static constexpr int kMaxHorizon = 5;
  static constexpr int kMaxAgents = 3;

  TabularFposg(std::vector<VariableSpec> variables, std::vector<AgentSpec> agents, int horizon);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_joint_actions() const { return num_joint_actions_; }
  const VariableSpec& variable(int v) const { return vars_.at(static_cast<size_t>(v)); }
  const AgentSpec& agent(int i) const { return agents_.at(static_cast<size_t>(i)); }
  const std::vector<VariableSpec>& variables() const { return vars_; }
  const std::vector<AgentSpec>& agents() const { return agents_; }

  int value(int s, int v) const { return (s / strides_[v]) % vars_[v].domain; }
  int encode(std::span<const int> values) const;
  double initial_prob(int s) const { return initial_[static_cast<size_t>(s)]; }

  int joint_action(std::span<const int> actions) const;
  int agent_action(int joint, int i) const { return (joint / action_strides_[i]) % agents_[i].num_actions; }
  /// Sparse T(.|s, a) over global states.
  std::span<const Transition> transitions(int s, int joint_action) const;

  // Agent-local views, all indexed by mixed-radix joint indices.
  int num_local_states(int i) const { return local_sizes_[i]; }
  int num_influence_values(int i) const { return influence_sizes_[i]; }
  int local_index(int s, int i) const { return local_of_[static_cast<size_t>(i)][static_cast<size_t>(s)]; }
  int influence_index(int s, int i) const { return influence_of_[static_cast<size_t>(i)][static_cast<size_t>(s)]; }
  std::vector<int> local_values(int i, int x) const;
  double observation_prob(int i, int x, int o) const {
    return agents_[i].observation[static_cast<size_t>(x * agents_[i].num_observations + o)];
  }
  double reward(int i, int x, int a) const { return agents_[i].reward[static_cast<size_t>(x * agents_[i].num_actions + a)]; }
  /// max |R_i|.
  double reward_bound(int i) const;

  /// Local dynamics T_i(x'|x, u, a_i), sparse.
  std::span<const Transition> local_transitions(int i, int x, int u, int a) const;
  /// Prior over agent i's local state at t = 0.
  double local_initial(int i, int x) const { return local_initial_[i][static_cast<size_t>(x)]; }

  /// True when no directed path leads from another agent's action into U_i,
  /// which makes agent i's influence independent of the other policies.
  bool transition_independent(int i) const;

 private:
  void validate() const;
  void build_tables();
  double cpt_prob(int v, int s, int joint_action, int next_value) const;

  std::vector<VariableSpec> vars_;
  std::vector<AgentSpec> agents_;
  int horizon_;
  int num_states_ = 1;
  int num_joint_actions_ = 1;
  std::vector<int> strides_, action_strides_;
  std::vector<double> initial_;
  std::vector<std::vector<Transition>> trans_;  // [s * A + a]
  std::vector<int> local_sizes_, influence_sizes_;
  std::vector<std::vector<int>> local_of_, influence_of_;
  std::vector<std::vector<double>> local_initial_;
  std::vector<std::vector<std::vector<Transition>>> local_trans_;  // [i][(x * U + u) * A_i + a]
};

/// Reads the versioned JSON model document; throws ContractViolation with the offending field.
TabularFposg load_model(std::istream& in);
TabularFposg load_model_file(const std::string& path);
void save_model(std::ostream& out, const TabularFposg& model);

}  // namespace dials::oracle
