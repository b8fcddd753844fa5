#pragma once

#include "dials/core/environment.hpp"
#include "dials/oracle/model.hpp"

namespace dials::oracle {

/// Runs a tabular model through the common environment contract, so the
/// learning stack can be trained on toys whose influences are known exactly.
/// Global state = variable values; local state = {local joint index};
/// influence sources = {influence joint index}; observations and local
/// features are one-hot vectors.
class TabularEnvironment final : public Environment {
 public:
  explicit TabularEnvironment(const TabularFposg& model) : model_(model) {}

  const TabularFposg& model() const { return model_; }
  std::string name() const override { return "tabular"; }
  int num_agents() const override { return model_.num_agents(); }
  int num_actions(AgentId i) const override;
  int horizon() const override { return model_.horizon(); }

  GlobalState reset(Rng& rng) const override;
  GlobalStep step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const override;
  LocalState extract_local(const GlobalState& s, AgentId i) const override;
  InfluenceSourceValue extract_influence_sources(const GlobalState& s, AgentId i) const override;
  std::vector<int> influence_domains(AgentId i) const override;

  LocalState local_reset(AgentId i, Rng& rng) const override;
  LocalStep local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                       Rng& rng) const override;
  double local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u) const override;

  int observation_size(AgentId i) const override;
  void observe(AgentId i, const LocalState& x, Rng& rng, std::span<double> out) const override;
  int local_feature_size(AgentId i) const override;
  void local_features(AgentId i, const LocalState& x, std::span<double> out) const override;

  int state_index(const GlobalState& s) const;

 private:
  const TabularFposg& model_;
};

}  // namespace dials::oracle
