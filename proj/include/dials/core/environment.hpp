#pragma once

#include <span>
#include <string>
#include <vector>

#include "dials/core/rng.hpp"
#include "dials/core/types.hpp"

namespace dials {

struct GlobalStep {
  GlobalState next;
  std::vector<double> rewards;  // one per agent
};

struct LocalStep {
  LocalState next;
  double reward = 0.0;
};

/// Contract shared by the global simulator, the local simulators and the
/// tabular oracle bridge.
///
/// One object describes both simulators of an environment: the global
/// dynamics T over full states and, per agent, the local dynamics over
/// (x_i, u_i, a_i). Implementations are immutable after construction, so a
/// single instance may be read from several workers; all mutable simulation
/// state lives in the GlobalState / LocalState values and the Rng streams
/// passed in.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int num_agents() const = 0;
  virtual int num_actions(AgentId i) const = 0;
  virtual int horizon() const = 0;

  virtual GlobalState reset(Rng& rng) const = 0;
  /// Deterministic given (s, actions, rng stream position).
  virtual GlobalStep step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const = 0;

  virtual LocalState extract_local(const GlobalState& s, AgentId i) const = 0;
  virtual InfluenceSourceValue extract_influence_sources(const GlobalState& s, AgentId i) const = 0;
  /// Domain size of each influence-source component of agent i.
  virtual std::vector<int> influence_domains(AgentId i) const = 0;

  /// Initial local state of the local simulator (matches the projection of reset()).
  virtual LocalState local_reset(AgentId i, Rng& rng) const = 0;
  virtual LocalStep local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                               Rng& rng) const = 0;
  /// Reward of the step taken from x with action a while the influence sources hold u.
  virtual double local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u) const = 0;

  /// Size of the real-valued observation vector produced by observe().
  virtual int observation_size(AgentId i) const = 0;
  virtual void observe(AgentId i, const LocalState& x, Rng& rng, std::span<double> out) const = 0;

  /// Real-valued encoding of a local state used as influence-predictor input.
  virtual int local_feature_size(AgentId i) const = 0;
  virtual void local_features(AgentId i, const LocalState& x, std::span<double> out) const = 0;

 protected:
  void check_agent(AgentId i) const {
    require(i.index() >= 0 && i.index() < num_agents(), "invalid agent id " + std::to_string(i.index()));
  }
};

}  // namespace dials
