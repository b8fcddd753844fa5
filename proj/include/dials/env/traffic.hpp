#pragma once

#include <vector>

#include "dials/core/environment.hpp"

namespace dials::env {

struct TrafficConfig {
  int grid_side = 2;
  int local_slots = 4;     // slots per incoming and per outgoing local lane
  int link_capacity = 4;   // cars buffered on the road between two neighbourhoods
  double spawn_prob = 0.3; // per boundary link, per step
  int horizon = 100;
};

/// Discrete traffic-signal grid. Each intersection owns four incoming and four
/// outgoing lanes of `local_slots` cells; cars drive straight through. The road
/// between two neighbourhoods (and the entry road at the network edge) is a
/// counter of waiting cars capped at `link_capacity`; cars that find it full
/// are dropped.
///
/// Local layout (width 8L + 1), L = local_slots:
///   [incoming N,E,S,W][k], k = 0 at the lane head, L - 1 at the stop line;
///   [outgoing N,E,S,W][k], k = 0 next to the intersection;
///   phase (0 = north-south green, 1 = east-west green).
/// Incoming from direction d means the car arrives from side d; it leaves
/// through the outgoing lane on the opposite side.
///
/// All cell moves are synchronous: a car advances iff its target cell was empty
/// at the start of the step. Order within a step: the action (0 keep, 1 switch)
/// updates the phase, cars move, link counters absorb departures, boundary
/// links spawn. Influence source d is 1 iff the link feeding incoming lane d
/// holds a car at the start of the step; such a car enters the lane head when
/// the head is empty.
class Traffic final : public Environment {
 public:
  static constexpr int kActions = 2;

  explicit Traffic(TrafficConfig cfg);

  const TrafficConfig& config() const { return cfg_; }

  std::string name() const override { return "traffic"; }
  int num_agents() const override { return cfg_.grid_side * cfg_.grid_side; }
  int num_actions(AgentId) const override { return kActions; }
  int horizon() const override { return cfg_.horizon; }

  GlobalState reset(Rng& rng) const override;
  GlobalStep step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const override;
  LocalState extract_local(const GlobalState& s, AgentId i) const override;
  InfluenceSourceValue extract_influence_sources(const GlobalState& s, AgentId i) const override;
  std::vector<int> influence_domains(AgentId) const override { return {2, 2, 2, 2}; }

  LocalState local_reset(AgentId i, Rng& rng) const override;
  LocalStep local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                       Rng& rng) const override;
  double local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u) const override;

  int observation_size(AgentId) const override { return local_width(); }
  void observe(AgentId i, const LocalState& x, Rng& rng, std::span<double> out) const override;
  int local_feature_size(AgentId) const override { return local_width(); }
  void local_features(AgentId i, const LocalState& x, std::span<double> out) const override;

  int local_width() const { return 8 * cfg_.local_slots + 1; }
  int incoming(int d, int k) const { return d * cfg_.local_slots + k; }
  int outgoing(int d, int k) const { return (4 + d) * cfg_.local_slots + k; }
  int phase_index() const { return 8 * cfg_.local_slots; }
  /// Offset of link counter (i, d) in the global state: the road feeding agent i's incoming lane d.
  int link_index(AgentId i, int d) const { return num_agents() * local_width() + 4 * i.index() + d; }
  /// Neighbour on side d, or -1 at the network edge.
  int neighbour(AgentId i, int d) const;

 private:
  struct Moves {
    LocalState next;
    int moved = 0;
    int present = 0;
    std::vector<bool> departed;  // per outgoing side: a car left the region
  };
  // Region dynamics shared by both simulators; `feed[d]` says a car waits to enter lane d.
  Moves advance(const LocalState& x, Action a, const std::vector<bool>& feed) const;
  void check_state(const LocalState& x) const;

  TrafficConfig cfg_;
};

}  // namespace dials::env
