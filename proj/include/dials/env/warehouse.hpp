#pragma once

#include <array>
#include <utility>
#include <vector>

#include "dials/core/environment.hpp"

namespace dials::env {

struct WarehouseConfig {
  int grid_side = 2;          // robots per side
  double item_prob = 0.02;    // per empty shelf cell, per step
  int horizon = 100;
  double reward_per_item = 1.0;
};

/// Warehouse commissioning: an N x N team of robots, each confined to a 5x5
/// region. Neighbouring regions share their boundary row/column, so every
/// 3-cell shelf edge of a region is shared with the neighbour on that side.
///
/// Local layout (width 14): [row, col, item_0 .. item_11]. Shelf cells are
/// numbered per edge, N (0,1)(0,2)(0,3) -> 0..2, E (1,4)(2,4)(3,4) -> 3..5,
/// S (4,1)(4,2)(4,3) -> 6..8, W (1,0)(2,0)(3,0) -> 9..11.
///
/// Influence sources: one component per edge (N, E, S, W). 0 means the
/// neighbour is not on that edge's shelf cells; k + 1 means it stands on the
/// edge's k-th cell.
///
/// Step order, identical in both simulators: (1) every robot standing on an
/// active shelf cell collects it, the lower agent index winning a shared cell;
/// (2) robots move, moves leaving the region are no-ops; (3) every empty shelf
/// cell spawns an item with probability item_prob.
class Warehouse final : public Environment {
 public:
  static constexpr int kRegion = 5;
  static constexpr int kShelves = 12;
  static constexpr int kLocalWidth = 2 + kShelves;
  static constexpr int kActions = 4;  // up, down, left, right
  enum Direction { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

  explicit Warehouse(WarehouseConfig cfg);

  const WarehouseConfig& config() const { return cfg_; }

  std::string name() const override { return "warehouse"; }
  int num_agents() const override { return cfg_.grid_side * cfg_.grid_side; }
  int num_actions(AgentId) const override { return kActions; }
  int horizon() const override { return cfg_.horizon; }

  GlobalState reset(Rng& rng) const override;
  GlobalStep step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const override;
  LocalState extract_local(const GlobalState& s, AgentId i) const override;
  InfluenceSourceValue extract_influence_sources(const GlobalState& s, AgentId i) const override;
  std::vector<int> influence_domains(AgentId) const override { return {4, 4, 4, 4}; }

  LocalState local_reset(AgentId i, Rng& rng) const override;
  LocalStep local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                       Rng& rng) const override;
  double local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u) const override;

  int observation_size(AgentId) const override { return kRegion * kRegion + kShelves; }
  void observe(AgentId i, const LocalState& x, Rng& rng, std::span<double> out) const override;
  int local_feature_size(AgentId) const override { return kRegion * kRegion + kShelves; }
  void local_features(AgentId i, const LocalState& x, std::span<double> out) const override;

  // Layout helpers, public for tests and trace tooling.
  int num_shelf_cells() const { return static_cast<int>(shelf_row_.size()); }
  int items_offset() const { return 2 * num_agents(); }
  /// Global shelf index of agent i's local shelf cell k.
  int global_shelf(AgentId i, int k) const { return local_to_global_[static_cast<size_t>(i.index())][k]; }
  /// Neighbour across edge d, or -1 at the warehouse boundary.
  int neighbour(AgentId i, int d) const { return neighbours_[static_cast<size_t>(i.index())][d]; }
  /// Local shelf index of the cell at region coordinates (row, col), or -1.
  static int shelf_at(int row, int col);
  static std::pair<int, int> shelf_cell(int k);

 private:
  int collect_reward(AgentId i, const LocalState& x, const InfluenceSourceValue& u, std::vector<int32_t>* items) const;

  WarehouseConfig cfg_;
  std::vector<std::array<int, kShelves>> local_to_global_;
  std::vector<std::array<int, 4>> neighbours_;
  std::vector<int> shelf_row_, shelf_col_;  // global board coordinates per shelf cell
};

}  // namespace dials::env
