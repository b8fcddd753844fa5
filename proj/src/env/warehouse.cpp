#include "dials/env/warehouse.hpp"

#include <algorithm>

namespace dials::env {

namespace {

constexpr int kDr[4] = {-1, 1, 0, 0};  // up, down, left, right
constexpr int kDc[4] = {0, 0, -1, 1};

}  // namespace

int Warehouse::shelf_at(int row, int col) {
  const bool corner_row = row == 0 || row == kRegion - 1;
  const bool corner_col = col == 0 || col == kRegion - 1;
  if (corner_row && corner_col) return -1;
  if (row == 0) return col - 1;
  if (col == kRegion - 1) return 3 + row - 1;
  if (row == kRegion - 1) return 6 + col - 1;
  if (col == 0) return 9 + row - 1;
  return -1;
}

std::pair<int, int> Warehouse::shelf_cell(int k) {
  const int edge = k / 3;
  const int offset = k % 3 + 1;
  switch (edge) {
    case kNorth: return {0, offset};
    case kEast: return {offset, kRegion - 1};
    case kSouth: return {kRegion - 1, offset};
    default: return {offset, 0};
  }
}

Warehouse::Warehouse(WarehouseConfig cfg) : cfg_(cfg) {
  require(cfg_.grid_side >= 1, "warehouse: grid_side must be >= 1");
  require(cfg_.horizon >= 1, "warehouse: horizon must be >= 1");
  require(cfg_.item_prob >= 0.0 && cfg_.item_prob <= 1.0, "warehouse: item_prob must lie in [0, 1]");
  const int g = cfg_.grid_side;
  const int horizontal = (g + 1) * g * 3;  // shelves on rows 4R, split per region column
  const int total = 2 * horizontal;
  shelf_row_.resize(total);
  shelf_col_.resize(total);
  for (int big_r = 0; big_r <= g; ++big_r) {
    for (int c = 0; c < g; ++c) {
      for (int k = 0; k < 3; ++k) {
        const int idx = (big_r * g + c) * 3 + k;
        shelf_row_[idx] = 4 * big_r;
        shelf_col_[idx] = 4 * c + 1 + k;
      }
    }
  }
  for (int big_c = 0; big_c <= g; ++big_c) {
    for (int r = 0; r < g; ++r) {
      for (int k = 0; k < 3; ++k) {
        const int idx = horizontal + (big_c * g + r) * 3 + k;
        shelf_row_[idx] = 4 * r + 1 + k;
        shelf_col_[idx] = 4 * big_c;
      }
    }
  }
  const int n = num_agents();
  local_to_global_.resize(n);
  neighbours_.resize(n);
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      const int i = r * g + c;
      for (int k = 0; k < 3; ++k) {
        local_to_global_[i][kNorth * 3 + k] = (r * g + c) * 3 + k;
        local_to_global_[i][kSouth * 3 + k] = ((r + 1) * g + c) * 3 + k;
        local_to_global_[i][kWest * 3 + k] = horizontal + (c * g + r) * 3 + k;
        local_to_global_[i][kEast * 3 + k] = horizontal + ((c + 1) * g + r) * 3 + k;
      }
      neighbours_[i] = {r > 0 ? i - g : -1, c + 1 < g ? i + 1 : -1, r + 1 < g ? i + g : -1, c > 0 ? i - 1 : -1};
    }
  }
}

GlobalState Warehouse::reset(Rng&) const {
  GlobalState s;
  s.variables.assign(static_cast<size_t>(items_offset() + num_shelf_cells()), 0);
  for (int i = 0; i < num_agents(); ++i) {
    s.variables[2 * i] = kRegion / 2;
    s.variables[2 * i + 1] = kRegion / 2;
  }
  return s;
}

GlobalStep Warehouse::step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const {
  const int n = num_agents();
  require(static_cast<int>(actions.size()) == n, "warehouse: joint action has " + std::to_string(actions.size()) +
                                                     " entries, expected " + std::to_string(n));
  require(s.variables.size() == static_cast<size_t>(items_offset() + num_shelf_cells()),
          "warehouse: malformed global state");
  GlobalStep out{s, std::vector<double>(static_cast<size_t>(n), 0.0)};
  auto& v = out.next.variables;
  const int items = items_offset();

  // (1) collection; iterating in index order lets the lowest index claim a shared cell
  for (int i = 0; i < n; ++i) {
    const int k = shelf_at(v[2 * i], v[2 * i + 1]);
    if (k < 0) continue;
    const int g = local_to_global_[i][k];
    if (v[items + g] != 0) {
      v[items + g] = 0;
      out.rewards[i] = cfg_.reward_per_item;
    }
  }
  // (2) movement
  for (int i = 0; i < n; ++i) {
    const Action a = actions[i];
    require(a >= 0 && a < kActions, "warehouse: invalid action " + std::to_string(a));
    const int r = v[2 * i] + kDr[a];
    const int c = v[2 * i + 1] + kDc[a];
    if (r >= 0 && r < kRegion && c >= 0 && c < kRegion) {
      v[2 * i] = r;
      v[2 * i + 1] = c;
    }
  }
  // (3) spawning; one draw per empty cell in global shelf order
  for (int g = 0; g < num_shelf_cells(); ++g) {
    if (v[items + g] == 0 && rng.bernoulli(cfg_.item_prob)) v[items + g] = 1;
  }
  return out;
}

LocalState Warehouse::extract_local(const GlobalState& s, AgentId i) const {
  check_agent(i);
  const int a = i.index();
  LocalState x;
  x.values.resize(kLocalWidth);
  x.values[0] = s.variables[2 * a];
  x.values[1] = s.variables[2 * a + 1];
  for (int k = 0; k < kShelves; ++k) x.values[2 + k] = s.variables[items_offset() + local_to_global_[a][k]];
  return x;
}

InfluenceSourceValue Warehouse::extract_influence_sources(const GlobalState& s, AgentId i) const {
  check_agent(i);
  InfluenceSourceValue u;
  u.values.assign(4, 0);
  for (int d = 0; d < 4; ++d) {
    const int j = neighbours_[i.index()][d];
    if (j < 0) continue;
    // the neighbour sees this edge as its opposite edge; cell order along the edge agrees
    const int k = shelf_at(s.variables[2 * j], s.variables[2 * j + 1]);
    const int opposite = (d + 2) % 4;
    if (k >= 0 && k / 3 == opposite) u.values[d] = k % 3 + 1;
  }
  return u;
}

LocalState Warehouse::local_reset(AgentId i, Rng&) const {
  check_agent(i);
  LocalState x;
  x.values.assign(kLocalWidth, 0);
  x.values[0] = kRegion / 2;
  x.values[1] = kRegion / 2;
  return x;
}

int Warehouse::collect_reward(AgentId i, const LocalState& x, const InfluenceSourceValue& u,
                              std::vector<int32_t>* items) const {
  require(x.values.size() == static_cast<size_t>(kLocalWidth), "warehouse: malformed local state");
  require(u.values.size() == 4, "warehouse: influence value must have 4 components");
  const int own = shelf_at(x.values[0], x.values[1]);
  int reward = 0;
  if (own >= 0 && x.values[2 + own] != 0) {
    const int d = own / 3;
    const bool contested = u.values[d] == own % 3 + 1;
    // a phantom neighbour predicted on a boundary edge ranks after agent i
    const int rival = neighbours_[i.index()][d];
    const bool rival_wins = contested && rival >= 0 && rival < i.index();
    reward = rival_wins ? 0 : 1;
  }
  if (items != nullptr) {
    if (own >= 0) (*items)[2 + own] = 0;
    for (int d = 0; d < 4; ++d) {
      require(u.values[d] >= 0 && u.values[d] <= 3, "warehouse: influence component out of range");
      if (u.values[d] > 0) (*items)[2 + 3 * d + u.values[d] - 1] = 0;
    }
  }
  return reward;
}

LocalStep Warehouse::local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                                Rng& rng) const {
  check_agent(i);
  require(a >= 0 && a < kActions, "warehouse: invalid action " + std::to_string(a));
  LocalStep out{x, 0.0};
  auto& v = out.next.values;
  out.reward = cfg_.reward_per_item * collect_reward(i, x, u, &v);
  const int r = v[0] + kDr[a];
  const int c = v[1] + kDc[a];
  if (r >= 0 && r < kRegion && c >= 0 && c < kRegion) {
    v[0] = r;
    v[1] = c;
  }
  for (int k = 0; k < kShelves; ++k) {
    if (v[2 + k] == 0 && rng.bernoulli(cfg_.item_prob)) v[2 + k] = 1;
  }
  return out;
}

double Warehouse::local_reward(AgentId i, const LocalState& x, Action, const InfluenceSourceValue& u) const {
  check_agent(i);
  return cfg_.reward_per_item * collect_reward(i, x, u, nullptr);
}

void Warehouse::observe(AgentId i, const LocalState& x, Rng&, std::span<double> out) const {
  local_features(i, x, out);
}

void Warehouse::local_features(AgentId, const LocalState& x, std::span<double> out) const {
  require(out.size() == static_cast<size_t>(kRegion * kRegion + kShelves), "warehouse: feature buffer size");
  std::fill(out.begin(), out.end(), 0.0);
  out[x.values[0] * kRegion + x.values[1]] = 1.0;
  for (int k = 0; k < kShelves; ++k) out[kRegion * kRegion + k] = x.values[2 + k];
}

}  // namespace dials::env
