#include "dials/env/traffic.hpp"

#include <algorithm>

namespace dials::env {

namespace {

constexpr int kDr[4] = {-1, 0, 1, 0};  // N, E, S, W
constexpr int kDc[4] = {0, 1, 0, -1};

int opposite(int d) { return (d + 2) % 4; }
bool green(int phase, int d) { return phase == 0 ? (d == 0 || d == 2) : (d == 1 || d == 3); }

}  // namespace

Traffic::Traffic(TrafficConfig cfg) : cfg_(cfg) {
  require(cfg_.grid_side >= 1, "traffic: grid_side must be >= 1");
  require(cfg_.local_slots >= 1, "traffic: local_slots must be >= 1");
  require(cfg_.link_capacity >= 1, "traffic: link_capacity must be >= 1");
  require(cfg_.horizon >= 1, "traffic: horizon must be >= 1");
  require(cfg_.spawn_prob >= 0.0 && cfg_.spawn_prob <= 1.0, "traffic: spawn_prob must lie in [0, 1]");
}

int Traffic::neighbour(AgentId i, int d) const {
  const int g = cfg_.grid_side;
  const int r = i.index() / g + kDr[d];
  const int c = i.index() % g + kDc[d];
  if (r < 0 || r >= g || c < 0 || c >= g) return -1;
  return r * g + c;
}

void Traffic::check_state(const LocalState& x) const {
  require(static_cast<int>(x.values.size()) == local_width(), "traffic: malformed local state");
}

GlobalState Traffic::reset(Rng&) const {
  GlobalState s;
  s.variables.assign(static_cast<size_t>(num_agents() * (local_width() + 4)), 0);
  return s;
}

Traffic::Moves Traffic::advance(const LocalState& x, Action a, const std::vector<bool>& feed) const {
  check_state(x);
  require(a >= 0 && a < kActions, "traffic: invalid action " + std::to_string(a));
  const int L = cfg_.local_slots;
  const auto& v = x.values;
  Moves m{x, 0, 0, std::vector<bool>(4, false)};
  auto& n = m.next.values;
  const int phase = a == 1 ? 1 - v[phase_index()] : v[phase_index()];
  n[phase_index()] = phase;
  for (int k = 0; k < 8 * L; ++k) m.present += v[k];

  for (int d = 0; d < 4; ++d) {
    // outgoing lanes drain towards the region edge
    if (v[outgoing(d, L - 1)]) {
      n[outgoing(d, L - 1)] = 0;
      m.departed[d] = true;
      ++m.moved;
    }
    for (int k = L - 2; k >= 0; --k) {
      if (v[outgoing(d, k)] && !v[outgoing(d, k + 1)]) {
        n[outgoing(d, k)] = 0;
        n[outgoing(d, k + 1)] = 1;
        ++m.moved;
      }
    }
    // stop line: cross into the opposite outgoing lane on green
    const int exit = outgoing(opposite(d), 0);
    if (v[incoming(d, L - 1)] && green(phase, d) && !v[exit]) {
      n[incoming(d, L - 1)] = 0;
      n[exit] = 1;
      ++m.moved;
    }
    for (int k = L - 2; k >= 0; --k) {
      if (v[incoming(d, k)] && !v[incoming(d, k + 1)]) {
        n[incoming(d, k)] = 0;
        n[incoming(d, k + 1)] = 1;
        ++m.moved;
      }
    }
    if (feed[d] && !v[incoming(d, 0)]) n[incoming(d, 0)] = 1;
  }
  return m;
}

GlobalStep Traffic::step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const {
  const int n = num_agents();
  const int w = local_width();
  require(static_cast<int>(actions.size()) == n, "traffic: joint action has " + std::to_string(actions.size()) +
                                                     " entries, expected " + std::to_string(n));
  require(s.variables.size() == static_cast<size_t>(n * (w + 4)), "traffic: malformed global state");
  GlobalStep out{s, std::vector<double>(static_cast<size_t>(n), 0.0)};
  auto& v = out.next.variables;

  std::vector<std::vector<bool>> departed(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const AgentId id(i);
    std::vector<bool> feed(4);
    for (int d = 0; d < 4; ++d) feed[d] = s.variables[link_index(id, d)] > 0;
    Moves m = advance(extract_local(s, id), actions[i], feed);
    std::copy(m.next.values.begin(), m.next.values.end(), v.begin() + i * w);
    out.rewards[i] = static_cast<double>(m.moved) / std::max(1, m.present);
    for (int d = 0; d < 4; ++d) {
      if (feed[d] && !s.variables[i * w + incoming(d, 0)]) --v[link_index(id, d)];
    }
    departed[i] = std::move(m.departed);
  }
  // departures join the road into the neighbour's lane arriving from our side;
  // applied after every entry so the capacity cap sees the settled count
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 4; ++d) {
      const int j = neighbour(AgentId(i), d);
      if (departed[i][d] && j >= 0) {
        int32_t& link = v[link_index(AgentId(j), opposite(d))];
        link = std::min(link + 1, cfg_.link_capacity);
      }
    }
  }
  // entry roads at the network edge, one draw per boundary link in index order
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 4; ++d) {
      if (neighbour(AgentId(i), d) >= 0) continue;
      if (rng.bernoulli(cfg_.spawn_prob)) {
        int32_t& link = v[link_index(AgentId(i), d)];
        link = std::min(link + 1, cfg_.link_capacity);
      }
    }
  }
  return out;
}

LocalState Traffic::extract_local(const GlobalState& s, AgentId i) const {
  check_agent(i);
  const int w = local_width();
  require(s.variables.size() == static_cast<size_t>(num_agents() * (w + 4)), "traffic: malformed global state");
  LocalState x;
  x.values.assign(s.variables.begin() + i.index() * w, s.variables.begin() + (i.index() + 1) * w);
  return x;
}

InfluenceSourceValue Traffic::extract_influence_sources(const GlobalState& s, AgentId i) const {
  check_agent(i);
  InfluenceSourceValue u;
  u.values.resize(4);
  for (int d = 0; d < 4; ++d) u.values[d] = s.variables[link_index(i, d)] > 0 ? 1 : 0;
  return u;
}

LocalState Traffic::local_reset(AgentId i, Rng&) const {
  check_agent(i);
  LocalState x;
  x.values.assign(static_cast<size_t>(local_width()), 0);
  return x;
}

LocalStep Traffic::local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u, Rng&) const {
  check_agent(i);
  require(u.values.size() == 4, "traffic: influence value must have 4 components");
  std::vector<bool> feed(4);
  for (int d = 0; d < 4; ++d) {
    require(u.values[d] == 0 || u.values[d] == 1, "traffic: influence flags are binary");
    feed[d] = u.values[d] == 1;
  }
  const Moves m = advance(x, a, feed);
  return LocalStep{m.next, static_cast<double>(m.moved) / std::max(1, m.present)};
}

double Traffic::local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue&) const {
  check_agent(i);
  const Moves m = advance(x, a, std::vector<bool>(4, false));
  return static_cast<double>(m.moved) / std::max(1, m.present);
}

void Traffic::observe(AgentId i, const LocalState& x, Rng&, std::span<double> out) const {
  local_features(i, x, out);
}

void Traffic::local_features(AgentId, const LocalState& x, std::span<double> out) const {
  check_state(x);
  require(out.size() == x.values.size(), "traffic: feature buffer size");
  for (size_t k = 0; k < out.size(); ++k) out[k] = x.values[k];
}

}  // namespace dials::env
