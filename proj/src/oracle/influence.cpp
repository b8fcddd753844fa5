#include "dials/oracle/influence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dials::oracle {

std::vector<double> ExactInfluence::operator()(const HistoryKey& alsh) const {
  const auto it = table_.find(alsh);
  if (it == table_.end()) throw ContractViolation("zero-probability history");
  return it->second;
}

std::vector<double> CompletedInfluence::operator()(const HistoryKey& alsh) const {
  if (base_->contains(alsh)) return (*base_)(alsh);
  return std::vector<double>(static_cast<size_t>(num_values()), 1.0 / num_values());
}

std::vector<double> RandomInfluence::operator()(const HistoryKey& alsh) const {
  uint64_t h = mix64(seed_ ^ 0x2545F4914F6CDD1Dull);
  for (int32_t v : alsh) h = mix64(h ^ static_cast<uint32_t>(v));
  Rng rng(mix64(h ^ alsh.size()));
  std::vector<double> p(static_cast<size_t>(num_values_));
  double sum = 0.0;
  for (auto& v : p) sum += v = std::pow(rng.exponential(), sharpness_);
  for (auto& v : p) v /= sum;
  return p;
}

MixtureInfluence::MixtureInfluence(std::shared_ptr<const InfluenceFunction> a,
                                   std::shared_ptr<const InfluenceFunction> b, double w)
    : a_(std::move(a)), b_(std::move(b)), w_(w) {
  require(a_->num_values() == b_->num_values(), "MixtureInfluence: value counts differ");
  require(w_ >= 0.0 && w_ <= 1.0, "MixtureInfluence: weight outside [0, 1]");
}

std::vector<double> MixtureInfluence::operator()(const HistoryKey& alsh) const {
  auto p = (*a_)(alsh);
  const auto q = (*b_)(alsh);
  for (size_t k = 0; k < p.size(); ++k) p[k] = w_ * p[k] + (1.0 - w_) * q[k];
  return p;
}

std::vector<double> FlippedRowInfluence::operator()(const HistoryKey& alsh) const {
  auto p = (*base_)(alsh);
  if (alsh == row_) std::reverse(p.begin(), p.end());
  return p;
}

namespace {

/// Interned action-observation histories of one agent.
class AohTree {
 public:
  AohTree(const TabularPolicy& policy) : policy_(policy) {}

  int root(int o) { return child(-1, -1, o); }
  int child(int parent, int a, int o) {
    const uint64_t key = (static_cast<uint64_t>(parent + 1) << 24) | (static_cast<uint64_t>(a + 1) << 12) |
                         static_cast<uint64_t>(o);
    const auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(parent_.size());
    parent_.push_back(parent);
    action_.push_back(a);
    obs_.push_back(o);
    probs_.emplace_back();
    index_.emplace(key, id);
    return id;
  }
  const std::vector<double>& probs(int id) {
    auto& p = probs_[id];
    if (p.empty()) {
      HistoryKey k;
      for (int n = id; n >= 0; n = parent_[n]) {
        k.push_back(obs_[n]);
        if (parent_[n] >= 0) k.push_back(action_[n]);
      }
      std::reverse(k.begin(), k.end());
      p = policy_.probs(k);
    }
    return p;
  }

 private:
  const TabularPolicy& policy_;
  std::vector<int> parent_, action_, obs_;
  std::vector<std::vector<double>> probs_;
  std::unordered_map<uint64_t, int> index_;
};

struct BeliefKey {
  int s;
  int h[2];
  bool operator==(const BeliefKey&) const = default;
};
struct BeliefKeyHash {
  size_t operator()(const BeliefKey& k) const {
    return static_cast<size_t>(mix64((static_cast<uint64_t>(k.s) << 40) ^ (static_cast<uint64_t>(k.h[0] + 1) << 20) ^
                                     static_cast<uint64_t>(k.h[1] + 1)));
  }
};
using Belief = std::unordered_map<BeliefKey, double, BeliefKeyHash>;

/// Visits every combination of a mixed-radix counter.
template <typename F>
void for_each_combo(const std::vector<int>& radix, F&& f) {
  std::vector<int> c(radix.size(), 0);
  for (;;) {
    f(c);
    size_t k = 0;
    for (; k < c.size(); ++k) {
      if (++c[k] < radix[k]) break;
      c[k] = 0;
    }
    if (k == c.size()) return;
  }
}

void check_policies(const TabularFposg& model, const JointPolicy& policies, int agent) {
  require(agent >= 0 && agent < model.num_agents(), "invalid agent id " + std::to_string(agent));
  require(static_cast<int>(policies.size()) == model.num_agents(), "joint policy size mismatch");
  for (int j = 0; j < model.num_agents(); ++j) {
    if (j == agent && !policies[j]) continue;
    require(policies[j] != nullptr, "missing policy for agent " + std::to_string(j));
    require(policies[j]->num_actions() == model.agent(j).num_actions, "policy action count mismatch");
  }
}

std::vector<double> marginal_u(const TabularFposg& model, int agent, const Belief& b) {
  std::vector<double> p(static_cast<size_t>(model.num_influence_values(agent)), 0.0);
  double total = 0.0;
  for (const auto& [k, w] : b) {
    p[model.influence_index(k.s, agent)] += w;
    total += w;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

ExactInfluence compute_exact_influence(const TabularFposg& model, const JointPolicy& policies, int agent) {
  check_policies(model, policies, agent);
  std::vector<int> others;
  for (int j = 0; j < model.num_agents(); ++j)
    if (j != agent) others.push_back(j);
  std::vector<AohTree> trees;
  for (int j : others) trees.emplace_back(*policies[j]);
  std::vector<int> act_radix, obs_radix;
  for (int j : others) {
    act_radix.push_back(model.agent(j).num_actions);
    obs_radix.push_back(model.agent(j).num_observations);
  }
  const int X = model.num_local_states(agent);
  const int H = model.horizon();
  ExactInfluence out(model.num_influence_values(agent));

  // prior: condition on x^0 and attach the other agents' first observations
  std::vector<Belief> first(static_cast<size_t>(X));
  for (int s = 0; s < model.num_states(); ++s) {
    const double ps = model.initial_prob(s);
    if (ps == 0.0) continue;
    for_each_combo(obs_radix, [&](const std::vector<int>& o) {
      double p = ps;
      BeliefKey key{s, {-1, -1}};
      for (size_t k = 0; k < others.size(); ++k) {
        p *= model.observation_prob(others[k], model.local_index(s, others[k]), o[k]);
        key.h[k] = trees[k].root(o[k]);
      }
      if (p > 0.0) first[model.local_index(s, agent)][key] += p;
    });
  }

  std::vector<int> joint(model.num_agents(), 0);
  auto rec = [&](auto&& self, int t, HistoryKey& alsh, Belief& belief) -> void {
    out.set(alsh, marginal_u(model, agent, belief));
    if (t + 1 >= H) return;
    for (int a = 0; a < model.agent(agent).num_actions; ++a) {
      std::vector<Belief> next(static_cast<size_t>(X));
      for (const auto& [key, p] : belief) {
        for_each_combo(act_radix, [&](const std::vector<int>& ao) {
          double pa = p;
          for (size_t k = 0; k < others.size(); ++k) pa *= trees[k].probs(key.h[k])[ao[k]];
          if (pa == 0.0) return;
          joint[agent] = a;
          for (size_t k = 0; k < others.size(); ++k) joint[others[k]] = ao[k];
          for (const Transition& tr : model.transitions(key.s, model.joint_action(joint))) {
            const double pt = pa * tr.p;
            const int xn = model.local_index(tr.next, agent);
            for_each_combo(obs_radix, [&](const std::vector<int>& o) {
              double po = pt;
              BeliefKey nk{tr.next, {-1, -1}};
              for (size_t k = 0; k < others.size(); ++k) {
                po *= model.observation_prob(others[k], model.local_index(tr.next, others[k]), o[k]);
                nk.h[k] = trees[k].child(key.h[k], ao[k], o[k]);
              }
              if (po > 0.0) next[xn][nk] += po;
            });
          }
        });
      }
      for (int xn = 0; xn < X; ++xn) {
        auto& b = next[xn];
        double mass = 0.0;
        for (const auto& kv : b) mass += kv.second;
        if (mass <= 0.0) continue;
        for (auto& kv : b) kv.second /= mass;
        alsh.push_back(a);
        alsh.push_back(xn);
        self(self, t + 1, alsh, b);
        alsh.resize(alsh.size() - 2);
      }
    }
  };
  for (int x0 = 0; x0 < X; ++x0) {
    auto& b = first[x0];
    double mass = 0.0;
    for (const auto& kv : b) mass += kv.second;
    if (mass <= 0.0) continue;
    for (auto& kv : b) kv.second /= mass;
    HistoryKey alsh{x0};
    rec(rec, 0, alsh, b);
  }
  return out;
}

double brute_force_cost(const TabularFposg& model) {
  // prefixes ending in each state, counting every action and observation branch of nonzero probability
  auto obs_combos = [&](int s) {
    double c = 1.0;
    for (int j = 0; j < model.num_agents(); ++j) {
      int k = 0;
      for (int o = 0; o < model.agent(j).num_observations; ++o)
        k += model.observation_prob(j, model.local_index(s, j), o) > 0.0;
      c *= k;
    }
    return c;
  };
  std::vector<double> level(static_cast<size_t>(model.num_states()), 0.0);
  double total = 0.0;
  for (int s = 0; s < model.num_states(); ++s)
    if (model.initial_prob(s) > 0.0) total += level[s] = obs_combos(s);
  for (int t = 1; t < model.horizon(); ++t) {
    std::vector<double> next(level.size(), 0.0);
    for (int s = 0; s < model.num_states(); ++s) {
      if (level[s] == 0.0) continue;
      for (int a = 0; a < model.num_joint_actions(); ++a)
        for (const Transition& tr : model.transitions(s, a)) next[tr.next] += level[s];
    }
    for (int s = 0; s < model.num_states(); ++s) total += next[s] *= obs_combos(s);
    level.swap(next);
  }
  return total;
}

ExactInfluence brute_force_influence(const TabularFposg& model, const JointPolicy& policies, int agent) {
  require(agent >= 0 && agent < model.num_agents(), "invalid agent id");
  require(static_cast<int>(policies.size()) == model.num_agents(), "joint policy size mismatch");
  for (const auto& p : policies) require(p != nullptr, "brute force needs every agent's policy");
  const int n = model.num_agents();
  const int U = model.num_influence_values(agent);
  std::map<HistoryKey, std::vector<double>> acc;  // ordered, independent of the filter's containers

  std::vector<int> act_radix, obs_radix;
  for (const auto& ag : model.agents()) {
    act_radix.push_back(ag.num_actions);
    obs_radix.push_back(ag.num_observations);
  }
  auto rec = [&](auto&& self, int t, int s, std::vector<HistoryKey>& aoh, HistoryKey& alsh, double p) -> void {
    auto& row = acc[alsh];
    if (row.empty()) row.assign(static_cast<size_t>(U), 0.0);
    row[model.influence_index(s, agent)] += p;
    if (t + 1 >= model.horizon()) return;
    for_each_combo(act_radix, [&](const std::vector<int>& a) {
      double pa = p;
      for (int j = 0; j < n; ++j) pa *= policies[j]->probs(aoh[j])[a[j]];
      if (pa == 0.0) return;
      const int ja = model.joint_action(a);
      for (const Transition& tr : model.transitions(s, ja)) {
        for_each_combo(obs_radix, [&](const std::vector<int>& o) {
          double q = pa * tr.p;
          for (int j = 0; j < n; ++j) q *= model.observation_prob(j, model.local_index(tr.next, j), o[j]);
          if (q == 0.0) return;
          for (int j = 0; j < n; ++j) {
            aoh[j].push_back(a[j]);
            aoh[j].push_back(o[j]);
          }
          alsh.push_back(a[agent]);
          alsh.push_back(model.local_index(tr.next, agent));
          self(self, t + 1, tr.next, aoh, alsh, q);
          alsh.resize(alsh.size() - 2);
          for (int j = 0; j < n; ++j) aoh[j].resize(aoh[j].size() - 2);
        });
      }
    });
  };
  for (int s = 0; s < model.num_states(); ++s) {
    if (model.initial_prob(s) == 0.0) continue;
    for_each_combo(obs_radix, [&](const std::vector<int>& o) {
      double p = model.initial_prob(s);
      for (int j = 0; j < n; ++j) p *= model.observation_prob(j, model.local_index(s, j), o[j]);
      if (p == 0.0) return;
      std::vector<HistoryKey> aoh(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j) aoh[j] = {o[j]};
      HistoryKey alsh{model.local_index(s, agent)};
      rec(rec, 0, s, aoh, alsh, p);
    });
  }
  ExactInfluence out(U);
  for (auto& [l, row] : acc) {
    double total = 0.0;
    for (double v : row) total += v;
    for (auto& v : row) v /= total;
    out.set(l, row);
  }
  return out;
}

double linf_distance(const ExactInfluence& a, const ExactInfluence& b) {
  double d = 0.0;
  for (const auto& [l, p] : a.table()) {
    if (!b.contains(l)) return std::numeric_limits<double>::infinity();
    const auto q = b(l);
    for (size_t k = 0; k < p.size(); ++k) d = std::max(d, std::abs(p[k] - q[k]));
  }
  for (const auto& kv : b.table())
    if (!a.contains(kv.first)) return std::numeric_limits<double>::infinity();
  return d;
}

Rollout sample_rollout(const TabularFposg& model, const JointPolicy& policies, Rng& rng) {
  const int n = model.num_agents();
  Rollout r;
  std::vector<double> w(static_cast<size_t>(model.num_states()));
  for (int s = 0; s < model.num_states(); ++s) w[s] = model.initial_prob(s);
  int s = rng.categorical(w);
  std::vector<HistoryKey> aoh(static_cast<size_t>(n));
  auto observe = [&](int state) {
    std::vector<int> o(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      const int x = model.local_index(state, j);
      std::vector<double> row(static_cast<size_t>(model.agent(j).num_observations));
      for (size_t k = 0; k < row.size(); ++k) row[k] = model.observation_prob(j, x, static_cast<int>(k));
      o[j] = rng.categorical(row);
    }
    return o;
  };
  std::vector<int> o = observe(s);
  for (int j = 0; j < n; ++j) aoh[j] = {o[j]};
  for (int t = 0; t < model.horizon(); ++t) {
    r.states.push_back(s);
    r.observations.push_back(o);
    std::vector<int> a(static_cast<size_t>(n));
    std::vector<double> rew(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      a[j] = rng.categorical(policies[j]->probs(aoh[j]));
      rew[j] = model.reward(j, model.local_index(s, j), a[j]);
    }
    r.actions.push_back(a);
    r.rewards.push_back(rew);
    if (t + 1 == model.horizon()) break;
    const auto trs = model.transitions(s, model.joint_action(a));
    std::vector<double> tw;
    for (const auto& tr : trs) tw.push_back(tr.p);
    s = trs[static_cast<size_t>(rng.categorical(tw))].next;
    o = observe(s);
    for (int j = 0; j < n; ++j) {
      aoh[j].push_back(a[j]);
      aoh[j].push_back(o[j]);
    }
  }
  return r;
}

MonteCarloReport monte_carlo_influence_check(const TabularFposg& model, const JointPolicy& policies, int agent,
                                             const ExactInfluence& exact, int rollouts, Rng& rng) {
  const int U = model.num_influence_values(agent);
  HistoryMap<std::vector<int>> counts;
  for (int e = 0; e < rollouts; ++e) {
    const Rollout r = sample_rollout(model, policies, rng);
    HistoryKey l;
    for (size_t t = 0; t < r.states.size(); ++t) {
      if (t > 0) l.push_back(r.actions[t - 1][agent]);
      l.push_back(model.local_index(r.states[t], agent));
      auto& c = counts[l];
      if (c.empty()) c.assign(static_cast<size_t>(U), 0);
      c[model.influence_index(r.states[t], agent)]++;
    }
  }
  MonteCarloReport rep;
  rep.rollouts = rollouts;
  for (const auto& [l, c] : counts) {
    if (!exact.contains(l)) {
      rep.point_mass_mismatches++;
      continue;
    }
    const auto p = exact(l);
    int n = 0;
    for (int v : c) n += v;
    for (int u = 0; u < U; ++u) {
      if ((p[u] == 0.0 && c[u] > 0) || (p[u] == 1.0 && c[u] < n)) {
        rep.point_mass_mismatches++;
        continue;
      }
      if (n * p[u] < 5.0 || n * (1.0 - p[u]) < 5.0) continue;
      const double z = (static_cast<double>(c[u]) / n - p[u]) / std::sqrt(p[u] * (1.0 - p[u]) / n);
      rep.cells_tested++;
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
      if (std::abs(z) > 3.0) rep.cells_beyond_3se++;
    }
  }
  const int allowed = std::max(2, static_cast<int>(std::ceil(0.01 * rep.cells_tested)));
  rep.passed = rep.point_mass_mismatches == 0 && rep.max_abs_z <= 5.0 && rep.cells_beyond_3se <= allowed;
  return rep;
}

}  // namespace dials::oracle
