#include "dials/oracle/ialm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dials::oracle {

const char* to_string(BeliefSemantics s) { return s == BeliefSemantics::kShared ? "shared" : "consistent"; }

namespace {

using Belief = std::vector<std::pair<HistoryKey, double>>;

Belief normalized(const std::map<HistoryKey, double>& m, double mass) {
  Belief b;
  b.reserve(m.size());
  for (const auto& [l, p] : m) b.emplace_back(l, p / mass);
  return b;
}

}  // namespace

IalmTree::IalmTree(const TabularFposg& model, int agent, std::vector<std::shared_ptr<const InfluenceFunction>> influences,
                   BeliefSemantics semantics)
    : model_(model), agent_(agent), influences_(std::move(influences)), semantics_(semantics) {
  require(agent >= 0 && agent < model.num_agents(), "invalid agent id " + std::to_string(agent));
  require(influences_.size() == 1 || influences_.size() == 2, "IalmTree: one or two influence distributions");
  for (const auto& inf : influences_)
    require(inf && inf->num_values() == model.num_influence_values(agent), "IalmTree: influence value count mismatch");
  num_actions_ = model.agent(agent).num_actions;
  num_obs_ = model.agent(agent).num_observations;
  mixture_ = influences_.size() == 1 ? influences_[0]
                                     : std::make_shared<MixtureInfluence>(influences_[0], influences_[1], 0.5);
  const int K = num_models();
  reachable_.assign(K, {});
  belief_.assign(K, {});
  reward_.assign(K, {});
  next_.assign(K, {});
  next_x_.assign(K, {});
  cache_.assign(K, {});

  const int X = model.num_local_states(agent);
  for (int o = 0; o < num_obs_; ++o) {
    std::map<HistoryKey, double> m;
    double mass = 0.0;
    for (int x = 0; x < X; ++x) {
      const double p = model.local_initial(agent, x) * model.observation_prob(agent, x, o);
      if (p > 0.0) {
        m[HistoryKey{x}] += p;
        mass += p;
      }
    }
    if (mass <= 0.0) continue;
    Node nd;
    nd.depth = 0;
    nd.obs = o;
    nd.aoh = {o};
    nd.path_prob = mass;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(nd));
    roots_.push_back(id);
    const Belief b = normalized(m, mass);
    mix_belief_.push_back(b);
    for (int k = 0; k < K; ++k) {
      belief_[k].push_back(b);
      reachable_[k].push_back(true);
    }
  }
  for (int n = 0; n < num_nodes(); ++n) expand(n);  // children are appended, so this is breadth-first
}

const std::vector<double>& IalmTree::influence_row(int k, const HistoryKey& alsh) const {
  auto& cache = k < 0 ? mix_cache_ : cache_[k];
  auto it = cache.find(alsh);
  if (it == cache.end()) {
    auto row = k < 0 ? (*mixture_)(alsh) : (*influences_[k])(alsh);
    it = cache.emplace(alsh, std::move(row)).first;
  }
  return it->second;
}

void IalmTree::expand(int n) {
  const int K = num_models();
  const int X = model_.num_local_states(agent_);
  const int U = model_.num_influence_values(agent_);
  // rewards are available at every node, leaves included
  for (int k = 0; k < K; ++k) {
    reward_[k].emplace_back(num_actions_, 0.0);
    for (int a = 0; a < num_actions_; ++a)
      for (const auto& [l, w] : belief_[k][n]) reward_[k][n][a] += w * model_.reward(agent_, l.back(), a);
    next_[k].emplace_back(num_actions_, std::vector<double>(num_obs_, 0.0));
    next_x_[k].emplace_back(num_actions_, std::vector<double>(X, 0.0));
  }
  nodes_[n].children.assign(num_actions_, std::vector<int>(num_obs_, -1));
  if (nodes_[n].depth + 1 >= model_.horizon()) return;

  for (int a = 0; a < num_actions_; ++a) {
    // propagate one belief through (I, T_i, O_i); optionally keep the joint over next ALSHs
    auto propagate = [&](const Belief& b, int influence, std::vector<double>& obs_mass, std::vector<double>& x_mass,
                         std::vector<std::map<HistoryKey, double>>* joint) {
      for (const auto& [l, w] : b) {
        const auto& row = influence_row(influence, l);
        const int x = l.back();
        for (int u = 0; u < U; ++u) {
          const double pu = w * row[u];
          if (pu == 0.0) continue;
          for (const Transition& tr : model_.local_transitions(agent_, x, u, a)) {
            const double px = pu * tr.p;
            x_mass[tr.next] += px;
            for (int o = 0; o < num_obs_; ++o) {
              const double po = px * model_.observation_prob(agent_, tr.next, o);
              if (po == 0.0) continue;
              obs_mass[o] += po;
              if (joint) {
                HistoryKey nl = l;
                nl.push_back(a);
                nl.push_back(tr.next);
                (*joint)[o][nl] += po;
              }
            }
          }
        }
      }
    };
    std::vector<double> mix_obs(num_obs_, 0.0), mix_x(X, 0.0);
    std::vector<std::map<HistoryKey, double>> mix_joint(num_obs_);
    propagate(mix_belief_[n], -1, mix_obs, mix_x, &mix_joint);

    std::vector<std::vector<std::map<HistoryKey, double>>> own_joint(K);
    for (int k = 0; k < K; ++k) {
      const bool own = semantics_ == BeliefSemantics::kConsistent;
      if (own) own_joint[k].resize(num_obs_);
      propagate(belief_[k][n], k, next_[k][n][a], next_x_[k][n][a], own ? &own_joint[k] : nullptr);
    }

    for (int o = 0; o < num_obs_; ++o) {
      bool any = mix_obs[o] > 0.0;
      for (int k = 0; k < K; ++k) any = any || next_[k][n][a][o] > 0.0;
      if (!any) continue;
      Node child;
      child.depth = nodes_[n].depth + 1;
      child.parent = n;
      child.action = a;
      child.obs = o;
      child.aoh = nodes_[n].aoh;
      child.aoh.push_back(a);
      child.aoh.push_back(o);
      child.path_prob = nodes_[n].path_prob * mix_obs[o];
      const int id = static_cast<int>(nodes_.size());
      nodes_[n].children[a][o] = id;
      nodes_.push_back(std::move(child));
      const Belief mb = mix_obs[o] > 0.0 ? normalized(mix_joint[o], mix_obs[o]) : Belief{};
      mix_belief_.push_back(mb);
      for (int k = 0; k < K; ++k) {
        if (semantics_ == BeliefSemantics::kShared) {
          belief_[k].push_back(mb);
          reachable_[k].push_back(reachable_[k][n] && mix_obs[o] > 0.0);
        } else if (next_[k][n][a][o] > 0.0 && reachable_[k][n]) {
          belief_[k].push_back(normalized(own_joint[k][o], next_[k][n][a][o]));
          reachable_[k].push_back(true);
        } else {
          // unreachable for this model: any belief works, it carries zero weight
          belief_[k].push_back(mb.empty() ? normalized(own_joint[k][o], next_[k][n][a][o]) : mb);
          reachable_[k].push_back(false);
        }
      }
    }
  }
}

PolicyTable IalmTree::tabulate(const TabularPolicy& pi) const {
  require(pi.num_actions() == num_actions_, "tabulate: action count mismatch");
  PolicyTable t(nodes_.size());
  for (int n = 0; n < num_nodes(); ++n) t[n] = pi.probs(nodes_[n].aoh);
  return t;
}

QTable IalmTree::evaluate(int k, const PolicyTable& pi) const {
  QTable q(nodes_.size(), std::vector<double>(num_actions_, 0.0));
  for (int n = num_nodes() - 1; n >= 0; --n) {
    for (int a = 0; a < num_actions_; ++a) {
      double v = reward_[k][n][a];
      for (int o = 0; o < num_obs_; ++o) {
        const int c = nodes_[n].children[a][o];
        const double p = next_[k][n][a][o];
        if (c < 0 || p == 0.0) continue;
        double cont = 0.0;
        for (int b = 0; b < num_actions_; ++b) cont += pi[c][b] * q[c][b];
        v += p * cont;
      }
      q[n][a] = v;
    }
  }
  return q;
}

QTable IalmTree::optimal(int k) const {
  QTable q(nodes_.size(), std::vector<double>(num_actions_, 0.0));
  for (int n = num_nodes() - 1; n >= 0; --n) {
    for (int a = 0; a < num_actions_; ++a) {
      double v = reward_[k][n][a];
      for (int o = 0; o < num_obs_; ++o) {
        const int c = nodes_[n].children[a][o];
        const double p = next_[k][n][a][o];
        if (c < 0 || p == 0.0) continue;
        v += p * *std::max_element(q[c].begin(), q[c].end());
      }
      q[n][a] = v;
    }
  }
  return q;
}

int argmax_lowest(const std::vector<double>& q, double tol) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best] + tol) best = a;
  return best;
}

PolicyTable IalmTree::greedy(const QTable& q) const {
  PolicyTable pi(q.size(), std::vector<double>(num_actions_, 0.0));
  for (size_t n = 0; n < q.size(); ++n) pi[n][argmax_lowest(q[n])] = 1.0;
  return pi;
}

double IalmTree::value(int k, const PolicyTable& pi, const QTable& q) const {
  double v = 0.0;
  for (int r : roots_) {
    if (!reachable_[k][r]) continue;
    double inner = 0.0;
    for (int a = 0; a < num_actions_; ++a) inner += pi[r][a] * q[r][a];
    v += nodes_[r].path_prob * inner;
  }
  return v;
}

double premise_at(const IalmTree& tree, int n, int k) {
  require(tree.num_models() == 2, "premise_at: needs two influence distributions");
  const auto& b = k < 0 ? tree.mixture_belief(n) : tree.belief(k, n);
  double s = 0.0;
  for (const auto& [l, w] : b) {
    const auto& p = tree.influence_row(0, l);
    const auto& q = tree.influence_row(1, l);
    for (size_t u = 0; u < p.size(); ++u) s += w * std::abs(p[u] - q[u]);
  }
  return s;
}

double influence_distance(const IalmTree& tree, const PolicyTable* policy) {
  std::vector<bool> reached(static_cast<size_t>(tree.num_nodes()), policy == nullptr);
  if (policy) {
    for (int r : tree.roots()) reached[r] = true;
    for (int n = 0; n < tree.num_nodes(); ++n) {
      const auto& nd = tree.node(n);
      if (nd.parent >= 0) reached[n] = reached[nd.parent] && (*policy)[nd.parent][nd.action] > 0.0;
    }
  }
  double xi = 0.0;
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (!reached[n] || tree.node(n).path_prob <= 1e-15) continue;
    xi = std::max(xi, premise_at(tree, n));
  }
  return xi;
}

}  // namespace dials::oracle
