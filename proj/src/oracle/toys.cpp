#include "dials/oracle/toys.hpp"

#include <algorithm>
#include <numeric>

#include "dials/core/rng.hpp"
#include "dials/oracle/influence.hpp"

namespace dials::oracle {

namespace {

/// Probability row over `domain` values with a random support of 1..domain values.
std::vector<double> random_row(Rng& rng, int domain, bool point_mass, bool full_support) {
  std::vector<double> row(static_cast<size_t>(domain), 0.0);
  if (point_mass) {
    row[rng.uniform_int(domain)] = 1.0;
    return row;
  }
  std::vector<int> idx(static_cast<size_t>(domain));
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = domain - 1; k > 0; --k) std::swap(idx[k], idx[rng.uniform_int(k + 1)]);
  const int support = full_support ? domain : 1 + rng.uniform_int(domain);
  double total = 0.0;
  for (int k = 0; k < support; ++k) {
    row[idx[k]] = 0.05 + rng.uniform();
    total += row[idx[k]];
  }
  for (double& v : row) v /= total;
  return row;
}

void fill_cpt(Rng& rng, VariableSpec& v, const std::vector<VariableSpec>& vars, const ToyOptions& opt, bool full) {
  int rows = 1;
  for (int p : v.state_parents) rows *= vars[p].domain;
  for (size_t k = 0; k < v.action_parents.size(); ++k) rows *= opt.num_actions;
  v.cpt.clear();
  for (int r = 0; r < rows; ++r) {
    const auto row = random_row(rng, v.domain, opt.deterministic, full);
    v.cpt.insert(v.cpt.end(), row.begin(), row.end());
  }
  v.initial = random_row(rng, v.domain, opt.deterministic, false);
}

TabularFposg draw(Rng& rng, const ToyOptions& opt) {
  const int n = opt.agents;
  std::vector<VariableSpec> vars;
  // layout: x_0, u_0, x_1, u_1, ..., y
  auto x_of = [](int i) { return 2 * i; };
  auto u_of = [](int i) { return 2 * i + 1; };
  const int y = 2 * n;
  for (int i = 0; i < n; ++i) {
    vars.push_back({"x" + std::to_string(i), opt.local_domain, {}, {}, {}, {}});
    vars.push_back({"u" + std::to_string(i), opt.influence_domain, {}, {}, {}, {}});
  }
  if (opt.external) vars.push_back({"y", 2, {}, {}, {}, {}});

  for (int i = 0; i < n; ++i) {
    auto& x = vars[x_of(i)];
    x.state_parents = {x_of(i), u_of(i)};
    x.action_parents = {i};

    auto& u = vars[u_of(i)];
    if (rng.bernoulli(0.7)) u.state_parents.push_back(u_of(i));
    if (opt.external && rng.bernoulli(0.6)) u.state_parents.push_back(y);
    const int j = (i + 1 + rng.uniform_int(n - 1)) % n;
    switch (opt.coupling) {
      case Coupling::kAny:
        if (rng.bernoulli(0.6)) u.state_parents.push_back(x_of(j));
        if (rng.bernoulli(0.3)) u.action_parents.push_back(j);
        break;
      case Coupling::kCoupled:
        if (rng.bernoulli(0.5)) u.state_parents.push_back(x_of(j));
        u.action_parents.push_back(j);
        break;
      case Coupling::kIndependent:
        break;
    }
    std::sort(u.state_parents.begin(), u.state_parents.end());
  }
  if (opt.external) {
    auto& yv = vars[y];
    yv.state_parents = {y};
    // another agent's u is tainted only when that u has a tainted parent
    if (opt.coupling != Coupling::kAny && rng.bernoulli(0.5)) yv.state_parents.push_back(u_of(0));
    if (opt.coupling == Coupling::kAny && rng.bernoulli(0.5)) yv.state_parents.push_back(x_of(rng.uniform_int(n)));
    std::sort(yv.state_parents.begin(), yv.state_parents.end());
  }
  for (int v = 0; v < static_cast<int>(vars.size()); ++v) {
    // coupled controls keep full support on u_i so the action dependence cannot vanish
    const bool full = opt.coupling == Coupling::kCoupled && v < 2 * n && v % 2 == 1;
    fill_cpt(rng, vars[v], vars, opt, full);
  }

  std::vector<AgentSpec> agents;
  for (int i = 0; i < n; ++i) {
    AgentSpec ag;
    ag.name = "agent" + std::to_string(i);
    ag.num_actions = opt.num_actions;
    ag.num_observations = opt.num_observations;
    ag.local = {x_of(i)};
    ag.influence = {u_of(i)};
    for (int x = 0; x < opt.local_domain; ++x) {
      const auto row = random_row(rng, opt.num_observations, opt.deterministic, false);
      ag.observation.insert(ag.observation.end(), row.begin(), row.end());
      for (int a = 0; a < opt.num_actions; ++a) ag.reward.push_back(rng.uniform() * 2.0 - 1.0);
    }
    agents.push_back(std::move(ag));
  }
  return TabularFposg(std::move(vars), std::move(agents), opt.horizon);
}

}  // namespace

TabularFposg random_toy(uint64_t seed, const ToyOptions& opt) {
  require(opt.agents >= 2, "random_toy: needs at least two agents");
  for (uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = Rng::derive(seed, attempt, 0x70f);
    TabularFposg m = draw(rng, opt);
    if (brute_force_cost(m) <= opt.cost_budget) return m;
  }
  throw ContractViolation("random_toy: no draw within the brute-force budget; shrink the options");
}

}  // namespace dials::oracle
