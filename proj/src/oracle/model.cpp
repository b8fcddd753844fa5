#include "dials/oracle/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dials::oracle {

namespace {

constexpr double kRowTol = 1e-12;

void check_row(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (double p : row) {
    require(std::isfinite(p) && p >= 0.0, what + ": probabilities must be finite and non-negative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= kRowTol, what + ": row sums to " + std::to_string(sum) + ", expected 1");
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void check_indices(const std::vector<int>& idx, int bound, const std::string& what) {
  std::set<int> seen;
  for (int k : idx) {
    require(k >= 0 && k < bound, what + ": index " + std::to_string(k) + " out of range");
    require(seen.insert(k).second, what + ": duplicate index " + std::to_string(k));
  }
}

}  // namespace

TabularFposg::TabularFposg(std::vector<VariableSpec> variables, std::vector<AgentSpec> agents, int horizon)
    : vars_(std::move(variables)), agents_(std::move(agents)), horizon_(horizon) {
  validate();
  build_tables();
}

void TabularFposg::validate() const {
  require(horizon_ >= 1 && horizon_ <= kMaxHorizon, "model: horizon must lie in [1, 5]");
  require(!agents_.empty() && static_cast<int>(agents_.size()) <= kMaxAgents, "model: 1 to 3 agents required");
  require(!vars_.empty(), "model: no variables");
  long states = 1;
  for (const auto& v : vars_) {
    require(v.domain >= 1, "model: variable " + v.name + " has an empty domain");
    states *= v.domain;
    require(states <= kMaxStates, "model: more than 512 global states");
  }
  long joint = 1;
  for (const auto& a : agents_) {
    require(a.num_actions >= 1, "model: agent " + a.name + " has no actions");
    joint *= a.num_actions;
  }
  require(joint <= 64, "model: more than 64 joint actions");
  const int nv = num_variables();
  for (const auto& v : vars_) {
    const std::string what = "variable " + v.name;
    require(static_cast<int>(v.initial.size()) == v.domain, what + ": initial distribution has wrong size");
    check_row(v.initial, what + " initial");
    check_indices(v.state_parents, nv, what + " state_parents");
    check_indices(v.action_parents, num_agents(), what + " action_parents");
    long rows = 1;
    for (int p : v.state_parents) rows *= vars_[p].domain;
    for (int a : v.action_parents) rows *= agents_[a].num_actions;
    require(static_cast<long>(v.cpt.size()) == rows * v.domain,
            what + ": cpt needs " + std::to_string(rows * v.domain) + " entries, got " + std::to_string(v.cpt.size()));
    for (long r = 0; r < rows; ++r)
      check_row(std::span<const double>(v.cpt).subspan(static_cast<size_t>(r * v.domain), v.domain),
                what + " cpt row " + std::to_string(r));
  }
  for (int i = 0; i < num_agents(); ++i) {
    const auto& a = agents_[i];
    const std::string what = "agent " + a.name;
    require(!a.local.empty(), what + ": empty local region");
    check_indices(a.local, nv, what + " local");
    check_indices(a.influence, nv, what + " influence");
    for (int u : a.influence) require(!contains(a.local, u), what + ": influence sources overlap the local region");
    long xs = 1;
    for (int v : a.local) xs *= vars_[v].domain;
    require(a.num_observations >= 1, what + ": no observations");
    require(static_cast<long>(a.observation.size()) == xs * a.num_observations, what + ": observation table size");
    for (long x = 0; x < xs; ++x)
      check_row(std::span<const double>(a.observation).subspan(static_cast<size_t>(x * a.num_observations),
                                                               a.num_observations),
                what + " observation row " + std::to_string(x));
    require(static_cast<long>(a.reward.size()) == xs * a.num_actions, what + ": reward table size");
    for (double r : a.reward) require(std::isfinite(r), what + ": non-finite reward");
    // d-separation: u_i screens x_i from everything else
    for (int v : a.local) {
      for (int p : vars_[v].state_parents)
        require(contains(a.local, p) || contains(a.influence, p),
                what + ": local variable " + vars_[v].name + " depends on " + vars_[p].name +
                    ", which is neither local nor an influence source");
      for (int j : vars_[v].action_parents)
        require(j == i, what + ": local variable " + vars_[v].name + " depends on agent " + std::to_string(j) +
                            "'s action directly");
    }
  }
}

int TabularFposg::encode(std::span<const int> values) const {
  require(static_cast<int>(values.size()) == num_variables(), "model: wrong number of values");
  int s = 0;
  for (int v = 0; v < num_variables(); ++v) {
    require(values[v] >= 0 && values[v] < vars_[v].domain, "model: value out of domain");
    s += values[v] * strides_[v];
  }
  return s;
}

int TabularFposg::joint_action(std::span<const int> actions) const {
  require(static_cast<int>(actions.size()) == num_agents(), "model: joint action size");
  int a = 0;
  for (int i = 0; i < num_agents(); ++i) {
    require(actions[i] >= 0 && actions[i] < agents_[i].num_actions, "model: action out of range");
    a += actions[i] * action_strides_[i];
  }
  return a;
}

double TabularFposg::cpt_prob(int v, int s, int joint_action, int next_value) const {
  const auto& var = vars_[v];
  int row = 0;
  for (int p : var.state_parents) row = row * vars_[p].domain + value(s, p);
  for (int a : var.action_parents) row = row * agents_[a].num_actions + agent_action(joint_action, a);
  return var.cpt[static_cast<size_t>(row * var.domain + next_value)];
}

void TabularFposg::build_tables() {
  const int nv = num_variables();
  strides_.assign(nv, 1);
  for (int v = nv - 2; v >= 0; --v) strides_[v] = strides_[v + 1] * vars_[v + 1].domain;
  num_states_ = strides_[0] * vars_[0].domain;
  const int n = num_agents();
  action_strides_.assign(n, 1);
  for (int i = n - 2; i >= 0; --i) action_strides_[i] = action_strides_[i + 1] * agents_[i + 1].num_actions;
  num_joint_actions_ = action_strides_[0] * agents_[0].num_actions;

  initial_.assign(num_states_, 1.0);
  for (int s = 0; s < num_states_; ++s)
    for (int v = 0; v < nv; ++v) initial_[s] *= vars_[v].initial[value(s, v)];

  // global transitions: product of per-variable CPT rows, zero branches pruned
  trans_.assign(static_cast<size_t>(num_states_) * num_joint_actions_, {});
  std::vector<std::vector<double>> dist(nv);
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_joint_actions_; ++a) {
      for (int v = 0; v < nv; ++v) {
        dist[v].resize(vars_[v].domain);
        for (int k = 0; k < vars_[v].domain; ++k) dist[v][k] = cpt_prob(v, s, a, k);
      }
      auto& out = trans_[static_cast<size_t>(s) * num_joint_actions_ + a];
      auto rec = [&](auto&& self, int v, int partial, double p) -> void {
        if (v == nv) {
          out.push_back({partial, p});
          return;
        }
        for (int k = 0; k < vars_[v].domain; ++k)
          if (dist[v][k] > 0.0) self(self, v + 1, partial + k * strides_[v], p * dist[v][k]);
      };
      rec(rec, 0, 0, 1.0);
    }
  }

  local_sizes_.assign(n, 1);
  influence_sizes_.assign(n, 1);
  local_of_.assign(n, std::vector<int>(num_states_));
  influence_of_.assign(n, std::vector<int>(num_states_));
  local_initial_.assign(n, {});
  local_trans_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    const auto& ag = agents_[i];
    for (int v : ag.local) local_sizes_[i] *= vars_[v].domain;
    for (int v : ag.influence) influence_sizes_[i] *= vars_[v].domain;
    for (int s = 0; s < num_states_; ++s) {
      int x = 0, u = 0;
      for (int v : ag.local) x = x * vars_[v].domain + value(s, v);
      for (int v : ag.influence) u = u * vars_[v].domain + value(s, v);
      local_of_[i][s] = x;
      influence_of_[i][s] = u;
    }
    local_initial_[i].assign(local_sizes_[i], 1.0);
    for (int x = 0; x < local_sizes_[i]; ++x) {
      const auto xv = local_values(i, x);
      for (size_t k = 0; k < ag.local.size(); ++k) local_initial_[i][x] *= vars_[ag.local[k]].initial[xv[k]];
    }
    // local transitions read parent values from (x, u) only
    const int X = local_sizes_[i], U = influence_sizes_[i], A = ag.num_actions;
    local_trans_[i].assign(static_cast<size_t>(X) * U * A, {});
    std::vector<int> full(nv, 0);
    for (int x = 0; x < X; ++x) {
      for (int u = 0; u < U; ++u) {
        const auto xv = local_values(i, x);
        int rem = u;
        for (int k = static_cast<int>(ag.influence.size()) - 1; k >= 0; --k) {
          full[ag.influence[k]] = rem % vars_[ag.influence[k]].domain;
          rem /= vars_[ag.influence[k]].domain;
        }
        for (size_t k = 0; k < ag.local.size(); ++k) full[ag.local[k]] = xv[k];
        const int s_proxy = encode(full);
        for (int a = 0; a < A; ++a) {
          std::vector<int> acts(n, 0);
          acts[i] = a;
          const int ja = joint_action(acts);
          auto& out = local_trans_[i][(static_cast<size_t>(x) * U + u) * A + a];
          for (int xn = 0; xn < X; ++xn) {
            const auto xnv = local_values(i, xn);
            double p = 1.0;
            for (size_t k = 0; k < ag.local.size() && p > 0.0; ++k) p *= cpt_prob(ag.local[k], s_proxy, ja, xnv[k]);
            if (p > 0.0) out.push_back({xn, p});
          }
        }
      }
    }
  }
}

std::span<const Transition> TabularFposg::transitions(int s, int joint_action) const {
  return trans_[static_cast<size_t>(s) * num_joint_actions_ + joint_action];
}

std::vector<int> TabularFposg::local_values(int i, int x) const {
  const auto& local = agents_[i].local;
  std::vector<int> out(local.size());
  for (int k = static_cast<int>(local.size()) - 1; k >= 0; --k) {
    out[k] = x % vars_[local[k]].domain;
    x /= vars_[local[k]].domain;
  }
  return out;
}

double TabularFposg::reward_bound(int i) const {
  double m = 0.0;
  for (double r : agents_[i].reward) m = std::max(m, std::abs(r));
  return m;
}

std::span<const Transition> TabularFposg::local_transitions(int i, int x, int u, int a) const {
  const size_t idx = (static_cast<size_t>(x) * influence_sizes_[i] + u) * agents_[i].num_actions + a;
  return local_trans_[i][idx];
}

bool TabularFposg::transition_independent(int i) const {
  const int nv = num_variables();
  std::vector<bool> tainted(nv, false);
  for (int v = 0; v < nv; ++v)
    for (int j : vars_[v].action_parents)
      if (j != i) tainted[v] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (int v = 0; v < nv; ++v) {
      if (tainted[v]) continue;
      for (int p : vars_[v].state_parents)
        if (tainted[p]) {
          tainted[v] = changed = true;
          break;
        }
    }
  }
  for (int v : agents_[i].influence)
    if (tainted[v]) return false;
  for (int v : agents_[i].local)
    if (tainted[v]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// JSON document

namespace {

using nlohmann::json;

constexpr const char* kFormat = "dials-tabular-fposg";
constexpr int kVersion = 1;

const json& field(const json& j, const char* key, const std::string& where) {
  require(j.is_object(), where + ": expected an object");
  auto it = j.find(key);
  require(it != j.end(), where + ": missing field '" + key + "'");
  return *it;
}

int get_int(const json& j, const char* key, const std::string& where) {
  const json& f = field(j, key, where);
  require(f.is_number_integer(), where + "." + key + ": expected an integer");
  return f.get<int>();
}

std::vector<double> get_doubles(const json& j, const char* key, const std::string& where) {
  const json& f = field(j, key, where);
  require(f.is_array(), where + "." + key + ": expected an array");
  std::vector<double> out;
  // tables may be nested row by row; flatten in row-major order
  auto rec = [&](auto&& self, const json& node) -> void {
    if (node.is_array()) {
      for (const auto& e : node) self(self, e);
    } else {
      require(node.is_number(), where + "." + key + ": expected numbers");
      out.push_back(node.get<double>());
    }
  };
  rec(rec, f);
  return out;
}

std::vector<int> names_to_indices(const json& arr, const std::vector<std::string>& names, const std::string& where) {
  require(arr.is_array(), where + ": expected an array of variable names");
  std::vector<int> out;
  for (const auto& e : arr) {
    require(e.is_string(), where + ": expected variable names");
    const auto it = std::find(names.begin(), names.end(), e.get<std::string>());
    require(it != names.end(), where + ": unknown variable '" + e.get<std::string>() + "'");
    out.push_back(static_cast<int>(it - names.begin()));
  }
  return out;
}

}  // namespace

TabularFposg load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("model: malformed JSON: ") + e.what());
  }
  const std::string root = "model";
  const json& fmt = field(doc, "format", root);
  require(fmt.is_string() && fmt.get<std::string>() == kFormat, "model: format must be '" + std::string(kFormat) + "'");
  require(get_int(doc, "version", root) == kVersion, "model: unsupported version");
  const int horizon = get_int(doc, "horizon", root);

  const json& jv = field(doc, "variables", root);
  require(jv.is_array() && !jv.empty(), "model.variables: expected a non-empty array");
  std::vector<std::string> names;
  for (const auto& v : jv) {
    const json& nm = field(v, "name", "model.variables[]");
    require(nm.is_string(), "model.variables[].name: expected a string");
    names.push_back(nm.get<std::string>());
  }
  require(std::set<std::string>(names.begin(), names.end()).size() == names.size(), "model.variables: duplicate names");
  std::vector<VariableSpec> vars;
  for (size_t k = 0; k < jv.size(); ++k) {
    const json& v = jv[k];
    const std::string where = "model.variables[" + names[k] + "]";
    VariableSpec spec;
    spec.name = names[k];
    spec.domain = get_int(v, "domain", where);
    spec.initial = get_doubles(v, "initial", where);
    spec.state_parents = v.contains("parents") ? names_to_indices(v["parents"], names, where + ".parents")
                                                : std::vector<int>{};
    if (v.contains("action_parents")) {
      require(v["action_parents"].is_array(), where + ".action_parents: expected an array");
      for (const auto& a : v["action_parents"]) {
        require(a.is_number_integer(), where + ".action_parents: expected agent indices");
        spec.action_parents.push_back(a.get<int>());
      }
    }
    spec.cpt = get_doubles(v, "cpt", where);
    vars.push_back(std::move(spec));
  }

  const json& ja = field(doc, "agents", root);
  require(ja.is_array() && !ja.empty(), "model.agents: expected a non-empty array");
  std::vector<AgentSpec> agents;
  for (size_t k = 0; k < ja.size(); ++k) {
    const json& a = ja[k];
    const std::string where = "model.agents[" + std::to_string(k) + "]";
    AgentSpec spec;
    spec.name = a.contains("name") && a["name"].is_string() ? a["name"].get<std::string>() : std::to_string(k);
    spec.num_actions = get_int(a, "actions", where);
    spec.local = names_to_indices(field(a, "local", where), names, where + ".local");
    spec.influence = names_to_indices(field(a, "influence", where), names, where + ".influence");
    spec.num_observations = get_int(a, "observations", where);
    spec.observation = get_doubles(a, "observation_table", where);
    spec.reward = get_doubles(a, "reward", where);
    agents.push_back(std::move(spec));
  }
  return TabularFposg(std::move(vars), std::move(agents), horizon);
}

TabularFposg load_model_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "model: cannot open " + path);
  return load_model(in);
}

void save_model(std::ostream& out, const TabularFposg& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["horizon"] = model.horizon();
  doc["variables"] = json::array();
  for (const auto& v : model.variables()) {
    json jv;
    jv["name"] = v.name;
    jv["domain"] = v.domain;
    jv["initial"] = v.initial;
    jv["parents"] = json::array();
    for (int p : v.state_parents) jv["parents"].push_back(model.variable(p).name);
    jv["action_parents"] = v.action_parents;
    json rows = json::array();
    for (size_t r = 0; r < v.cpt.size(); r += v.domain)
      rows.push_back(std::vector<double>(v.cpt.begin() + r, v.cpt.begin() + r + v.domain));
    jv["cpt"] = rows;
    doc["variables"].push_back(jv);
  }
  doc["agents"] = json::array();
  for (const auto& a : model.agents()) {
    json ja;
    ja["name"] = a.name;
    ja["actions"] = a.num_actions;
    ja["local"] = json::array();
    for (int v : a.local) ja["local"].push_back(model.variable(v).name);
    ja["influence"] = json::array();
    for (int v : a.influence) ja["influence"].push_back(model.variable(v).name);
    ja["observations"] = a.num_observations;
    json obs = json::array(), rew = json::array();
    for (size_t r = 0; r < a.observation.size(); r += a.num_observations)
      obs.push_back(std::vector<double>(a.observation.begin() + r, a.observation.begin() + r + a.num_observations));
    for (size_t r = 0; r < a.reward.size(); r += a.num_actions)
      rew.push_back(std::vector<double>(a.reward.begin() + r, a.reward.begin() + r + a.num_actions));
    ja["observation_table"] = obs;
    ja["reward"] = rew;
    doc["agents"].push_back(ja);
  }
  out << doc.dump(2) << '\n';
}

}  // namespace dials::oracle
