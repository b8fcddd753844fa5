#include "dials/oracle/tabular_env.hpp"

#include <algorithm>

namespace dials::oracle {

namespace {

template <typename Weights>
int draw(Rng& rng, const Weights& w) {
  return rng.categorical(std::span<const double>(w.data(), w.size()));
}

}  // namespace

int TabularEnvironment::num_actions(AgentId i) const {
  check_agent(i);
  return model_.agent(i.index()).num_actions;
}

int TabularEnvironment::state_index(const GlobalState& s) const {
  std::vector<int> v(s.variables.begin(), s.variables.end());
  return model_.encode(v);
}

GlobalState TabularEnvironment::reset(Rng& rng) const {
  std::vector<double> w(static_cast<size_t>(model_.num_states()));
  for (int s = 0; s < model_.num_states(); ++s) w[s] = model_.initial_prob(s);
  const int s = draw(rng, w);
  GlobalState g;
  for (int v = 0; v < model_.num_variables(); ++v) g.variables.push_back(model_.value(s, v));
  return g;
}

GlobalStep TabularEnvironment::step_global(const GlobalState& s, std::span<const Action> actions, Rng& rng) const {
  require(static_cast<int>(actions.size()) == num_agents(), "tabular: joint action size mismatch");
  const int si = state_index(s);
  std::vector<int> a(actions.begin(), actions.end());
  const auto trans = model_.transitions(si, model_.joint_action(a));
  std::vector<double> w;
  for (const Transition& t : trans) w.push_back(t.p);
  const int next = trans[static_cast<size_t>(draw(rng, w))].next;
  GlobalStep out;
  for (int v = 0; v < model_.num_variables(); ++v) out.next.variables.push_back(model_.value(next, v));
  for (int i = 0; i < num_agents(); ++i) out.rewards.push_back(model_.reward(i, model_.local_index(si, i), a[i]));
  return out;
}

LocalState TabularEnvironment::extract_local(const GlobalState& s, AgentId i) const {
  check_agent(i);
  return {{model_.local_index(state_index(s), i.index())}};
}

InfluenceSourceValue TabularEnvironment::extract_influence_sources(const GlobalState& s, AgentId i) const {
  check_agent(i);
  return {{model_.influence_index(state_index(s), i.index())}};
}

std::vector<int> TabularEnvironment::influence_domains(AgentId i) const {
  check_agent(i);
  return {model_.num_influence_values(i.index())};
}

LocalState TabularEnvironment::local_reset(AgentId i, Rng& rng) const {
  check_agent(i);
  std::vector<double> w;
  for (int x = 0; x < model_.num_local_states(i.index()); ++x) w.push_back(model_.local_initial(i.index(), x));
  return {{draw(rng, w)}};
}

LocalStep TabularEnvironment::local_step(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue& u,
                                         Rng& rng) const {
  check_agent(i);
  const auto trans = model_.local_transitions(i.index(), x.values.at(0), u.values.at(0), a);
  std::vector<double> w;
  for (const Transition& t : trans) w.push_back(t.p);
  return {{{trans[static_cast<size_t>(draw(rng, w))].next}}, model_.reward(i.index(), x.values.at(0), a)};
}

double TabularEnvironment::local_reward(AgentId i, const LocalState& x, Action a, const InfluenceSourceValue&) const {
  check_agent(i);
  return model_.reward(i.index(), x.values.at(0), a);
}

int TabularEnvironment::observation_size(AgentId i) const {
  check_agent(i);
  return model_.agent(i.index()).num_observations;
}

void TabularEnvironment::observe(AgentId i, const LocalState& x, Rng& rng, std::span<double> out) const {
  const int O = observation_size(i);
  require(static_cast<int>(out.size()) == O, "tabular: observation buffer size mismatch");
  std::vector<double> w;
  for (int o = 0; o < O; ++o) w.push_back(model_.observation_prob(i.index(), x.values.at(0), o));
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<size_t>(draw(rng, w))] = 1.0;
}

int TabularEnvironment::local_feature_size(AgentId i) const {
  check_agent(i);
  return model_.num_local_states(i.index());
}

void TabularEnvironment::local_features(AgentId i, const LocalState& x, std::span<double> out) const {
  require(static_cast<int>(out.size()) == local_feature_size(i), "tabular: feature buffer size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<size_t>(x.values.at(0))] = 1.0;
}

}  // namespace dials::oracle
