#include "dials/influence/dataset.hpp"

namespace dials::influence {

int InfluenceDataset::num_samples() const {
  int n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

std::vector<InfluenceDataset> collect_datasets(const Environment& env, std::span<Actor* const> actors, int n_samples,
                                               Rng& rng, std::vector<std::vector<double>>* returns) {
  const int n = env.num_agents();
  const int H = env.horizon();
  require(static_cast<int>(actors.size()) == n, "collect_datasets: one actor per agent required");
  require(n_samples >= H, "collect_datasets: n_samples must be at least the horizon");
  const int episodes = (n_samples + H - 1) / H;
  const Rng base(rng.next_u64());  // consuming a draw makes successive calls differ
  Rng env_rng = base.split(0);
  std::vector<Rng> obs_rng, act_rng;
  for (int i = 0; i < n; ++i) {
    obs_rng.push_back(base.split(1000 + static_cast<uint64_t>(i)));
    act_rng.push_back(base.split(2000 + static_cast<uint64_t>(i)));
  }
  std::vector<InfluenceDataset> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[i].agent = i;
  std::vector<Action> joint(static_cast<size_t>(n));
  std::vector<std::vector<double>> obs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) obs[i].resize(static_cast<size_t>(env.observation_size(AgentId(i))));
  if (returns) returns->assign(static_cast<size_t>(episodes), std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int e = 0; e < episodes; ++e) {
    GlobalState s = env.reset(env_rng);
    for (Actor* a : actors) a->reset();
    for (int i = 0; i < n; ++i) out[i].episodes.emplace_back();
    for (int t = 0; t < H; ++t) {
      for (int i = 0; i < n; ++i) {
        const AgentId id(i);
        const LocalState x = env.extract_local(s, id);
        env.observe(id, x, obs_rng[i], obs[i]);
        joint[i] = actors[i]->act(obs[i], act_rng[i]);
        auto& ep = out[i].episodes.back();
        ep.x.push_back(x);
        ep.u.push_back(env.extract_influence_sources(s, id));
        ep.a.push_back(joint[i]);
      }
      GlobalStep g = env.step_global(s, joint, env_rng);
      if (returns)
        for (int i = 0; i < n; ++i) (*returns)[e][i] += g.rewards[i];
      s = std::move(g.next);
    }
  }
  return out;
}

}  // namespace dials::influence
