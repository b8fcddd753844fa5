#pragma once

#include <vector>

#include "dials/core/actor.hpp"
#include "dials/core/environment.hpp"

namespace dials::influence {

/// One GS episode seen from agent i: at step t the local state x_t, the
/// influence sources u_t read from the same global state, then the action a_t.
struct InfluenceEpisode {
  std::vector<LocalState> x;
  std::vector<Action> a;
  std::vector<InfluenceSourceValue> u;
  int length() const { return static_cast<int>(x.size()); }
};

struct InfluenceDataset {
  int agent = 0;
  std::vector<InfluenceEpisode> episodes;
  int num_samples() const;
};

/// Runs ceil(n_samples / horizon) GS episodes under `actors` (one per agent)
/// and records every agent's (x, u, a) triples from the same episodes.
/// Environment noise, observations and each agent's actions use separate
/// substreams split from `rng`. When `returns` is given it receives each
/// episode's undiscounted return per agent ([episode][agent]).
std::vector<InfluenceDataset> collect_datasets(const Environment& env, std::span<Actor* const> actors, int n_samples,
                                               Rng& rng, std::vector<std::vector<double>>* returns = nullptr);

}  // namespace dials::influence
