#pragma once

#include <memory>
#include <vector>

#include "dials/influence/aip.hpp"
#include "dials/learner/ppo.hpp"

namespace dials::orchestrator {

/// Influence-augmented local simulator of one agent, driving that agent's
/// learner. Influence sources are sampled from a frozen AIP snapshot given
/// (x_t, a_{t-1}); the snapshot only changes in begin_round().
class Ials {
 public:
  /// `streams` seeds the local dynamics, influence sampling, observation and action draws.
  Ials(const Environment& env, AgentId agent, learner::PpoAgent& learner, Rng streams);

  /// Installs a new snapshot and starts a fresh episode.
  void begin_round(std::shared_ptr<const influence::Aip> aip);
  void train(long steps);
  uint64_t aip_hash() const { return hash_; }

 private:
  const Environment* env_;
  AgentId agent_;
  learner::PpoAgent* learner_;
  std::shared_ptr<const influence::Aip> aip_;
  uint64_t hash_ = 0;
  Rng env_rng_, aip_rng_, obs_rng_, act_rng_;
  LocalState x_;
  influence::Aip::Memory memory_;
  Action prev_ = -1;
  int t_ = 0;
  std::vector<double> obs_;
};

/// All agents acting and learning together on one global simulator.
class GsTrainer {
 public:
  GsTrainer(const Environment& env, std::vector<learner::PpoAgent*> learners, Rng env_stream,
            std::vector<Rng> agent_streams);
  void train(long steps);

 private:
  const Environment* env_;
  std::vector<learner::PpoAgent*> learners_;
  Rng env_rng_;
  std::vector<Rng> obs_rng_, act_rng_;
  GlobalState s_;
  int t_ = 0;
  std::vector<Action> joint_;
  std::vector<std::vector<double>> obs_;
};

}  // namespace dials::orchestrator
