#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dials/core/environment.hpp"
#include "dials/influence/aip.hpp"
#include "dials/learner/ppo.hpp"

namespace dials::orchestrator {

enum class Mode { kDials, kGs, kUntrained };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct RunConfig {
  std::string env = "warehouse";
  int grid_side = 2;
  Mode mode = Mode::kDials;
  long F = 50000;             // AIP retraining period, per-agent environment steps
  long total_steps = 200000;  // per agent
  long eval_every = 10000;
  int eval_episodes = 10;
  uint64_t seed = 1;
  int workers = 1;
  std::string out_dir;        // empty: nothing is written

  std::string preset = "desk";
  learner::PolicyShape policy;
  learner::PpoConfig ppo;
  influence::AipConfig aip;
  bool aip_warm_start = true;  // retrain from the previous round's parameters

  /// "paper": the published network sizes and AIP epochs. "desk": the same
  /// hyperparameters with smaller policy networks and fewer (warm-started)
  /// AIP epochs, sized so that the comparative experiments fit one core.
  static RunConfig defaults(const std::string& env, const std::string& preset = "desk");
  void validate() const;
};

struct EvalRow {
  long global_step = 0;
  std::string phase;                // initial | training | final
  double wall_s = 0.0;
  std::vector<double> returns, se;  // per agent
  std::vector<double> aip_ce;       // per agent; empty in GS mode
  std::vector<uint64_t> aip_hash;   // per agent snapshot in use; empty in GS mode
};

struct RoundRecord {
  int round = 0;
  long start_step = 0, end_step = 0;
  bool retrained = false;
  std::vector<uint64_t> aip_hash;                  // snapshot handed to each IALS
  std::vector<std::vector<uint64_t>> observed;     // [chunk][agent] hash reported by the workers
  std::vector<std::vector<double>> aip_train_ce;   // [agent] per-epoch training CE
  bool stationary() const;
};

struct Runtime {
  double agent_training_s = 0, data_collection_s = 0, aip_training_s = 0, evaluation_s = 0, total_s = 0;
};

struct RunMetrics {
  std::vector<EvalRow> evals;
  std::vector<RoundRecord> rounds;
  int retraining_rounds = 0;
  Runtime runtime;
  double final_mean_return() const;
};

/// A worker failed; names the agent and the phase.
class RunError : public std::runtime_error {
 public:
  RunError(int agent, const std::string& phase, const std::string& what);
  int agent() const { return agent_; }
  const std::string& phase() const { return phase_; }

 private:
  int agent_;
  std::string phase_;
};

std::unique_ptr<Environment> make_environment(const std::string& name, int grid_side);

struct EvalResult {
  std::vector<double> mean, se;
  std::vector<influence::InfluenceDataset> data;
};

/// Runs GS episodes with stochastic sampling from frozen actors; per-agent
/// mean undiscounted return and its standard error, plus the recorded (x, u, a).
EvalResult evaluate(const Environment& env, std::span<Actor* const> actors, int episodes, Rng& rng);

RunMetrics run_dials(const RunConfig& cfg);
RunMetrics run_gs(const RunConfig& cfg);
RunMetrics run_untrained_dials(const RunConfig& cfg);
/// Dispatches on cfg.mode and, when cfg.out_dir is set, writes metrics.csv and manifest.json there.
RunMetrics run(const RunConfig& cfg);

}  // namespace dials::orchestrator
