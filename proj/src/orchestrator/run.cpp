#include "dials/orchestrator/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dials/env/traffic.hpp"
#include "dials/env/warehouse.hpp"
#include "dials/orchestrator/metrics.hpp"
#include "dials/orchestrator/pool.hpp"
#include "dials/orchestrator/simulators.hpp"

namespace dials::orchestrator {

namespace {

// Stream tags for Rng::derive(seed, agent-or-index, tag).
constexpr uint64_t kTagPolicyInit = 0x101;
constexpr uint64_t kTagAipInit = 0x102;
constexpr uint64_t kTagStreams = 0x103;
constexpr uint64_t kTagUpdate = 0x104;
constexpr uint64_t kTagAipTrain = 0x105;
constexpr uint64_t kTagCollect = 0x106;
constexpr uint64_t kTagEval = 0x107;
constexpr uint64_t kTagGs = 0x108;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

using Learners = std::vector<std::unique_ptr<learner::PpoAgent>>;
using Snapshots = std::vector<std::shared_ptr<const influence::Aip>>;

Learners make_learners(const Environment& env, const RunConfig& cfg) {
  Learners out;
  for (int i = 0; i < env.num_agents(); ++i) {
    const AgentId id(i);
    Rng init = Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagPolicyInit);
    out.push_back(std::make_unique<learner::PpoAgent>(env.observation_size(id), env.num_actions(id), cfg.policy,
                                                      cfg.ppo, init));
    out.back()->set_update_rng(Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagUpdate));
  }
  return out;
}

long next_eval(const RunConfig& cfg, long step) {
  return std::min(cfg.total_steps, (step / cfg.eval_every + 1) * cfg.eval_every);
}

/// Evaluates the current joint policy on the GS and appends a row; AIP CE is
/// measured on the same episodes when snapshots are given.
class Recorder {
 public:
  Recorder(const Environment& env, const RunConfig& cfg, RunMetrics& m, Clock::time_point t0)
      : env_(env), cfg_(cfg), m_(m), t0_(t0) {}

  void operator()(long step, const Learners& learners, const Snapshots* aips) {
    const auto t = Clock::now();
    EvalRow row;
    row.global_step = step;
    row.wall_s = since(t0_);
    row.phase = step == 0 ? "initial" : step == cfg_.total_steps ? "final" : "training";
    std::vector<learner::PolicyActor> actors;
    for (const auto& l : learners) actors.push_back(l->snapshot());
    std::vector<Actor*> ptrs;
    for (auto& a : actors) ptrs.push_back(&a);
    Rng rng = Rng::derive(cfg_.seed, static_cast<uint64_t>(index_++), kTagEval);
    const EvalResult r = evaluate(env_, ptrs, cfg_.eval_episodes, rng);
    row.returns = r.mean;
    row.se = r.se;
    if (aips) {
      for (int i = 0; i < env_.num_agents(); ++i) {
        row.aip_ce.push_back(influence::aip_dataset_ce(*(*aips)[i], r.data[i]));
        row.aip_hash.push_back((*aips)[i]->snapshot_hash());
      }
    }
    m_.evals.push_back(std::move(row));
    m_.runtime.evaluation_s += since(t);
  }

 private:
  const Environment& env_;
  const RunConfig& cfg_;
  RunMetrics& m_;
  Clock::time_point t0_;
  int index_ = 0;
};

RunMetrics run_local(const RunConfig& cfg, bool trained) {
  cfg.validate();
  const auto t0 = Clock::now();
  const auto env = make_environment(cfg.env, cfg.grid_side);
  const int n = env->num_agents();
  const int workers = resolve_workers(cfg.workers);
  const Learners learners = make_learners(*env, cfg);

  // Working AIPs are trained in place; the IALSs only ever see immutable copies.
  std::vector<influence::Aip> aips;
  for (int i = 0; i < n; ++i) {
    aips.emplace_back(*env, AgentId(i), cfg.aip);
    if (trained) {
      Rng init = Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagAipInit);
      aips.back().net().init(init);
    }
  }
  Snapshots snaps;
  for (const auto& a : aips) snaps.push_back(std::make_shared<const influence::Aip>(a));

  std::vector<Ials> ials;
  for (int i = 0; i < n; ++i)
    ials.emplace_back(*env, AgentId(i), *learners[i], Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagStreams));

  RunMetrics m;
  Recorder record(*env, cfg, m, t0);
  record(0, learners, &snaps);

  const long rounds = cfg.total_steps == 0 ? 0 : (cfg.total_steps + cfg.F - 1) / cfg.F;
  long step = 0;
  for (long r = 0; r < rounds; ++r) {
    RoundRecord rec;
    rec.round = static_cast<int>(r);
    rec.start_step = step;
    rec.end_step = std::min(cfg.total_steps, (r + 1) * cfg.F);
    if (trained) {
      auto t = Clock::now();
      std::vector<learner::PolicyActor> actors;
      for (const auto& l : learners) actors.push_back(l->snapshot());
      std::vector<Actor*> ptrs;
      for (auto& a : actors) ptrs.push_back(&a);
      Rng crng = Rng::derive(cfg.seed, static_cast<uint64_t>(r), kTagCollect);
      const auto data = influence::collect_datasets(*env, ptrs, cfg.aip.dataset_size, crng);
      m.runtime.data_collection_s += since(t);

      t = Clock::now();
      rec.aip_train_ce.resize(static_cast<size_t>(n));
      parallel_for(workers, n, "aip training", [&](int i) {
        if (!cfg.aip_warm_start && r > 0) {
          Rng init = Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagAipInit).split(static_cast<uint64_t>(r));
          aips[i].net().init(init);
        }
        Rng tr = Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagAipTrain).split(static_cast<uint64_t>(r));
        rec.aip_train_ce[i] = influence::aip_train(aips[i], data[i], cfg.aip, tr);
      });
      m.runtime.aip_training_s += since(t);
      rec.retrained = true;
      ++m.retraining_rounds;
      for (int i = 0; i < n; ++i) snaps[i] = std::make_shared<const influence::Aip>(aips[i]);
    }
    for (int i = 0; i < n; ++i) {
      rec.aip_hash.push_back(snaps[i]->snapshot_hash());
      ials[i].begin_round(snaps[i]);
    }
    while (step < rec.end_step) {
      const long next = std::min(rec.end_step, next_eval(cfg, step));
      const auto t = Clock::now();
      parallel_for(workers, n, "agent training", [&](int i) { ials[i].train(next - step); });
      m.runtime.agent_training_s += since(t);
      std::vector<uint64_t> seen;
      for (const auto& s : ials) seen.push_back(s.aip_hash());
      rec.observed.push_back(std::move(seen));
      step = next;
      if (step % cfg.eval_every == 0 || step == cfg.total_steps) record(step, learners, &snaps);
    }
    m.rounds.push_back(std::move(rec));
  }
  m.runtime.total_s = since(t0);
  return m;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kDials: return "dials";
    case Mode::kGs: return "gs";
    case Mode::kUntrained: return "untrained";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "dials") return Mode::kDials;
  if (s == "gs") return Mode::kGs;
  if (s == "untrained" || s == "untrained_dials") return Mode::kUntrained;
  throw ContractViolation("unknown mode '" + s + "' (expected dials, gs or untrained)");
}

RunConfig RunConfig::defaults(const std::string& env, const std::string& preset) {
  RunConfig c;
  c.env = env;
  c.preset = preset;
  c.policy = learner::PolicyShape::defaults_for(env);
  c.ppo = learner::PpoConfig::defaults_for(env);
  c.aip = influence::AipConfig::defaults_for(env);
  if (preset == "desk") {
    c.policy.hidden1 = 64;
    c.policy.hidden2 = 32;
    c.aip.epochs = env == "traffic" ? 20 : 50;
  } else if (preset == "paper") {
    c.aip_warm_start = false;
  } else {
    throw ContractViolation("unknown preset '" + preset + "' (expected desk or paper)");
  }
  return c;
}

void RunConfig::validate() const {
  require(env == "warehouse" || env == "traffic", "config: env must be warehouse or traffic");
  require(grid_side >= 1, "config: grid_side must be positive");
  require(F > 0, "config: F must be positive");
  require(total_steps >= 0, "config: total_steps must be non-negative");
  require(total_steps == 0 || F <= total_steps, "config: F must not exceed total_steps");
  require(eval_every > 0 && eval_episodes >= 1, "config: evaluation cadence must be positive");
  require(workers >= 1, "config: worker_count must be at least 1");
  require(aip.dataset_size > 0 && aip.epochs >= 0, "config: invalid AIP settings");
}

bool RoundRecord::stationary() const {
  for (const auto& seen : observed)
    if (seen != aip_hash) return false;
  return true;
}

double RunMetrics::final_mean_return() const {
  require(!evals.empty(), "metrics: no evaluation recorded");
  double s = 0.0;
  for (double r : evals.back().returns) s += r;
  return s / static_cast<double>(evals.back().returns.size());
}

RunError::RunError(int agent, const std::string& phase, const std::string& what)
    : std::runtime_error("agent " + std::to_string(agent) + " failed during " + phase + ": " + what),
      agent_(agent),
      phase_(phase) {}

std::unique_ptr<Environment> make_environment(const std::string& name, int grid_side) {
  if (name == "warehouse") {
    env::WarehouseConfig c;
    c.grid_side = grid_side;
    return std::make_unique<env::Warehouse>(c);
  }
  if (name == "traffic") {
    env::TrafficConfig c;
    c.grid_side = grid_side;
    return std::make_unique<env::Traffic>(c);
  }
  throw ContractViolation("unknown environment '" + name + "'");
}

EvalResult evaluate(const Environment& env, std::span<Actor* const> actors, int episodes, Rng& rng) {
  require(episodes >= 1, "evaluate: at least one episode required");
  std::vector<std::vector<double>> returns;
  EvalResult r;
  r.data = influence::collect_datasets(env, actors, episodes * env.horizon(), rng, &returns);
  const int n = env.num_agents();
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& ep : returns) mean += ep[i];
    mean /= episodes;
    double var = 0.0;
    for (const auto& ep : returns) var += (ep[i] - mean) * (ep[i] - mean);
    r.mean.push_back(mean);
    r.se.push_back(episodes > 1 ? std::sqrt(var / (episodes - 1) / episodes) : 0.0);
  }
  return r;
}

RunMetrics run_dials(const RunConfig& cfg) {
  require(cfg.mode == Mode::kDials, "run_dials: mode must be dials");
  return run_local(cfg, true);
}

RunMetrics run_untrained_dials(const RunConfig& cfg) {
  require(cfg.mode == Mode::kUntrained, "run_untrained_dials: mode must be untrained");
  return run_local(cfg, false);
}

RunMetrics run_gs(const RunConfig& cfg) {
  require(cfg.mode == Mode::kGs, "run_gs: mode must be gs");
  cfg.validate();
  const auto t0 = Clock::now();
  const auto env = make_environment(cfg.env, cfg.grid_side);
  const int n = env->num_agents();
  const Learners learners = make_learners(*env, cfg);
  std::vector<learner::PpoAgent*> ptrs;
  std::vector<Rng> streams;
  for (int i = 0; i < n; ++i) {
    ptrs.push_back(learners[i].get());
    streams.push_back(Rng::derive(cfg.seed, static_cast<uint64_t>(i), kTagStreams));
  }
  GsTrainer gs(*env, ptrs, Rng::derive(cfg.seed, 0, kTagGs), streams);

  RunMetrics m;
  Recorder record(*env, cfg, m, t0);
  record(0, learners, nullptr);
  long step = 0;
  while (step < cfg.total_steps) {
    const long next = next_eval(cfg, step);
    const auto t = Clock::now();
    try {
      gs.train(next - step);
    } catch (const std::exception& e) {
      throw RunError(-1, "global simulator training", e.what());
    }
    m.runtime.agent_training_s += since(t);
    step = next;
    record(step, learners, nullptr);
  }
  m.runtime.total_s = since(t0);
  return m;
}

RunMetrics run(const RunConfig& cfg) {
  RunMetrics m;
  switch (cfg.mode) {
    case Mode::kDials: m = run_dials(cfg); break;
    case Mode::kGs: m = run_gs(cfg); break;
    case Mode::kUntrained: m = run_untrained_dials(cfg); break;
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(std::filesystem::path(cfg.out_dir) / "metrics.csv");
    write_metrics_csv(csv, m);
    std::ofstream man(std::filesystem::path(cfg.out_dir) / "manifest.json");
    man << manifest_json(cfg, m).dump(2) << "\n";
    require(csv.good() && man.good(), "run: failed to write metrics to " + cfg.out_dir);
  }
  return m;
}

}  // namespace dials::orchestrator
