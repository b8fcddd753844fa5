#include "dials/orchestrator/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "dials/orchestrator/run.hpp"
#include "dials/orchestrator/simulators.hpp"

namespace dials::orchestrator {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

std::vector<ScalingPoint> bench_scaling(const ScalingOptions& opt) {
  require(opt.ials_steps > 0 && opt.gs_steps > 0 && opt.repeats > 0, "bench: step counts must be positive");
  const RunConfig cfg = RunConfig::defaults(opt.env, opt.preset);
  std::vector<ScalingPoint> out;
  for (int grid : opt.grids) {
    const auto env = make_environment(opt.env, grid);
    const int n = env->num_agents();
    ScalingPoint p;
    p.grid_side = grid;
    p.agents = n;
    p.ials_us_per_agent_step = p.gs_us_per_step = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < opt.repeats; ++rep) {
      std::vector<std::unique_ptr<learner::PpoAgent>> learners;
      for (int i = 0; i < n; ++i) {
        Rng init = Rng::derive(opt.seed, static_cast<uint64_t>(i), 1);
        learners.push_back(std::make_unique<learner::PpoAgent>(env->observation_size(AgentId(i)),
                                                               env->num_actions(AgentId(i)), cfg.policy, cfg.ppo, init));
      }
      // IALS: each agent in turn, with a randomly initialized predictor
      double ials_s = 0.0;
      for (int i = 0; i < n; ++i) {
        auto aip = std::make_shared<influence::Aip>(*env, AgentId(i), cfg.aip);
        Rng init = Rng::derive(opt.seed, static_cast<uint64_t>(i), 2);
        aip->net().init(init);
        Ials sim(*env, AgentId(i), *learners[i], Rng::derive(opt.seed, static_cast<uint64_t>(i), 3));
        sim.begin_round(aip);
        const auto t0 = Clock::now();
        sim.train(opt.ials_steps);
        ials_s += seconds(t0);
      }
      p.ials_us_per_agent_step =
          std::min(p.ials_us_per_agent_step, ials_s / (static_cast<double>(n) * opt.ials_steps) * 1e6);

      std::vector<learner::PpoAgent*> ptrs;
      std::vector<Rng> streams;
      for (int i = 0; i < n; ++i) {
        ptrs.push_back(learners[i].get());
        streams.push_back(Rng::derive(opt.seed, static_cast<uint64_t>(i), 4));
      }
      GsTrainer gs(*env, ptrs, Rng::derive(opt.seed, 0, 5), streams);
      const auto t0 = Clock::now();
      gs.train(opt.gs_steps);
      p.gs_us_per_step = std::min(p.gs_us_per_step, seconds(t0) / opt.gs_steps * 1e6);
    }
    out.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const std::vector<ScalingPoint>& points) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : points)
    j.push_back({{"grid_side", p.grid_side},
                 {"agents", p.agents},
                 {"ials_us_per_agent_step", p.ials_us_per_agent_step},
                 {"gs_us_per_step", p.gs_us_per_step}});
  return j;
}

}  // namespace dials::orchestrator
