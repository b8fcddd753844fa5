#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dials::orchestrator {

struct ScalingOptions {
  std::string env = "warehouse";
  std::vector<int> grids{2, 5};
  std::string preset = "desk";
  long ials_steps = 2000;  // per agent
  long gs_steps = 1000;
  int repeats = 3;         // the fastest repeat is reported
  uint64_t seed = 1;
};

/// Wall time of training steps (simulation, acting and PPO updates) at one grid size.
struct ScalingPoint {
  int grid_side = 0;
  int agents = 0;
  double ials_us_per_agent_step = 0;  // one agent on its IALS, averaged over agents
  double gs_us_per_step = 0;          // one step of the GS with every agent acting and learning
};

std::vector<ScalingPoint> bench_scaling(const ScalingOptions& opt);
nlohmann::json to_json(const std::vector<ScalingPoint>& points);

}  // namespace dials::orchestrator
