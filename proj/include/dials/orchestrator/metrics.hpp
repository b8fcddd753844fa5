#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dials/orchestrator/run.hpp"

namespace dials::orchestrator {

/// One row per (evaluation, agent):
/// global_step,agent_id,eval_return,eval_se,aip_ce,phase,wall_s
/// aip_ce is empty for GS runs. Numbers are printed with 17 significant digits.
void write_metrics_csv(std::ostream& out, const RunMetrics& m);

struct MetricsRow {
  long global_step = 0;
  int agent_id = 0;
  double eval_return = 0, eval_se = 0, aip_ce = 0;
  bool has_aip_ce = false;
  std::string phase;
  double wall_s = 0;
};

/// Parses a metrics table; throws ContractViolation on a wrong header or malformed row.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// The metrics table with the wall_s column removed: the part that must not
/// depend on scheduling.
std::string deterministic_part(std::istream& csv);

/// Full config, seed, git-describe string, runtime breakdown and per-round AIP snapshot hashes.
nlohmann::json manifest_json(const RunConfig& cfg, const RunMetrics& m);

std::string git_describe();
std::string hex64(uint64_t v);

}  // namespace dials::orchestrator
