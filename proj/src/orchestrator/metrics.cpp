#include "dials/orchestrator/metrics.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#ifndef DIALS_GIT_DESCRIBE
#define DIALS_GIT_DESCRIBE "unknown"
#endif

namespace dials::orchestrator {

namespace {

constexpr const char* kHeader = "global_step,agent_id,eval_return,eval_se,aip_ce,phase,wall_s";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ContractViolation("metrics line " + std::to_string(line) + ": bad number '" + s + "'");
}

nlohmann::json config_json(const RunConfig& c) {
  auto arch = [](nn::Arch a) { return a == nn::Arch::kRecurrent ? "recurrent" : "feedforward"; };
  return {
      {"env", c.env},
      {"grid_side", c.grid_side},
      {"mode", to_string(c.mode)},
      {"F", c.F},
      {"total_steps", c.total_steps},
      {"eval_every", c.eval_every},
      {"eval_episodes", c.eval_episodes},
      {"seed", c.seed},
      {"worker_count", c.workers},
      {"preset", c.preset},
      {"policy", {{"arch", arch(c.policy.arch)}, {"hidden", {c.policy.hidden1, c.policy.hidden2}}}},
      {"ppo",
       {{"rollout_steps", c.ppo.rollout_steps},
        {"lr", c.ppo.lr},
        {"gamma", c.ppo.gamma},
        {"lambda", c.ppo.lambda},
        {"memory", c.ppo.memory},
        {"batch", c.ppo.batch},
        {"epochs", c.ppo.epochs},
        {"entropy", c.ppo.entropy},
        {"clip_eps", c.ppo.clip_eps},
        {"value_coeff", c.ppo.value_coeff},
        {"max_grad_norm", c.ppo.max_grad_norm}}},
      {"aip",
       {{"arch", arch(c.aip.arch)},
        {"hidden", {c.aip.hidden1, c.aip.hidden2}},
        {"lr", c.aip.lr},
        {"batch", c.aip.batch},
        {"epochs", c.aip.epochs},
        {"truncation", c.aip.truncation},
        {"dataset_size", c.aip.dataset_size},
        {"clip", c.aip.clip},
        {"warm_start", c.aip_warm_start}}},
  };
}

}  // namespace

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string git_describe() { return DIALS_GIT_DESCRIBE; }

void write_metrics_csv(std::ostream& out, const RunMetrics& m) {
  out << kHeader << "\n";
  for (const auto& row : m.evals) {
    for (size_t i = 0; i < row.returns.size(); ++i) {
      out << row.global_step << ',' << i << ',' << num(row.returns[i]) << ',' << num(row.se[i]) << ','
          << (row.aip_ce.empty() ? std::string() : num(row.aip_ce[i])) << ',' << row.phase << ',' << num(row.wall_s)
          << "\n";
    }
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw ContractViolation("metrics: header must be '" + std::string(kHeader) + "'");
  std::vector<MetricsRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 7) throw ContractViolation("metrics line " + std::to_string(n) + ": expected 7 columns");
    MetricsRow r;
    r.global_step = static_cast<long>(parse_double(c[0], n));
    r.agent_id = static_cast<int>(parse_double(c[1], n));
    r.eval_return = parse_double(c[2], n);
    r.eval_se = parse_double(c[3], n);
    r.has_aip_ce = !c[4].empty();
    if (r.has_aip_ce) r.aip_ce = parse_double(c[4], n);
    r.phase = c[5];
    r.wall_s = parse_double(c[6], n);
    rows.push_back(r);
  }
  return rows;
}

std::string deterministic_part(std::istream& csv) {
  std::string line, out;
  while (std::getline(csv, line)) {
    const auto cut = line.rfind(',');
    out += (cut == std::string::npos ? line : line.substr(0, cut)) + "\n";
  }
  return out;
}

nlohmann::json manifest_json(const RunConfig& cfg, const RunMetrics& m) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : m.rounds) {
    nlohmann::json hashes = nlohmann::json::array(), observed = nlohmann::json::array();
    for (uint64_t h : r.aip_hash) hashes.push_back(hex64(h));
    for (const auto& seen : r.observed) {
      nlohmann::json row = nlohmann::json::array();
      for (uint64_t h : seen) row.push_back(hex64(h));
      observed.push_back(row);
    }
    nlohmann::json ce = nlohmann::json::array();
    for (const auto& curve : r.aip_train_ce)
      ce.push_back(curve.empty() ? nlohmann::json(nullptr) : nlohmann::json({curve.front(), curve.back()}));
    rounds.push_back({{"round", r.round},
                      {"start_step", r.start_step},
                      {"end_step", r.end_step},
                      {"retrained", r.retrained},
                      {"aip_hash", hashes},
                      {"observed_hashes", observed},
                      {"stationary", r.stationary()},
                      {"aip_train_ce_first_last", ce}});
  }
  nlohmann::json j;
  j["config"] = config_json(cfg);
  j["seed"] = cfg.seed;
  j["git_describe"] = git_describe();
  j["runtime"] = {{"agents_training_s", m.runtime.agent_training_s},
                  {"data_collection_s", m.runtime.data_collection_s},
                  {"aip_training_s", m.runtime.aip_training_s},
                  {"data_collection_and_influence_training_s", m.runtime.data_collection_s + m.runtime.aip_training_s},
                  {"evaluation_s", m.runtime.evaluation_s},
                  {"total_s", m.runtime.total_s}};
  j["retraining_rounds"] = m.retraining_rounds;
  j["rounds"] = rounds;
  if (!m.evals.empty()) {
    j["final"] = {{"global_step", m.evals.back().global_step},
                  {"mean_return", m.final_mean_return()},
                  {"returns", m.evals.back().returns},
                  {"aip_ce", m.evals.back().aip_ce}};
  }
  return j;
}

}  // namespace dials::orchestrator
