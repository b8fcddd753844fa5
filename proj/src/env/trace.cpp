#include "dials/env/trace.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace dials::env {

using nlohmann::json;

TraceRecord make_trace_record(const Environment& env, int episode, int t, const GlobalState& s,
                              std::span<const Action> actions, std::span<const double> rewards) {
  TraceRecord rec;
  rec.episode = episode;
  rec.t = t;
  for (int i = 0; i < env.num_agents(); ++i) {
    rec.x.push_back(env.extract_local(s, AgentId(i)));
    rec.u.push_back(env.extract_influence_sources(s, AgentId(i)));
  }
  rec.a.assign(actions.begin(), actions.end());
  rec.r.assign(rewards.begin(), rewards.end());
  return rec;
}

void write_trace_record(std::ostream& out, const TraceRecord& rec) {
  json j;
  j["episode"] = rec.episode;
  j["t"] = rec.t;
  j["x"] = json::array();
  for (const auto& x : rec.x) j["x"].push_back(x.values);
  j["u"] = json::array();
  for (const auto& u : rec.u) j["u"].push_back(u.values);
  j["a"] = rec.a;
  j["r"] = rec.r;
  out << j.dump() << '\n';
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      TraceRecord rec;
      rec.episode = j.at("episode").get<int>();
      rec.t = j.at("t").get<int>();
      for (const auto& x : j.at("x")) rec.x.push_back(LocalState{x.get<std::vector<int32_t>>()});
      for (const auto& u : j.at("u")) rec.u.push_back(InfluenceSourceValue{u.get<std::vector<int32_t>>()});
      rec.a = j.at("a").get<std::vector<Action>>();
      rec.r = j.at("r").get<std::vector<double>>();
      require(rec.x.size() == rec.u.size() && rec.x.size() == rec.a.size() && rec.x.size() == rec.r.size(),
              "agent counts disagree");
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ContractViolation("trace line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractViolation& e) {
      throw ContractViolation("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace dials::env
