#pragma once

#include <iosfwd>
#include <vector>

#include "dials/core/environment.hpp"

namespace dials::env {

/// One GS step as exported to a line-delimited JSON trace: per-agent local
/// state and influence sources at time t, the joint action applied at t, and
/// the rewards it produced.
struct TraceRecord {
  int episode = 0;
  int t = 0;
  std::vector<LocalState> x;
  std::vector<InfluenceSourceValue> u;
  std::vector<Action> a;
  std::vector<double> r;
};

TraceRecord make_trace_record(const Environment& env, int episode, int t, const GlobalState& s,
                              std::span<const Action> actions, std::span<const double> rewards);

void write_trace_record(std::ostream& out, const TraceRecord& rec);

/// Parses every record of a trace; throws ContractViolation naming the line on malformed input.
std::vector<TraceRecord> read_trace(std::istream& in);

}  // namespace dials::env
