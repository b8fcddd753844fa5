#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dials {

/// Thrown when a caller breaks an operation's precondition (bad agent id,
/// malformed action vector, out-of-domain value).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Index of an agent in [0, n). Stable for a whole run.
class AgentId {
 public:
  constexpr AgentId() = default;
  constexpr explicit AgentId(int index) : index_(index) {}
  constexpr int index() const { return index_; }
  auto operator<=>(const AgentId&) const = default;

 private:
  int index_ = 0;
};

using Action = int;

/// Full joint state: k finite-domain variables in an environment-specific layout.
struct GlobalState {
  std::vector<int32_t> variables;
  bool operator==(const GlobalState&) const = default;
};

/// Projection of a global state onto one agent's local variables X_i.
struct LocalState {
  std::vector<int32_t> values;
  bool operator==(const LocalState&) const = default;
};

/// Values of one agent's influence-source variables U_i.
struct InfluenceSourceValue {
  std::vector<int32_t> values;
  bool operator==(const InfluenceSourceValue&) const = default;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace dials
