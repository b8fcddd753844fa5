#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dials/core/types.hpp"

namespace dials {

/// Action-local-state history l^t = <x^0, a^0, x^1, ..., a^{t-1}, x^t>.
///
/// Stored as two flat arrays (states back to back, fixed width) so a history
/// can be serialized or hashed without walking a linked structure.
class LocalHistory {
 public:
  LocalHistory() = default;
  explicit LocalHistory(const LocalState& initial);

  /// Number of actions taken so far (t); the history holds t + 1 states.
  int length() const { return static_cast<int>(actions_.size()); }
  /// True for a default-constructed history with no initial state.
  bool empty() const { return !initialized_; }
  int state_width() const { return width_; }
  int num_states() const;

  std::span<const int32_t> state(int t) const;
  LocalState state_copy(int t) const;
  std::span<const int32_t> last_state() const { return state(num_states() - 1); }
  Action action(int t) const { return actions_.at(static_cast<size_t>(t)); }

  void append(Action a, const LocalState& x);

  std::span<const int32_t> flat_states() const { return states_; }
  std::span<const Action> actions() const { return actions_; }

  bool operator==(const LocalHistory&) const = default;

 private:
  bool initialized_ = false;
  int width_ = 0;
  std::vector<int32_t> states_;
  std::vector<Action> actions_;
};

/// Returns l extended by (a, x); l itself is left untouched.
LocalHistory append_history(const LocalHistory& l, Action a, const LocalState& x);

/// Action-observation history h^t = <o^0, a^0, ..., a^{t-1}, o^t> over
/// integer observation symbols.
class ObservationHistory {
 public:
  ObservationHistory() = default;
  explicit ObservationHistory(int initial_observation) : observations_{initial_observation} {}

  int length() const { return static_cast<int>(actions_.size()); }
  int observation(int t) const { return observations_.at(static_cast<size_t>(t)); }
  Action action(int t) const { return actions_.at(static_cast<size_t>(t)); }
  std::span<const int> observations() const { return observations_; }
  std::span<const Action> actions() const { return actions_; }

  void append(Action a, int observation) {
    actions_.push_back(a);
    observations_.push_back(observation);
  }

  bool operator==(const ObservationHistory&) const = default;

 private:
  std::vector<int> observations_;
  std::vector<Action> actions_;
};

}  // namespace dials
