#include "dials/core/history.hpp"

namespace dials {

LocalHistory::LocalHistory(const LocalState& initial)
    : initialized_(true), width_(static_cast<int>(initial.values.size())), states_(initial.values) {}

int LocalHistory::num_states() const { return initialized_ ? length() + 1 : 0; }

std::span<const int32_t> LocalHistory::state(int t) const {
  require(t >= 0 && t < num_states(), "LocalHistory::state: index out of range");
  return std::span<const int32_t>(states_).subspan(static_cast<size_t>(t) * width_, width_);
}

LocalState LocalHistory::state_copy(int t) const {
  auto s = state(t);
  return LocalState{{s.begin(), s.end()}};
}

void LocalHistory::append(Action a, const LocalState& x) {
  require(initialized_, "LocalHistory::append: history has no initial state");
  require(static_cast<int>(x.values.size()) == width_, "LocalHistory::append: state width mismatch");
  actions_.push_back(a);
  states_.insert(states_.end(), x.values.begin(), x.values.end());
}

LocalHistory append_history(const LocalHistory& l, Action a, const LocalState& x) {
  LocalHistory out = l;
  out.append(a, x);
  return out;
}

}  // namespace dials
