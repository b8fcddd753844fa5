#pragma once

#include <cstdint>

#include "dials/oracle/model.hpp"

namespace dials::oracle {

enum class Coupling {
  kAny,          // influence sources may depend on other agents' states and actions
  kIndependent,  // no path from another agent's action into U_i or X_i
  kCoupled,      // U_i has another agent's action as a direct parent
};

/// Random tabular toy: per agent a local variable x_i and an influence source
/// u_i, plus an optional shared external variable y. x_i depends on (x_i, u_i,
/// a_i); u_i depends on a random subset of {u_i, y, x_j} (and a_j when coupled).
struct ToyOptions {
  int agents = 2;
  int horizon = 3;
  int local_domain = 2;
  int influence_domain = 2;
  int num_actions = 2;
  int num_observations = 2;
  bool external = true;
  bool deterministic = false;  // every prior, CPT row and observation row a point mass
  Coupling coupling = Coupling::kAny;
  double cost_budget = 1e6;    // reject draws whose brute-force enumeration is larger
};

/// Draws toys from seeds derived from `seed` until one fits the budget.
TabularFposg random_toy(uint64_t seed, const ToyOptions& opt = {});

}  // namespace dials::oracle
