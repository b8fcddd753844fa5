#pragma once

#include <cstdint>
#include <memory>

#include "dials/oracle/influence.hpp"
#include "dials/oracle/policy.hpp"
#include "dials/oracle/toys.hpp"

namespace dials::oracle {

/// Seeded random stochastic policy for every agent.
JointPolicy random_joint_policy(const TabularFposg& m, uint64_t seed);

/// Toy settings varied by seed: horizon 2..4, local and influence domains 2..3
/// (binary at horizon 4).
ToyOptions varied_toy_options(uint64_t seed);

struct InfluencePair {
  std::shared_ptr<const InfluenceFunction> first, second;
  double weight = 1.0;  // share of `first` inside `second`
};

/// first = exact influence of `agent` under a random joint policy (uniform
/// where unreachable); second = w * first + (1 - w) * random influence, with w
/// drawn from {0.999, 0.99, 0.9, 0.5, 0} so that both close and distant pairs occur.
InfluencePair random_influence_pair(const TabularFposg& m, int agent, uint64_t seed);

}  // namespace dials::oracle
