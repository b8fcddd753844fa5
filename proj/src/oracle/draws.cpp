#include "dials/oracle/draws.hpp"

namespace dials::oracle {

JointPolicy random_joint_policy(const TabularFposg& m, uint64_t seed) {
  JointPolicy jp;
  for (int j = 0; j < m.num_agents(); ++j)
    jp.push_back(std::make_shared<RandomPolicy>(mix64(seed * 31 + static_cast<uint64_t>(j)), m.agent(j).num_actions));
  return jp;
}

ToyOptions varied_toy_options(uint64_t seed) {
  Rng rng = Rng::derive(seed, 0, 0x7a1);
  ToyOptions o;
  o.horizon = 2 + rng.uniform_int(3);
  o.local_domain = 2 + rng.uniform_int(2);
  o.influence_domain = 2 + rng.uniform_int(2);
  o.external = rng.bernoulli(0.5);
  // four-step toys only fit the enumeration budget with binary domains
  if (o.horizon == 4) o.local_domain = o.influence_domain = 2;
  o.cost_budget = 2e5;
  return o;
}

InfluencePair random_influence_pair(const TabularFposg& m, int agent, uint64_t seed) {
  static constexpr double kWeights[] = {0.999, 0.99, 0.9, 0.5, 0.0};
  Rng rng = Rng::derive(seed, static_cast<uint64_t>(agent), 0x7a2);
  InfluencePair p;
  p.first = std::make_shared<CompletedInfluence>(
      std::make_shared<ExactInfluence>(compute_exact_influence(m, random_joint_policy(m, rng.next_u64()), agent)));
  p.weight = kWeights[rng.uniform_int(5)];
  const auto other = std::make_shared<RandomInfluence>(rng.next_u64(), m.num_influence_values(agent), 1.0 + 2.0 * rng.uniform());
  p.second = std::make_shared<MixtureInfluence>(p.first, other, p.weight);
  return p;
}

}  // namespace dials::oracle
