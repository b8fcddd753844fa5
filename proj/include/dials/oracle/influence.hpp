#pragma once

#include <memory>
#include <vector>

#include "dials/core/rng.hpp"
#include "dials/oracle/model.hpp"
#include "dials/oracle/policy.hpp"

namespace dials::oracle {

/// I_i(u | l) over agent i's joint influence-source values, for ALSH keys
/// <x0, a0, ..., xt>.
class InfluenceFunction {
 public:
  virtual ~InfluenceFunction() = default;
  virtual int num_values() const = 0;
  virtual std::vector<double> operator()(const HistoryKey& alsh) const = 0;
};

/// Table of exact influences for every ALSH reachable with P(l) > 1e-15.
class ExactInfluence final : public InfluenceFunction {
 public:
  explicit ExactInfluence(int num_values) : num_values_(num_values) {}
  int num_values() const override { return num_values_; }
  /// Throws ContractViolation("zero-probability history") for unreachable histories.
  std::vector<double> operator()(const HistoryKey& alsh) const override;
  bool contains(const HistoryKey& alsh) const { return table_.count(alsh) > 0; }
  const HistoryMap<std::vector<double>>& table() const { return table_; }
  void set(const HistoryKey& alsh, std::vector<double> p) { table_[alsh] = std::move(p); }

 private:
  int num_values_;
  HistoryMap<std::vector<double>> table_;
};

/// Exact influence where reachable, uniform elsewhere; defined on every ALSH.
class CompletedInfluence final : public InfluenceFunction {
 public:
  explicit CompletedInfluence(std::shared_ptr<const ExactInfluence> base) : base_(std::move(base)) {}
  int num_values() const override { return base_->num_values(); }
  std::vector<double> operator()(const HistoryKey& alsh) const override;

 private:
  std::shared_ptr<const ExactInfluence> base_;
};

/// Random influence defined on every ALSH, drawn from a stream keyed by (seed, l).
/// Rows are normalized powered exponentials; `sharpness` > 1 gives peaked rows.
class RandomInfluence final : public InfluenceFunction {
 public:
  RandomInfluence(uint64_t seed, int num_values, double sharpness = 1.0)
      : seed_(seed), num_values_(num_values), sharpness_(sharpness) {}
  int num_values() const override { return num_values_; }
  std::vector<double> operator()(const HistoryKey& alsh) const override;

 private:
  uint64_t seed_;
  int num_values_;
  double sharpness_;
};

/// w * I_a + (1 - w) * I_b.
class MixtureInfluence final : public InfluenceFunction {
 public:
  MixtureInfluence(std::shared_ptr<const InfluenceFunction> a, std::shared_ptr<const InfluenceFunction> b, double w);
  int num_values() const override { return a_->num_values(); }
  std::vector<double> operator()(const HistoryKey& alsh) const override;

 private:
  std::shared_ptr<const InfluenceFunction> a_, b_;
  double w_;
};

/// Base influence with the row of one history reversed.
class FlippedRowInfluence final : public InfluenceFunction {
 public:
  FlippedRowInfluence(std::shared_ptr<const InfluenceFunction> base, HistoryKey row)
      : base_(std::move(base)), row_(std::move(row)) {}
  int num_values() const override { return base_->num_values(); }
  std::vector<double> operator()(const HistoryKey& alsh) const override;

 private:
  std::shared_ptr<const InfluenceFunction> base_;
  HistoryKey row_;
};

/// Forward filter over (s, h_{-i}) along every ALSH of agent i: the
/// posterior over the hidden state and the other agents' histories is pushed
/// through pi_{-i}, T and O_{-i}, conditioned on each next local state, and
/// marginalized onto u_i. Agent i's own policy and observations cancel.
ExactInfluence compute_exact_influence(const TabularFposg& model, const JointPolicy& policies, int agent);

/// Independent reference: sums the probabilities of every trajectory prefix
/// (states, all observations, all actions, agent i included) and conditions on
/// the ALSH by direct division.
ExactInfluence brute_force_influence(const TabularFposg& model, const JointPolicy& policies, int agent);

/// Number of trajectory prefixes the brute-force enumeration visits when every action has positive probability.
double brute_force_cost(const TabularFposg& model);

/// Max |I_a - I_b| over histories in either table; infinity when a history is
/// reachable in one table only.
double linf_distance(const ExactInfluence& a, const ExactInfluence& b);

/// One global rollout. Per step: global state, the joint action, and all observations.
struct Rollout {
  std::vector<int> states;   // s^0 .. s^{H-1}
  std::vector<std::vector<int>> actions;  // [t][agent]
  std::vector<std::vector<int>> observations;  // [t][agent]
  std::vector<std::vector<double>> rewards;  // [t][agent]
};
Rollout sample_rollout(const TabularFposg& model, const JointPolicy& policies, Rng& rng);

struct MonteCarloReport {
  int rollouts = 0;
  int cells_tested = 0;      // (l, u) cells with enough samples for a normal approximation
  int cells_beyond_3se = 0;
  double max_abs_z = 0.0;
  int point_mass_mismatches = 0;  // exact probability 0 or 1 contradicted by a sample
  bool passed = false;
};

/// Compares empirical conditional frequencies of u given l over global
/// rollouts with the exact influence. A cell (l, u) is z-tested when
/// n_l p >= 5 and n_l (1 - p) >= 5; the check passes when at most 1% of tested
/// cells exceed 3 standard errors, none exceeds 5, and no sample contradicts
/// an exact 0/1 probability.
MonteCarloReport monte_carlo_influence_check(const TabularFposg& model, const JointPolicy& policies, int agent,
                                             const ExactInfluence& exact, int rollouts, Rng& rng);

}  // namespace dials::oracle
