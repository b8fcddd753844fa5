#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "dials/core/history.hpp"

namespace dials::oracle {

/// Interleaved history key: <o0, a0, o1, ..., ot> for observation histories,
/// <x0, a0, x1, ..., xt> (local joint indices) for action-local-state histories.
using HistoryKey = std::vector<int32_t>;

struct HistoryKeyHash {
  size_t operator()(const HistoryKey& k) const;
};

template <typename V>
using HistoryMap = std::unordered_map<HistoryKey, V, HistoryKeyHash>;

HistoryKey key_of(const ObservationHistory& h);
HistoryKey key_of(const LocalHistory& l);  // width-1 histories holding local joint indices
LocalHistory local_history_of(const HistoryKey& key);

/// pi_j(a | h) over an agent's action-observation histories.
class TabularPolicy {
 public:
  virtual ~TabularPolicy() = default;
  virtual int num_actions() const = 0;
  virtual void probs(std::span<const int32_t> aoh, std::span<double> out) const = 0;
  std::vector<double> probs(std::span<const int32_t> aoh) const;
};

class UniformPolicy final : public TabularPolicy {
 public:
  explicit UniformPolicy(int num_actions) : n_(num_actions) {}
  using TabularPolicy::probs;
  int num_actions() const override { return n_; }
  void probs(std::span<const int32_t>, std::span<double> out) const override;

 private:
  int n_;
};

/// A fixed random policy defined on every history: the distribution at h is
/// drawn from a stream keyed by (seed, h), so it needs no table. With
/// `deterministic` the argmax of that draw is played.
class RandomPolicy final : public TabularPolicy {
 public:
  RandomPolicy(uint64_t seed, int num_actions, bool deterministic = false)
      : seed_(seed), n_(num_actions), deterministic_(deterministic) {}
  using TabularPolicy::probs;
  int num_actions() const override { return n_; }
  void probs(std::span<const int32_t> aoh, std::span<double> out) const override;

 private:
  uint64_t seed_;
  int n_;
  bool deterministic_;
};

/// Explicit table; histories missing from the table fall back to uniform.
class TablePolicy final : public TabularPolicy {
 public:
  explicit TablePolicy(int num_actions) : n_(num_actions) {}
  void set(const HistoryKey& h, std::vector<double> p);
  using TabularPolicy::probs;
  int num_actions() const override { return n_; }
  void probs(std::span<const int32_t> aoh, std::span<double> out) const override;

 private:
  int n_;
  HistoryMap<std::vector<double>> table_;
};

using JointPolicy = std::vector<std::shared_ptr<const TabularPolicy>>;

}  // namespace dials::oracle
