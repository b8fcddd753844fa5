#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace dials {

/// Philox4x32-10 counter-based generator.
///
/// A stream is fully determined by its 64-bit key; every draw advances a
/// 128-bit counter. Independent substreams are derived by hashing
/// (run_seed, agent_id, stream_tag) into a key, so results never depend on
/// which worker thread happens to consume a stream.
class Rng {
 public:
  using result_type = uint32_t;

  explicit Rng(uint64_t key = 0);

  /// Substream for one (run, agent, purpose) triple.
  static Rng derive(uint64_t run_seed, uint64_t agent_id, uint64_t stream_tag);

  /// Child stream keyed off this stream's key; does not consume draws.
  Rng split(uint64_t tag) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  result_type operator()();
  uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); n > 0.
  int uniform_int(int n);
  bool bernoulli(double p);
  /// Sample an index with probability proportional to weights (need not sum to 1).
  int categorical(std::span<const double> weights);
  /// Standard exponential variate.
  double exponential();

  uint64_t key() const { return key_; }

  /// Raw block function, exposed for known-answer tests.
  static std::array<uint32_t, 4> philox(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key);

 private:
  void refill();

  uint64_t key_;
  std::array<uint32_t, 4> ctr_{};
  std::array<uint32_t, 4> buf_{};
  int idx_ = 4;
};

/// splitmix64 finalizer; used for key derivation and hashing.
uint64_t mix64(uint64_t x);

}  // namespace dials
