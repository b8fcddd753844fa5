#pragma once

#include <span>

#include "dials/core/rng.hpp"
#include "dials/core/types.hpp"

namespace dials {

/// One agent's decision rule during simulation. Recurrent actors keep their
/// memory between act() calls until the next reset().
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void reset() = 0;
  virtual Action act(std::span<const double> observation, Rng& rng) = 0;
};

/// Uniformly random actions.
class UniformActor final : public Actor {
 public:
  explicit UniformActor(int num_actions) : n_(num_actions) {}
  void reset() override {}
  Action act(std::span<const double>, Rng& rng) override { return rng.uniform_int(n_); }

 private:
  int n_;
};

}  // namespace dials
