#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "dials/nn/network.hpp"

namespace dials::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(int num_params, AdamConfig cfg);
  void step(Vector& params, const Vector& grad);
  const AdamConfig& config() const { return cfg_; }
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  long t_ = 0;
};

/// Rescales grad to at most max_norm in L2; returns the norm before clipping.
double clip_grad_norm(Vector& grad, double max_norm);

/// Five-point central differences with step eps on up to `max_params` randomly chosen
/// coordinates, compared with `analytic`. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-7); returns the maximum (0 when nothing is checked).
double gradient_check(const std::function<double(const Vector&)>& loss, const Vector& params, const Vector& analytic,
                      Rng& rng, int max_params = 200, double eps = 1e-3);

/// Binary checkpoint: magic, version, architecture, layer sizes, heads, seed,
/// parameter count, then little-endian float64 parameters.
void save_checkpoint(std::ostream& out, const Network& net, uint64_t seed);
void save_checkpoint_file(const std::string& path, const Network& net, uint64_t seed);
struct Checkpoint {
  Network net;
  uint64_t seed;
};
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

/// FNV-1a over the parameter bytes; identifies a parameter snapshot.
uint64_t params_hash(const Vector& params);

}  // namespace dials::nn
