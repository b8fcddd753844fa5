#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dials/core/rng.hpp"

namespace dials::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Arch : uint32_t { kFeedforward = 0, kRecurrent = 1 };

/// input -> dense(hidden1, tanh) -> {dense(hidden2, tanh) | GRU(hidden2)} -> heads.
/// Every head is a linear layer producing softmax logits; the optional value
/// head is a single linear output.
struct NetworkSpec {
  Arch arch = Arch::kFeedforward;
  int input = 1;
  int hidden1 = 64;
  int hidden2 = 64;
  std::vector<int> heads;
  bool value_head = false;
  bool operator==(const NetworkSpec&) const = default;
};

/// Cached activations of one forward pass over T steps of a batch of B columns.
struct Tape {
  int steps = 0;
  std::vector<Matrix> x, a1, a2;       // a2: trunk output (GRU hidden after the step)
  std::vector<Matrix> h_prev, z, r, n, gh_n;
  std::vector<std::vector<Matrix>> logits;  // [t][head]
  std::vector<Eigen::RowVectorXd> value;    // [t]
};

/// A small network whose parameters live in one flat vector, so optimizers,
/// checkpoints and gradient checks work on a single array.
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  int num_params() const { return static_cast<int>(params_.size()); }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  bool recurrent() const { return spec_.arch == Arch::kRecurrent; }
  /// Size of the carried hidden state (0 for feedforward).
  int state_size() const { return recurrent() ? spec_.hidden2 : 0; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every weight and bias.
  void init(Rng& rng);

  /// One step for B columns. `h` (state_size x B) is advanced in place.
  void step(const Matrix& x, Matrix& h, std::vector<Matrix>& logits, Eigen::RowVectorXd* value) const;

  /// Forward over xs[0..T-1] starting from h0, caching what backward needs.
  void forward(const std::vector<Matrix>& xs, const Matrix& h0, Tape& tape) const;
  /// Accumulates dLoss/dparams into grad given dLoss/dlogits[t][head] and
  /// dLoss/dvalue[t] (empty vector when there is no value loss).
  void backward(const Tape& tape, const std::vector<std::vector<Matrix>>& dlogits,
                const std::vector<Eigen::RowVectorXd>& dvalue, Vector& grad) const;

 private:
  struct Block {
    int offset, rows, cols;
  };
  Block add(int rows, int cols);
  Eigen::Map<const Matrix> view(const Block& b) const {
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  static Eigen::Map<Matrix> view(Vector& v, const Block& b) { return {v.data() + b.offset, b.rows, b.cols}; }
  void trunk(const Matrix& x, const Matrix& h, Tape* tape, Matrix& out) const;

  NetworkSpec spec_;
  int size_ = 0;
  Block w1_, b1_, w2_, b2_;     // feedforward second layer
  Block wx_, ux_, bx_, bh_;     // GRU gates stacked (z, r, n)
  std::vector<Block> head_w_, head_b_;
  Block vw_{}, vb_{};
  std::vector<int> fan_in_;     // per block, for init
  std::vector<Block> blocks_;
  Vector params_;
};

/// Row-wise softmax for a head with logits in rows, samples in columns.
Matrix softmax(const Matrix& logits);

}  // namespace dials::nn
