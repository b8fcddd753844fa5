#include "dials/nn/network.hpp"

#include <cmath>

#include "dials/core/types.hpp"

namespace dials::nn {

namespace {

Matrix sigmoid(const Matrix& m) { return (1.0 + (-m.array()).exp()).inverse().matrix(); }

}  // namespace

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    auto col = p.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return p;
}

Network::Block Network::add(int rows, int cols) {
  Block b{size_, rows, cols};
  size_ += rows * cols;
  blocks_.push_back(b);
  return b;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  require(spec_.input > 0 && spec_.hidden1 > 0 && spec_.hidden2 > 0, "network: layer sizes must be positive");
  for (int k : spec_.heads) require(k >= 1, "network: head sizes must be positive");
  const int in = spec_.input, h1 = spec_.hidden1, h2 = spec_.hidden2;
  w1_ = add(h1, in);
  fan_in_.push_back(in);
  b1_ = add(h1, 1);
  fan_in_.push_back(in);
  if (recurrent()) {
    wx_ = add(3 * h2, h1);
    fan_in_.push_back(h2);
    ux_ = add(3 * h2, h2);
    fan_in_.push_back(h2);
    bx_ = add(3 * h2, 1);
    fan_in_.push_back(h2);
    bh_ = add(3 * h2, 1);
    fan_in_.push_back(h2);
  } else {
    w2_ = add(h2, h1);
    fan_in_.push_back(h1);
    b2_ = add(h2, 1);
    fan_in_.push_back(h1);
  }
  for (int k : spec_.heads) {
    head_w_.push_back(add(k, h2));
    fan_in_.push_back(h2);
    head_b_.push_back(add(k, 1));
    fan_in_.push_back(h2);
  }
  if (spec_.value_head) {
    vw_ = add(1, h2);
    fan_in_.push_back(h2);
    vb_ = add(1, 1);
    fan_in_.push_back(h2);
  }
  params_ = Vector::Zero(size_);
}

void Network::init(Rng& rng) {
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in_[k]));
    const Block& b = blocks_[k];
    for (int j = 0; j < b.rows * b.cols; ++j) params_[b.offset + j] = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

void Network::trunk(const Matrix& x, const Matrix& h, Tape* tape, Matrix& out) const {
  const int h2 = spec_.hidden2;
  Matrix a1 = ((view(w1_) * x).colwise() + view(b1_).col(0)).array().tanh().matrix();
  if (!recurrent()) {
    out = ((view(w2_) * a1).colwise() + view(b2_).col(0)).array().tanh().matrix();
    if (tape) {
      tape->x.push_back(x);
      tape->a1.push_back(std::move(a1));
      tape->a2.push_back(out);
    }
    return;
  }
  const Matrix gx = (view(wx_) * a1).colwise() + view(bx_).col(0);
  const Matrix gh = (view(ux_) * h).colwise() + view(bh_).col(0);
  const Matrix z = sigmoid(gx.topRows(h2) + gh.topRows(h2));
  const Matrix r = sigmoid(gx.middleRows(h2, h2) + gh.middleRows(h2, h2));
  const Matrix ghn = gh.bottomRows(h2);
  const Matrix n = (gx.bottomRows(h2).array() + r.array() * ghn.array()).tanh().matrix();
  out = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
  if (tape) {
    tape->x.push_back(x);
    tape->a1.push_back(std::move(a1));
    tape->h_prev.push_back(h);
    tape->z.push_back(z);
    tape->r.push_back(r);
    tape->n.push_back(n);
    tape->gh_n.push_back(ghn);
    tape->a2.push_back(out);
  }
}

void Network::step(const Matrix& x, Matrix& h, std::vector<Matrix>& logits, Eigen::RowVectorXd* value) const {
  require(x.rows() == spec_.input, "network: input has " + std::to_string(x.rows()) + " rows, expected " +
                                       std::to_string(spec_.input));
  Matrix feat;
  if (recurrent()) {
    require(h.rows() == spec_.hidden2 && h.cols() == x.cols(), "network: hidden state shape mismatch");
    trunk(x, h, nullptr, feat);
    h = feat;
  } else {
    trunk(x, h, nullptr, feat);
  }
  logits.resize(spec_.heads.size());
  for (size_t k = 0; k < spec_.heads.size(); ++k) logits[k] = (view(head_w_[k]) * feat).colwise() + view(head_b_[k]).col(0);
  if (value) {
    require(spec_.value_head, "network: no value head");
    *value = ((view(vw_) * feat).array() + params_[vb_.offset]).matrix();
  }
}

void Network::forward(const std::vector<Matrix>& xs, const Matrix& h0, Tape& tape) const {
  tape = Tape{};
  tape.steps = static_cast<int>(xs.size());
  Matrix h = h0;
  for (const Matrix& x : xs) {
    require(x.rows() == spec_.input, "network: input dimension mismatch");
    if (recurrent()) require(h.rows() == spec_.hidden2 && h.cols() == x.cols(), "network: hidden state shape mismatch");
    Matrix feat;
    trunk(x, h, &tape, feat);
    std::vector<Matrix> lg(spec_.heads.size());
    for (size_t k = 0; k < spec_.heads.size(); ++k) lg[k] = (view(head_w_[k]) * feat).colwise() + view(head_b_[k]).col(0);
    tape.logits.push_back(std::move(lg));
    if (spec_.value_head) tape.value.push_back(((view(vw_) * feat).array() + params_[vb_.offset]).matrix());
    if (recurrent()) h = std::move(feat);
  }
}

void Network::backward(const Tape& tape, const std::vector<std::vector<Matrix>>& dlogits,
                       const std::vector<Eigen::RowVectorXd>& dvalue, Vector& grad) const {
  require(grad.size() == size_, "network: gradient size mismatch");
  require(static_cast<int>(dlogits.size()) == tape.steps, "network: dlogits length mismatch");
  const int h2 = spec_.hidden2;
  Matrix dh_next;  // gradient flowing into h_t from step t+1
  for (int t = tape.steps - 1; t >= 0; --t) {
    const Matrix& feat = tape.a2[t];
    Matrix dfeat = Matrix::Zero(feat.rows(), feat.cols());
    for (size_t k = 0; k < spec_.heads.size(); ++k) {
      const Matrix& d = dlogits[t][k];
      if (d.size() == 0) continue;
      view(grad, head_w_[k]).noalias() += d * feat.transpose();
      view(grad, head_b_[k]).col(0) += d.rowwise().sum();
      dfeat.noalias() += view(head_w_[k]).transpose() * d;
    }
    if (!dvalue.empty() && spec_.value_head && dvalue[t].size() > 0) {
      view(grad, vw_).noalias() += dvalue[t] * feat.transpose();
      grad[vb_.offset] += dvalue[t].sum();
      dfeat.noalias() += view(vw_).transpose() * dvalue[t];
    }
    const Matrix& a1 = tape.a1[t];
    Matrix da1;
    if (!recurrent()) {
      const Matrix d2 = (dfeat.array() * (1.0 - feat.array().square())).matrix();
      view(grad, w2_).noalias() += d2 * a1.transpose();
      view(grad, b2_).col(0) += d2.rowwise().sum();
      da1 = view(w2_).transpose() * d2;
    } else {
      if (dh_next.size() > 0) dfeat += dh_next;
      const auto z = tape.z[t].array(), r = tape.r[t].array(), n = tape.n[t].array();
      const auto hp = tape.h_prev[t].array();
      const auto dh = dfeat.array();
      const Eigen::ArrayXXd dn_pre = dh * (1.0 - z) * (1.0 - n.square());
      const Eigen::ArrayXXd dz_pre = dh * (hp - n) * z * (1.0 - z);
      const Eigen::ArrayXXd dr_pre = dn_pre * tape.gh_n[t].array() * r * (1.0 - r);
      Matrix dgx(3 * h2, dfeat.cols()), dgh(3 * h2, dfeat.cols());
      dgx.topRows(h2) = dz_pre.matrix();
      dgx.middleRows(h2, h2) = dr_pre.matrix();
      dgx.bottomRows(h2) = dn_pre.matrix();
      dgh.topRows(h2) = dz_pre.matrix();
      dgh.middleRows(h2, h2) = dr_pre.matrix();
      dgh.bottomRows(h2) = (dn_pre * r).matrix();
      view(grad, wx_).noalias() += dgx * a1.transpose();
      view(grad, bx_).col(0) += dgx.rowwise().sum();
      view(grad, ux_).noalias() += dgh * tape.h_prev[t].transpose();
      view(grad, bh_).col(0) += dgh.rowwise().sum();
      dh_next = (dh * z).matrix();
      dh_next.noalias() += view(ux_).transpose() * dgh;
      da1 = view(wx_).transpose() * dgx;
    }
    const Matrix d1 = (da1.array() * (1.0 - a1.array().square())).matrix();
    view(grad, w1_).noalias() += d1 * tape.x[t].transpose();
    view(grad, b1_).col(0) += d1.rowwise().sum();
  }
}

}  // namespace dials::nn
