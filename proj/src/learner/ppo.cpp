#include "dials/learner/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dials::learner {

using nn::Matrix;

PpoConfig PpoConfig::defaults_for(const std::string& env_name) {
  PpoConfig c;
  if (env_name == "traffic") c.rollout_steps = 16;
  return c;
}

PolicyShape PolicyShape::defaults_for(const std::string& env_name) {
  PolicyShape s;
  if (env_name == "traffic") s.arch = nn::Arch::kFeedforward;
  return s;
}

void compute_gae(const Segment& seg, double gamma, double lambda, std::vector<double>& adv, std::vector<double>& ret) {
  const int L = seg.length();
  require(static_cast<int>(seg.rewards.size()) == L && static_cast<int>(seg.values.size()) == L,
          "compute_gae: segment arrays differ in length");
  adv.assign(static_cast<size_t>(L), 0.0);
  ret.assign(static_cast<size_t>(L), 0.0);
  double next_value = seg.bootstrap, running = 0.0;
  for (int t = L - 1; t >= 0; --t) {
    const double delta = seg.rewards[t] + gamma * next_value - seg.values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
    ret[t] = running + seg.values[t];
    next_value = seg.values[t];
  }
}

PpoLossParts ppo_loss(const nn::Network& net, const PpoBatch& batch, const PpoConfig& cfg, nn::Vector* grad) {
  require(batch.count > 0, "ppo_loss: empty batch");
  nn::Tape tape;
  net.forward(batch.xs, batch.h0, tape);
  const double inv = 1.0 / batch.count;
  PpoLossParts parts;
  std::vector<std::vector<Matrix>> dl(static_cast<size_t>(tape.steps));
  std::vector<Eigen::RowVectorXd> dv(static_cast<size_t>(tape.steps));
  for (int t = 0; t < tape.steps; ++t) {
    const Matrix p = nn::softmax(tape.logits[t][0]);
    Matrix d = Matrix::Zero(p.rows(), p.cols());
    dv[t] = Eigen::RowVectorXd::Zero(p.cols());
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (!batch.mask[t][c]) continue;
      const int a = batch.actions[t][c];
      const double logp = std::log(p(a, c));
      const double rho = std::exp(logp - batch.logp_old[t][c]);
      const double A = batch.adv[t][c];
      const double unclipped = rho * A;
      const double clipped = std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * A;
      parts.policy -= std::min(unclipped, clipped) * inv;
      if (std::abs(rho - 1.0) > cfg.clip_eps) parts.clip_fraction += inv;
      parts.approx_kl += (batch.logp_old[t][c] - logp) * inv;
      double H = 0.0;
      for (Eigen::Index j = 0; j < p.rows(); ++j)
        if (p(j, c) > 0.0) H -= p(j, c) * std::log(p(j, c));
      parts.entropy += H * inv;
      const double e = tape.value[t][c] - batch.ret[t][c];
      parts.value += e * e * inv;
      // d(-min)/dlogp, then through log-softmax; entropy and value terms alongside
      const double dlogp = unclipped <= clipped ? -rho * A * inv : 0.0;
      for (Eigen::Index j = 0; j < p.rows(); ++j) {
        const double pj = p(j, c);
        const double ent = pj > 0.0 ? cfg.entropy * inv * pj * (std::log(pj) + H) : 0.0;
        d(j, c) = dlogp * ((j == a ? 1.0 : 0.0) - pj) + ent;
      }
      dv[t][c] = 2.0 * cfg.value_coeff * e * inv;
    }
    dl[t].push_back(std::move(d));
  }
  parts.total = parts.policy + cfg.value_coeff * parts.value - cfg.entropy * parts.entropy;
  if (grad) net.backward(tape, dl, dv, *grad);
  return parts;
}

PolicyActor::PolicyActor(const nn::Network& net) : net_(net) { reset(); }

void PolicyActor::reset() { h_ = Matrix::Zero(net_.state_size(), 1); }

Action PolicyActor::act(std::span<const double> observation, Rng& rng) {
  require(static_cast<int>(observation.size()) == net_.spec().input, "policy: observation size mismatch");
  const Matrix x = Eigen::Map<const Matrix>(observation.data(), net_.spec().input, 1);
  std::vector<Matrix> logits;
  net_.step(x, h_, logits, nullptr);
  if (!logits[0].allFinite()) throw std::runtime_error("policy: non-finite logits");
  const Matrix p = nn::softmax(logits[0]);
  return rng.categorical(std::span<const double>(p.data(), static_cast<size_t>(p.size())));
}

PpoAgent::PpoAgent(int observation_size, int num_actions, const PolicyShape& shape, const PpoConfig& cfg, Rng& init_rng)
    : obs_size_(observation_size),
      num_actions_(num_actions),
      cfg_(cfg),
      net_({shape.arch, observation_size, shape.hidden1, shape.hidden2, {num_actions}, true}),
      adam_(0, {cfg.lr, 0.9, 0.999, 1e-5}) {
  require(cfg.gamma > 0 && cfg.gamma <= 1 && cfg.lambda > 0 && cfg.lambda <= 1, "ppo: gamma and lambda must lie in (0, 1]");
  require(cfg.clip_eps > 0 && cfg.rollout_steps > 0 && cfg.memory > 0 && cfg.batch > 0, "ppo: invalid configuration");
  net_.init(init_rng);
  adam_ = nn::Adam(net_.num_params(), {cfg.lr, 0.9, 0.999, 1e-5});
  h_ = Matrix::Zero(net_.state_size(), 1);
}

void PpoAgent::reset() {
  // an episode cut short has no next observation to bootstrap from; its open segment is dropped
  open_ = Segment{};
  awaiting_bootstrap_ = false;
  h_ = Matrix::Zero(net_.state_size(), 1);
}

std::vector<double> PpoAgent::probs(std::span<const double> observation, double* value) const {
  require(static_cast<int>(observation.size()) == obs_size_, "ppo: observation size mismatch");
  Matrix x = Eigen::Map<const Matrix>(observation.data(), obs_size_, 1);
  Matrix h = Matrix::Zero(net_.state_size(), 1);
  std::vector<Matrix> logits;
  Eigen::RowVectorXd v;
  net_.step(x, h, logits, &v);
  if (value) *value = v[0];
  const Matrix p = nn::softmax(logits[0]);
  return {p.data(), p.data() + p.size()};
}

Action PpoAgent::act(std::span<const double> observation, Rng& rng) {
  require(static_cast<int>(observation.size()) == obs_size_, "ppo: observation size mismatch");
  const Matrix x = Eigen::Map<const Matrix>(observation.data(), obs_size_, 1);
  const Matrix h_before = h_;
  std::vector<Matrix> logits;
  Eigen::RowVectorXd v;
  net_.step(x, h_, logits, &v);
  if (!logits[0].allFinite() || !std::isfinite(v[0]))
    throw std::runtime_error("ppo: non-finite policy output");
  const Matrix p = nn::softmax(logits[0]);
  const Action a = rng.categorical(std::span<const double>(p.data(), static_cast<size_t>(p.size())));
  if (!training_) return a;
  if (awaiting_bootstrap_) {
    awaiting_bootstrap_ = false;
    close_segment(v[0]);
  }
  if (open_.length() == 0) {
    open_.h0 = h_before;
    open_.obs.resize(obs_size_, 0);
  }
  open_.obs.conservativeResize(obs_size_, open_.length() + 1);
  open_.obs.col(open_.length()) = x;
  open_.actions.push_back(a);
  open_.logp.push_back(std::log(p(a, 0)));
  open_.values.push_back(v[0]);
  return a;
}

void PpoAgent::reward(double r, bool episode_end) {
  if (!training_) return;
  require(open_.rewards.size() + 1 == open_.actions.size(), "ppo: reward without a preceding action");
  open_.rewards.push_back(r);
  if (episode_end) {
    close_segment(0.0);
  } else if (open_.length() >= cfg_.rollout_steps) {
    awaiting_bootstrap_ = true;
  }
}

void PpoAgent::close_segment(double bootstrap) {
  open_.bootstrap = bootstrap;
  done_transitions_ += open_.length();
  done_.push_back(std::move(open_));
  open_ = Segment{};
  if (done_transitions_ >= cfg_.memory) update();
}

void PpoAgent::update() {
  struct Unit {
    int seg, start, length;
  };
  std::vector<std::vector<double>> adv(done_.size()), ret(done_.size());
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (size_t s = 0; s < done_.size(); ++s) {
    compute_gae(done_[s], cfg_.gamma, cfg_.lambda, adv[s], ret[s]);
    for (double a : adv[s]) {
      sum += a;
      sq += a * a;
      ++n;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
  for (auto& row : adv)
    for (double& a : row) a = (a - mean) / (sd + 1e-8);

  std::vector<Unit> units;
  for (int s = 0; s < static_cast<int>(done_.size()); ++s) {
    if (net_.recurrent()) {
      units.push_back({s, 0, done_[s].length()});
    } else {
      for (int t = 0; t < done_[s].length(); ++t) units.push_back({s, t, 1});
    }
  }
  const int per_batch = net_.recurrent() ? std::max(1, cfg_.batch / cfg_.rollout_steps) : cfg_.batch;
  nn::Vector grad(net_.num_params());
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (size_t k = units.size(); k > 1; --k)
      std::swap(units[k - 1], units[update_rng_.uniform_int(static_cast<int>(k))]);
    for (size_t b0 = 0; b0 < units.size(); b0 += static_cast<size_t>(per_batch)) {
      const size_t b1 = std::min(units.size(), b0 + static_cast<size_t>(per_batch));
      const int B = static_cast<int>(b1 - b0);
      int T = 0;
      for (size_t u = b0; u < b1; ++u) T = std::max(T, units[u].length);
      PpoBatch pb;
      pb.xs.assign(static_cast<size_t>(T), Matrix::Zero(obs_size_, B));
      pb.h0 = Matrix::Zero(net_.state_size(), B);
      auto grid = [&](auto zero) { return std::vector<std::vector<decltype(zero)>>(T, std::vector<decltype(zero)>(B, zero)); };
      pb.actions = grid(0);
      pb.logp_old = grid(0.0);
      pb.adv = grid(0.0);
      pb.ret = grid(0.0);
      pb.mask = grid(char{0});
      for (int j = 0; j < B; ++j) {
        const Unit& u = units[b0 + j];
        const Segment& sg = done_[u.seg];
        if (net_.recurrent()) pb.h0.col(j) = sg.h0;
        for (int t = 0; t < u.length; ++t) {
          const int k = u.start + t;
          pb.xs[t].col(j) = sg.obs.col(k);
          pb.actions[t][j] = sg.actions[k];
          pb.logp_old[t][j] = sg.logp[k];
          pb.adv[t][j] = adv[u.seg][k];
          pb.ret[t][j] = ret[u.seg][k];
          pb.mask[t][j] = 1;
          ++pb.count;
        }
      }
      grad.setZero();
      last_ = ppo_loss(net_, pb, cfg_, &grad);
      if (!std::isfinite(last_.total)) throw std::runtime_error("ppo: non-finite loss in update " + std::to_string(updates_));
      nn::clip_grad_norm(grad, cfg_.max_grad_norm);
      adam_.step(net_.params(), grad);
    }
  }
  ++updates_;
  done_.clear();
  done_transitions_ = 0;
}

}  // namespace dials::learner
