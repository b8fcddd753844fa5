#include "dials/influence/aip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dials/nn/optim.hpp"

namespace dials::influence {

using nn::Matrix;

AipConfig AipConfig::defaults_for(const std::string& env_name) {
  AipConfig c;
  if (env_name == "traffic") {
    c.arch = nn::Arch::kFeedforward;
    c.hidden1 = c.hidden2 = 128;
    c.batch = 128;
    c.epochs = 100;
  }
  return c;
}

Aip::Aip(const Environment& env, AgentId agent, const AipConfig& cfg)
    : env_(&env),
      agent_(agent),
      domains_(env.influence_domains(agent)),
      features_(env.local_feature_size(agent)),
      actions_(env.num_actions(agent)),
      input_(features_ + actions_),
      net_({cfg.arch, input_, cfg.hidden1, cfg.hidden2, domains_, false}) {}

double Aip::uniform_ce() const {
  double s = 0.0;
  for (int d : domains_) s += std::log(static_cast<double>(d));
  return s;
}

uint64_t Aip::snapshot_hash() const { return nn::params_hash(net_.params()); }

void Aip::token(const LocalState& x, Action prev_action, std::span<double> out) const {
  require(static_cast<int>(out.size()) == input_, "aip: token buffer size mismatch");
  env_->local_features(agent_, x, out.first(static_cast<size_t>(features_)));
  std::fill(out.begin() + features_, out.end(), 0.0);
  if (prev_action >= 0) {
    require(prev_action < actions_, "aip: action out of range");
    out[static_cast<size_t>(features_ + prev_action)] = 1.0;
  }
}

void Aip::predict(Memory& m, const LocalState& x, Action prev_action, std::vector<std::vector<double>>& probs) const {
  Matrix in(input_, 1);
  token(x, prev_action, std::span<double>(in.data(), static_cast<size_t>(input_)));
  std::vector<Matrix> logits;
  net_.step(in, m.h, logits, nullptr);
  probs.resize(domains_.size());
  for (size_t k = 0; k < domains_.size(); ++k) {
    const Matrix p = nn::softmax(logits[k]);
    probs[k].assign(p.data(), p.data() + p.size());
  }
}

InfluenceSourceValue Aip::sample(Memory& m, const LocalState& x, Action prev_action, Rng& rng) const {
  std::vector<std::vector<double>> probs;
  predict(m, x, prev_action, probs);
  InfluenceSourceValue u;
  for (const auto& p : probs) u.values.push_back(rng.categorical(p));
  return u;
}

namespace {

struct Prepared {
  std::vector<Matrix> tokens;                        // [episode] input x length
  std::vector<std::vector<std::vector<int>>> target; // [episode][head][t]
};

Prepared prepare(const Aip& model, const InfluenceDataset& data) {
  Prepared p;
  const int heads = static_cast<int>(model.domains().size());
  for (const auto& ep : data.episodes) {
    require(ep.x.size() == ep.u.size() && ep.x.size() == ep.a.size(), "aip: misaligned episode");
    Matrix tok(model.input_size(), ep.length());
    std::vector<std::vector<int>> tg(static_cast<size_t>(heads), std::vector<int>(ep.x.size()));
    for (int t = 0; t < ep.length(); ++t) {
      model.token(ep.x[t], t == 0 ? -1 : ep.a[t - 1],
                  std::span<double>(tok.col(t).data(), static_cast<size_t>(model.input_size())));
      require(static_cast<int>(ep.u[t].values.size()) == heads, "aip: influence value has the wrong arity");
      for (int k = 0; k < heads; ++k) {
        const int v = ep.u[t].values[k];
        require(v >= 0 && v < model.domains()[k], "aip: influence value out of domain");
        tg[k][t] = v;
      }
    }
    p.tokens.push_back(std::move(tok));
    p.target.push_back(std::move(tg));
  }
  return p;
}

/// Summed CE over heads and valid cells; optionally dLoss/dlogits scaled by `scale`.
double tape_loss(const nn::Tape& tape, const std::vector<std::vector<std::vector<int>>>& target,  // [t][head][col]
                 const std::vector<std::vector<char>>& mask, double scale,
                 std::vector<std::vector<Matrix>>* dlogits) {
  double loss = 0.0;
  if (dlogits) dlogits->assign(static_cast<size_t>(tape.steps), {});
  for (int t = 0; t < tape.steps; ++t) {
    for (size_t k = 0; k < tape.logits[t].size(); ++k) {
      Matrix p = nn::softmax(tape.logits[t][k]);
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        if (!mask[t][c]) {
          p.col(c).setZero();
          continue;
        }
        const int y = target[t][k][c];
        loss -= std::log(std::max(p(y, c), 1e-300));
        p(y, c) -= 1.0;
      }
      if (dlogits) (*dlogits)[t].push_back(p * scale);
    }
  }
  return loss;
}

struct Chunk {
  int episode, start, length;
};

/// Hidden state after running `net` over the first `steps` tokens of an episode.
Matrix prefix_state(const nn::Network& net, const Matrix& tokens, int steps) {
  Matrix h = Matrix::Zero(net.state_size(), 1);
  std::vector<Matrix> logits;
  for (int t = 0; t < steps; ++t) net.step(tokens.col(t), h, logits, nullptr);
  return h;
}

AipBatch make_batch(const nn::Network& net, const Prepared& prep, std::span<const Chunk> chunks, int heads) {
  AipBatch b;
  const int B = static_cast<int>(chunks.size());
  int T = 0;
  for (const Chunk& c : chunks) T = std::max(T, c.length);
  b.xs.assign(static_cast<size_t>(T), Matrix::Zero(net.spec().input, B));
  b.target.assign(static_cast<size_t>(T), std::vector<std::vector<int>>(static_cast<size_t>(heads), std::vector<int>(B, 0)));
  b.mask.assign(static_cast<size_t>(T), std::vector<char>(static_cast<size_t>(B), 0));
  b.h0 = Matrix::Zero(net.state_size(), B);
  for (int j = 0; j < B; ++j) {
    const Chunk& c = chunks[j];
    const Matrix& tok = prep.tokens[c.episode];
    if (net.recurrent() && c.start > 0) b.h0.col(j) = prefix_state(net, tok, c.start);
    for (int t = 0; t < c.length; ++t) {
      b.xs[t].col(j) = tok.col(c.start + t);
      for (int k = 0; k < heads; ++k) b.target[t][k][j] = prep.target[c.episode][k][c.start + t];
      b.mask[t][j] = 1;
      ++b.count;
    }
  }
  return b;
}

}  // namespace

double aip_batch_loss(const nn::Network& net, const AipBatch& batch, nn::Vector* grad) {
  require(batch.count > 0, "aip_batch_loss: empty batch");
  nn::Tape tape;
  net.forward(batch.xs, batch.h0, tape);
  std::vector<std::vector<Matrix>> dl;
  const double inv = 1.0 / batch.count;
  const double loss = tape_loss(tape, batch.target, batch.mask, inv, grad ? &dl : nullptr) * inv;
  if (grad) net.backward(tape, dl, {}, *grad);
  return loss;
}

std::vector<double> aip_train(Aip& model, const InfluenceDataset& data, const AipConfig& cfg, Rng& rng) {
  require(data.num_samples() > 0, "aip_train: empty dataset");
  require(cfg.batch > 0 && cfg.epochs >= 0 && cfg.truncation > 0, "aip_train: invalid configuration");
  const Prepared prep = prepare(model, data);
  const int heads = static_cast<int>(model.domains().size());
  nn::Network& net = model.net();
  std::vector<Chunk> units;
  for (int e = 0; e < static_cast<int>(prep.tokens.size()); ++e) {
    const int len = static_cast<int>(prep.tokens[e].cols());
    if (net.recurrent()) {
      for (int s = 0; s < len; s += cfg.truncation) units.push_back({e, s, std::min(cfg.truncation, len - s)});
    } else {
      for (int t = 0; t < len; ++t) units.push_back({e, t, 1});
    }
  }
  nn::Adam adam(net.num_params(), {cfg.lr});
  std::vector<double> curve;
  nn::Vector grad(net.num_params());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t k = units.size(); k > 1; --k) std::swap(units[k - 1], units[rng.uniform_int(static_cast<int>(k))]);
    double epoch_loss = 0.0;
    int epoch_count = 0;
    for (size_t s = 0; s < units.size(); s += static_cast<size_t>(cfg.batch)) {
      const size_t e = std::min(units.size(), s + static_cast<size_t>(cfg.batch));
      // feedforward samples keep start = t and use no memory, so the same batching applies
      const AipBatch b = make_batch(net, prep, std::span<const Chunk>(units.data() + s, e - s), heads);
      grad.setZero();
      const double loss = aip_batch_loss(net, b, &grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("aip_train: non-finite loss for agent " + std::to_string(model.agent().index()) +
                                 " at epoch " + std::to_string(epoch));
      epoch_loss += loss * b.count;
      epoch_count += b.count;
      nn::clip_grad_norm(grad, cfg.clip);
      adam.step(net.params(), grad);
    }
    curve.push_back(epoch_loss / epoch_count);
  }
  return curve;
}

double aip_dataset_ce(const Aip& model, const InfluenceDataset& data) {
  const Prepared prep = prepare(model, data);
  const int heads = static_cast<int>(model.domains().size());
  std::vector<Chunk> all;
  for (int e = 0; e < static_cast<int>(prep.tokens.size()); ++e)
    all.push_back({e, 0, static_cast<int>(prep.tokens[e].cols())});
  double loss = 0.0;
  int count = 0;
  constexpr size_t kBatch = 64;
  for (size_t s = 0; s < all.size(); s += kBatch) {
    const size_t e = std::min(all.size(), s + kBatch);
    const AipBatch b = make_batch(model.net(), prep, std::span<const Chunk>(all.data() + s, e - s), heads);
    nn::Tape tape;  // the feedforward trunk ignores the carried state, so whole episodes work for both
    model.net().forward(b.xs, b.h0, tape);
    loss += tape_loss(tape, b.target, b.mask, 1.0, nullptr);
    count += b.count;
  }
  require(count > 0, "aip_dataset_ce: empty dataset");
  return loss / count;
}

std::vector<double> aip_evaluate_ce(std::span<const Aip* const> models, const Environment& env,
                                    std::span<Actor* const> actors, int episodes, Rng& rng) {
  require(static_cast<int>(models.size()) == env.num_agents(), "aip_evaluate_ce: one model per agent required");
  const auto data = collect_datasets(env, actors, episodes * env.horizon(), rng);
  std::vector<double> ce;
  for (int i = 0; i < env.num_agents(); ++i) ce.push_back(aip_dataset_ce(*models[i], data[i]));
  return ce;
}

}  // namespace dials::influence
