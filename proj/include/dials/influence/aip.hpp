#pragma once

#include <string>
#include <vector>

#include "dials/influence/dataset.hpp"
#include "dials/nn/network.hpp"

namespace dials::influence {

struct AipConfig {
  nn::Arch arch = nn::Arch::kRecurrent;
  int hidden1 = 64;
  int hidden2 = 64;
  double lr = 1e-4;
  int batch = 32;       // sequences (recurrent) or samples (feedforward)
  int epochs = 300;
  int truncation = 100;
  int dataset_size = 10000;
  double clip = 5.0;

  /// Warehouse: GRU 64/64, batch 32, 300 epochs. Traffic: feedforward 128/128, batch 128, 100 epochs.
  static AipConfig defaults_for(const std::string& env_name);
};

/// Approximate influence predictor for one agent: a classifier over the
/// agent's influence-source components, one softmax head per component. The
/// input token at step t is [local_features(x_t), one-hot(a_{t-1})] (zeros at
/// t = 0); the recurrent variant reads tokens in order, the feedforward one
/// sees only the latest token.
class Aip {
 public:
  Aip(const Environment& env, AgentId agent, const AipConfig& cfg);

  AgentId agent() const { return agent_; }
  const std::vector<int>& domains() const { return domains_; }
  int input_size() const { return input_; }
  nn::Network& net() { return net_; }
  const nn::Network& net() const { return net_; }
  /// Sum over heads of log(domain): the cross-entropy of a uniform predictor.
  double uniform_ce() const;
  uint64_t snapshot_hash() const;

  void token(const LocalState& x, Action prev_action, std::span<double> out) const;

  /// Recurrent memory of one rollout.
  struct Memory {
    nn::Matrix h;
  };
  Memory begin() const { return {nn::Matrix::Zero(net_.state_size(), 1)}; }
  /// Consumes (x_t, a_{t-1}) (prev_action < 0 at t = 0) and returns per-head probabilities.
  void predict(Memory& m, const LocalState& x, Action prev_action, std::vector<std::vector<double>>& probs) const;
  InfluenceSourceValue sample(Memory& m, const LocalState& x, Action prev_action, Rng& rng) const;

 private:
  const Environment* env_;
  AgentId agent_;
  std::vector<int> domains_;
  int features_;
  int actions_;
  int input_;
  nn::Network net_;
};

/// Column-major minibatch of token sequences; shorter sequences are masked.
struct AipBatch {
  std::vector<nn::Matrix> xs;                       // [t] input x B
  nn::Matrix h0;                                    // state_size x B
  std::vector<std::vector<std::vector<int>>> target;  // [t][head][b]
  std::vector<std::vector<char>> mask;              // [t][b]
  int count = 0;                                    // valid (t, b) cells
};

/// Training objective on one batch: summed-over-heads cross-entropy averaged
/// over valid cells. Adds the gradient to *grad when grad is non-null.
double aip_batch_loss(const nn::Network& net, const AipBatch& batch, nn::Vector* grad);

/// Minibatch Adam on the mean over samples of the summed per-head
/// cross-entropy; recurrent gradients are truncated every cfg.truncation
/// steps (later chunks start from the hidden state of the current
/// parameters). Returns the mean training CE of every epoch. Throws
/// std::runtime_error on a non-finite loss.
std::vector<double> aip_train(Aip& model, const InfluenceDataset& data, const AipConfig& cfg, Rng& rng);

/// Mean per-step summed cross-entropy -log I(u_t | l_t) over a dataset.
double aip_dataset_ce(const Aip& model, const InfluenceDataset& data);

/// Runs fresh GS episodes under `actors` and returns each model's mean CE (models[i] belongs to agent i).
std::vector<double> aip_evaluate_ce(std::span<const Aip* const> models, const Environment& env,
                                    std::span<Actor* const> actors, int episodes, Rng& rng);

}  // namespace dials::influence
