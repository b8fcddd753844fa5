#pragma once

#include <string>
#include <vector>

#include "dials/core/actor.hpp"
#include "dials/nn/network.hpp"
#include "dials/nn/optim.hpp"

namespace dials::learner {

struct PpoConfig {
  int rollout_steps = 8;    // T: segment length, bootstrapped at its end (BPTT length for recurrent policies)
  double lr = 2.5e-4;
  double gamma = 0.99;
  double lambda = 0.95;
  int memory = 128;         // transitions gathered between updates
  int batch = 32;           // transitions per minibatch
  int epochs = 3;
  double entropy = 1e-2;
  double clip_eps = 0.1;
  double value_coeff = 1.0;
  double max_grad_norm = 0.5;

  /// Warehouse: T = 8; traffic: T = 16. Everything else is shared.
  static PpoConfig defaults_for(const std::string& env_name);
};

struct PolicyShape {
  nn::Arch arch = nn::Arch::kRecurrent;
  int hidden1 = 256;
  int hidden2 = 128;
  /// Warehouse: GRU 256/128; traffic: feedforward 256/128.
  static PolicyShape defaults_for(const std::string& env_name);
};

/// Consecutive transitions of one episode, at most T long.
struct Segment {
  nn::Matrix obs;              // observation_size x L
  std::vector<int> actions;
  std::vector<double> logp, values, rewards;
  nn::Matrix h0;               // policy memory before the first step (state_size x 1)
  double bootstrap = 0.0;      // V(next observation), 0 when the episode ended
  int length() const { return static_cast<int>(actions.size()); }
};

/// GAE over one segment: delta_t = r_t + gamma V_{t+1} - V_t with V_L = bootstrap,
/// A_t = sum_k (gamma lambda)^k delta_{t+k}; returns R_t = A_t + V_t.
void compute_gae(const Segment& seg, double gamma, double lambda, std::vector<double>& adv, std::vector<double>& ret);

/// A minibatch of whole segments (recurrent) or single transitions (feedforward).
struct PpoBatch {
  std::vector<nn::Matrix> xs;   // [t] obs x B
  nn::Matrix h0;
  std::vector<std::vector<int>> actions;            // [t][b]
  std::vector<std::vector<double>> logp_old, adv, ret;  // [t][b]
  std::vector<std::vector<char>> mask;
  int count = 0;
};

struct PpoLossParts {
  double total = 0, policy = 0, value = 0, entropy = 0, clip_fraction = 0, approx_kl = 0;
};

/// Clipped surrogate + value_coeff * MSE - entropy * H, averaged over valid
/// transitions. Adds dLoss/dparams to *grad when grad is non-null.
PpoLossParts ppo_loss(const nn::Network& net, const PpoBatch& batch, const PpoConfig& cfg, nn::Vector* grad);

/// Frozen copy of a policy network that samples actions with its own memory.
/// Used for evaluation and data collection so the learner's state is untouched.
class PolicyActor final : public Actor {
 public:
  explicit PolicyActor(const nn::Network& net);
  void reset() override;
  Action act(std::span<const double> observation, Rng& rng) override;

 private:
  nn::Network net_;
  nn::Matrix h_;
};

/// Independent PPO learner for one agent, usable as an Actor. While training
/// is enabled every act() is recorded and an update runs whenever `memory`
/// transitions have been completed.
class PpoAgent final : public Actor {
 public:
  PpoAgent(int observation_size, int num_actions, const PolicyShape& shape, const PpoConfig& cfg, Rng& init_rng);

  void reset() override;
  Action act(std::span<const double> observation, Rng& rng) override;
  /// Reward of the last action; `episode_end` closes the segment without bootstrap.
  void reward(double r, bool episode_end);

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  /// Minibatch shuffling draws come from this stream.
  void set_update_rng(Rng rng) { update_rng_ = rng; }

  nn::Network& net() { return net_; }
  const nn::Network& net() const { return net_; }
  const PpoConfig& config() const { return cfg_; }
  long updates() const { return updates_; }
  const PpoLossParts& last_stats() const { return last_; }
  PolicyActor snapshot() const { return PolicyActor(net_); }

  /// Action distribution and value for one observation without touching the memory (for tests).
  std::vector<double> probs(std::span<const double> observation, double* value = nullptr) const;

 private:
  void close_segment(double bootstrap);
  void update();

  int obs_size_;
  int num_actions_;
  PpoConfig cfg_;
  nn::Network net_;
  nn::Adam adam_;
  bool training_ = true;
  Rng update_rng_;
  nn::Matrix h_;
  Segment open_;
  bool awaiting_bootstrap_ = false;
  std::vector<Segment> done_;
  int done_transitions_ = 0;
  long updates_ = 0;
  PpoLossParts last_;
};

}  // namespace dials::learner
