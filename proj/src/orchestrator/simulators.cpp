#include "dials/orchestrator/simulators.hpp"

namespace dials::orchestrator {

Ials::Ials(const Environment& env, AgentId agent, learner::PpoAgent& learner, Rng streams)
    : env_(&env),
      agent_(agent),
      learner_(&learner),
      env_rng_(streams.split(0)),
      aip_rng_(streams.split(1)),
      obs_rng_(streams.split(2)),
      act_rng_(streams.split(3)),
      obs_(static_cast<size_t>(env.observation_size(agent))) {}

void Ials::begin_round(std::shared_ptr<const influence::Aip> aip) {
  require(aip != nullptr && aip->agent() == agent_, "ials: snapshot belongs to another agent");
  aip_ = std::move(aip);
  hash_ = aip_->snapshot_hash();
  t_ = 0;
}

void Ials::train(long steps) {
  require(aip_ != nullptr, "ials: no influence predictor installed");
  const int H = env_->horizon();
  for (long k = 0; k < steps; ++k) {
    if (t_ == 0) {
      x_ = env_->local_reset(agent_, env_rng_);
      memory_ = aip_->begin();
      prev_ = -1;
      learner_->reset();
    }
    const InfluenceSourceValue u = aip_->sample(memory_, x_, prev_, aip_rng_);
    env_->observe(agent_, x_, obs_rng_, obs_);
    const Action a = learner_->act(obs_, act_rng_);
    LocalStep st = env_->local_step(agent_, x_, a, u, env_rng_);
    t_ = (t_ + 1) % H;
    learner_->reward(st.reward, t_ == 0);
    x_ = std::move(st.next);
    prev_ = a;
  }
}

GsTrainer::GsTrainer(const Environment& env, std::vector<learner::PpoAgent*> learners, Rng env_stream,
                     std::vector<Rng> agent_streams)
    : env_(&env), learners_(std::move(learners)), env_rng_(env_stream) {
  const int n = env.num_agents();
  require(static_cast<int>(learners_.size()) == n && static_cast<int>(agent_streams.size()) == n,
          "gs trainer: one learner and one stream per agent required");
  for (int i = 0; i < n; ++i) {
    obs_rng_.push_back(agent_streams[i].split(2));
    act_rng_.push_back(agent_streams[i].split(3));
    obs_.emplace_back(static_cast<size_t>(env.observation_size(AgentId(i))));
  }
  joint_.resize(static_cast<size_t>(n));
}

void GsTrainer::train(long steps) {
  const int n = env_->num_agents();
  const int H = env_->horizon();
  for (long k = 0; k < steps; ++k) {
    if (t_ == 0) {
      s_ = env_->reset(env_rng_);
      for (auto* l : learners_) l->reset();
    }
    for (int i = 0; i < n; ++i) {
      env_->observe(AgentId(i), env_->extract_local(s_, AgentId(i)), obs_rng_[i], obs_[i]);
      joint_[i] = learners_[i]->act(obs_[i], act_rng_[i]);
    }
    GlobalStep g = env_->step_global(s_, joint_, env_rng_);
    t_ = (t_ + 1) % H;
    for (int i = 0; i < n; ++i) learners_[i]->reward(g.rewards[i], t_ == 0);
    s_ = std::move(g.next);
  }
}

}  // namespace dials::orchestrator
