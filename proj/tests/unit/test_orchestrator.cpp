#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "dials/env/warehouse.hpp"
#include "dials/orchestrator/metrics.hpp"
#include "dials/orchestrator/pool.hpp"
#include "dials/orchestrator/run.hpp"
#include "dials/orchestrator/simulators.hpp"
#include "stats.hpp"

using namespace dials;
using namespace dials::orchestrator;

namespace {

RunConfig tiny(Mode mode, long total, long F) {
  RunConfig c = RunConfig::defaults("warehouse", "desk");
  c.mode = mode;
  c.total_steps = total;
  c.F = F;
  c.eval_every = 500;
  c.eval_episodes = 2;
  c.policy.hidden1 = c.policy.hidden2 = 8;
  c.aip.hidden1 = c.aip.hidden2 = 8;
  c.aip.epochs = 1;
  c.aip.dataset_size = 200;
  return c;
}

std::string csv_of(const RunMetrics& m) {
  std::ostringstream out;
  write_metrics_csv(out, m);
  return out.str();
}

std::string stable_csv(const RunMetrics& m) {
  std::istringstream in(csv_of(m));
  return deterministic_part(in);
}

/// Always takes the same action.
class FixedActor final : public Actor {
 public:
  explicit FixedActor(Action a) : a_(a) {}
  void reset() override {}
  Action act(std::span<const double>, Rng&) override { return a_; }

 private:
  Action a_;
};

}  // namespace

TEST_CASE("evaluation") {
  SUBCASE("zero rewards give zero return") {
    env::WarehouseConfig wc;
    wc.reward_per_item = 0.0;
    const env::Warehouse wh(wc);
    std::vector<UniformActor> store(4, UniformActor(4));
    std::vector<Actor*> actors;
    for (auto& a : store) actors.push_back(&a);
    Rng rng(1);
    const EvalResult r = evaluate(wh, actors, 5, rng);
    for (int i = 0; i < 4; ++i) {
      CHECK(r.mean[i] == 0.0);
      CHECK(r.se[i] == 0.0);
    }
  }
  SUBCASE("deterministic policy in a deterministic environment has zero spread") {
    env::WarehouseConfig wc;
    wc.item_prob = 0.0;  // no spawns and items start absent, so every episode is identical
    const env::Warehouse wh(wc);
    std::vector<FixedActor> store(4, FixedActor(0));
    std::vector<Actor*> actors;
    for (auto& a : store) actors.push_back(&a);
    Rng rng(1);
    const EvalResult r = evaluate(wh, actors, 4, rng);
    for (int i = 0; i < 4; ++i) CHECK(r.se[i] == 0.0);
  }
  SUBCASE("uniform policies agree with a straight-line rollout") {
    const env::Warehouse wh({});
    std::vector<UniformActor> store(4, UniformActor(4));
    std::vector<Actor*> actors;
    for (auto& a : store) actors.push_back(&a);
    Rng rng(2);
    const EvalResult r = evaluate(wh, actors, 100, rng);

    // reference: plain loop on the global simulator with its own stream
    Rng ref(99);
    std::vector<std::vector<double>> ret(4);
    for (int e = 0; e < 100; ++e) {
      GlobalState s = wh.reset(ref);
      std::vector<double> total(4, 0.0);
      for (int t = 0; t < wh.horizon(); ++t) {
        std::vector<Action> joint(4);
        for (auto& a : joint) a = ref.uniform_int(4);
        GlobalStep g = wh.step_global(s, joint, ref);
        for (int i = 0; i < 4; ++i) total[i] += g.rewards[i];
        s = std::move(g.next);
      }
      for (int i = 0; i < 4; ++i) ret[i].push_back(total[i]);
    }
    for (int i = 0; i < 4; ++i) {
      const auto want = test::mean_se(ret[i]);
      CHECK(std::abs(test::z_score({r.mean[i], r.se[i]}, want)) < 3.0);
    }
  }
}

TEST_CASE("configuration validation") {
  RunConfig c = tiny(Mode::kDials, 1000, 2000);
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c.F = 500;
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c.workers = 1;
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(RunConfig::defaults("warehouse", "huge"), ContractViolation);
  CHECK_THROWS_AS(parse_mode("central"), ContractViolation);
  CHECK(parse_mode("untrained") == Mode::kUntrained);
  CHECK_THROWS_AS(run_gs(tiny(Mode::kDials, 1000, 500)), ContractViolation);
}

TEST_CASE("zero steps evaluates the initial policies only") {
  for (Mode mode : {Mode::kDials, Mode::kGs, Mode::kUntrained}) {
    const RunMetrics m = run(tiny(mode, 0, 1000));
    REQUIRE(m.evals.size() == 1);
    CHECK(m.evals[0].global_step == 0);
    CHECK(m.rounds.empty());
    CHECK(m.runtime.agent_training_s == 0.0);
    CHECK(m.runtime.aip_training_s == 0.0);
  }
}

TEST_CASE("retraining rounds") {
  for (long F : {500L, 700L, 1500L}) {
    CAPTURE(F);
    const RunMetrics m = run(tiny(Mode::kDials, 1500, F));
    const long want = (1500 + F - 1) / F;
    CHECK(m.retraining_rounds == want);
    REQUIRE(static_cast<long>(m.rounds.size()) == want);
    CHECK(m.rounds.back().end_step == 1500);
    for (const auto& r : m.rounds) {
      CHECK(r.retrained);
      CHECK(r.stationary());
      CHECK(!r.observed.empty());
    }
    // evaluations at 0, every 500 steps and at the end
    std::vector<long> steps;
    for (const auto& e : m.evals) steps.push_back(e.global_step);
    CHECK(steps == std::vector<long>{0, 500, 1000, 1500});
    CHECK(m.evals.back().phase == "final");
    const Runtime& t = m.runtime;
    CHECK(t.agent_training_s + t.data_collection_s + t.aip_training_s + t.evaluation_s <= t.total_s);
  }
}

TEST_CASE("snapshots change only at round boundaries") {
  const RunMetrics m = run(tiny(Mode::kDials, 1500, 500));
  REQUIRE(m.rounds.size() == 3);
  CHECK(m.rounds[0].aip_hash != m.rounds[1].aip_hash);
  for (const auto& e : m.evals)
    for (const auto& r : m.rounds)
      if (e.global_step > r.start_step && e.global_step <= r.end_step) CHECK(e.aip_hash == r.aip_hash);
}

TEST_CASE("untrained predictors stay uniform") {
  const RunMetrics m = run(tiny(Mode::kUntrained, 1000, 500));
  CHECK(m.retraining_rounds == 0);
  CHECK(m.runtime.data_collection_s == 0.0);
  CHECK(m.runtime.aip_training_s == 0.0);
  const double uniform = 4 * std::log(4.0);
  for (const auto& e : m.evals)
    for (double ce : e.aip_ce) CHECK(ce == doctest::Approx(uniform).epsilon(1e-12));
  for (const auto& r : m.rounds) CHECK(r.aip_hash == m.rounds[0].aip_hash);
}

TEST_CASE("metrics do not depend on the worker count") {
  for (Mode mode : {Mode::kDials, Mode::kUntrained, Mode::kGs}) {
    RunConfig c = tiny(mode, 1000, 500);
    const std::string one = stable_csv(run(c));
    c.workers = 3;
    CHECK(stable_csv(run(c)) == one);
    c.seed = 2;
    CHECK(stable_csv(run(c)) != one);
  }
}

TEST_CASE("metrics table") {
  const RunMetrics m = run(tiny(Mode::kDials, 500, 500));
  std::istringstream in(csv_of(m));
  const auto rows = read_metrics_csv(in);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].global_step == 0);
  CHECK(rows[7].agent_id == 3);
  CHECK(rows[7].has_aip_ce);
  CHECK(rows[4].eval_return == m.evals[1].returns[0]);  // 17 digits round-trip exactly

  const RunMetrics g = run(tiny(Mode::kGs, 500, 500));
  std::istringstream gin(csv_of(g));
  for (const auto& r : read_metrics_csv(gin)) CHECK(!r.has_aip_ce);

  std::istringstream bad("step,agent\n1,2\n");
  CHECK_THROWS_AS(read_metrics_csv(bad), ContractViolation);
  std::istringstream short_row("global_step,agent_id,eval_return,eval_se,aip_ce,phase,wall_s\n1,2,3\n");
  CHECK_THROWS_AS(read_metrics_csv(short_row), ContractViolation);

  const auto j = manifest_json(tiny(Mode::kDials, 500, 500), m);
  CHECK(j["retraining_rounds"] == 1);
  CHECK(j["config"]["F"] == 500);
  CHECK(j["runtime"].contains("agents_training_s"));
  CHECK(j["runtime"].contains("data_collection_and_influence_training_s"));
  CHECK(j["rounds"][0]["stationary"] == true);
}

TEST_CASE("worker pool") {
  std::vector<int> hit(10, 0);
  parallel_for(3, 10, "test", [&](int i) { hit[i] += 1; });
  CHECK(hit == std::vector<int>(10, 1));
  try {
    parallel_for(2, 6, "agent training", [](int i) {
      if (i == 4 || i == 2) throw std::runtime_error("boom");
    });
    FAIL("no exception");
  } catch (const RunError& e) {
    CHECK(e.agent() == 2);
    CHECK(e.phase() == "agent training");
  }
  setenv("DIALS_WORKERS", "4", 1);
  CHECK(resolve_workers(1) == 4);
  setenv("DIALS_WORKERS", "zero", 1);
  CHECK(resolve_workers(2) == 2);
  unsetenv("DIALS_WORKERS");
  CHECK(resolve_workers(3) == 3);
}

TEST_CASE("ials keeps its snapshot") {
  const env::Warehouse wh({});
  influence::AipConfig ac;
  ac.hidden1 = ac.hidden2 = 8;
  auto aip = std::make_shared<influence::Aip>(wh, AgentId(1), ac);
  Rng init(1);
  aip->net().init(init);
  const uint64_t h = aip->snapshot_hash();
  learner::PolicyShape shape{nn::Arch::kRecurrent, 8, 8};
  learner::PpoAgent agent(wh.observation_size(AgentId(1)), 4, shape, learner::PpoConfig{}, init);
  Ials sim(wh, AgentId(1), agent, Rng(5));
  CHECK_THROWS_AS(sim.train(1), ContractViolation);
  CHECK_THROWS_AS(sim.begin_round(std::make_shared<influence::Aip>(wh, AgentId(0), ac)), ContractViolation);
  sim.begin_round(aip);
  sim.train(300);
  CHECK(sim.aip_hash() == h);
  CHECK(aip->snapshot_hash() == h);
  CHECK(agent.updates() == 2);
}
