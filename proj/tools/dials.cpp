// dials: command-line front end for runs, oracle checks, benchmarks and traces.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dials/env/trace.hpp"
#include "dials/oracle/draws.hpp"
#include "dials/oracle/verify.hpp"
#include "dials/orchestrator/bench.hpp"
#include "dials/orchestrator/metrics.hpp"
#include "dials/orchestrator/pool.hpp"
#include "dials/orchestrator/run.hpp"

using namespace dials;
namespace orc = dials::orchestrator;

namespace {

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write " + out);
}

struct RunArgs {
  std::string env = "warehouse", mode = "dials", preset = "desk", out;
  int grid = 2, workers = 1, eval_episodes = -1, dataset_size = -1, aip_epochs = -1;
  long F = 50000, steps = 200000, eval_every = -1;
  uint64_t seed = 1;
};

int do_run(const RunArgs& a) {
  orc::RunConfig cfg = orc::RunConfig::defaults(a.env, a.preset);
  cfg.grid_side = a.grid;
  cfg.mode = orc::parse_mode(a.mode);
  cfg.F = a.F;
  cfg.total_steps = a.steps;
  cfg.seed = a.seed;
  cfg.workers = orc::resolve_workers(a.workers);
  cfg.out_dir = a.out;
  if (a.eval_every > 0) cfg.eval_every = a.eval_every;
  if (a.eval_episodes > 0) cfg.eval_episodes = a.eval_episodes;
  if (a.dataset_size > 0) cfg.aip.dataset_size = a.dataset_size;
  if (a.aip_epochs >= 0) cfg.aip.epochs = a.aip_epochs;
  const orc::RunMetrics m = orc::run(cfg);
  const auto& r = m.runtime;
  std::cout << "mode " << a.mode << "  final mean return " << m.final_mean_return() << "  rounds "
            << m.retraining_rounds << "\n"
            << "runtime: agents training " << r.agent_training_s << " s, data collection " << r.data_collection_s
            << " s, influence training " << r.aip_training_s << " s, evaluation " << r.evaluation_s << " s, total "
            << r.total_s << " s\n";
  if (!a.out.empty()) std::cout << "metrics written to " << a.out << "\n";
  return 0;
}

struct VerifyArgs {
  std::string model, check, out;
  uint64_t seed = 0;
  int agent = 0, rollouts = 100000, policies = 20;
};

int do_verify(const VerifyArgs& a) {
  using namespace dials::oracle;
  const TabularFposg m = load_model_file(a.model);
  require(a.agent >= 0 && a.agent < m.num_agents(), "agent out of range");
  nlohmann::json report;
  bool holds = false;
  if (a.check == "lemma1") {
    const auto r = verify_lemma1(m, random_joint_policy(m, a.seed), a.agent, a.rollouts, a.seed);
    report = to_json(r);
    holds = r.holds;
  } else if (a.check == "cor1") {
    std::vector<JointPolicy> pols;
    for (int k = 0; k < a.policies; ++k) pols.push_back(random_joint_policy(m, mix64(a.seed + static_cast<uint64_t>(k))));
    const auto r = verify_corollary1(m, a.agent, pols);
    report = to_json(r);
    holds = r.holds;
  } else {
    const InfluencePair p = random_influence_pair(m, a.agent, a.seed);
    VerifyOptions opt;
    opt.seed = a.seed;
    if (a.check == "lemma2") {
      const auto r = verify_lemma2(m, a.agent, p.first, p.second, opt);
      report = to_json(r);
      holds = r.holds;
    } else if (a.check == "lemma_a3") {
      const auto r = verify_lemma_a3(m, a.agent, p.first, p.second, opt);
      report = to_json(r);
      holds = r.holds;
    } else if (a.check == "thm2") {
      const auto r = verify_theorem2(m, a.agent, p.first, p.second, opt);
      report = to_json(r);
      holds = r.implication_holds;
    } else {
      throw ContractViolation("unknown check '" + a.check + "'");
    }
    report["mixture_weight"] = p.weight;
  }
  report["model"] = a.model;
  report["seed"] = a.seed;
  report["agent"] = a.agent;
  emit(report, a.out);
  return holds ? 0 : 1;
}

int do_toy(uint64_t seed, const std::string& out, bool independent) {
  using namespace dials::oracle;
  ToyOptions o = varied_toy_options(seed);
  if (independent) o.coupling = Coupling::kIndependent;
  const TabularFposg m = random_toy(seed, o);
  std::ofstream f(out);
  save_model(f, m);
  if (!f) throw std::runtime_error("cannot write " + out);
  std::cout << "toy with " << m.num_states() << " states, horizon " << m.horizon() << " written to " << out << "\n";
  return 0;
}

int do_bench(const orc::ScalingOptions& o, const std::string& out) {
  const auto points = orc::bench_scaling(o);
  for (const auto& p : points)
    std::cout << "grid " << p.grid_side << " (" << p.agents << " agents): IALS " << p.ials_us_per_agent_step
              << " us per agent step, GS " << p.gs_us_per_step << " us per step\n";
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    emit({{"env", o.env}, {"preset", o.preset}, {"points", orc::to_json(points)}}, (std::filesystem::path(out) / "scaling.json").string());
  }
  return 0;
}

int do_trace(const std::string& env_name, int grid, int episodes, uint64_t seed, const std::string& out) {
  const auto env = orc::make_environment(env_name, grid);
  std::ofstream f(out);
  Rng rng(seed);
  const int n = env->num_agents();
  std::vector<Action> joint(static_cast<size_t>(n));
  for (int e = 0; e < episodes; ++e) {
    GlobalState s = env->reset(rng);
    for (int t = 0; t < env->horizon(); ++t) {
      for (int i = 0; i < n; ++i) joint[i] = rng.uniform_int(env->num_actions(AgentId(i)));
      GlobalStep g = env->step_global(s, joint, rng);
      env::write_trace_record(f, env::make_trace_record(*env, e, t, s, joint, g.rewards));
      s = std::move(g.next);
    }
  }
  if (!f) throw std::runtime_error("cannot write " + out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed influence-augmented local simulators"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Train agents with DIALS, the global simulator or untrained DIALS");
  run->add_option("--env", ra.env)->check(CLI::IsMember({"warehouse", "traffic"}));
  run->add_option("--grid", ra.grid, "agents per side");
  run->add_option("--mode", ra.mode)->check(CLI::IsMember({"dials", "gs", "untrained"}));
  run->add_option("--F", ra.F, "AIP retraining period in per-agent steps");
  run->add_option("--steps", ra.steps, "total steps per agent");
  run->add_option("--seed", ra.seed);
  run->add_option("--workers", ra.workers, "worker threads (DIALS_WORKERS overrides)");
  run->add_option("--out", ra.out, "directory for metrics.csv and manifest.json");
  run->add_option("--preset", ra.preset)->check(CLI::IsMember({"desk", "paper"}));
  run->add_option("--eval-every", ra.eval_every);
  run->add_option("--eval-episodes", ra.eval_episodes);
  run->add_option("--dataset-size", ra.dataset_size);
  run->add_option("--aip-epochs", ra.aip_epochs);

  auto* oracle = app.add_subcommand("oracle", "Exact checks on tabular toy models");
  oracle->require_subcommand(1);
  VerifyArgs va;
  auto* verify = oracle->add_subcommand("verify", "Run one check and print a JSON report");
  verify->add_option("--model", va.model)->required()->check(CLI::ExistingFile);
  verify->add_option("--check", va.check)->required()->check(CLI::IsMember({"lemma1", "lemma2", "lemma_a3", "thm2", "cor1"}));
  verify->add_option("--seed", va.seed);
  verify->add_option("--agent", va.agent);
  verify->add_option("--rollouts", va.rollouts, "Monte-Carlo rollouts for lemma1");
  verify->add_option("--out", va.out);
  uint64_t toy_seed = 1;
  std::string toy_out;
  bool toy_independent = false;
  auto* toy = oracle->add_subcommand("toy", "Write a random toy model file");
  toy->add_option("--seed", toy_seed);
  toy->add_option("--out", toy_out)->required();
  toy->add_flag("--independent", toy_independent, "no path from other agents' actions to the influence sources");

  auto* bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  orc::ScalingOptions so;
  std::string bench_out;
  auto* scaling = bench->add_subcommand("scaling", "Per-step wall time of IALS and GS across grid sizes");
  scaling->add_option("--env", so.env)->check(CLI::IsMember({"warehouse", "traffic"}));
  scaling->add_option("--grids", so.grids)->delimiter(',');
  scaling->add_option("--preset", so.preset)->check(CLI::IsMember({"desk", "paper"}));
  scaling->add_option("--ials-steps", so.ials_steps);
  scaling->add_option("--gs-steps", so.gs_steps);
  scaling->add_option("--repeats", so.repeats);
  scaling->add_option("--out", bench_out);

  std::string tr_env = "warehouse", tr_out;
  int tr_grid = 2, tr_episodes = 1;
  uint64_t tr_seed = 1;
  auto* trace = app.add_subcommand("trace", "Export uniform-random GS episodes as line-delimited JSON");
  trace->add_option("--env", tr_env)->check(CLI::IsMember({"warehouse", "traffic"}));
  trace->add_option("--grid", tr_grid);
  trace->add_option("--episodes", tr_episodes);
  trace->add_option("--seed", tr_seed);
  trace->add_option("--out", tr_out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return do_run(ra);
    if (*verify) return do_verify(va);
    if (*toy) return do_toy(toy_seed, toy_out, toy_independent);
    if (*scaling) return do_bench(so, bench_out);
    if (*trace) return do_trace(tr_env, tr_grid, tr_episodes, tr_seed, tr_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
