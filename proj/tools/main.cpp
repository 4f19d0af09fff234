// cacmtune: generate planted instances, run the solver, tune its parameters,
// and benchmark the tuning strategies.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cacmtune/bench.hpp"
#include "cacmtune/cacm.hpp"
#include "cacmtune/ising.hpp"
#include "cacmtune/rng.hpp"
#include "cacmtune/tuner.hpp"

namespace fs = std::filesystem;
using namespace cacmtune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GenArgs {
  int n = 60;
  int m = 0;  // 0 = default ceil(0.7 n)
  std::uint64_t seed = 1;
  std::string planted = "ones";
  std::string out;
};

int cmd_gen(const GenArgs& args) {
  WishartSpec spec;
  spec.n_spins = args.n;
  spec.m_columns = args.m > 0 ? args.m : static_cast<int>(std::ceil(0.7 * args.n));
  spec.seed = args.seed;
  spec.planted = planted_choice_from_string(args.planted);
  const IsingInstance instance = generate_wishart(spec);
  save_instance(instance, args.out);
  std::cout << "n " << instance.n_spins() << "\n"
            << "m " << instance.meta().m_columns << "\n"
            << "seed " << instance.meta().seed << "\n"
            << "ground_energy " << format_double(instance.ground_energy()) << "\n"
            << "wrote " << args.out << "\n";
  return kExitOk;
}

struct VerifyArgs {
  std::string in;
  double tol = 1e-9;
};

int cmd_verify(const VerifyArgs& args) {
  const IsingInstance instance = load_instance(args.in);  // checks matrix invariants
  std::cout << "structure ok (symmetric, zero diagonal, ground energy recomputable)\n";
  if (instance.n_spins() > kBruteForceMaxSpins) {
    std::cout << "planted-minimum check skipped (n > " << kBruteForceMaxSpins
              << ", enumeration infeasible)\n";
    return kExitOk;
  }
  const auto [config, best] = brute_force_ground(instance);
  const double gap = instance.ground_energy() - best;
  if (std::abs(gap) <= args.tol) {
    std::cout << "planted-minimum ok: exhaustive minimum " << format_double(best)
              << " matches ground_energy within " << format_double(args.tol) << "\n";
    return kExitOk;
  }
  std::cout << "planted-minimum FAILED: exhaustive minimum " << format_double(best)
            << " vs ground_energy " << format_double(instance.ground_energy()) << "\n";
  return kExitRuntime;
}

struct SolveArgs {
  std::string in;
  CacmParams params;
  int runs = 100;
  std::uint64_t seed = 1;
  double rel_tol = kGroundRelTol;
  int workers = 0;
};

int cmd_solve(const SolveArgs& args) {
  const IsingInstance instance = load_instance(args.in);
  const EvalResult r =
      evaluate(instance, args.params, args.runs, args.seed, args.rel_tol, args.workers);
  std::cout << "p0 " << format_double(r.p0) << "\n"
            << "tts " << format_double(r.tts) << "\n"
            << "mean_best_energy " << format_double(r.mean_best_energy) << "\n"
            << "diverged_runs " << r.diverged_runs << "\n"
            << "runs " << r.runs << "\n"
            << "seed " << args.seed << "\n";
  return kExitOk;
}

struct TuneArgs {
  std::string method = "a";
  std::string in;
  std::string sampler = "tpe";
  std::vector<std::string> assign;
  long budget = 100;
  int y_initial = 20;
  std::vector<std::string> order;
  int steps = 1000;
  double dt = 0.5;
  int runs = 100;
  std::uint64_t seed = 1;
  double rel_tol = kGroundRelTol;
  int workers = 0;
  std::string out = "study.jsonl";
  bool descending_phase1 = false;
};

PortfolioAssignment parse_assignment(const std::string& default_kind,
                                     const std::vector<std::string>& overrides) {
  PortfolioAssignment assignment;
  assignment.default_kind = sampler_kind_from_string(default_kind);
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--assign expects name=sampler, got '" + entry + "'");
    assignment.overrides[entry.substr(0, eq)] =
        sampler_kind_from_string(entry.substr(eq + 1));
  }
  return assignment;
}

int cmd_tune(const TuneArgs& args) {
  const TuneMethod method = tune_method_from_string(args.method);
  const IsingInstance instance = load_instance(args.in);
  const TunableSet tunables = default_tunables();
  const PortfolioAssignment assignment = parse_assignment(args.sampler, args.assign);
  assignment.validate(tunables.space);

  ObjectiveSpec spec;
  spec.instance = &instance;
  spec.steps = args.steps;
  spec.dt = args.dt;
  spec.runs_per_eval = args.runs;
  spec.eval_seed = derive_seed(args.seed, 0);
  spec.rel_tol = args.rel_tol;
  spec.workers = args.workers;
  const ObjectiveFn objective = make_solver_objective(spec, tunables);

  nlohmann::json meta;
  meta["instance"] = {{"path", args.in},
                      {"n", instance.n_spins()},
                      {"m", instance.meta().m_columns},
                      {"seed", instance.meta().seed}};
  meta["steps"] = args.steps;
  meta["dt"] = args.dt;
  meta["runs_per_eval"] = args.runs;
  meta["eval_seed"] = spec.eval_seed;
  meta["rel_tol"] = args.rel_tol;

  const std::vector<std::string> order = args.order.empty() ? tunables.names : args.order;

  Study study;
  switch (method) {
    case TuneMethod::conventional:
      study = conventional(args.budget, tunables, assignment.default_kind, objective, args.seed,
                           meta);
      break;
    case TuneMethod::method_a:
      study = method_a(args.budget, tunables, order, assignment, objective, args.seed, meta);
      break;
    case TuneMethod::method_b:
      study = method_b(args.budget, args.y_initial, tunables, assignment, objective, args.seed,
                       meta, args.descending_phase1);
      break;
  }
  save_study(study, args.out);

  std::cout << "method " << to_string(method) << "\n"
            << "baseline_tts " << format_double(study.config.baseline_value) << "\n";
  for (std::size_t j = 0; j < tunables.names.size(); ++j)
    std::cout << "best." << tunables.names[j] << " " << format_double(study.best_params[j])
              << "\n";
  std::cout << "best_tts " << format_double(study.best_value) << "\n";
  if (study.best_p0) std::cout << "best_p0 " << format_double(*study.best_p0) << "\n";
  std::cout << "evaluations " << study.total_evaluations << "\n"
            << "stage_order";
  for (const std::string& name : study.resolved_order) std::cout << " " << name;
  std::cout << "\nwrote " << args.out << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string in;
  std::vector<std::string> methods = {"conventional", "a", "b"};
  std::vector<std::string> samplers = {"tpe", "gp", "cmaes", "random", "grid"};
  std::vector<long> budgets = {100, 1000};
  int repetitions = 10;
  int y_initial = 20;
  int steps = 1000;
  double dt = 0.5;
  int runs = 100;
  std::uint64_t seed = 1;
  double rel_tol = kGroundRelTol;
  int workers = 0;
  std::string out_dir = "bench_out";
  std::vector<long> scaling_budgets = {100, 500, 1000};
  bool no_scaling = false;
  bool no_save_studies = false;
};

int cmd_bench(const BenchArgs& args) {
  const IsingInstance instance = load_instance(args.in);
  BenchPlan plan;
  plan.methods.clear();
  for (const std::string& m : args.methods) plan.methods.push_back(tune_method_from_string(m));
  plan.samplers.clear();
  for (const std::string& s : args.samplers)
    plan.samplers.push_back(sampler_kind_from_string(s));
  plan.budgets = args.budgets;
  plan.repetitions = args.repetitions;
  plan.y_initial = args.y_initial;
  plan.steps = args.steps;
  plan.dt = args.dt;
  plan.runs_per_eval = args.runs;
  plan.rel_tol = args.rel_tol;
  plan.workers = args.workers;
  plan.seed = args.seed;
  plan.scaling_budgets = args.no_scaling ? std::vector<long>{} : args.scaling_budgets;
  plan.save_studies = !args.no_save_studies;

  const BenchResult result = run_bench(plan, instance, args.out_dir, &std::cerr);
  std::cout << summary_csv(result.rows) << "\n" << speedup_csv(result.rows);
  std::cout << "wrote " << args.out_dir << "/results.csv summary.csv speedup.csv";
  if (!result.scaling_rows.empty()) std::cout << " scaling.csv";
  std::cout << "\n";
  if (result.any_failed) {
    std::cerr << "bench: one or more studies failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> studies;
  std::string out_dir = "report_out";
};

int cmd_report(const ReportArgs& args) {
  std::vector<std::string> paths;
  for (const std::string& entry : args.studies) {
    if (fs::is_directory(entry)) {
      for (const auto& file : fs::directory_iterator(entry))
        if (file.path().extension() == ".jsonl") paths.push_back(file.path().string());
      std::sort(paths.begin(), paths.end());
    } else {
      paths.push_back(entry);
    }
  }
  if (paths.empty()) throw std::runtime_error("report: no study files found");

  const std::vector<BenchRow> rows = rows_from_studies(paths);
  fs::create_directories(args.out_dir);
  const std::map<std::string, std::string> outputs = {{"results.csv", results_csv(rows)},
                                                      {"summary.csv", summary_csv(rows)},
                                                      {"speedup.csv", speedup_csv(rows)}};
  for (const auto& [name, content] : outputs) {
    std::ofstream out(fs::path(args.out_dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + name);
    out << content;
  }
  std::cout << outputs.at("summary.csv") << "\n" << outputs.at("speedup.csv");
  std::cout << "wrote " << args.out_dir << "/results.csv summary.csv speedup.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CIM-CACm solver, planted-instance generator and hyperparameter tuner"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a Wishart planted instance");
  gen_cmd->add_option("--n", gen.n, "problem size")->required();
  gen_cmd->add_option("--m", gen.m, "Wishart columns (default ceil(0.7 n))");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--planted", gen.planted, "planted state: ones|random")
      ->check(CLI::IsMember({"ones", "all_ones", "random"}));
  gen_cmd->add_option("--out", gen.out, "output instance file")->required();

  VerifyArgs verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "check an instance file");
  verify_cmd->add_option("--in", verify.in, "instance file")->required();
  verify_cmd->add_option("--tol", verify.tol, "energy comparison tolerance");

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "evaluate solver parameters on an instance");
  solve_cmd->add_option("--in", solve.in, "instance file")->required();
  solve_cmd->add_option("--steps", solve.params.steps, "time steps");
  solve_cmd->add_option("--beta1", solve.params.beta1, "initial decay rate");
  solve_cmd->add_option("--beta2", solve.params.beta2, "final decay rate");
  solve_cmd->add_option("--alpha", solve.params.alpha, "coupling strength");
  solve_cmd->add_option("--gamma", solve.params.gamma, "momentum strength");
  solve_cmd->add_option("--xi", solve.params.xi, "error variable rate");
  solve_cmd->add_option("--dt", solve.params.dt, "time step size");
  solve_cmd->add_option("--runs", solve.runs, "runs per evaluation");
  solve_cmd->add_option("--seed", solve.seed, "master seed");
  solve_cmd->add_option("--tol", solve.rel_tol, "ground-hit relative tolerance");
  solve_cmd->add_option("--workers", solve.workers, "worker threads (0 = auto)");

  TuneArgs tune;
  CLI::App* tune_cmd = app.add_subcommand("tune", "run one tuning study");
  tune_cmd->add_option("--method", tune.method, "conventional|a|b")
      ->check(CLI::IsMember({"conventional", "a", "b"}));
  tune_cmd->add_option("--in", tune.in, "instance file")->required();
  tune_cmd->add_option("--sampler", tune.sampler, "default sampler")
      ->check(CLI::IsMember({"random", "grid", "tpe", "gp", "cmaes"}));
  tune_cmd->add_option("--assign", tune.assign, "per-parameter sampler override name=kind");
  tune_cmd->add_option("--budget", tune.budget, "total number of trials");
  tune_cmd->add_option("--y-initial", tune.y_initial, "method b probe trials per parameter");
  tune_cmd->add_option("--order", tune.order, "method a stage order")->delimiter(',');
  tune_cmd->add_option("--steps", tune.steps, "time steps");
  tune_cmd->add_option("--dt", tune.dt, "time step size");
  tune_cmd->add_option("--runs", tune.runs, "runs per evaluation");
  tune_cmd->add_option("--seed", tune.seed, "study master seed");
  tune_cmd->add_option("--tol", tune.rel_tol, "ground-hit relative tolerance");
  tune_cmd->add_option("--workers", tune.workers, "worker threads (0 = auto)");
  tune_cmd->add_option("--out", tune.out, "study output file");
  tune_cmd->add_flag("--descending-phase1", tune.descending_phase1,
                     "rank method b phase 1 by descending score (literal reading)");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "run the full benchmark matrix");
  bench_cmd->add_option("--in", bench.in, "instance file")->required();
  bench_cmd->add_option("--methods", bench.methods, "methods to compare")->delimiter(',');
  bench_cmd->add_option("--samplers", bench.samplers, "samplers to compare")->delimiter(',');
  bench_cmd->add_option("--budgets", bench.budgets, "trial budgets")->delimiter(',');
  bench_cmd->add_option("--repetitions", bench.repetitions, "studies per cell");
  bench_cmd->add_option("--y-initial", bench.y_initial, "method b probe trials");
  bench_cmd->add_option("--steps", bench.steps, "time steps");
  bench_cmd->add_option("--dt", bench.dt, "time step size");
  bench_cmd->add_option("--runs", bench.runs, "runs per evaluation");
  bench_cmd->add_option("--seed", bench.seed, "plan seed");
  bench_cmd->add_option("--tol", bench.rel_tol, "ground-hit relative tolerance");
  bench_cmd->add_option("--workers", bench.workers, "worker threads (0 = auto)");
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory");
  bench_cmd->add_option("--scaling-budgets", bench.scaling_budgets,
                        "budget series for the joint-search scaling table")
      ->delimiter(',');
  bench_cmd->add_flag("--no-scaling", bench.no_scaling, "skip the scaling series");
  bench_cmd->add_flag("--no-save-studies", bench.no_save_studies, "do not keep study files");

  ReportArgs report;
  CLI::App* report_cmd = app.add_subcommand("report", "recompute tables from study files");
  report_cmd->add_option("--studies", report.studies, "study files or directories")->required();
  report_cmd->add_option("--out-dir", report.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen);
    if (verify_cmd->parsed()) return cmd_verify(verify);
    if (solve_cmd->parsed()) return cmd_solve(solve);
    if (tune_cmd->parsed()) return cmd_tune(tune);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (report_cmd->parsed()) return cmd_report(report);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
