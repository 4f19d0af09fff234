#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cacmtune/tuner.hpp"

namespace cacmtune {

// Full benchmark matrix: methods x samplers x budgets, `repetitions` studies
// per cell. Master seeds are derived from (sampler, budget, repetition) only,
// so the same repetition is paired across methods.
struct BenchPlan {
  std::vector<TuneMethod> methods = {TuneMethod::conventional, TuneMethod::method_a,
                                     TuneMethod::method_b};
  std::vector<SamplerKind> samplers = {SamplerKind::tpe, SamplerKind::gp, SamplerKind::cmaes,
                                       SamplerKind::random, SamplerKind::grid};
  std::vector<long> budgets = {100, 1000};
  int repetitions = 10;
  int y_initial = 20;
  int steps = 1000;
  double dt = 0.5;
  int runs_per_eval = 100;
  double rel_tol = kGroundRelTol;
  int workers = 0;
  std::uint64_t seed = 1;
  // budget series of the plain joint search; empty disables the series
  std::vector<long> scaling_budgets = {100, 500, 1000};
  bool save_studies = true;

  void validate() const;
};

struct BenchRow {
  TuneMethod method = TuneMethod::conventional;
  SamplerKind sampler = SamplerKind::tpe;
  long budget = 0;
  int repetition = 0;
  double tts = kInf;
  std::optional<double> p0_best;
  long evals = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

struct BenchResult {
  std::vector<BenchRow> rows;          // one per study, canonical order
  std::vector<BenchRow> scaling_rows;  // conventional budget series
  bool any_failed = false;
};

// Master seed of the study at (sampler, budget, repetition); method-agnostic
// by construction.
std::uint64_t bench_study_seed(std::uint64_t plan_seed, SamplerKind sampler, long budget,
                               int repetition);

// Runs the full plan against one instance, writing results.csv, summary.csv,
// speedup.csv, scaling.csv (and studies/*.jsonl) under out_dir. Study
// failures mark their row and the function keeps going.
BenchResult run_bench(const BenchPlan& plan, const IsingInstance& instance,
                      const std::string& out_dir, std::ostream* log = nullptr);

// Rebuilds the result rows (and the aggregate tables) from stored studies.
std::vector<BenchRow> rows_from_studies(const std::vector<std::string>& study_paths);

std::string results_csv(const std::vector<BenchRow>& rows);
std::string summary_csv(const std::vector<BenchRow>& rows);
std::string speedup_csv(const std::vector<BenchRow>& rows);
std::string scaling_csv(const std::vector<BenchRow>& rows);

std::string format_double(double v);  // round-trippable, "inf"/"nan" sentinels

}  // namespace cacmtune
