#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cacmtune/cacm.hpp"
#include "cacmtune/ising.hpp"
#include "cacmtune/samplers.hpp"

namespace cacmtune {

// The tunable solver parameters with their starting point and box bounds.
// names[j] matches space.ranges[j].
struct TunableSet {
  std::vector<std::string> names;
  std::vector<double> initial_values;
  SearchSpace space;

  void validate() const;
};

// Known-best starting values over the default search box, in the default
// tuning order beta1, beta2, alpha, gamma, xi.
TunableSet default_tunables();

struct TrialOutcome {
  double value = kInf;  // objective (TTS), lower is better
  std::optional<double> p0;
  std::optional<double> mean_best_energy;
  int diverged_runs = 0;
};

using ObjectiveFn = std::function<TrialOutcome(const std::vector<double>&)>;

// Everything fixed across the trials of one study. eval_seed implements
// common random numbers: every trial reuses the same derived run seeds, so
// the objective is deterministic within the study.
struct ObjectiveSpec {
  const IsingInstance* instance = nullptr;
  int steps = 1000;
  double dt = 0.5;
  int runs_per_eval = 100;
  std::uint64_t eval_seed = 0;
  double rel_tol = kGroundRelTol;
  int workers = 0;
};

ObjectiveFn make_solver_objective(const ObjectiveSpec& spec, const TunableSet& tunables);

// Single evaluation of the solver-backed objective; returns the TTS.
double objective(const std::vector<double>& point, const ObjectiveSpec& spec,
                 const TunableSet& tunables);

enum class TuneMethod { conventional, method_a, method_b };

std::string to_string(TuneMethod method);
TuneMethod tune_method_from_string(const std::string& name);

struct StudyTrial {
  long trial_id = 0;
  int stage_index = 0;
  std::string target_param;        // parameter name, or "joint"
  std::vector<double> point;       // subspace point seen by the sampler
  std::vector<double> full_point;  // complete evaluated configuration
  double value = kInf;             // TTS, +infinity for never-hit trials
  std::optional<double> p0;
  SamplerKind sampler = SamplerKind::random;
  long timestamp = 0;  // objective evaluations completed when the trial finished
};

struct StageRecord {
  int stage_index = 0;
  std::string target_param;
  SamplerKind sampler = SamplerKind::random;
  bool probe = false;  // sensitivity-ranking stage of Method B
  std::vector<StudyTrial> trials;
  std::vector<double> incumbent_before;
  std::vector<double> incumbent_after;
  double incumbent_value_after = kInf;
  double best_trial_value = kInf;  // the E_i of probe stages
};

struct StudyConfig {
  TuneMethod method = TuneMethod::conventional;
  long budget = 0;
  int y_initial = 0;  // Method B only
  bool literal_descending_order = false;
  SamplerKind sampler_default = SamplerKind::tpe;
  std::map<std::string, SamplerKind> sampler_overrides;
  TunableSet tunables;
  std::vector<std::string> requested_order;  // Method A stage order
  std::uint64_t master_seed = 0;
  long leftover_trials = 0;  // budget not divisible by the stage count
  double baseline_value = kInf;
  std::optional<double> baseline_p0;
  nlohmann::json objective_meta;  // free-form description of the objective
};

struct Study {
  StudyConfig config;
  std::vector<StageRecord> stages;
  std::vector<std::string> resolved_order;  // actual stage order used
  std::vector<double> best_params;
  double best_value = kInf;
  std::optional<double> best_p0;
  long total_evaluations = 0;  // trials only; the baseline is extra
  long objective_calls = 0;    // trials + baseline evaluation
};

// Seed plan shared by all strategies: derive_seed(master_seed, 0) is
// reserved for the objective's evaluation seed (common random numbers);
// stage k uses sampler seed derive_seed(master_seed, k + 1).

// Joint search over the full box. The starting point is injected as a
// bootstrap observation and competes with all asked trials.
Study conventional(long budget, const TunableSet& tunables, SamplerKind kind,
                   const ObjectiveFn& objective, std::uint64_t master_seed,
                   const nlohmann::json& objective_meta = nlohmann::json::object());

// Sequential coordinate-wise search: floor(budget / n) trials per parameter
// in the given order, carrying the incumbent forward. A stage can never
// worsen the incumbent.
Study method_a(long budget, const TunableSet& tunables, const std::vector<std::string>& order,
               const PortfolioAssignment& assignment, const ObjectiveFn& objective,
               std::uint64_t master_seed,
               const nlohmann::json& objective_meta = nlohmann::json::object());

// Sensitivity-prioritized sequential search: y_initial probe trials per
// parameter rank the parameters, then the coordinate-wise pass runs on the
// remaining budget in that order.
Study method_b(long budget, int y_initial, const TunableSet& tunables,
               const PortfolioAssignment& assignment, const ObjectiveFn& objective,
               std::uint64_t master_seed,
               const nlohmann::json& objective_meta = nlohmann::json::object(),
               bool literal_descending_order = false);

// conventional_tts / proposed_tts; +infinity when the conventional side
// never solved. Rejects non-positive inputs and non-finite proposed values.
double speedup(double conventional_tts, double proposed_tts);

// Study files are JSON lines: a config record, one record per trial, and a
// summary record.
std::string study_to_jsonl(const Study& study);
Study study_from_jsonl(const std::string& text);
void save_study(const Study& study, const std::string& path);
Study load_study(const std::string& path);

}  // namespace cacmtune
