#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cacmtune/ising.hpp"

namespace cacmtune {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// The seven solver parameters. steps is the length of a run (T), dt the
// integration step (Delta).
struct CacmParams {
  int steps = 1000;
  double beta1 = 1.185;
  double beta2 = 1.185;
  double alpha = 0.170;
  double gamma = 1.270;
  double xi = 0.070;
  double dt = 0.5;

  void validate() const;
};

// Known-best defaults used as tuning starting point.
CacmParams default_params();

// Auxiliary error variables are clamped here before renormalization, keeping
// the e-dynamics positive and the mean exactly definable.
inline constexpr double kErrorFloor = 1e-12;

struct CacmState {
  std::vector<double> x;        // amplitudes
  std::vector<double> x_prev;   // xp
  std::vector<double> x_prev2;  // xpp
  std::vector<double> e;        // auxiliary error variables, mean 1
  int t_index = 0;
  double best_energy = kInf;
  SpinConfig best_spins;
  bool diverged = false;
};

struct RunResult {
  double best_energy = kInf;
  bool hit_ground = false;
  std::optional<int> steps_to_first_hit;
  bool diverged = false;
};

struct EvalResult {
  double p0 = 0.0;
  double tts = kInf;
  int runs = 0;
  double mean_best_energy = kInf;
  int diverged_runs = 0;
};

// beta1 + (t/steps) * (beta2 - beta1), real division
double beta_schedule(int t, int steps, double beta1, double beta2);

// x ~ U[-0.1, 0.1] i.i.d. from the seed, x_prev = x_prev2 = x, e = 1.
CacmState init_state(const IsingInstance& instance, std::uint64_t seed);

// One step of the amplitude/error dynamics; updates the incumbent energy and
// sets state.diverged if a non-finite amplitude or error variable appears.
void cacm_step(CacmState& state, const IsingInstance& instance, const CacmParams& params);

// init_state followed by exactly params.steps steps (stopping early on
// divergence, which is reported as a non-hit).
RunResult cacm_run(const IsingInstance& instance, const CacmParams& params, std::uint64_t seed,
                   double rel_tol = kGroundRelTol);

// `runs` independent solver runs with per-run seeds derive_seed(master_seed,
// run_index). The reduction is order-independent, so the result is identical
// for any worker count (workers = 0 picks the hardware concurrency).
EvalResult evaluate(const IsingInstance& instance, const CacmParams& params, int runs,
                    std::uint64_t master_seed, double rel_tol = kGroundRelTol, int workers = 0);

// Time to solution at 99% target confidence: steps * log(0.01) / log(1 - p0),
// +infinity at p0 = 0 and clamped to `steps` once p0 >= 0.99.
double tts(double p0, int steps);

}  // namespace cacmtune
