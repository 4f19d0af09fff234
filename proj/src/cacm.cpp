#include "cacmtune/cacm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "cacmtune/rng.hpp"

namespace cacmtune {

void CacmParams::validate() const {
  if (steps < 1) throw std::invalid_argument("CacmParams: steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("CacmParams: dt must be > 0");
  for (double v : {beta1, beta2, alpha, gamma, xi, dt})
    if (!std::isfinite(v)) throw std::invalid_argument("CacmParams: parameters must be finite");
}

CacmParams default_params() { return CacmParams{}; }

double beta_schedule(int t, int steps, double beta1, double beta2) {
  return beta1 + (static_cast<double>(t) / static_cast<double>(steps)) * (beta2 - beta1);
}

namespace {

inline Spin sign_of(double v) { return v >= 0.0 ? Spin{1} : Spin{-1}; }

}  // namespace

CacmState init_state(const IsingInstance& instance, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(instance.n_spins());
  Rng rng(seed);
  CacmState state;
  state.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.x[i] = rng.uniform(-0.1, 0.1);
  state.x_prev = state.x;
  state.x_prev2 = state.x;
  state.e.assign(n, 1.0);
  state.best_spins.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.best_spins[i] = sign_of(state.x[i]);
  state.best_energy = energy(instance, state.best_spins);
  return state;
}

namespace {

void step_impl(CacmState& state, const IsingInstance& instance, const CacmParams& params,
               std::vector<double>& mu, SpinConfig& s) {
  const std::size_t n = static_cast<std::size_t>(instance.n_spins());
  if (state.x.size() != n) throw std::invalid_argument("cacm_step: state/instance size mismatch");
  const std::vector<double>& w = instance.couplings();
  mu.resize(n);
  s.resize(n);

  const double beta = beta_schedule(state.t_index, params.steps, params.beta1, params.beta2);

  state.x_prev2.swap(state.x_prev);  // xpp <- xp
  state.x_prev.swap(state.x);       // xp <- x; state.x now holds scratch
  const std::vector<double>& xp = state.x_prev;
  const std::vector<double>& xpp = state.x_prev2;

  // mu = w @ tanh(xp)
  std::vector<double>& y = state.x;  // tanh buffer; overwritten by the x-update below
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(xp[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const double* wi = w.data() + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wi[j] * y[j];
    mu[i] = acc;
  }

  for (std::size_t i = 0; i < n; ++i)
    state.x[i] =
        xp[i] + params.dt * (-beta * xp[i] + params.alpha * state.e[i] * mu[i] +
                             params.gamma * (xp[i] - xpp[i]));

  // e <- e - (xp^2 - 1) e xi, clamped positive, then renormalized to mean 1
  double sum_e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = state.e[i] - (xp[i] * xp[i] - 1.0) * state.e[i] * params.xi;
    e = std::max(e, kErrorFloor);
    state.e[i] = e;
    sum_e += e;
  }
  const double mean_e = sum_e / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) state.e[i] /= mean_e;

  for (std::size_t i = 0; i < n; ++i) s[i] = sign_of(state.x[i]);
  const double h = energy(instance, s);
  if (h < state.best_energy) {
    state.best_energy = h;
    state.best_spins = s;
  }
  ++state.t_index;

  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(state.x[i]) || !std::isfinite(state.e[i])) {
      state.diverged = true;
      break;
    }
}

}  // namespace

void cacm_step(CacmState& state, const IsingInstance& instance, const CacmParams& params) {
  std::vector<double> mu;
  SpinConfig s;
  step_impl(state, instance, params, mu, s);
}

RunResult cacm_run(const IsingInstance& instance, const CacmParams& params, std::uint64_t seed,
                   double rel_tol) {
  params.validate();
  CacmState state = init_state(instance, seed);

  RunResult result;
  std::optional<int> first_hit;
  if (is_ground_hit(instance, state.best_energy, rel_tol)) first_hit = 0;

  std::vector<double> mu;
  SpinConfig s;
  for (int t = 0; t < params.steps; ++t) {
    step_impl(state, instance, params, mu, s);
    if (state.diverged) {
      result.best_energy = state.best_energy;
      result.hit_ground = false;
      result.diverged = true;
      return result;
    }
    if (!first_hit && is_ground_hit(instance, state.best_energy, rel_tol))
      first_hit = state.t_index;
  }

  result.best_energy = state.best_energy;
  result.hit_ground = first_hit.has_value();
  result.steps_to_first_hit = first_hit;
  return result;
}

EvalResult evaluate(const IsingInstance& instance, const CacmParams& params, int runs,
                    std::uint64_t master_seed, double rel_tol, int workers) {
  params.validate();
  if (runs < 1) throw std::invalid_argument("evaluate: runs must be >= 1");

  std::vector<RunResult> results(static_cast<std::size_t>(runs));
  auto run_range = [&](int begin, int end) {
    for (int r = begin; r < end; ++r)
      results[static_cast<std::size_t>(r)] =
          cacm_run(instance, params, derive_seed(master_seed, static_cast<std::uint64_t>(r)),
                   rel_tol);
  };

  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp(n_workers, 1, runs);
  if (n_workers == 1) {
    run_range(0, runs);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    const int chunk = (runs + n_workers - 1) / n_workers;
    for (int t = 0; t < n_workers; ++t) {
      const int begin = t * chunk;
      const int end = std::min(runs, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  // sequential reduction in run order keeps the result worker-count independent
  EvalResult eval;
  eval.runs = runs;
  int hits = 0;
  double energy_sum = 0.0;
  for (const RunResult& r : results) {
    hits += r.hit_ground ? 1 : 0;
    eval.diverged_runs += r.diverged ? 1 : 0;
    energy_sum += r.best_energy;
  }
  eval.p0 = static_cast<double>(hits) / static_cast<double>(runs);
  eval.tts = tts(eval.p0, params.steps);
  eval.mean_best_energy = energy_sum / static_cast<double>(runs);
  return eval;
}

double tts(double p0, int steps) {
  if (steps < 1) throw std::invalid_argument("tts: steps must be >= 1");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("tts: p0 must be in [0, 1]");
  if (p0 == 0.0) return kInf;
  if (p0 >= 0.99) return static_cast<double>(steps);
  return static_cast<double>(steps) * std::log(0.01) / std::log1p(-p0);
}

}  // namespace cacmtune
