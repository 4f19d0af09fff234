#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cacmtune/cacm.hpp"
#include "cacmtune/rng.hpp"

using namespace cacmtune;

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

IsingInstance test_instance(int n = 12, int m = 8, std::uint64_t seed = 7,
                            PlantedChoice planted = PlantedChoice::all_ones) {
  return generate_wishart({n, m, seed, planted});
}

}  // namespace

TEST_CASE("beta schedule is the linear ramp of the pseudocode") {
  CHECK(beta_schedule(0, 1000, 0.4, 1.6) == 0.4);
  CHECK(beta_schedule(500, 1000, 1.0, 2.0) == 1.5);
  CHECK(beta_schedule(123, 456, 1.185, 1.185) == 1.185);
}

TEST_CASE("initial state is seeded, bounded and has unit error variables") {
  const IsingInstance inst = test_instance();
  const CacmState a = init_state(inst, 5);
  const CacmState b = init_state(inst, 5);
  CHECK(a.x == b.x);
  CHECK(a.x_prev == a.x);
  CHECK(a.x_prev2 == a.x);
  for (double v : a.x) {
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
  CHECK(mean(a.e) == 1.0);
  CHECK(init_state(inst, 6).x != a.x);
}

TEST_CASE("single decoupled spin stays at zero energy") {
  const IsingInstance inst(1, {0.0}, {1}, 0.0, {});
  CacmState state = init_state(inst, 1);
  CacmParams params;
  params.steps = 50;
  for (int t = 0; t < 50; ++t) cacm_step(state, inst, params);
  CHECK(state.best_energy == 0.0);
  CHECK_FALSE(state.diverged);
}

TEST_CASE("one hand-evaluated step of the update rule") {
  // alpha = gamma = xi = 0, beta = 1, dt = 0.5: x' = x/2, e unchanged
  const IsingInstance inst(3, std::vector<double>(9, 0.0), {1, 1, 1}, 0.0, {});
  CacmState state = init_state(inst, 1);
  state.x = {0.2, 0.2, 0.2};
  state.x_prev = state.x;
  state.x_prev2 = state.x;
  CacmParams params;
  params.steps = 10;
  params.beta1 = params.beta2 = 1.0;
  params.alpha = 0.0;
  params.gamma = 0.0;
  params.xi = 0.0;
  params.dt = 0.5;
  cacm_step(state, inst, params);
  for (double v : state.x) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
  for (double v : state.e) CHECK(v == 1.0);
  CHECK(state.t_index == 1);
}

TEST_CASE("error variables renormalize to mean one at every step") {
  const IsingInstance inst = test_instance();
  CacmState state = init_state(inst, 9);
  const CacmParams params;  // defaults, steps=1000
  for (int t = 0; t < 1000; ++t) {
    cacm_step(state, inst, params);
    REQUIRE_FALSE(state.diverged);
    CHECK(std::abs(mean(state.e) - 1.0) < 1e-9);
    for (double e : state.e) CHECK(e >= kErrorFloor);
  }
}

TEST_CASE("best energy is monotone non-increasing along a run") {
  const IsingInstance inst = test_instance();
  CacmState state = init_state(inst, 4);
  const CacmParams params;
  double previous = state.best_energy;
  for (int t = 0; t < 300; ++t) {
    cacm_step(state, inst, params);
    CHECK(state.best_energy <= previous);
    previous = state.best_energy;
  }
}

TEST_CASE("runs are deterministic") {
  const IsingInstance inst = test_instance();
  const CacmParams params;
  const RunResult a = cacm_run(inst, params, 17);
  const RunResult b = cacm_run(inst, params, 17);
  CHECK(a.best_energy == b.best_energy);
  CHECK(a.hit_ground == b.hit_ground);
  CHECK(a.steps_to_first_hit == b.steps_to_first_hit);
  CHECK(a.diverged == b.diverged);
}

TEST_CASE("small planted instances are solved within a few hundred seeds") {
  const IsingInstance inst = test_instance(12, 8, 7, PlantedChoice::random);
  const CacmParams params;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RunResult r = cacm_run(inst, params, seed);
    if (r.hit_ground) {
      ++hits;
      CHECK(r.best_energy <= inst.ground_energy() + 1e-6 * std::abs(inst.ground_energy()));
      CHECK(r.steps_to_first_hit.has_value());
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("trajectories are odd in the initial amplitudes") {
  const IsingInstance inst = test_instance(8, 6, 3, PlantedChoice::random);
  CacmState a = init_state(inst, 21);
  CacmState b = a;
  for (auto& v : b.x) v = -v;
  b.x_prev = b.x;
  b.x_prev2 = b.x;
  // flipping every amplitude flips best_spins but not its energy
  for (auto& s : b.best_spins) s = static_cast<Spin>(-s);

  CacmParams params;
  params.steps = 1000;
  for (int t = 0; t < 1000; ++t) {
    cacm_step(a, inst, params);
    cacm_step(b, inst, params);
    REQUIRE_FALSE(a.diverged);
    for (std::size_t i = 0; i < a.x.size(); ++i)
      CHECK(std::abs(a.x[i] + b.x[i]) <= 1e-12 * std::max(1.0, std::abs(a.x[i])));
    CHECK(std::abs(a.best_energy - b.best_energy) <= 1e-12 * std::abs(a.best_energy));
  }
}

TEST_CASE("wild parameters diverge into a flagged non-hit") {
  const IsingInstance inst = test_instance();
  CacmParams params;
  params.steps = 1000;
  params.beta1 = params.beta2 = 2.0;
  params.alpha = 0.0;
  params.gamma = 2.0;
  params.xi = 0.0;
  params.dt = 5.0;  // x_{t+1} = x_t - 10 x_{t-1}, explosive oscillation
  const RunResult r = cacm_run(inst, params, 5);
  CHECK(r.diverged);
  CHECK_FALSE(r.hit_ground);
  CHECK_FALSE(r.steps_to_first_hit.has_value());
}

TEST_CASE("evaluate aggregates runs and is worker-count independent") {
  const IsingInstance inst = test_instance(12, 8, 7, PlantedChoice::random);
  CacmParams params;
  params.steps = 300;
  const EvalResult serial = evaluate(inst, params, 40, 99, kGroundRelTol, 1);
  const EvalResult threaded = evaluate(inst, params, 40, 99, kGroundRelTol, 4);
  CHECK(serial.p0 == threaded.p0);
  CHECK(serial.tts == threaded.tts);
  CHECK(serial.mean_best_energy == threaded.mean_best_energy);
  CHECK(serial.diverged_runs == threaded.diverged_runs);

  CHECK(serial.runs == 40);
  const double scaled = serial.p0 * 40.0;
  CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
  if (serial.p0 > 0.0 && serial.p0 < 0.99)
    CHECK(serial.tts ==
          doctest::Approx(300.0 * std::log(0.01) / std::log1p(-serial.p0)).epsilon(1e-12));
}

TEST_CASE("evaluate propagates the divergence sentinel") {
  const IsingInstance inst = test_instance();
  CacmParams params;
  params.steps = 800;
  params.beta1 = params.beta2 = 2.0;
  params.alpha = 0.0;
  params.gamma = 2.0;
  params.xi = 0.0;
  params.dt = 5.0;
  const EvalResult r = evaluate(inst, params, 10, 1);
  CHECK(r.diverged_runs == 10);
  CHECK(r.p0 == 0.0);
  CHECK(std::isinf(r.tts));
}

TEST_CASE("time-to-solution formula") {
  CHECK(tts(0.99, 1000) == 1000.0);
  CHECK(tts(0.995, 1000) == 1000.0);
  CHECK(tts(1.0, 1000) == 1000.0);
  CHECK(std::isinf(tts(0.0, 1000)));
  CHECK(tts(0.5, 1000) == doctest::Approx(6643.856189774725).epsilon(1e-12));
  CHECK(tts(0.54, 1000) == doctest::Approx(5930.45647278483).epsilon(1e-9));
  CHECK_THROWS_AS(tts(-0.1, 1000), std::invalid_argument);
  CHECK_THROWS_AS(tts(1.5, 1000), std::invalid_argument);

  double previous = tts(1e-4, 1000);
  for (int i = 1; i <= 99; ++i) {
    const double current = tts(0.01 * i, 1000);
    CHECK(current < previous);
    previous = current;
  }
}

TEST_CASE("parameter validation") {
  CacmParams params;
  params.steps = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.steps = 10;
  params.dt = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.dt = 0.5;
  params.alpha = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
