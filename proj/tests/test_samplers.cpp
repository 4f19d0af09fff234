#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cacmtune/rng.hpp"
#include "cacmtune/samplers.hpp"

using namespace cacmtune;

namespace {

SearchSpace one_d(double low = 0.0, double high = 2.0, const std::string& name = "x") {
  SearchSpace s;
  s.ranges = {{name, low, high}};
  return s;
}

SearchSpace five_d() {
  SearchSpace s;
  s.ranges = {{"beta1", 0.0, 2.0},
              {"beta2", 0.0, 2.0},
              {"alpha", 0.0, 0.3},
              {"gamma", 0.0, 2.0},
              {"xi", 0.0, 0.3}};
  return s;
}

constexpr SamplerKind kAllKinds[] = {SamplerKind::random, SamplerKind::grid, SamplerKind::tpe,
                                     SamplerKind::gp, SamplerKind::cmaes};

double best_1d(Sampler& sampler, int rounds, double target) {
  double best_x = 0.0, best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rounds; ++i) {
    const std::vector<double> p = sampler.ask();
    const double v = (p[0] - target) * (p[0] - target);
    sampler.tell(p, v);
    if (v < best_v) {
      best_v = v;
      best_x = p[0];
    }
  }
  return best_x;
}

}  // namespace

TEST_CASE("grid lattice matches the inclusive-endpoint linspace") {
  const auto points = grid_points(one_d(), 5);
  REQUIRE(points.size() == 5);
  const double expected[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (int i = 0; i < 5; ++i) CHECK(points[i][0] == expected[i]);
}

TEST_CASE("a one-point grid is the midpoint") {
  const auto points = grid_points(one_d(0.4, 1.0), 1);
  REQUIRE(points.size() == 1);
  CHECK(points[0][0] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("five-dimensional grid enumerates lexicographically and truncates") {
  const SearchSpace space = five_d();
  const auto points = grid_points(space, 100);
  REQUIRE(points.size() == 100);

  // independent odometer oracle with k = 3 levels per dimension
  auto oracle = [&](long index) {
    std::vector<double> p(5);
    long rest = index;
    for (int j = 4; j >= 0; --j) {
      const long digit = rest % 3;
      rest /= 3;
      const ParamRange& r = space.ranges[static_cast<std::size_t>(j)];
      p[static_cast<std::size_t>(j)] = r.low + (r.high - r.low) * (static_cast<double>(digit) / 2.0);
    }
    return p;
  };
  for (long i : {0L, 1L, 2L, 3L, 42L, 99L}) {
    const auto expect = oracle(i);
    for (int j = 0; j < 5; ++j)
      CHECK(points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
            doctest::Approx(expect[static_cast<std::size_t>(j)]).epsilon(1e-15));
  }
  // points 0..2 differ only in the last (fastest) dimension
  CHECK(points[0][4] == 0.0);
  CHECK(points[1][4] == doctest::Approx(0.15));
  CHECK(points[2][4] == 0.3);
  CHECK(points[0][0] == points[2][0]);
}

TEST_CASE("per-dimension grid size is the minimal covering count") {
  CHECK(grid_points(one_d(), 7).size() == 7);                 // k = 7 in 1-D
  const SearchSpace d3{{{"a", 0, 1}, {"b", 0, 1}, {"c", 0, 1}}};
  CHECK(grid_points(d3, 8)[7][0] == 1.0);   // k = 2: last point of the full lattice
  CHECK(grid_points(d3, 9)[8][0] == 0.0);   // k = 3: enumeration continues
}

TEST_CASE("best_of picks the minimum with id tie-break and infinity ordering") {
  std::vector<TrialRecord> history;
  history.push_back({0, {0.0}, 3.0, SamplerKind::random, ""});
  history.push_back({1, {0.1}, 1.0, SamplerKind::random, ""});
  history.push_back({2, {0.2}, 2.0, SamplerKind::random, ""});
  CHECK(best_of(history).trial_id == 1);

  std::vector<TrialRecord> ties;
  ties.push_back({0, {0.0}, 1.0, SamplerKind::random, ""});
  ties.push_back({1, {0.1}, 1.0, SamplerKind::random, ""});
  CHECK(best_of(ties).trial_id == 0);

  std::vector<TrialRecord> inf_first;
  inf_first.push_back({0, {0.0}, std::numeric_limits<double>::infinity(), SamplerKind::random, ""});
  inf_first.push_back({1, {0.1}, 5.0, SamplerKind::random, ""});
  CHECK(best_of(inf_first).trial_id == 1);

  CHECK_THROWS_AS(best_of({}), std::invalid_argument);
}

TEST_CASE("ask/tell protocol is strictly alternating") {
  auto sampler = make_sampler(SamplerKind::random, one_d(), 1, 10);
  const auto p = sampler->ask();
  CHECK_THROWS_AS(sampler->ask(), std::logic_error);
  CHECK_THROWS_AS(sampler->tell({p[0] + 0.125}, 1.0), std::invalid_argument);
  sampler->tell(p, 1.0);
  CHECK_THROWS_AS(sampler->tell(p, 1.0), std::logic_error);
}

TEST_CASE("observation validation") {
  auto sampler = make_sampler(SamplerKind::tpe, one_d(), 1, 10);
  const auto p = sampler->ask();
  CHECK_THROWS_AS(sampler->tell(p, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(sampler->tell(p, -std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  sampler->tell(p, std::numeric_limits<double>::infinity());  // +inf is a valid outcome
  CHECK(sampler->history().size() == 1);

  CHECK_THROWS_AS(sampler->inject({5.0}, 1.0), std::invalid_argument);  // outside the box
  sampler->inject({1.0}, 2.0);
  CHECK(sampler->history().size() == 2);
}

TEST_CASE("every asked point stays inside the box for every kind") {
  Rng meta_rng(2024);
  int asks_checked = 0;
  while (asks_checked < 1000) {
    // random box of dimension 1..5
    const std::size_t d = 1 + meta_rng.index(5);
    SearchSpace space;
    for (std::size_t j = 0; j < d; ++j) {
      const double low = meta_rng.uniform(-3.0, 3.0);
      space.ranges.push_back({"p" + std::to_string(j), low, low + meta_rng.uniform(0.1, 4.0)});
    }
    for (SamplerKind kind : kAllKinds) {
      auto sampler = make_sampler(kind, space, meta_rng.bits(), 12);
      for (int i = 0; i < 14; ++i) {
        const auto p = sampler->ask();
        REQUIRE(p.size() == d);
        for (std::size_t j = 0; j < d; ++j) {
          CHECK(p[j] >= space.ranges[j].low);
          CHECK(p[j] <= space.ranges[j].high);
        }
        // diverged-style outcomes now and then
        const double value =
            meta_rng.uniform() < 0.2 ? std::numeric_limits<double>::infinity()
                                     : meta_rng.uniform(-5.0, 50.0);
        sampler->tell(p, value);
        ++asks_checked;
      }
    }
  }
}

TEST_CASE("identical seed and tell sequence reproduce the ask sequence") {
  for (SamplerKind kind : kAllKinds) {
    auto a = make_sampler(kind, five_d(), 77, 40);
    auto b = make_sampler(kind, five_d(), 77, 40);
    Rng values(5);
    for (int i = 0; i < 40; ++i) {
      const auto pa = a->ask();
      const auto pb = b->ask();
      CHECK(pa == pb);
      const double v = values.uniform() < 0.15 ? std::numeric_limits<double>::infinity()
                                               : values.uniform(0.0, 10.0);
      a->tell(pa, v);
      b->tell(pb, v);
    }
  }
}

TEST_CASE("tpe startup asks are uniform over the box") {
  // distributional bounds over many seeds: first ask after 9 tells
  double sum = 0.0;
  double lo = 2.0, hi = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    auto sampler = make_sampler(SamplerKind::tpe, one_d(), static_cast<std::uint64_t>(s), 30);
    for (int i = 0; i < 9; ++i) {
      const auto p = sampler->ask();
      sampler->tell(p, 1.0 + p[0]);  // informative values must not matter yet
    }
    const auto p = sampler->ask();
    sum += p[0];
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  const double mean = sum / seeds;
  CHECK(std::abs(mean - 1.0) < 0.08);  // mean of U[0,2] within ~4 sigma
  CHECK(lo < 0.2);
  CHECK(hi > 1.8);
}

TEST_CASE("tpe concentrates after startup") {
  auto sampler = make_sampler(SamplerKind::tpe, one_d(), 4, 60);
  const double best = best_1d(*sampler, 60, 1.3);
  CHECK(std::abs(best - 1.3) < 0.1);
}

TEST_CASE("infinite objective values never corrupt sampler internals") {
  for (SamplerKind kind : kAllKinds) {
    auto sampler = make_sampler(kind, five_d(), 9, 30);
    for (int i = 0; i < 30; ++i) {
      const auto p = sampler->ask();
      for (double v : p) REQUIRE(std::isfinite(v));
      sampler->tell(p, std::numeric_limits<double>::infinity());
    }
    const auto p = sampler->ask();
    for (double v : p) CHECK(std::isfinite(v));
    CHECK(five_d().contains(p));
  }
}

TEST_CASE("cmaes closes in on a 1-D quadratic minimum") {
  auto sampler = make_sampler(SamplerKind::cmaes, one_d(), 12, 60);
  const double best = best_1d(*sampler, 60, 1.3);
  CHECK(std::abs(best - 1.3) < 0.05);
}

TEST_CASE("cmaes accepts an initial mean") {
  auto sampler = make_sampler(SamplerKind::cmaes, one_d(), 3, 20, std::vector<double>{1.3});
  double sum = 0.0;
  const int lambda_first = 4;
  for (int i = 0; i < lambda_first; ++i) {
    const auto p = sampler->ask();
    sum += p[0];
    sampler->tell(p, 0.0);
  }
  CHECK(std::abs(sum / lambda_first - 1.3) < 0.6);  // sigma = 0.3 of range around the seed
  CHECK_THROWS_AS(make_sampler(SamplerKind::cmaes, one_d(), 3, 20, std::vector<double>{5.0}),
                  std::invalid_argument);
}

TEST_CASE("grid sampler walks the lattice then restarts with jitter") {
  auto sampler = make_sampler(SamplerKind::grid, one_d(), 8, 5);
  const double lattice[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (double expected : lattice) {
    const auto p = sampler->ask();
    CHECK(p[0] == expected);
    sampler->tell(p, 1.0);
  }
  for (int i = 0; i < 5; ++i) {
    const auto p = sampler->ask();
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 2.0);
    CHECK(std::abs(p[0] - lattice[i]) <= 0.25 + 1e-12);  // half a cell of jitter
    sampler->tell(p, 1.0);
  }
}

// independent GP-EI oracle on three observations, solved with explicit
// 3x3 linear algebra (Cramer's rule), compared against the implementation
namespace {

struct OracleGp {
  double x[3];
  double z[3];
  double kinv[3][3];
  double zbest;

  static double kernel(double a, double b) {
    const double dz = (a - b) / 0.2;
    return std::exp(-0.5 * dz * dz);
  }

  OracleGp(const double xs[3], const double ys[3]) {
    double mean = (ys[0] + ys[1] + ys[2]) / 3.0;
    double var = 0.0;
    for (int i = 0; i < 3; ++i) var += (ys[i] - mean) * (ys[i] - mean);
    var /= 3.0;
    const double scale = std::sqrt(std::max(var, 1e-12));
    for (int i = 0; i < 3; ++i) {
      x[i] = xs[i];
      z[i] = (ys[i] - mean) / scale;
    }
    zbest = *std::min_element(z, z + 3);

    double k[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k[i][j] = kernel(x[i], x[j]) + (i == j ? 1e-6 : 0.0);
    const double det = k[0][0] * (k[1][1] * k[2][2] - k[1][2] * k[2][1]) -
                       k[0][1] * (k[1][0] * k[2][2] - k[1][2] * k[2][0]) +
                       k[0][2] * (k[1][0] * k[2][1] - k[1][1] * k[2][0]);
    const double adj[3][3] = {
        {k[1][1] * k[2][2] - k[1][2] * k[2][1], k[0][2] * k[2][1] - k[0][1] * k[2][2],
         k[0][1] * k[1][2] - k[0][2] * k[1][1]},
        {k[1][2] * k[2][0] - k[1][0] * k[2][2], k[0][0] * k[2][2] - k[0][2] * k[2][0],
         k[0][2] * k[1][0] - k[0][0] * k[1][2]},
        {k[1][0] * k[2][1] - k[1][1] * k[2][0], k[0][1] * k[2][0] - k[0][0] * k[2][1],
         k[0][0] * k[1][1] - k[0][1] * k[1][0]}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) kinv[i][j] = adj[i][j] / det;
  }

  double ei(double q) const {
    double kv[3];
    for (int i = 0; i < 3; ++i) kv[i] = kernel(q, x[i]);
    double mu = 0.0, kKk = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        mu += kv[i] * kinv[i][j] * z[j];
        kKk += kv[i] * kinv[i][j] * kv[j];
      }
    const double s2 = std::max(1.0 - kKk, 0.0);
    const double s = std::sqrt(s2);
    const double imp = zbest - mu;
    if (s < 1e-12) return std::max(imp, 0.0);
    const double t = imp / s;
    const double cdf = 0.5 * std::erfc(-t / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
    return imp * cdf + s * pdf;
  }
};

}  // namespace

TEST_CASE("gp expected improvement matches an independent oracle") {
  // observations (0,1), (1,0), (2,1) on [0,2], scaled to the unit interval
  const double xs[3] = {0.0, 0.5, 1.0};
  const double ys[3] = {1.0, 0.0, 1.0};
  const OracleGp oracle(xs, ys);

  const std::vector<std::vector<double>> unit = {{0.0}, {0.5}, {1.0}};
  const std::vector<double> values = {1.0, 0.0, 1.0};
  const detail::GpModel model = detail::gp_fit(unit, values);
  REQUIRE(model.ok);

  double oracle_best_q = 0.0, oracle_best_ei = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double q = i / 2000.0;
    const double expected = oracle.ei(q);
    const double got = detail::gp_expected_improvement(model, {q});
    CHECK(got == doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    if (expected > oracle_best_ei) {
      oracle_best_ei = expected;
      oracle_best_q = q;
    }
  }
  // the acquisition peaks strictly inside the box, in the incumbent basin
  CHECK(oracle_best_q > 0.05);
  CHECK(oracle_best_q < 0.95);
  CHECK(std::abs(oracle_best_q - 0.5) < 0.25);
}

TEST_CASE("gp ask proposes inside the incumbent basin once fitted") {
  auto sampler = make_sampler(SamplerKind::gp, one_d(), 6, 30);
  const double xs[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (double x : xs) sampler->inject({x}, (x - 1.0) * (x - 1.0));
  const auto p = sampler->ask();
  CHECK(p[0] > 0.0);
  CHECK(p[0] < 2.0);
  CHECK(std::abs(p[0] - 1.0) < 0.5);
}

TEST_CASE("gp converges on the 1-D quadratic") {
  auto sampler = make_sampler(SamplerKind::gp, one_d(), 15, 60);
  const double best = best_1d(*sampler, 60, 1.3);
  CHECK(std::abs(best - 1.3) < 0.1);
}

TEST_CASE("all kinds reach five percent accuracy in median, none worse than random") {
  const double target = 1.3;
  const double range = 2.0;
  std::vector<double> random_errors;
  for (SamplerKind kind : kAllKinds) {
    std::vector<double> errors;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto sampler = make_sampler(kind, one_d(), seed, 60);
      errors.push_back(std::abs(best_1d(*sampler, 60, target) - target));
    }
    std::sort(errors.begin(), errors.end());
    const double median = 0.5 * (errors[4] + errors[5]);
    CAPTURE(to_string(kind));
    CHECK(median <= 0.05 * range);
    if (kind == SamplerKind::random) random_errors = errors;
    if (kind == SamplerKind::tpe || kind == SamplerKind::gp || kind == SamplerKind::cmaes) {
      const double random_median = 0.5 * (random_errors[4] + random_errors[5]);
      CHECK(median <= random_median + 1e-12);
    }
  }
}

TEST_CASE("symmetric eigensolver agrees with hand-computed spectra") {
  // [[2,1],[1,2]] has eigenvalues 1 and 3
  std::vector<double> vals, vecs;
  detail::sym_eigen({2.0, 1.0, 1.0, 2.0}, 2, vals, vecs);
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sorted[1] == doctest::Approx(3.0).epsilon(1e-12));

  // reconstruction A = V diag(vals) V^T
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 2; ++k) acc += vecs[i * 2 + k] * vals[k] * vecs[j * 2 + k];
      const double expected = (i == j) ? 2.0 : 1.0;
      CHECK(acc == doctest::Approx(expected).epsilon(1e-10));
    }

  // orthogonality on a 4x4 case
  const std::vector<double> a4 = {4, 1, 0.5, 0,   1, 3, 1, 0.25, 0.5, 1,
                                  2, 1, 0,   0.25, 1, 5};
  detail::sym_eigen(a4, 4, vals, vecs);
  for (int c1 = 0; c1 < 4; ++c1)
    for (int c2 = 0; c2 < 4; ++c2) {
      double dot = 0.0;
      for (int r = 0; r < 4; ++r) dot += vecs[r * 4 + c1] * vecs[r * 4 + c2];
      CHECK(std::abs(dot - (c1 == c2 ? 1.0 : 0.0)) <= 1e-9);
    }
}

TEST_CASE("portfolio assignment routes by name with a default") {
  PortfolioAssignment assignment;
  assignment.default_kind = SamplerKind::tpe;
  assignment.overrides["alpha"] = SamplerKind::cmaes;
  CHECK(assignment.kind_for("alpha") == SamplerKind::cmaes);
  CHECK(assignment.kind_for("beta1") == SamplerKind::tpe);
  assignment.validate(five_d());
  assignment.overrides["nope"] = SamplerKind::grid;
  CHECK_THROWS_AS(assignment.validate(five_d()), std::invalid_argument);
}

TEST_CASE("search space validation") {
  SearchSpace empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  SearchSpace bad{{{"x", 1.0, 1.0}}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SearchSpace dup{{{"x", 0.0, 1.0}, {"x", 0.0, 1.0}}};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  SearchSpace six{{{"a", 0, 1}, {"b", 0, 1}, {"c", 0, 1}, {"d", 0, 1}, {"e", 0, 1}, {"f", 0, 1}}};
  CHECK_THROWS_AS(six.validate(), std::invalid_argument);
}

TEST_CASE("sampler kind names round-trip") {
  for (SamplerKind kind : kAllKinds) CHECK(sampler_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(sampler_kind_from_string("sobol"), std::invalid_argument);
}
