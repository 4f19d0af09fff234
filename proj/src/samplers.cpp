#include "cacmtune/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cacmtune/rng.hpp"

namespace cacmtune {

namespace {

constexpr double kInfVal = std::numeric_limits<double>::infinity();

// TPE recipe constants
constexpr std::size_t kTpeStartup = 10;
constexpr double kTpeGoodFraction = 0.25;
constexpr int kTpeCandidates = 24;

// GP-EI recipe constants
constexpr std::size_t kGpStartup = 5;
constexpr double kGpLengthScale = 0.2;
constexpr double kGpNoise = 1e-6;
constexpr double kGpVarianceFloor = 1e-12;
constexpr int kGpCandidates = 1024;

}  // namespace

void SearchSpace::validate() const {
  if (ranges.empty() || ranges.size() > 5)
    throw std::invalid_argument("SearchSpace: dimension must be 1..5");
  for (const ParamRange& r : ranges) {
    if (!std::isfinite(r.low) || !std::isfinite(r.high) || !(r.low < r.high))
      throw std::invalid_argument("SearchSpace: range '" + r.name + "' needs finite low < high");
    for (const ParamRange& other : ranges)
      if (&other != &r && other.name == r.name)
        throw std::invalid_argument("SearchSpace: duplicate parameter name '" + r.name + "'");
  }
}

bool SearchSpace::contains(const std::vector<double>& point) const {
  if (point.size() != ranges.size()) return false;
  for (std::size_t j = 0; j < ranges.size(); ++j)
    if (!(point[j] >= ranges[j].low && point[j] <= ranges[j].high)) return false;
  return true;
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::random: return "random";
    case SamplerKind::grid: return "grid";
    case SamplerKind::tpe: return "tpe";
    case SamplerKind::gp: return "gp";
    case SamplerKind::cmaes: return "cmaes";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "random") return SamplerKind::random;
  if (name == "grid") return SamplerKind::grid;
  if (name == "tpe") return SamplerKind::tpe;
  if (name == "gp") return SamplerKind::gp;
  if (name == "cmaes" || name == "cma-es") return SamplerKind::cmaes;
  throw std::invalid_argument("unknown sampler kind: " + name);
}

const TrialRecord& best_of(const std::vector<TrialRecord>& history) {
  if (history.empty()) throw std::invalid_argument("best_of: empty history");
  const TrialRecord* best = &history.front();
  for (const TrialRecord& r : history)
    if (r.value < best->value || (r.value == best->value && r.trial_id < best->trial_id))
      best = &r;
  return *best;
}

namespace {

long per_dim_count(long budget, std::size_t d) {
  auto lattice_size = [&](long k) {
    long double p = 1.0L;
    for (std::size_t j = 0; j < d; ++j) p *= static_cast<long double>(k);
    return p;
  };
  long k = std::lround(std::ceil(std::pow(static_cast<double>(budget),
                                          1.0 / static_cast<double>(d))));
  k = std::max<long>(k, 1);
  while (k > 1 && lattice_size(k - 1) >= static_cast<long double>(budget)) --k;
  while (lattice_size(k) < static_cast<long double>(budget)) ++k;
  return k;
}

double lattice_coordinate(const ParamRange& r, long digit, long k) {
  if (k == 1) return 0.5 * (r.low + r.high);
  const double fraction = static_cast<double>(digit) / static_cast<double>(k - 1);
  return std::clamp(r.low + (r.high - r.low) * fraction, r.low, r.high);
}

}  // namespace

std::vector<std::vector<double>> grid_points(const SearchSpace& space, long budget) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("grid_points: budget must be >= 1");
  const std::size_t d = space.dimension();
  const long k = per_dim_count(budget, d);

  std::vector<std::vector<double>> points;
  points.reserve(static_cast<std::size_t>(budget));
  std::vector<long> digits(d, 0);
  for (long t = 0; t < budget; ++t) {
    std::vector<double> p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = lattice_coordinate(space.ranges[j], digits[j], k);
    points.push_back(std::move(p));
    // odometer with the last dimension fastest
    for (std::size_t j = d; j-- > 0;) {
      if (++digits[j] < k) break;
      digits[j] = 0;
    }
  }
  return points;
}

Sampler::Sampler(SamplerKind kind, SearchSpace space) : kind_(kind), space_(std::move(space)) {}

std::vector<double> Sampler::ask() {
  if (pending_) throw std::logic_error("Sampler::ask: outstanding candidate has not been told");
  std::vector<double> point = do_ask();
  pending_ = point;
  return point;
}

void Sampler::record(const std::vector<double>& point, double value) {
  history_.push_back({static_cast<long>(history_.size()), point, value, kind_, ""});
}

namespace {

void check_observation(const SearchSpace& space, const std::vector<double>& point, double value) {
  if (point.size() != space.dimension())
    throw std::invalid_argument("Sampler: observation has wrong dimension");
  for (double v : point)
    if (!std::isfinite(v)) throw std::invalid_argument("Sampler: non-finite point rejected");
  if (std::isnan(value) || value == -kInfVal)
    throw std::invalid_argument("Sampler: value must be finite or +infinity");
}

}  // namespace

void Sampler::tell(const std::vector<double>& point, double value) {
  if (!pending_) throw std::logic_error("Sampler::tell: no outstanding ask");
  check_observation(space_, point, value);
  if (point != *pending_)
    throw std::invalid_argument("Sampler::tell: point does not match the outstanding ask");
  record(point, value);
  do_tell(point, value);
  pending_.reset();
}

void Sampler::inject(const std::vector<double>& point, double value) {
  if (pending_) throw std::logic_error("Sampler::inject: outstanding ask must be told first");
  check_observation(space_, point, value);
  if (!space_.contains(point))
    throw std::invalid_argument("Sampler::inject: point outside the search space");
  record(point, value);
  do_inject(point, value);
}

// ---------------------------------------------------------------------------
// random

namespace {

class RandomSampler final : public Sampler {
 public:
  RandomSampler(SearchSpace space, std::uint64_t seed)
      : Sampler(SamplerKind::random, std::move(space)), rng_(seed) {}

  std::vector<double> do_ask() override {
    std::vector<double> p(space_.dimension());
    for (std::size_t j = 0; j < p.size(); ++j)
      p[j] = rng_.uniform(space_.ranges[j].low, space_.ranges[j].high);
    return p;
  }

 private:
  Rng rng_;
};

// ---------------------------------------------------------------------------
// grid

class GridSampler final : public Sampler {
 public:
  GridSampler(SearchSpace space, std::uint64_t seed, long budget_hint)
      : Sampler(SamplerKind::grid, std::move(space)),
        rng_(seed),
        lattice_(grid_points(space_, budget_hint)),
        per_dim_(per_dim_count(budget_hint, space_.dimension())) {}

  std::vector<double> do_ask() override {
    const std::size_t i = ask_count_++;
    if (i < lattice_.size()) return lattice_[i];
    // lattice exhausted: re-enumerate with uniform jitter of half a cell
    std::vector<double> p = lattice_[i % lattice_.size()];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const ParamRange& r = space_.ranges[j];
      const double cell =
          per_dim_ > 1 ? (r.high - r.low) / static_cast<double>(per_dim_ - 1) : (r.high - r.low);
      p[j] = std::clamp(p[j] + rng_.uniform(-0.5 * cell, 0.5 * cell), r.low, r.high);
    }
    return p;
  }

 private:
  Rng rng_;
  std::vector<std::vector<double>> lattice_;
  long per_dim_;
  std::size_t ask_count_ = 0;
};

// ---------------------------------------------------------------------------
// TPE: independent one-dimensional Parzen estimators over a good/bad split

struct Parzen {
  std::vector<double> centers;  // sorted
  std::vector<double> widths;
  double low = 0.0, high = 1.0;
};

Parzen build_parzen(std::vector<double> centers, double low, double high) {
  std::sort(centers.begin(), centers.end());
  const std::size_t m = centers.size();
  const double range = high - low;
  // the floor keeps duplicate-heavy clusters from collapsing the kernels,
  // which would freeze the proposal distribution far from the optimum
  const double width_min = 1e-2 * range;

  Parzen p;
  p.low = low;
  p.high = high;
  p.widths.assign(m, range);
  if (m >= 2) {
    double mean = std::accumulate(centers.begin(), centers.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double c : centers) var += (c - mean) * (c - mean);
    var /= static_cast<double>(m);
    // Scott-style width for the edge kernels (and degenerate clusters)
    double scott = 1.06 * std::sqrt(var) * std::pow(static_cast<double>(m), -0.2);
    if (!(scott > 0.0)) scott = width_min;
    scott = std::clamp(scott, width_min, range);
    for (std::size_t i = 0; i < m; ++i) {
      double w;
      if (i == 0 || i + 1 == m) {
        w = scott;
      } else {
        // widest gap to a neighbouring kernel
        w = std::max(centers[i] - centers[i - 1], centers[i + 1] - centers[i]);
      }
      p.widths[i] = std::clamp(w, width_min, range);
    }
  }
  p.centers = std::move(centers);
  return p;
}

double parzen_log_density(const Parzen& p, double x) {
  const std::size_t m = p.centers.size();
  // log-sum-exp over Gaussian kernels with equal mixture weights
  double max_term = -kInfVal;
  std::vector<double> terms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double zscore = (x - p.centers[i]) / p.widths[i];
    terms[i] = -0.5 * zscore * zscore - std::log(p.widths[i]);
    max_term = std::max(max_term, terms[i]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc) - std::log(static_cast<double>(m)) -
         0.5 * std::log(2.0 * M_PI);
}

double parzen_sample(const Parzen& p, Rng& rng) {
  const std::size_t i = rng.index(p.centers.size());
  return std::clamp(p.centers[i] + p.widths[i] * rng.normal(), p.low, p.high);
}

class TpeSampler final : public Sampler {
 public:
  TpeSampler(SearchSpace space, std::uint64_t seed)
      : Sampler(SamplerKind::tpe, std::move(space)), rng_(seed) {}

  std::vector<double> do_ask() override {
    const std::size_t d = space_.dimension();
    if (history_.size() < kTpeStartup) return uniform_point();

    // rank finite observations; +infinity is always in the bad partition
    std::vector<std::size_t> finite;
    for (std::size_t i = 0; i < history_.size(); ++i)
      if (std::isfinite(history_[i].value)) finite.push_back(i);
    if (finite.empty()) return uniform_point();
    std::stable_sort(finite.begin(), finite.end(), [&](std::size_t a, std::size_t b) {
      return history_[a].value < history_[b].value;
    });

    const std::size_t n_good = std::min<std::size_t>(
        finite.size(),
        static_cast<std::size_t>(
            std::ceil(kTpeGoodFraction * static_cast<double>(history_.size()))));
    if (n_good == 0 || n_good == history_.size()) return uniform_point();

    std::vector<bool> is_good(history_.size(), false);
    for (std::size_t i = 0; i < n_good; ++i) is_good[finite[i]] = true;

    std::vector<Parzen> good(d), bad(d);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> good_c, bad_c;
      for (std::size_t i = 0; i < history_.size(); ++i)
        (is_good[i] ? good_c : bad_c).push_back(history_[i].point[j]);
      good[j] = build_parzen(std::move(good_c), space_.ranges[j].low, space_.ranges[j].high);
      bad[j] = build_parzen(std::move(bad_c), space_.ranges[j].low, space_.ranges[j].high);
    }

    std::vector<double> best_point;
    double best_score = -kInfVal;
    for (int c = 0; c < kTpeCandidates; ++c) {
      std::vector<double> cand(d);
      double score = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        cand[j] = parzen_sample(good[j], rng_);
        score += parzen_log_density(good[j], cand[j]) - parzen_log_density(bad[j], cand[j]);
      }
      if (score > best_score) {
        best_score = score;
        best_point = std::move(cand);
      }
    }
    return best_point;
  }

 private:
  std::vector<double> uniform_point() {
    std::vector<double> p(space_.dimension());
    for (std::size_t j = 0; j < p.size(); ++j)
      p[j] = rng_.uniform(space_.ranges[j].low, space_.ranges[j].high);
    return p;
  }

  Rng rng_;
};

}  // namespace

// ---------------------------------------------------------------------------
// GP with expected improvement

namespace detail {

namespace {

// kernel on min-max scaled inputs
double rbf(const std::vector<double>& a, const std::vector<double>& b) {
  double q = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double dz = (a[j] - b[j]) / kGpLengthScale;
    q += dz * dz;
  }
  return std::exp(-0.5 * q);
}

bool cholesky_in_place(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
  return true;
}

void forward_solve(const std::vector<double>& chol, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * b[k];
    b[i] = s / chol[i * n + i];
  }
}

void backward_solve(const std::vector<double>& chol, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= chol[k * n + i] * b[k];
    b[i] = s / chol[i * n + i];
  }
}

}  // namespace

GpModel gp_fit(const std::vector<std::vector<double>>& unit_points,
               const std::vector<double>& values) {
  GpModel model;
  const std::size_t m = unit_points.size();
  if (m == 0 || values.size() != m) return model;
  model.dim = unit_points.front().size();

  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return model;

  // +infinity observations enter the fit as a clearly-bad finite value
  const double worst = *std::max_element(finite.begin(), finite.end());
  double fmean = std::accumulate(finite.begin(), finite.end(), 0.0) /
                 static_cast<double>(finite.size());
  double fvar = 0.0;
  for (double v : finite) fvar += (v - fmean) * (v - fmean);
  fvar /= static_cast<double>(finite.size());
  const double inf_stand_in = worst + 3.0 * std::sqrt(fvar);

  std::vector<double> fit(m);
  for (std::size_t i = 0; i < m; ++i) fit[i] = std::isfinite(values[i]) ? values[i] : inf_stand_in;

  double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(m);
  double var = 0.0;
  for (double v : fit) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m);
  const double scale = std::sqrt(std::max(var, kGpVarianceFloor));

  model.z.resize(m);
  for (std::size_t i = 0; i < m; ++i) model.z[i] = (fit[i] - mean) / scale;
  model.z_best = *std::min_element(model.z.begin(), model.z.end());

  std::vector<double> kernel(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = rbf(unit_points[i], unit_points[j]);
      kernel[i * m + j] = v;
      kernel[j * m + i] = v;
    }

  double noise = kGpNoise;
  for (int attempt = 0; attempt < 8; ++attempt) {
    model.chol = kernel;
    for (std::size_t i = 0; i < m; ++i) model.chol[i * m + i] += noise;
    if (cholesky_in_place(model.chol, m)) {
      model.alpha = model.z;
      forward_solve(model.chol, m, model.alpha);
      backward_solve(model.chol, m, model.alpha);
      model.unit_points = unit_points;
      model.ok = true;
      return model;
    }
    noise *= 10.0;
  }
  return model;
}

double gp_expected_improvement(const GpModel& model, const std::vector<double>& unit_point) {
  const std::size_t m = model.unit_points.size();
  std::vector<double> k(m);
  for (std::size_t i = 0; i < m; ++i) k[i] = rbf(unit_point, model.unit_points[i]);

  double mu = 0.0;
  for (std::size_t i = 0; i < m; ++i) mu += k[i] * model.alpha[i];

  std::vector<double> v = k;
  forward_solve(model.chol, m, v);
  double vv = 0.0;
  for (double x : v) vv += x * x;
  const double s2 = std::max(1.0 - vv, 0.0);
  const double s = std::sqrt(s2);

  const double improvement = model.z_best - mu;
  if (s < 1e-12) return std::max(improvement, 0.0);
  const double t = improvement / s;
  const double cdf = 0.5 * std::erfc(-t / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
  return improvement * cdf + s * pdf;
}

}  // namespace detail

namespace {

double halton(unsigned long long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % static_cast<unsigned long long>(base));
    i /= static_cast<unsigned long long>(base);
  }
  return r;
}

constexpr int kHaltonBases[5] = {2, 3, 5, 7, 11};

class GpSampler final : public Sampler {
 public:
  GpSampler(SearchSpace space, std::uint64_t seed)
      : Sampler(SamplerKind::gp, std::move(space)), rng_(seed) {}

  std::vector<double> do_ask() override {
    const std::size_t d = space_.dimension();
    if (history_.size() < kGpStartup) return uniform_point();

    std::vector<std::vector<double>> unit(history_.size());
    std::vector<double> values(history_.size());
    for (std::size_t i = 0; i < history_.size(); ++i) {
      unit[i] = to_unit(history_[i].point);
      values[i] = history_[i].value;
    }
    detail::GpModel model = detail::gp_fit(unit, values);
    if (!model.ok) return uniform_point();

    // seeded quasi-random candidate set: shifted Halton points
    std::vector<double> shift(d);
    for (std::size_t j = 0; j < d; ++j) shift[j] = rng_.uniform();

    std::vector<double> best_unit;
    double best_ei = -kInfVal;
    std::vector<double> cand(d);
    for (int c = 0; c < kGpCandidates; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        double u = halton(static_cast<unsigned long long>(c) + 1, kHaltonBases[j]) + shift[j];
        cand[j] = u - std::floor(u);
      }
      const double ei = detail::gp_expected_improvement(model, cand);
      if (ei > best_ei) {
        best_ei = ei;
        best_unit = cand;
      }
    }
    return from_unit(best_unit);
  }

 private:
  std::vector<double> uniform_point() {
    std::vector<double> p(space_.dimension());
    for (std::size_t j = 0; j < p.size(); ++j)
      p[j] = rng_.uniform(space_.ranges[j].low, space_.ranges[j].high);
    return p;
  }

  std::vector<double> to_unit(const std::vector<double>& p) const {
    std::vector<double> u(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      const ParamRange& r = space_.ranges[j];
      u[j] = (p[j] - r.low) / (r.high - r.low);
    }
    return u;
  }

  std::vector<double> from_unit(const std::vector<double>& u) const {
    std::vector<double> p(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      const ParamRange& r = space_.ranges[j];
      p[j] = std::clamp(r.low + u[j] * (r.high - r.low), r.low, r.high);
    }
    return p;
  }

  Rng rng_;
};

// ---------------------------------------------------------------------------
// CMA-ES with textbook defaults; the box is handled by componentwise clipping
// of sampled candidates in the internal unit cube.

class CmaEsSampler final : public Sampler {
 public:
  CmaEsSampler(SearchSpace space, std::uint64_t seed,
               std::optional<std::vector<double>> initial_point)
      : Sampler(SamplerKind::cmaes, std::move(space)), rng_(seed) {
    d_ = space_.dimension();
    const double dd = static_cast<double>(d_);
    lambda_ = 4 + static_cast<int>(std::floor(3.0 * std::log(dd)));
    mu_ = lambda_ / 2;

    weights_.resize(static_cast<std::size_t>(mu_));
    double wsum = 0.0;
    for (int i = 0; i < mu_; ++i) {
      weights_[static_cast<std::size_t>(i)] =
          std::log((static_cast<double>(lambda_) + 1.0) / 2.0) -
          std::log(static_cast<double>(i + 1));
      wsum += weights_[static_cast<std::size_t>(i)];
    }
    double w2 = 0.0;
    for (double& w : weights_) {
      w /= wsum;
      w2 += w * w;
    }
    mueff_ = 1.0 / w2;

    csigma_ = (mueff_ + 2.0) / (dd + mueff_ + 5.0);
    dsigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (dd + 1.0)) - 1.0) + csigma_;
    cc_ = (4.0 + mueff_ / dd) / (dd + 4.0 + 2.0 * mueff_ / dd);
    c1_ = 2.0 / ((dd + 1.3) * (dd + 1.3) + mueff_);
    cmu_ = std::min(1.0 - c1_,
                    2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((dd + 2.0) * (dd + 2.0) + mueff_));
    chi_n_ = std::sqrt(dd) * (1.0 - 1.0 / (4.0 * dd) + 1.0 / (21.0 * dd * dd));

    mean_.assign(d_, 0.5);
    if (initial_point) mean_ = to_unit(*initial_point);
    sigma_ = 0.3;
    cov_.assign(d_ * d_, 0.0);
    eigvecs_.assign(d_ * d_, 0.0);
    eigroots_.assign(d_, 1.0);
    for (std::size_t i = 0; i < d_; ++i) {
      cov_[i * d_ + i] = 1.0;
      eigvecs_[i * d_ + i] = 1.0;
    }
    psigma_.assign(d_, 0.0);
    pc_.assign(d_, 0.0);
  }

  std::vector<double> do_ask() override {
    std::vector<double> z(d_), y(d_, 0.0);
    for (std::size_t i = 0; i < d_; ++i) z[i] = rng_.normal();
    // y = B diag(D) z
    for (std::size_t i = 0; i < d_; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d_; ++k) acc += eigvecs_[i * d_ + k] * eigroots_[k] * z[k];
      y[i] = acc;
    }
    std::vector<double> u(d_);
    for (std::size_t i = 0; i < d_; ++i) u[i] = std::clamp(mean_[i] + sigma_ * y[i], 0.0, 1.0);
    return from_unit(u);
  }

  void do_tell(const std::vector<double>& point, double value) override {
    generation_.push_back({to_unit(point), value});
    if (static_cast<int>(generation_.size()) == lambda_) update_distribution();
  }

  // externally injected observations carry no sampling distribution, so they
  // never enter a generation

 private:
  void update_distribution() {
    std::vector<std::size_t> order(generation_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return generation_[a].second < generation_[b].second;
    });

    const std::vector<double> mean_old = mean_;
    std::vector<double> mean_new(d_, 0.0);
    for (int i = 0; i < mu_; ++i) {
      const std::vector<double>& u = generation_[order[static_cast<std::size_t>(i)]].first;
      for (std::size_t j = 0; j < d_; ++j)
        mean_new[j] += weights_[static_cast<std::size_t>(i)] * u[j];
    }
    mean_ = mean_new;

    std::vector<double> y_w(d_);
    for (std::size_t j = 0; j < d_; ++j) y_w[j] = (mean_[j] - mean_old[j]) / sigma_;

    // C^{-1/2} y_w = B diag(1/D) B^T y_w
    std::vector<double> tmp(d_, 0.0), cinv_yw(d_, 0.0);
    for (std::size_t k = 0; k < d_; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d_; ++i) acc += eigvecs_[i * d_ + k] * y_w[i];
      tmp[k] = acc / eigroots_[k];
    }
    for (std::size_t i = 0; i < d_; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d_; ++k) acc += eigvecs_[i * d_ + k] * tmp[k];
      cinv_yw[i] = acc;
    }

    const double cs_coeff = std::sqrt(csigma_ * (2.0 - csigma_) * mueff_);
    for (std::size_t j = 0; j < d_; ++j)
      psigma_[j] = (1.0 - csigma_) * psigma_[j] + cs_coeff * cinv_yw[j];

    ++generations_;
    double ps_norm = 0.0;
    for (double v : psigma_) ps_norm += v * v;
    ps_norm = std::sqrt(ps_norm);
    const double expected = std::sqrt(
        1.0 - std::pow(1.0 - csigma_, 2.0 * static_cast<double>(generations_)));
    const bool hsigma =
        ps_norm / expected < (1.4 + 2.0 / (static_cast<double>(d_) + 1.0)) * chi_n_;

    const double cc_coeff = std::sqrt(cc_ * (2.0 - cc_) * mueff_);
    for (std::size_t j = 0; j < d_; ++j)
      pc_[j] = (1.0 - cc_) * pc_[j] + (hsigma ? cc_coeff * y_w[j] : 0.0);

    const double delta_h = hsigma ? 0.0 : cc_ * (2.0 - cc_);
    const double keep = 1.0 - c1_ - cmu_ + c1_ * delta_h;
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j) {
        double v = keep * cov_[i * d_ + j] + c1_ * pc_[i] * pc_[j];
        for (int r = 0; r < mu_; ++r) {
          const std::vector<double>& u = generation_[order[static_cast<std::size_t>(r)]].first;
          const double yi = (u[i] - mean_old[i]) / sigma_;
          const double yj = (u[j] - mean_old[j]) / sigma_;
          v += cmu_ * weights_[static_cast<std::size_t>(r)] * yi * yj;
        }
        cov_[i * d_ + j] = v;
      }

    sigma_ *= std::exp((csigma_ / dsigma_) * (ps_norm / chi_n_ - 1.0));

    // refresh the eigensystem used for sampling
    std::vector<double> sym(d_ * d_);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j)
        sym[i * d_ + j] = 0.5 * (cov_[i * d_ + j] + cov_[j * d_ + i]);
    std::vector<double> eigvals;
    detail::sym_eigen(sym, static_cast<int>(d_), eigvals, eigvecs_);
    for (std::size_t k = 0; k < d_; ++k)
      eigroots_[k] = std::sqrt(std::max(eigvals[k], 1e-20));

    generation_.clear();
  }

  std::vector<double> to_unit(const std::vector<double>& p) const {
    std::vector<double> u(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      const ParamRange& r = space_.ranges[j];
      u[j] = (p[j] - r.low) / (r.high - r.low);
    }
    return u;
  }

  std::vector<double> from_unit(const std::vector<double>& u) const {
    std::vector<double> p(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      const ParamRange& r = space_.ranges[j];
      p[j] = std::clamp(r.low + u[j] * (r.high - r.low), r.low, r.high);
    }
    return p;
  }

  Rng rng_;
  std::size_t d_ = 0;
  int lambda_ = 0, mu_ = 0;
  std::vector<double> weights_;
  double mueff_ = 0.0;
  double csigma_ = 0.0, dsigma_ = 0.0, cc_ = 0.0, c1_ = 0.0, cmu_ = 0.0, chi_n_ = 0.0;

  std::vector<double> mean_;
  double sigma_ = 0.3;
  std::vector<double> cov_, eigvecs_, eigroots_;
  std::vector<double> psigma_, pc_;
  long generations_ = 0;
  std::vector<std::pair<std::vector<double>, double>> generation_;
};

}  // namespace

namespace detail {

void sym_eigen(const std::vector<double>& a, int d, std::vector<double>& eigvals,
               std::vector<double>& eigvecs) {
  const std::size_t n = static_cast<std::size_t>(d);
  std::vector<double> m = a;
  eigvecs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += std::abs(m[i * n + i]);
      for (std::size_t j = i + 1; j < n; ++j) off += m[i * n + j] * m[i * n + j];
    }
    if (off <= 1e-30 * (diag * diag + 1e-300)) break;

    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m[k * n + p], mkq = m[k * n + q];
          m[k * n + p] = c * mkp - s * mkq;
          m[k * n + q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m[p * n + k], mqk = m[q * n + k];
          m[p * n + k] = c * mpk - s * mqk;
          m[q * n + k] = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = eigvecs[k * n + p], vkq = eigvecs[k * n + q];
          eigvecs[k * n + p] = c * vkp - s * vkq;
          eigvecs[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  eigvals.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = m[i * n + i];
}

}  // namespace detail

std::unique_ptr<Sampler> make_sampler(SamplerKind kind, const SearchSpace& space,
                                      std::uint64_t seed, long budget_hint,
                                      std::optional<std::vector<double>> initial_point) {
  space.validate();
  if (budget_hint < 1) throw std::invalid_argument("make_sampler: budget_hint must be >= 1");
  if (initial_point && !space.contains(*initial_point))
    throw std::invalid_argument("make_sampler: initial_point outside the search space");

  switch (kind) {
    case SamplerKind::random: return std::make_unique<RandomSampler>(space, seed);
    case SamplerKind::grid: return std::make_unique<GridSampler>(space, seed, budget_hint);
    case SamplerKind::tpe: return std::make_unique<TpeSampler>(space, seed);
    case SamplerKind::gp: return std::make_unique<GpSampler>(space, seed);
    case SamplerKind::cmaes:
      return std::make_unique<CmaEsSampler>(space, seed, std::move(initial_point));
  }
  throw std::invalid_argument("make_sampler: unknown kind");
}

SamplerKind PortfolioAssignment::kind_for(const std::string& name) const {
  auto it = overrides.find(name);
  return it != overrides.end() ? it->second : default_kind;
}

void PortfolioAssignment::validate(const SearchSpace& full_space) const {
  for (const auto& [name, kind] : overrides) {
    bool found = false;
    for (const ParamRange& r : full_space.ranges) found = found || r.name == name;
    if (!found)
      throw std::invalid_argument("PortfolioAssignment: unknown parameter '" + name + "'");
  }
}

}  // namespace cacmtune
