#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cacmtune {

struct ParamRange {
  std::string name;
  double low = 0.0;
  double high = 1.0;
};

// Box-bounded continuous search space, dimension 1..5.
struct SearchSpace {
  std::vector<ParamRange> ranges;

  std::size_t dimension() const { return ranges.size(); }
  void validate() const;
  bool contains(const std::vector<double>& point) const;
};

enum class SamplerKind { random, grid, tpe, gp, cmaes };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct TrialRecord {
  long trial_id = 0;
  std::vector<double> point;
  double value = 0.0;  // objective, lower is better; +infinity allowed
  SamplerKind sampler = SamplerKind::random;
  std::string stage_label;
};

// Minimum-value record; ties broken by lowest trial id. +infinity compares
// worse than every finite value. Throws on empty history.
const TrialRecord& best_of(const std::vector<TrialRecord>& history);

// Inclusive-endpoint lattice with k = ceil(budget^(1/d)) points per
// dimension (midpoint when k = 1), enumerated lexicographically with the
// last dimension fastest, truncated to exactly `budget` points.
std::vector<std::vector<double>> grid_points(const SearchSpace& space, long budget);

// Ask/tell minimizer over a box. ask() and tell() strictly alternate;
// inject() adds an externally evaluated observation without an ask.
// A sampler is a sequential object; distinct samplers are independent.
class Sampler {
 public:
  virtual ~Sampler() = default;

  SamplerKind kind() const { return kind_; }
  const SearchSpace& space() const { return space_; }
  const std::vector<TrialRecord>& history() const { return history_; }

  std::vector<double> ask();
  void tell(const std::vector<double>& point, double value);
  void inject(const std::vector<double>& point, double value);

 protected:
  Sampler(SamplerKind kind, SearchSpace space);

  virtual std::vector<double> do_ask() = 0;
  virtual void do_tell(const std::vector<double>& point, double value) {}
  virtual void do_inject(const std::vector<double>& point, double value) {}

  SamplerKind kind_;
  SearchSpace space_;
  std::vector<TrialRecord> history_;

 private:
  void record(const std::vector<double>& point, double value);
  std::optional<std::vector<double>> pending_;
};

// budget_hint sizes the grid lattice; initial_point, when given, seeds the
// CMA-ES mean (other kinds take initial knowledge via inject()).
std::unique_ptr<Sampler> make_sampler(SamplerKind kind, const SearchSpace& space,
                                      std::uint64_t seed, long budget_hint,
                                      std::optional<std::vector<double>> initial_point = {});

// Per-parameter sampler selection; parameters without an override use
// default_kind.
struct PortfolioAssignment {
  std::map<std::string, SamplerKind> overrides;
  SamplerKind default_kind = SamplerKind::tpe;

  SamplerKind kind_for(const std::string& name) const;
  void validate(const SearchSpace& full_space) const;
};

namespace detail {

// Small dense symmetric eigensolver (cyclic Jacobi); eigenvectors returned
// as columns of V (row-major d*d).
void sym_eigen(const std::vector<double>& a, int d, std::vector<double>& eigvals,
               std::vector<double>& eigvecs);

// GP posterior pieces, exposed so the acquisition step can be checked
// against an independent oracle.
struct GpModel {
  bool ok = false;
  std::size_t dim = 0;
  std::vector<std::vector<double>> unit_points;
  std::vector<double> z;      // standardized fit targets
  std::vector<double> chol;   // lower Cholesky factor of the kernel matrix
  std::vector<double> alpha;  // K^{-1} z
  double z_best = 0.0;
};

GpModel gp_fit(const std::vector<std::vector<double>>& unit_points,
               const std::vector<double>& values);
double gp_expected_improvement(const GpModel& model, const std::vector<double>& unit_point);

}  // namespace detail

}  // namespace cacmtune
