#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cacmtune {

// Spins are -1/+1. A configuration always has exactly n_spins entries.
using Spin = std::int8_t;
using SpinConfig = std::vector<Spin>;

enum class PlantedChoice { all_ones, random };

std::string to_string(PlantedChoice c);
PlantedChoice planted_choice_from_string(const std::string& s);

struct WishartSpec {
  int n_spins = 0;
  int m_columns = 0;  // hardness knob, ratio m/n
  std::uint64_t seed = 0;
  PlantedChoice planted = PlantedChoice::all_ones;
};

struct GeneratorMeta {
  int m_columns = 0;
  std::uint64_t seed = 0;
  PlantedChoice planted = PlantedChoice::all_ones;
};

// Dense symmetric zero-diagonal coupling matrix in the solver convention:
// the solver minimizes H(s) = -1/2 s^T w s. The instance carries a planted
// configuration whose energy is the certified global minimum.
class IsingInstance {
 public:
  IsingInstance(int n_spins, std::vector<double> couplings, SpinConfig planted,
                double ground_energy, GeneratorMeta meta);

  int n_spins() const { return n_; }
  const std::vector<double>& couplings() const { return w_; }  // row-major n*n
  double coupling(int i, int j) const { return w_[static_cast<std::size_t>(i) * n_ + j]; }
  const SpinConfig& planted() const { return planted_; }
  double ground_energy() const { return ground_energy_; }
  const GeneratorMeta& meta() const { return meta_; }

 private:
  int n_;
  std::vector<double> w_;
  SpinConfig planted_;
  double ground_energy_;
  GeneratorMeta meta_;
};

// H(s) = -1/2 s^T w s. Throws std::invalid_argument on dimension mismatch.
double energy(const IsingInstance& instance, const SpinConfig& s);

// Wishart planted ensemble. Deterministic per spec.seed; the planted
// configuration attains the global energy minimum by construction (possibly
// tied, always tied with its global flip).
IsingInstance generate_wishart(const WishartSpec& spec);

// Exhaustive ground-state search, n_spins <= 24. Returns a minimizing
// configuration and its energy (recomputed exactly, not accumulated).
std::pair<SpinConfig, double> brute_force_ground(const IsingInstance& instance);

inline constexpr int kBruteForceMaxSpins = 24;

// Default relative tolerance for counting a run as a ground-state hit.
inline constexpr double kGroundRelTol = 1e-6;

// achieved <= ground + rel_tol * max(1, |ground|)
bool is_ground_hit(const IsingInstance& instance, double achieved_energy,
                   double rel_tol = kGroundRelTol);

// Instance file format: a single JSON document, format_version "1".
void save_instance(const IsingInstance& instance, const std::string& path);
IsingInstance load_instance(const std::string& path);

std::string instance_to_json(const IsingInstance& instance);
IsingInstance instance_from_json(const std::string& text);

}  // namespace cacmtune
