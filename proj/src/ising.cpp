#include "cacmtune/ising.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "cacmtune/rng.hpp"

namespace cacmtune {

std::string to_string(PlantedChoice c) {
  return c == PlantedChoice::all_ones ? "all_ones" : "random";
}

PlantedChoice planted_choice_from_string(const std::string& s) {
  if (s == "all_ones" || s == "ones") return PlantedChoice::all_ones;
  if (s == "random") return PlantedChoice::random;
  throw std::invalid_argument("unknown planted_choice: " + s);
}

IsingInstance::IsingInstance(int n_spins, std::vector<double> couplings, SpinConfig planted,
                             double ground_energy, GeneratorMeta meta)
    : n_(n_spins),
      w_(std::move(couplings)),
      planted_(std::move(planted)),
      ground_energy_(ground_energy),
      meta_(meta) {
  if (n_ < 1) throw std::invalid_argument("IsingInstance: n_spins must be positive");
  const std::size_t n = static_cast<std::size_t>(n_);
  if (w_.size() != n * n) throw std::invalid_argument("IsingInstance: couplings must be n*n");
  if (planted_.size() != n)
    throw std::invalid_argument("IsingInstance: planted length must equal n_spins");
  for (std::size_t i = 0; i < n; ++i) {
    if (w_[i * n + i] != 0.0)
      throw std::invalid_argument("IsingInstance: couplings must have zero diagonal");
    for (std::size_t j = i + 1; j < n; ++j)
      if (w_[i * n + j] != w_[j * n + i])
        throw std::invalid_argument("IsingInstance: couplings must be symmetric");
  }
  for (Spin s : planted_)
    if (s != 1 && s != -1) throw std::invalid_argument("IsingInstance: spins must be -1 or +1");
}

double energy(const IsingInstance& instance, const SpinConfig& s) {
  const std::size_t n = static_cast<std::size_t>(instance.n_spins());
  if (s.size() != n) throw std::invalid_argument("energy: spin configuration has wrong length");
  const std::vector<double>& w = instance.couplings();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    const double* wi = w.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row += wi[j] * static_cast<double>(s[j]);
    total += static_cast<double>(s[i]) * row;
  }
  return -0.5 * total;
}

IsingInstance generate_wishart(const WishartSpec& spec) {
  if (spec.n_spins < 2) throw std::invalid_argument("generate_wishart: n_spins must be >= 2");
  if (spec.m_columns < 1) throw std::invalid_argument("generate_wishart: m_columns must be >= 1");

  const std::size_t n = static_cast<std::size_t>(spec.n_spins);
  const std::size_t m = static_cast<std::size_t>(spec.m_columns);
  Rng rng(spec.seed);

  SpinConfig t(n, Spin{1});
  if (spec.planted == PlantedChoice::random)
    for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform() < 0.5 ? Spin{-1} : Spin{1};

  // Gram matrix G = (1/sqrt(m)) sum_k v_k v_k^T of m Gaussian columns
  // projected orthogonal to the planted vector; the 1/sqrt(m) factor gives
  // the off-diagonal couplings unit variance at every (n, m). sigma^T G
  // sigma >= 0 with equality at sigma = +-t, so zeroing the diagonal leaves
  // t as a certified minimum of 1/2 sigma^T Omega sigma.
  std::vector<double> gram(n * n, 0.0);
  std::vector<double> col(n);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) col[i] = rng.normal();
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += col[i] * static_cast<double>(t[i]);
    const double shift = dot / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) col[i] -= shift * static_cast<double>(t[i]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double v = col[i] * col[j];
        gram[i * n + j] += v;
        if (j != i) gram[j * n + i] += v;
      }
  }

  // solver convention w = -Omega
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w[i * n + j] = -gram[i * n + j] * scale;

  GeneratorMeta meta{spec.m_columns, spec.seed, spec.planted};
  IsingInstance instance(spec.n_spins, std::move(w), t, 0.0, meta);
  const double ground = energy(instance, t);
  return IsingInstance(spec.n_spins, instance.couplings(), t, ground, meta);
}

std::pair<SpinConfig, double> brute_force_ground(const IsingInstance& instance) {
  const int n = instance.n_spins();
  if (n > kBruteForceMaxSpins)
    throw std::invalid_argument("brute_force_ground: instance too large for enumeration (n > 24)");

  const std::size_t un = static_cast<std::size_t>(n);
  const std::vector<double>& w = instance.couplings();

  SpinConfig s(un, Spin{1});
  // field[i] = (w s)_i, maintained incrementally across Gray-code flips
  std::vector<double> field(un, 0.0);
  for (std::size_t i = 0; i < un; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < un; ++j) row += w[i * un + j];
    field[i] = row;
  }
  double current = energy(instance, s);
  double best = current;
  SpinConfig best_config = s;

  const std::uint64_t count = 1ULL << n;
  for (std::uint64_t g = 1; g < count; ++g) {
    // bit that changes between Gray codes of g-1 and g
    const int k = __builtin_ctzll(g);
    // flipping spin k changes H by 2 s_k (w s)_k
    current += 2.0 * static_cast<double>(s[k]) * field[k];
    const double delta = -2.0 * static_cast<double>(s[k]);
    s[k] = static_cast<Spin>(-s[k]);
    for (std::size_t j = 0; j < un; ++j) field[j] += delta * w[j * un + k];
    if (current < best) {
      best = current;
      best_config = s;
    }
  }
  // recompute directly so the reported energy carries no accumulated error
  return {best_config, energy(instance, best_config)};
}

bool is_ground_hit(const IsingInstance& instance, double achieved_energy, double rel_tol) {
  if (rel_tol < 0.0) throw std::invalid_argument("is_ground_hit: rel_tol must be >= 0");
  const double ground = instance.ground_energy();
  return achieved_energy <= ground + rel_tol * std::max(1.0, std::abs(ground));
}

std::string instance_to_json(const IsingInstance& instance) {
  nlohmann::json doc;
  doc["n"] = instance.n_spins();
  doc["couplings"] = instance.couplings();
  std::vector<int> planted(instance.planted().begin(), instance.planted().end());
  doc["planted"] = planted;
  doc["ground_energy"] = instance.ground_energy();
  doc["meta"] = {{"m", instance.meta().m_columns},
                 {"seed", instance.meta().seed},
                 {"planted_choice", to_string(instance.meta().planted)},
                 {"format_version", "1"}};
  return doc.dump();
}

IsingInstance instance_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  const int n = doc.at("n").get<int>();
  std::vector<double> w = doc.at("couplings").get<std::vector<double>>();
  std::vector<int> planted_ints = doc.at("planted").get<std::vector<int>>();
  SpinConfig planted;
  planted.reserve(planted_ints.size());
  for (int v : planted_ints) planted.push_back(static_cast<Spin>(v));
  const double ground = doc.at("ground_energy").get<double>();
  const auto& meta_doc = doc.at("meta");
  GeneratorMeta meta;
  meta.m_columns = meta_doc.at("m").get<int>();
  meta.seed = meta_doc.at("seed").get<std::uint64_t>();
  meta.planted = planted_choice_from_string(meta_doc.at("planted_choice").get<std::string>());
  const std::string version = meta_doc.at("format_version").get<std::string>();
  if (version != "1")
    throw std::runtime_error("instance_from_json: unsupported format_version " + version);

  IsingInstance instance(n, std::move(w), std::move(planted), ground, meta);
  // stored ground energy must be recomputable from the stored matrix
  if (energy(instance, instance.planted()) != ground)
    throw std::runtime_error("instance_from_json: ground_energy does not match planted state");
  return instance;
}

void save_instance(const IsingInstance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_instance: cannot open " + path);
  out << instance_to_json(instance) << '\n';
  if (!out) throw std::runtime_error("save_instance: write failed for " + path);
}

IsingInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace cacmtune
