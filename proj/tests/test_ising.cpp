#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cacmtune/ising.hpp"
#include "cacmtune/rng.hpp"

using namespace cacmtune;

namespace {

IsingInstance two_spin_ferro() {
  // w = [[0,1],[1,0]], ground at aligned spins with energy -1
  return IsingInstance(2, {0.0, 1.0, 1.0, 0.0}, {1, 1}, -1.0, {});
}

SpinConfig random_spins(int n, Rng& rng) {
  SpinConfig s(static_cast<std::size_t>(n));
  for (auto& v : s) v = rng.uniform() < 0.5 ? Spin{-1} : Spin{1};
  return s;
}

}  // namespace

TEST_CASE("energy of the two-spin ferromagnet") {
  const IsingInstance inst = two_spin_ferro();
  CHECK(energy(inst, {1, 1}) == -1.0);
  CHECK(energy(inst, {-1, -1}) == -1.0);
  CHECK(energy(inst, {1, -1}) == 1.0);
}

TEST_CASE("zero couplings give zero energy") {
  const IsingInstance inst(3, std::vector<double>(9, 0.0), {1, -1, 1}, 0.0, {});
  CHECK(energy(inst, {1, 1, 1}) == 0.0);
  CHECK(energy(inst, {-1, 1, -1}) == 0.0);
}

TEST_CASE("energy rejects dimension mismatch") {
  const IsingInstance inst = two_spin_ferro();
  CHECK_THROWS_AS(energy(inst, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("global spin flip leaves the energy unchanged") {
  Rng rng(11);
  const IsingInstance inst = generate_wishart({10, 7, 3, PlantedChoice::random});
  for (int trial = 0; trial < 50; ++trial) {
    SpinConfig s = random_spins(10, rng);
    SpinConfig flipped = s;
    for (auto& v : flipped) v = static_cast<Spin>(-v);
    CHECK(energy(inst, s) == energy(inst, flipped));
  }
}

TEST_CASE("instance construction validates invariants") {
  CHECK_THROWS(IsingInstance(2, {0.0, 1.0, 2.0, 0.0}, {1, 1}, 0.0, {}));  // asymmetric
  CHECK_THROWS(IsingInstance(2, {1.0, 0.0, 0.0, 0.0}, {1, 1}, 0.0, {}));  // diagonal
  CHECK_THROWS(IsingInstance(2, {0.0, 1.0, 1.0, 0.0}, {1, 2}, 0.0, {}));  // bad spin
  CHECK_THROWS(IsingInstance(2, {0.0, 1.0, 1.0, 0.0}, {1}, 0.0, {}));     // short planted
}

TEST_CASE("wishart generation is deterministic and well-formed") {
  const WishartSpec spec{12, 8, 7, PlantedChoice::all_ones};
  const IsingInstance a = generate_wishart(spec);
  const IsingInstance b = generate_wishart(spec);
  CHECK(a.couplings() == b.couplings());
  CHECK(a.planted() == b.planted());
  CHECK(a.ground_energy() == b.ground_energy());

  const int n = a.n_spins();
  for (int i = 0; i < n; ++i) {
    CHECK(a.coupling(i, i) == 0.0);
    for (int j = 0; j < n; ++j) CHECK(a.coupling(i, j) == a.coupling(j, i));
  }
  CHECK(energy(a, a.planted()) == a.ground_energy());
}

TEST_CASE("planted state is the exhaustive minimum, n=12 m=8 seed=7") {
  const IsingInstance inst = generate_wishart({12, 8, 7, PlantedChoice::all_ones});
  const auto [config, best] = brute_force_ground(inst);
  CHECK(std::abs(best - inst.ground_energy()) <= 1e-9);
  CHECK(energy(inst, config) <= inst.ground_energy() + 1e-9);
}

TEST_CASE("planted certification holds across seeds, sizes and hardness") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int n = 8 + static_cast<int>(seed % 9);  // 8..16
    const int m = 3 + static_cast<int>(seed % 11);
    const PlantedChoice planted =
        seed % 2 == 0 ? PlantedChoice::all_ones : PlantedChoice::random;
    const IsingInstance inst = generate_wishart({n, m, seed, planted});
    const auto [config, best] = brute_force_ground(inst);
    CHECK(std::abs(best - inst.ground_energy()) <= 1e-9);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("random planted choice is seeded and mixed") {
  const IsingInstance a = generate_wishart({16, 10, 3, PlantedChoice::random});
  const IsingInstance b = generate_wishart({16, 10, 3, PlantedChoice::random});
  CHECK(a.planted() == b.planted());
  int ups = 0;
  for (Spin s : a.planted()) ups += s > 0 ? 1 : 0;
  CHECK(ups > 0);
  CHECK(ups < 16);
}

TEST_CASE("brute force handles degenerate sizes and refuses large ones") {
  const IsingInstance one(1, {0.0}, {1}, 0.0, {});
  const auto [config, e] = brute_force_ground(one);
  CHECK(e == 0.0);
  CHECK(config.size() == 1);

  const IsingInstance big(25, std::vector<double>(625, 0.0), SpinConfig(25, Spin{1}), 0.0, {});
  CHECK_THROWS_AS(brute_force_ground(big), std::invalid_argument);
}

TEST_CASE("ground-hit threshold arithmetic") {
  const IsingInstance inst = generate_wishart({12, 8, 7, PlantedChoice::all_ones});
  const double g = inst.ground_energy();
  CHECK(is_ground_hit(inst, g, 0.0));
  CHECK(is_ground_hit(inst, g, 1e-6));
  CHECK_FALSE(is_ground_hit(inst, g + 1.0, 1e-6));
  CHECK(is_ground_hit(inst, g * (1.0 + 1e-9), 1e-6));  // |g| > 1, slightly below g
  CHECK(is_ground_hit(inst, g + 1e-7 * std::abs(g), 1e-6));
  CHECK_FALSE(is_ground_hit(inst, g + 1e-3 * std::abs(g), 1e-6));
  CHECK_THROWS_AS(is_ground_hit(inst, g, -1.0), std::invalid_argument);
}

TEST_CASE("instance json round-trips bit-exactly") {
  const IsingInstance inst = generate_wishart({14, 9, 99, PlantedChoice::random});
  const std::string path = (std::filesystem::temp_directory_path() / "cacmtune_inst.json").string();
  save_instance(inst, path);
  const IsingInstance loaded = load_instance(path);
  CHECK(loaded.n_spins() == inst.n_spins());
  CHECK(loaded.couplings() == inst.couplings());
  CHECK(loaded.planted() == inst.planted());
  CHECK(loaded.ground_energy() == inst.ground_energy());
  CHECK(loaded.meta().m_columns == inst.meta().m_columns);
  CHECK(loaded.meta().seed == inst.meta().seed);
  CHECK(instance_to_json(loaded) == instance_to_json(inst));
  std::remove(path.c_str());
}

TEST_CASE("tampered ground energy is rejected on load") {
  const IsingInstance inst = generate_wishart({8, 5, 1, PlantedChoice::all_ones});
  std::string text = instance_to_json(inst);
  const std::string needle = "\"ground_energy\":";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size() + 2, "\"ground_energy\":9");
  CHECK_THROWS(instance_from_json(text));
}

TEST_CASE("generator rejects invalid specs") {
  CHECK_THROWS_AS(generate_wishart({1, 5, 0, PlantedChoice::all_ones}), std::invalid_argument);
  CHECK_THROWS_AS(generate_wishart({10, 0, 0, PlantedChoice::all_ones}), std::invalid_argument);
}
