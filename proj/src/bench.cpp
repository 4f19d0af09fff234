#include "cacmtune/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cacmtune/rng.hpp"

namespace cacmtune {

namespace fs = std::filesystem;

void BenchPlan::validate() const {
  if (methods.empty()) throw std::invalid_argument("bench: no methods selected");
  if (samplers.empty()) throw std::invalid_argument("bench: no samplers selected");
  if (budgets.empty()) throw std::invalid_argument("bench: no budgets selected");
  for (long b : budgets)
    if (b < 1) throw std::invalid_argument("bench: budgets must be positive");
  for (long b : scaling_budgets)
    if (b < 1) throw std::invalid_argument("bench: scaling budgets must be positive");
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");
  if (y_initial < 1) throw std::invalid_argument("bench: y_initial must be >= 1");
  if (runs_per_eval < 1) throw std::invalid_argument("bench: runs must be >= 1");
  if (steps < 1 || !(dt > 0.0)) throw std::invalid_argument("bench: invalid solver settings");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t bench_study_seed(std::uint64_t plan_seed, SamplerKind sampler, long budget,
                               int repetition) {
  std::uint64_t s = derive_seed(plan_seed, static_cast<std::uint64_t>(sampler));
  s = derive_seed(s, static_cast<std::uint64_t>(budget));
  return derive_seed(s, static_cast<std::uint64_t>(repetition));
}

namespace {

int method_rank(TuneMethod m) {
  switch (m) {
    case TuneMethod::conventional: return 0;
    case TuneMethod::method_a: return 1;
    case TuneMethod::method_b: return 2;
  }
  return 3;
}

bool row_less(const BenchRow& a, const BenchRow& b) {
  if (method_rank(a.method) != method_rank(b.method))
    return method_rank(a.method) < method_rank(b.method);
  if (a.sampler != b.sampler) return a.sampler < b.sampler;
  if (a.budget != b.budget) return a.budget < b.budget;
  return a.repetition < b.repetition;
}

nlohmann::json objective_meta_json(const BenchPlan& plan, const IsingInstance& instance,
                                   std::uint64_t eval_seed, int repetition, long budget) {
  nlohmann::json meta;
  meta["instance"] = {{"n", instance.n_spins()},
                      {"m", instance.meta().m_columns},
                      {"seed", instance.meta().seed},
                      {"planted_choice", to_string(instance.meta().planted)}};
  meta["steps"] = plan.steps;
  meta["dt"] = plan.dt;
  meta["runs_per_eval"] = plan.runs_per_eval;
  meta["eval_seed"] = eval_seed;
  meta["rel_tol"] = plan.rel_tol;
  meta["bench"] = {{"repetition", repetition}, {"budget", budget}};
  return meta;
}

std::string study_file_name(TuneMethod method, SamplerKind sampler, long budget,
                            int repetition) {
  std::ostringstream name;
  name << to_string(method) << "_" << to_string(sampler) << "_b" << budget << "_r" << repetition
       << ".jsonl";
  return name.str();
}

BenchRow run_one_study(const BenchPlan& plan, const IsingInstance& instance, TuneMethod method,
                       SamplerKind sampler, long budget, int repetition,
                       const std::string& studies_dir, std::ostream* log) {
  BenchRow row;
  row.method = method;
  row.sampler = sampler;
  row.budget = budget;
  row.repetition = repetition;
  row.seed = bench_study_seed(plan.seed, sampler, budget, repetition);

  try {
    const TunableSet tunables = default_tunables();
    ObjectiveSpec spec;
    spec.instance = &instance;
    spec.steps = plan.steps;
    spec.dt = plan.dt;
    spec.runs_per_eval = plan.runs_per_eval;
    spec.eval_seed = derive_seed(row.seed, 0);
    spec.rel_tol = plan.rel_tol;
    spec.workers = plan.workers;
    const ObjectiveFn objective = make_solver_objective(spec, tunables);
    const nlohmann::json meta =
        objective_meta_json(plan, instance, spec.eval_seed, repetition, budget);

    Study study;
    switch (method) {
      case TuneMethod::conventional:
        study = conventional(budget, tunables, sampler, objective, row.seed, meta);
        break;
      case TuneMethod::method_a: {
        PortfolioAssignment assignment{{}, sampler};
        study = method_a(budget, tunables, tunables.names, assignment, objective, row.seed, meta);
        break;
      }
      case TuneMethod::method_b: {
        PortfolioAssignment assignment{{}, sampler};
        study = method_b(budget, plan.y_initial, tunables, assignment, objective, row.seed, meta);
        break;
      }
    }

    row.tts = study.best_value;
    row.p0_best = study.best_p0;
    row.evals = study.total_evaluations;
    if (!studies_dir.empty())
      save_study(study, (fs::path(studies_dir) /
                         study_file_name(method, sampler, budget, repetition))
                            .string());
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.tts = std::nan("");
    if (log) *log << "bench: study " << to_string(method) << "/" << to_string(sampler) << "/b"
                  << budget << "/r" << repetition << " failed: " << e.what() << "\n";
  }
  return row;
}

struct CellStats {
  double mean = std::nan("");
  double median = std::nan("");
  double variance = std::nan("");
  int finite = 0;
  int infinite = 0;
  int failed = 0;
};

CellStats cell_stats(std::vector<double> values, int failed) {
  CellStats stats;
  stats.failed = failed;
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v))
      finite.push_back(v);
    else if (std::isinf(v))
      ++stats.infinite;
  stats.finite = static_cast<int>(finite.size());

  if (!finite.empty()) {
    double sum = 0.0;
    for (double v : finite) sum += v;
    stats.mean = sum / static_cast<double>(finite.size());
    double var = 0.0;
    for (double v : finite) var += (v - stats.mean) * (v - stats.mean);
    stats.variance = var / static_cast<double>(finite.size());
  }

  // median over all non-failed repetitions; +infinity sorts last
  std::vector<double> all;
  for (double v : values)
    if (!std::isnan(v)) all.push_back(v);
  if (!all.empty()) {
    std::sort(all.begin(), all.end());
    const std::size_t mid = all.size() / 2;
    stats.median = all.size() % 2 == 1 ? all[mid] : 0.5 * (all[mid - 1] + all[mid]);
  }
  return stats;
}

using CellKey = std::tuple<int, SamplerKind, long>;  // method rank, sampler, budget

std::map<CellKey, std::vector<const BenchRow*>> group_cells(const std::vector<BenchRow>& rows) {
  std::map<CellKey, std::vector<const BenchRow*>> cells;
  for (const BenchRow& r : rows)
    cells[{method_rank(r.method), r.sampler, r.budget}].push_back(&r);
  return cells;
}

std::string method_name(int rank) {
  switch (rank) {
    case 0: return "conventional";
    case 1: return "a";
    case 2: return "b";
  }
  return "unknown";
}

}  // namespace

std::string results_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "method,sampler,budget,repetition,tts,p0_best,evals,seed\n";
  for (const BenchRow& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.sampler) << ',' << r.budget << ','
        << r.repetition << ',' << format_double(r.tts) << ','
        << (r.p0_best ? format_double(*r.p0_best) : std::string()) << ',' << r.evals << ','
        << r.seed << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "method,sampler,budget,mean_tts,median_tts,variance_tts,finite,infinite,failed\n";
  for (const auto& [key, cell] : group_cells(rows)) {
    std::vector<double> values;
    int failed = 0;
    for (const BenchRow* r : cell) {
      if (r->failed)
        ++failed;
      else
        values.push_back(r->tts);
    }
    const CellStats stats = cell_stats(values, failed);
    out << method_name(std::get<0>(key)) << ',' << to_string(std::get<1>(key)) << ','
        << std::get<2>(key) << ',' << format_double(stats.mean) << ','
        << format_double(stats.median) << ',' << format_double(stats.variance) << ','
        << stats.finite << ',' << stats.infinite << ',' << stats.failed << '\n';
  }
  return out.str();
}

std::string speedup_csv(const std::vector<BenchRow>& rows) {
  // both aggregations are reported: the ratio of finite-mean TTS values and
  // the mean of per-repetition paired ratios
  std::ostringstream out;
  out << "method,sampler,budget,speedup_of_means,mean_of_ratios,pairs\n";

  std::map<std::pair<SamplerKind, long>, std::map<int, std::vector<const BenchRow*>>> by_cell;
  for (const BenchRow& r : rows)
    if (!r.failed) by_cell[{r.sampler, r.budget}][method_rank(r.method)].push_back(&r);

  for (const auto& [key, methods] : by_cell) {
    auto conv_it = methods.find(0);
    if (conv_it == methods.end()) continue;
    for (const auto& [rank, cell] : methods) {
      const auto& conv = conv_it->second;
      double conv_sum = 0.0, prop_sum = 0.0;
      int conv_n = 0, prop_n = 0;
      for (const BenchRow* r : conv)
        if (std::isfinite(r->tts)) {
          conv_sum += r->tts;
          ++conv_n;
        }
      for (const BenchRow* r : cell)
        if (std::isfinite(r->tts)) {
          prop_sum += r->tts;
          ++prop_n;
        }
      double of_means = std::nan("");
      if (prop_n > 0) {
        const double prop_mean = prop_sum / prop_n;
        of_means = conv_n > 0 ? (conv_sum / conv_n) / prop_mean : kInf;
      }

      // pair repetitions that are finite on both sides
      std::map<int, double> conv_by_rep;
      for (const BenchRow* r : conv)
        if (std::isfinite(r->tts)) conv_by_rep[r->repetition] = r->tts;
      double ratio_sum = 0.0;
      int pairs = 0;
      for (const BenchRow* r : cell)
        if (std::isfinite(r->tts)) {
          auto it = conv_by_rep.find(r->repetition);
          if (it != conv_by_rep.end()) {
            ratio_sum += it->second / r->tts;
            ++pairs;
          }
        }
      const double of_ratios = pairs > 0 ? ratio_sum / pairs : std::nan("");

      out << method_name(rank) << ',' << to_string(key.first) << ',' << key.second << ','
          << format_double(of_means) << ',' << format_double(of_ratios) << ',' << pairs << '\n';
    }
  }
  return out.str();
}

std::string scaling_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "sampler,budget,repetition,tts,p0_best,evals,seed\n";
  for (const BenchRow& r : rows)
    out << to_string(r.sampler) << ',' << r.budget << ',' << r.repetition << ','
        << format_double(r.tts) << ','
        << (r.p0_best ? format_double(*r.p0_best) : std::string()) << ',' << r.evals << ','
        << r.seed << '\n';
  return out.str();
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("bench: cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("bench: write failed for " + path.string());
}

}  // namespace

BenchResult run_bench(const BenchPlan& plan, const IsingInstance& instance,
                      const std::string& out_dir, std::ostream* log) {
  plan.validate();
  fs::create_directories(out_dir);
  std::string studies_dir;
  if (plan.save_studies) {
    studies_dir = (fs::path(out_dir) / "studies").string();
    fs::create_directories(studies_dir);
  }

  BenchResult result;
  for (TuneMethod method : plan.methods)
    for (SamplerKind sampler : plan.samplers)
      for (long budget : plan.budgets)
        for (int rep = 0; rep < plan.repetitions; ++rep) {
          BenchRow row =
              run_one_study(plan, instance, method, sampler, budget, rep, studies_dir, log);
          result.any_failed = result.any_failed || row.failed;
          result.rows.push_back(std::move(row));
          if (log) {
            const BenchRow& r = result.rows.back();
            *log << "bench: " << to_string(r.method) << "/" << to_string(r.sampler) << "/b"
                 << r.budget << "/r" << r.repetition << " tts=" << format_double(r.tts) << "\n";
          }
        }
  std::sort(result.rows.begin(), result.rows.end(), row_less);

  // budget-scaling series for the joint search (conventional cells are
  // seeded identically, so matching rows are reused)
  if (!plan.scaling_budgets.empty()) {
    const SamplerKind scaling_sampler =
        std::count(plan.samplers.begin(), plan.samplers.end(), SamplerKind::tpe) > 0
            ? SamplerKind::tpe
            : plan.samplers.front();
    for (long budget : plan.scaling_budgets)
      for (int rep = 0; rep < plan.repetitions; ++rep) {
        const BenchRow* existing = nullptr;
        for (const BenchRow& r : result.rows)
          if (r.method == TuneMethod::conventional && r.sampler == scaling_sampler &&
              r.budget == budget && r.repetition == rep && !r.failed) {
            existing = &r;
            break;
          }
        BenchRow row = existing ? *existing
                                : run_one_study(plan, instance, TuneMethod::conventional,
                                                scaling_sampler, budget, rep, studies_dir, log);
        result.any_failed = result.any_failed || row.failed;
        result.scaling_rows.push_back(std::move(row));
      }
    std::sort(result.scaling_rows.begin(), result.scaling_rows.end(), row_less);
  }

  write_file(fs::path(out_dir) / "results.csv", results_csv(result.rows));
  write_file(fs::path(out_dir) / "summary.csv", summary_csv(result.rows));
  write_file(fs::path(out_dir) / "speedup.csv", speedup_csv(result.rows));
  if (!result.scaling_rows.empty())
    write_file(fs::path(out_dir) / "scaling.csv", scaling_csv(result.scaling_rows));
  return result;
}

std::vector<BenchRow> rows_from_studies(const std::vector<std::string>& study_paths) {
  std::vector<BenchRow> rows;
  for (const std::string& path : study_paths) {
    const Study study = load_study(path);
    BenchRow row;
    row.method = study.config.method;
    row.sampler = study.config.sampler_default;
    row.budget = study.config.budget;
    row.tts = study.best_value;
    row.p0_best = study.best_p0;
    row.evals = study.total_evaluations;
    row.seed = study.config.master_seed;
    if (study.config.objective_meta.contains("bench"))
      row.repetition = study.config.objective_meta["bench"].value("repetition", 0);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

}  // namespace cacmtune
