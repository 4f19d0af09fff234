#include "cacmtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cacmtune/rng.hpp"

namespace cacmtune {

void TunableSet::validate() const {
  space.validate();
  if (names.size() != space.dimension() || initial_values.size() != space.dimension())
    throw std::invalid_argument("TunableSet: names, initial_values and space must agree");
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] != space.ranges[j].name)
      throw std::invalid_argument("TunableSet: name order must match the search space");
    if (!(initial_values[j] >= space.ranges[j].low && initial_values[j] <= space.ranges[j].high))
      throw std::invalid_argument("TunableSet: initial value of '" + names[j] +
                                  "' is outside its bounds");
  }
}

TunableSet default_tunables() {
  TunableSet t;
  t.names = {"beta1", "beta2", "alpha", "gamma", "xi"};
  t.initial_values = {1.185, 1.185, 0.170, 1.270, 0.070};
  t.space.ranges = {{"beta1", 0.0, 2.0},
                    {"beta2", 0.0, 2.0},
                    {"alpha", 0.0, 0.3},
                    {"gamma", 0.0, 2.0},
                    {"xi", 0.0, 0.3}};
  return t;
}

namespace {

CacmParams params_from_point(const ObjectiveSpec& spec, const TunableSet& tunables,
                             const std::vector<double>& point) {
  CacmParams params;
  params.steps = spec.steps;
  params.dt = spec.dt;
  for (std::size_t j = 0; j < tunables.names.size(); ++j) {
    const std::string& name = tunables.names[j];
    if (name == "beta1")
      params.beta1 = point[j];
    else if (name == "beta2")
      params.beta2 = point[j];
    else if (name == "alpha")
      params.alpha = point[j];
    else if (name == "gamma")
      params.gamma = point[j];
    else if (name == "xi")
      params.xi = point[j];
    else
      throw std::invalid_argument("objective: unknown solver parameter '" + name + "'");
  }
  return params;
}

}  // namespace

ObjectiveFn make_solver_objective(const ObjectiveSpec& spec, const TunableSet& tunables) {
  if (spec.instance == nullptr)
    throw std::invalid_argument("make_solver_objective: instance is required");
  if (spec.runs_per_eval < 1)
    throw std::invalid_argument("make_solver_objective: runs_per_eval must be >= 1");
  tunables.validate();
  params_from_point(spec, tunables, tunables.initial_values);  // reject unknown names up front

  return [spec, tunables](const std::vector<double>& point) {
    if (point.size() != tunables.names.size())
      throw std::invalid_argument("objective: point has wrong dimension");
    if (!tunables.space.contains(point))
      throw std::invalid_argument("objective: point outside the search space");
    const CacmParams params = params_from_point(spec, tunables, point);
    const EvalResult r = evaluate(*spec.instance, params, spec.runs_per_eval, spec.eval_seed,
                                  spec.rel_tol, spec.workers);
    TrialOutcome out;
    out.value = r.tts;
    out.p0 = r.p0;
    out.mean_best_energy = r.mean_best_energy;
    out.diverged_runs = r.diverged_runs;
    return out;
  };
}

double objective(const std::vector<double>& point, const ObjectiveSpec& spec,
                 const TunableSet& tunables) {
  return make_solver_objective(spec, tunables)(point).value;
}

std::string to_string(TuneMethod method) {
  switch (method) {
    case TuneMethod::conventional: return "conventional";
    case TuneMethod::method_a: return "a";
    case TuneMethod::method_b: return "b";
  }
  return "unknown";
}

TuneMethod tune_method_from_string(const std::string& name) {
  if (name == "conventional" || name == "joint") return TuneMethod::conventional;
  if (name == "a" || name == "method_a") return TuneMethod::method_a;
  if (name == "b" || name == "method_b") return TuneMethod::method_b;
  throw std::invalid_argument("unknown tuning method: " + name);
}

namespace {

constexpr const char* kJointStage = "joint";

struct Evaluator {
  const ObjectiveFn& fn;
  long calls = 0;

  TrialOutcome operator()(const std::vector<double>& point) {
    ++calls;
    return fn(point);
  }
};

struct StageSpec {
  int stage_index = 0;
  std::string target;
  std::optional<std::size_t> coord;  // nullopt = joint stage over the full box
  SamplerKind kind = SamplerKind::random;
  long trials = 0;
  std::uint64_t seed = 0;
  bool probe = false;
};

StageRecord run_stage(const StageSpec& st, const TunableSet& tunables,
                      std::vector<double>& incumbent, double& incumbent_value,
                      std::optional<double>& incumbent_p0, Evaluator& evaluate_point,
                      long& next_trial_id) {
  SearchSpace subspace;
  std::vector<double> incumbent_sub;
  if (st.coord) {
    subspace.ranges = {tunables.space.ranges[*st.coord]};
    incumbent_sub = {incumbent[*st.coord]};
  } else {
    subspace = tunables.space;
    incumbent_sub = incumbent;
  }

  auto sampler = make_sampler(st.kind, subspace, st.seed, st.trials, incumbent_sub);
  // every stage starts from the best-known point
  sampler->inject(incumbent_sub, incumbent_value);

  StageRecord rec;
  rec.stage_index = st.stage_index;
  rec.target_param = st.target;
  rec.sampler = st.kind;
  rec.probe = st.probe;
  rec.incumbent_before = incumbent;

  for (long t = 0; t < st.trials; ++t) {
    const std::vector<double> q = sampler->ask();
    std::vector<double> full = incumbent;
    if (st.coord)
      full[*st.coord] = q[0];
    else
      full = q;
    const TrialOutcome out = evaluate_point(full);
    sampler->tell(q, out.value);

    StudyTrial trial;
    trial.trial_id = next_trial_id++;
    trial.stage_index = st.stage_index;
    trial.target_param = st.target;
    trial.point = q;
    trial.full_point = std::move(full);
    trial.value = out.value;
    trial.p0 = out.p0;
    trial.sampler = st.kind;
    trial.timestamp = evaluate_point.calls;
    rec.trials.push_back(std::move(trial));
  }

  const StudyTrial* best = nullptr;
  for (const StudyTrial& tr : rec.trials)
    if (!best || tr.value < best->value) best = &tr;
  rec.best_trial_value = best ? best->value : kInf;

  // monotone incumbent rule: the incumbent competes with the stage trials
  if (!st.probe && best && best->value < incumbent_value) {
    incumbent = best->full_point;
    incumbent_value = best->value;
    incumbent_p0 = best->p0;
  }
  rec.incumbent_after = incumbent;
  rec.incumbent_value_after = incumbent_value;
  return rec;
}

std::size_t coord_index(const TunableSet& tunables, const std::string& name) {
  for (std::size_t j = 0; j < tunables.names.size(); ++j)
    if (tunables.names[j] == name) return j;
  throw std::invalid_argument("unknown tunable parameter '" + name + "'");
}

}  // namespace

Study conventional(long budget, const TunableSet& tunables, SamplerKind kind,
                   const ObjectiveFn& objective_fn, std::uint64_t master_seed,
                   const nlohmann::json& objective_meta) {
  tunables.validate();
  if (budget < 1) throw std::invalid_argument("conventional: budget must be >= 1");

  Evaluator evaluate_point{objective_fn};
  const TrialOutcome baseline = evaluate_point(tunables.initial_values);
  std::vector<double> incumbent = tunables.initial_values;
  double incumbent_value = baseline.value;
  std::optional<double> incumbent_p0 = baseline.p0;

  Study study;
  long next_trial_id = 0;
  StageSpec st{0, kJointStage, std::nullopt, kind, budget, derive_seed(master_seed, 1), false};
  study.stages.push_back(run_stage(st, tunables, incumbent, incumbent_value, incumbent_p0,
                                   evaluate_point, next_trial_id));

  study.config.method = TuneMethod::conventional;
  study.config.budget = budget;
  study.config.sampler_default = kind;
  study.config.tunables = tunables;
  study.config.master_seed = master_seed;
  study.config.baseline_value = baseline.value;
  study.config.baseline_p0 = baseline.p0;
  study.config.objective_meta = objective_meta;
  study.resolved_order = {kJointStage};
  study.best_params = incumbent;
  study.best_value = incumbent_value;
  study.best_p0 = incumbent_p0;
  study.total_evaluations = budget;
  study.objective_calls = evaluate_point.calls;
  return study;
}

Study method_a(long budget, const TunableSet& tunables, const std::vector<std::string>& order,
               const PortfolioAssignment& assignment, const ObjectiveFn& objective_fn,
               std::uint64_t master_seed, const nlohmann::json& objective_meta) {
  tunables.validate();
  assignment.validate(tunables.space);
  const std::size_t n = tunables.names.size();
  if (order.size() != n || !std::is_permutation(order.begin(), order.end(),
                                                tunables.names.begin()))
    throw std::invalid_argument("method_a: order must be a permutation of the tunable names");
  if (budget < static_cast<long>(n))
    throw std::invalid_argument("method_a: budget below the parameter count gives a zero-trial stage");

  const long per_stage = budget / static_cast<long>(n);

  Evaluator evaluate_point{objective_fn};
  const TrialOutcome baseline = evaluate_point(tunables.initial_values);
  std::vector<double> incumbent = tunables.initial_values;
  double incumbent_value = baseline.value;
  std::optional<double> incumbent_p0 = baseline.p0;

  Study study;
  long next_trial_id = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string& name = order[k];
    StageSpec st{static_cast<int>(k), name,          coord_index(tunables, name),
                 assignment.kind_for(name), per_stage, derive_seed(master_seed, k + 1),
                 false};
    study.stages.push_back(run_stage(st, tunables, incumbent, incumbent_value, incumbent_p0,
                                     evaluate_point, next_trial_id));
  }

  study.config.method = TuneMethod::method_a;
  study.config.budget = budget;
  study.config.sampler_default = assignment.default_kind;
  study.config.sampler_overrides = assignment.overrides;
  study.config.tunables = tunables;
  study.config.requested_order = order;
  study.config.master_seed = master_seed;
  study.config.leftover_trials = budget - per_stage * static_cast<long>(n);
  study.config.baseline_value = baseline.value;
  study.config.baseline_p0 = baseline.p0;
  study.config.objective_meta = objective_meta;
  study.resolved_order = order;
  study.best_params = incumbent;
  study.best_value = incumbent_value;
  study.best_p0 = incumbent_p0;
  study.total_evaluations = per_stage * static_cast<long>(n);
  study.objective_calls = evaluate_point.calls;
  return study;
}

Study method_b(long budget, int y_initial, const TunableSet& tunables,
               const PortfolioAssignment& assignment, const ObjectiveFn& objective_fn,
               std::uint64_t master_seed, const nlohmann::json& objective_meta,
               bool literal_descending_order) {
  tunables.validate();
  assignment.validate(tunables.space);
  const std::size_t n = tunables.names.size();
  if (y_initial < 1) throw std::invalid_argument("method_b: y_initial must be >= 1");
  const long initial_total = static_cast<long>(n) * y_initial;
  if (budget <= initial_total)
    throw std::invalid_argument("method_b: budget leaves no trials after the initial evaluation");
  const long remaining = budget - initial_total;
  if (remaining < static_cast<long>(n))
    throw std::invalid_argument("method_b: remaining budget gives a zero-trial stage");
  const long per_stage = remaining / static_cast<long>(n);

  Evaluator evaluate_point{objective_fn};
  const TrialOutcome baseline = evaluate_point(tunables.initial_values);
  std::vector<double> incumbent = tunables.initial_values;
  double incumbent_value = baseline.value;
  std::optional<double> incumbent_p0 = baseline.p0;

  Study study;
  long next_trial_id = 0;

  // phase 1: probe each parameter independently from the initial values
  std::vector<double> probe_scores(n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& name = tunables.names[i];
    StageSpec st{static_cast<int>(i), name, i, assignment.kind_for(name),
                 static_cast<long>(y_initial), derive_seed(master_seed, i + 1), true};
    StageRecord rec = run_stage(st, tunables, incumbent, incumbent_value, incumbent_p0,
                                evaluate_point, next_trial_id);
    probe_scores[i] = rec.best_trial_value;
    study.stages.push_back(std::move(rec));
  }

  // rank parameters by probe outcome; ties keep the default order
  std::vector<std::size_t> ranked(n);
  std::iota(ranked.begin(), ranked.end(), 0);
  if (literal_descending_order)
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return probe_scores[a] > probe_scores[b]; });
  else
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return probe_scores[a] < probe_scores[b]; });

  // phase 2: coordinate-wise pass from the initial values in ranked order
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = ranked[k];
    const std::string& name = tunables.names[j];
    StageSpec st{static_cast<int>(n + k), name, j, assignment.kind_for(name), per_stage,
                 derive_seed(master_seed, n + k + 1), false};
    study.stages.push_back(run_stage(st, tunables, incumbent, incumbent_value, incumbent_p0,
                                     evaluate_point, next_trial_id));
    study.resolved_order.push_back(name);
  }

  study.config.method = TuneMethod::method_b;
  study.config.budget = budget;
  study.config.y_initial = y_initial;
  study.config.literal_descending_order = literal_descending_order;
  study.config.sampler_default = assignment.default_kind;
  study.config.sampler_overrides = assignment.overrides;
  study.config.tunables = tunables;
  study.config.master_seed = master_seed;
  study.config.leftover_trials = remaining - per_stage * static_cast<long>(n);
  study.config.baseline_value = baseline.value;
  study.config.baseline_p0 = baseline.p0;
  study.config.objective_meta = objective_meta;
  study.best_params = incumbent;
  study.best_value = incumbent_value;
  study.best_p0 = incumbent_p0;
  study.total_evaluations = initial_total + per_stage * static_cast<long>(n);
  study.objective_calls = evaluate_point.calls;
  return study;
}

double speedup(double conventional_tts, double proposed_tts) {
  if (std::isnan(conventional_tts) || std::isnan(proposed_tts) ||
      !(conventional_tts > 0.0) || !(proposed_tts > 0.0))
    throw std::invalid_argument("speedup: TTS values must be positive");
  if (!std::isfinite(proposed_tts))
    throw std::invalid_argument("speedup: proposed TTS must be finite");
  return conventional_tts / proposed_tts;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

nlohmann::json num_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // +infinity sentinel
}

double num_from(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

nlohmann::json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::json point_map(const std::vector<std::string>& names, const std::vector<double>& p) {
  nlohmann::json obj = nlohmann::json::object();
  for (std::size_t j = 0; j < names.size(); ++j) obj[names[j]] = p[j];
  return obj;
}

std::vector<double> point_from_map(const std::vector<std::string>& names,
                                   const nlohmann::json& obj) {
  std::vector<double> p(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) p[j] = obj.at(names[j]).get<double>();
  return p;
}

}  // namespace

std::string study_to_jsonl(const Study& study) {
  const StudyConfig& cfg = study.config;
  std::ostringstream out;

  nlohmann::json config;
  config["type"] = "config";
  config["format_version"] = "1";
  config["method"] = to_string(cfg.method);
  config["budget"] = cfg.budget;
  config["y_initial"] = cfg.y_initial;
  config["literal_descending_order"] = cfg.literal_descending_order;
  config["sampler_default"] = to_string(cfg.sampler_default);
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [name, kind] : cfg.sampler_overrides) overrides[name] = to_string(kind);
  config["sampler_overrides"] = overrides;
  config["names"] = cfg.tunables.names;
  config["initial_values"] = cfg.tunables.initial_values;
  nlohmann::json bounds = nlohmann::json::array();
  for (const ParamRange& r : cfg.tunables.space.ranges)
    bounds.push_back({{"name", r.name}, {"low", r.low}, {"high", r.high}});
  config["bounds"] = bounds;
  config["requested_order"] = cfg.requested_order;
  config["master_seed"] = cfg.master_seed;
  config["leftover_trials"] = cfg.leftover_trials;
  config["baseline_value"] = num_json(cfg.baseline_value);
  config["baseline_p0"] = opt_json(cfg.baseline_p0);
  config["objective"] = cfg.objective_meta;
  out << config.dump() << '\n';

  for (const StageRecord& stage : study.stages)
    for (const StudyTrial& t : stage.trials) {
      nlohmann::json line;
      line["trial_id"] = t.trial_id;
      line["stage_index"] = t.stage_index;
      line["target_param"] = t.target_param;
      line["point"] = point_map(cfg.tunables.names, t.full_point);
      line["tts"] = num_json(t.value);
      line["p0"] = opt_json(t.p0);
      line["sampler"] = to_string(t.sampler);
      line["timestamp"] = t.timestamp;
      out << line.dump() << '\n';
    }

  nlohmann::json summary;
  summary["type"] = "summary";
  summary["best_params"] = point_map(cfg.tunables.names, study.best_params);
  summary["best_value"] = num_json(study.best_value);
  summary["best_p0"] = opt_json(study.best_p0);
  summary["total_evaluations"] = study.total_evaluations;
  summary["objective_calls"] = study.objective_calls;
  out << summary.dump() << '\n';
  return out.str();
}

Study study_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    lines.push_back(nlohmann::json::parse(line));
  }
  if (lines.size() < 2 || lines.front().value("type", "") != "config" ||
      lines.back().value("type", "") != "summary")
    throw std::runtime_error("study file must contain a config line and a summary line");

  Study study;
  StudyConfig& cfg = study.config;
  const nlohmann::json& config = lines.front();
  cfg.method = tune_method_from_string(config.at("method").get<std::string>());
  cfg.budget = config.at("budget").get<long>();
  cfg.y_initial = config.at("y_initial").get<int>();
  cfg.literal_descending_order = config.at("literal_descending_order").get<bool>();
  cfg.sampler_default = sampler_kind_from_string(config.at("sampler_default").get<std::string>());
  for (const auto& [name, kind] : config.at("sampler_overrides").items())
    cfg.sampler_overrides[name] = sampler_kind_from_string(kind.get<std::string>());
  cfg.tunables.names = config.at("names").get<std::vector<std::string>>();
  cfg.tunables.initial_values = config.at("initial_values").get<std::vector<double>>();
  for (const nlohmann::json& b : config.at("bounds"))
    cfg.tunables.space.ranges.push_back({b.at("name").get<std::string>(),
                                         b.at("low").get<double>(),
                                         b.at("high").get<double>()});
  cfg.requested_order = config.at("requested_order").get<std::vector<std::string>>();
  cfg.master_seed = config.at("master_seed").get<std::uint64_t>();
  cfg.leftover_trials = config.at("leftover_trials").get<long>();
  cfg.baseline_value = num_from(config.at("baseline_value"));
  cfg.baseline_p0 = opt_from(config.at("baseline_p0"));
  cfg.objective_meta = config.at("objective");
  cfg.tunables.validate();

  const std::size_t n = cfg.tunables.names.size();
  std::vector<double> incumbent = cfg.tunables.initial_values;
  double incumbent_value = cfg.baseline_value;
  std::optional<double> incumbent_p0 = cfg.baseline_p0;
  study.objective_calls = 1;

  // replays the monotone incumbent rule when a stage's trials are complete
  auto close_stage = [&](StageRecord& rec) {
    const StudyTrial* best = nullptr;
    for (const StudyTrial& tr : rec.trials)
      if (!best || tr.value < best->value) best = &tr;
    rec.best_trial_value = best ? best->value : kInf;
    if (!rec.probe && best && best->value < incumbent_value) {
      incumbent = best->full_point;
      incumbent_value = best->value;
      incumbent_p0 = best->p0;
    }
    rec.incumbent_after = incumbent;
    rec.incumbent_value_after = incumbent_value;
    if (!rec.probe) study.resolved_order.push_back(rec.target_param);
  };

  for (std::size_t li = 1; li + 1 < lines.size(); ++li) {
    const nlohmann::json& j = lines[li];
    StudyTrial t;
    t.trial_id = j.at("trial_id").get<long>();
    t.stage_index = j.at("stage_index").get<int>();
    t.target_param = j.at("target_param").get<std::string>();
    t.full_point = point_from_map(cfg.tunables.names, j.at("point"));
    t.value = num_from(j.at("tts"));
    t.p0 = opt_from(j.at("p0"));
    t.sampler = sampler_kind_from_string(j.at("sampler").get<std::string>());
    t.timestamp = j.at("timestamp").get<long>();
    if (t.target_param == kJointStage) {
      t.point = t.full_point;
    } else {
      const std::size_t coord = coord_index(cfg.tunables, t.target_param);
      t.point = {t.full_point[coord]};
    }
    ++study.objective_calls;

    if (study.stages.empty() || study.stages.back().stage_index != t.stage_index) {
      if (!study.stages.empty()) close_stage(study.stages.back());
      StageRecord rec;
      rec.stage_index = t.stage_index;
      rec.target_param = t.target_param;
      rec.sampler = t.sampler;
      rec.probe = cfg.method == TuneMethod::method_b &&
                  t.stage_index < static_cast<int>(n);
      rec.incumbent_before = incumbent;
      study.stages.push_back(std::move(rec));
    }
    study.stages.back().trials.push_back(std::move(t));
    study.total_evaluations += 1;
  }
  if (!study.stages.empty()) close_stage(study.stages.back());

  const nlohmann::json& summary = lines.back();
  study.best_params = point_from_map(cfg.tunables.names, summary.at("best_params"));
  study.best_value = num_from(summary.at("best_value"));
  study.best_p0 = opt_from(summary.at("best_p0"));
  const long total = summary.at("total_evaluations").get<long>();
  const long calls = summary.at("objective_calls").get<long>();

  if (study.best_params != incumbent || study.best_value != incumbent_value ||
      total != study.total_evaluations || calls != study.objective_calls)
    throw std::runtime_error("study file is inconsistent with its trial records");
  return study;
}

void save_study(const Study& study, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_study: cannot open " + path);
  out << study_to_jsonl(study);
  if (!out) throw std::runtime_error("save_study: write failed for " + path);
}

Study load_study(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_study: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return study_from_jsonl(buf.str());
}

}  // namespace cacmtune
