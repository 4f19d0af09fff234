#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "cacmtune/bench.hpp"
#include "cacmtune/cacm.hpp"
#include "cacmtune/ising.hpp"
#include "cacmtune/rng.hpp"
#include "cacmtune/samplers.hpp"
#include "cacmtune/tuner.hpp"

namespace py = pybind11;
using namespace cacmtune;

namespace {

SearchSpace space_from_ranges(const std::vector<std::tuple<std::string, double, double>>& ranges) {
  SearchSpace space;
  for (const auto& [name, low, high] : ranges) space.ranges.push_back({name, low, high});
  space.validate();
  return space;
}

// python objectives may return a bare value or a (value, p0) pair
ObjectiveFn wrap_objective(const py::function& fn) {
  return [fn](const std::vector<double>& point) {
    py::object result = fn(point);
    TrialOutcome out;
    if (py::isinstance<py::tuple>(result)) {
      py::tuple t = result.cast<py::tuple>();
      out.value = t[0].cast<double>();
      if (t.size() > 1 && !t[1].is_none()) out.p0 = t[1].cast<double>();
    } else {
      out.value = result.cast<double>();
    }
    return out;
  };
}

py::dict study_summary(const Study& study) {
  py::dict d;
  py::dict best;
  for (std::size_t j = 0; j < study.config.tunables.names.size(); ++j)
    best[py::str(study.config.tunables.names[j])] = study.best_params[j];
  d["best_params"] = best;
  d["best_value"] = study.best_value;
  d["best_p0"] = study.best_p0 ? py::object(py::float_(*study.best_p0)) : py::none();
  d["baseline_value"] = study.config.baseline_value;
  d["total_evaluations"] = study.total_evaluations;
  d["objective_calls"] = study.objective_calls;
  d["resolved_order"] = study.resolved_order;
  d["stages"] = [&] {
    py::list stages;
    for (const StageRecord& s : study.stages) {
      py::dict sd;
      sd["stage_index"] = s.stage_index;
      sd["target_param"] = s.target_param;
      sd["sampler"] = to_string(s.sampler);
      sd["probe"] = s.probe;
      sd["trials"] = s.trials.size();
      sd["incumbent_value_after"] = s.incumbent_value_after;
      sd["best_trial_value"] = s.best_trial_value;
      stages.append(sd);
    }
    return stages;
  }();
  return d;
}

PortfolioAssignment assignment_from(const std::string& default_kind,
                                    const std::map<std::string, std::string>& overrides) {
  PortfolioAssignment a;
  a.default_kind = sampler_kind_from_string(default_kind);
  for (const auto& [name, kind] : overrides) a.overrides[name] = sampler_kind_from_string(kind);
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CIM-CACm simulator, Wishart planted instances and hyperparameter tuning";

  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("index"),
        "splitmix64-style seed derivation, bit-exact across platforms");

  py::class_<IsingInstance>(m, "IsingInstance")
      .def_property_readonly("n_spins", &IsingInstance::n_spins)
      .def_property_readonly("couplings",
                             [](const IsingInstance& inst) { return inst.couplings(); },
                             "row-major n*n coupling matrix")
      .def_property_readonly("planted",
                             [](const IsingInstance& inst) {
                               return std::vector<int>(inst.planted().begin(),
                                                       inst.planted().end());
                             })
      .def_property_readonly("ground_energy", &IsingInstance::ground_energy)
      .def_property_readonly("meta",
                             [](const IsingInstance& inst) {
                               py::dict d;
                               d["m"] = inst.meta().m_columns;
                               d["seed"] = inst.meta().seed;
                               d["planted_choice"] = to_string(inst.meta().planted);
                               return d;
                             })
      .def("__repr__", [](const IsingInstance& inst) {
        return "<IsingInstance n=" + std::to_string(inst.n_spins()) +
               " m=" + std::to_string(inst.meta().m_columns) + ">";
      });

  m.def(
      "generate_wishart",
      [](int n, int m_columns, std::uint64_t seed, const std::string& planted) {
        WishartSpec spec{n, m_columns, seed, planted_choice_from_string(planted)};
        return generate_wishart(spec);
      },
      py::arg("n"), py::arg("m"), py::arg("seed"), py::arg("planted") = "all_ones");

  m.def("energy", [](const IsingInstance& inst, const std::vector<int>& spins) {
    SpinConfig s;
    s.reserve(spins.size());
    for (int v : spins) s.push_back(static_cast<Spin>(v));
    return energy(inst, s);
  });

  m.def("brute_force_ground", [](const IsingInstance& inst) {
    auto [config, value] = brute_force_ground(inst);
    return py::make_tuple(std::vector<int>(config.begin(), config.end()), value);
  });

  m.def("is_ground_hit", &is_ground_hit, py::arg("instance"), py::arg("achieved_energy"),
        py::arg("rel_tol") = kGroundRelTol);

  m.def("save_instance", &save_instance);
  m.def("load_instance", &load_instance);

  py::class_<CacmParams>(m, "CacmParams")
      .def(py::init([](int steps, double beta1, double beta2, double alpha, double gamma,
                       double xi, double dt) {
             CacmParams p{steps, beta1, beta2, alpha, gamma, xi, dt};
             p.validate();
             return p;
           }),
           py::arg("steps") = 1000, py::arg("beta1") = 1.185, py::arg("beta2") = 1.185,
           py::arg("alpha") = 0.170, py::arg("gamma") = 1.270, py::arg("xi") = 0.070,
           py::arg("dt") = 0.5)
      .def_readwrite("steps", &CacmParams::steps)
      .def_readwrite("beta1", &CacmParams::beta1)
      .def_readwrite("beta2", &CacmParams::beta2)
      .def_readwrite("alpha", &CacmParams::alpha)
      .def_readwrite("gamma", &CacmParams::gamma)
      .def_readwrite("xi", &CacmParams::xi)
      .def_readwrite("dt", &CacmParams::dt);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("best_energy", &RunResult::best_energy)
      .def_readonly("hit_ground", &RunResult::hit_ground)
      .def_readonly("steps_to_first_hit", &RunResult::steps_to_first_hit)
      .def_readonly("diverged", &RunResult::diverged);

  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("p0", &EvalResult::p0)
      .def_readonly("tts", &EvalResult::tts)
      .def_readonly("runs", &EvalResult::runs)
      .def_readonly("mean_best_energy", &EvalResult::mean_best_energy)
      .def_readonly("diverged_runs", &EvalResult::diverged_runs);

  m.def("beta_schedule", &beta_schedule);
  m.def("tts", &tts, py::arg("p0"), py::arg("steps"));
  m.def("cacm_run", &cacm_run, py::arg("instance"), py::arg("params"), py::arg("seed"),
        py::arg("rel_tol") = kGroundRelTol);
  m.def("evaluate", &evaluate, py::arg("instance"), py::arg("params"), py::arg("runs"),
        py::arg("master_seed"), py::arg("rel_tol") = kGroundRelTol, py::arg("workers") = 0,
        py::call_guard<py::gil_scoped_release>());

  py::class_<Sampler>(m, "Sampler")
      .def("ask", &Sampler::ask)
      .def("tell", &Sampler::tell)
      .def("inject", &Sampler::inject)
      .def_property_readonly("kind", [](const Sampler& s) { return to_string(s.kind()); })
      .def_property_readonly("history", [](const Sampler& s) {
        py::list entries;
        for (const TrialRecord& r : s.history()) {
          py::dict d;
          d["trial_id"] = r.trial_id;
          d["point"] = r.point;
          d["value"] = r.value;
          entries.append(d);
        }
        return entries;
      });

  m.def(
      "make_sampler",
      [](const std::string& kind, const std::vector<std::tuple<std::string, double, double>>& ranges,
         std::uint64_t seed, long budget_hint, std::optional<std::vector<double>> initial_point) {
        return make_sampler(sampler_kind_from_string(kind), space_from_ranges(ranges), seed,
                            budget_hint, std::move(initial_point));
      },
      py::arg("kind"), py::arg("ranges"), py::arg("seed"), py::arg("budget_hint"),
      py::arg("initial_point") = std::nullopt);

  m.def(
      "grid_points",
      [](const std::vector<std::tuple<std::string, double, double>>& ranges, long budget) {
        return grid_points(space_from_ranges(ranges), budget);
      },
      py::arg("ranges"), py::arg("budget"));

  py::class_<Study>(m, "Study")
      .def_property_readonly("best_params", [](const Study& s) { return s.best_params; })
      .def_property_readonly("best_value", [](const Study& s) { return s.best_value; })
      .def_property_readonly("best_p0", [](const Study& s) { return s.best_p0; })
      .def_property_readonly("total_evaluations",
                             [](const Study& s) { return s.total_evaluations; })
      .def_property_readonly("resolved_order", [](const Study& s) { return s.resolved_order; })
      .def("summary", &study_summary)
      .def("to_jsonl", &study_to_jsonl);

  m.def("save_study", &save_study);
  m.def("load_study", &load_study);

  m.def(
      "default_tunables",
      [] {
        const TunableSet t = default_tunables();
        py::dict d;
        d["names"] = t.names;
        d["initial_values"] = t.initial_values;
        py::list bounds;
        for (const ParamRange& r : t.space.ranges)
          bounds.append(py::make_tuple(r.name, r.low, r.high));
        d["bounds"] = bounds;
        return d;
      },
      "known-best starting values and search bounds");

  m.def(
      "make_solver_objective",
      [](const IsingInstance& instance, int steps, double dt, int runs, std::uint64_t eval_seed,
         double rel_tol, int workers) {
        auto owned = std::make_shared<IsingInstance>(instance);
        ObjectiveSpec spec{owned.get(), steps, dt, runs, eval_seed, rel_tol, workers};
        ObjectiveFn fn = make_solver_objective(spec, default_tunables());
        return std::function<py::tuple(const std::vector<double>&)>(
            [owned, fn](const std::vector<double>& point) {
              const TrialOutcome out = fn(point);
              return py::make_tuple(out.value,
                                    out.p0 ? py::object(py::float_(*out.p0)) : py::none());
            });
      },
      py::arg("instance"), py::arg("steps") = 1000, py::arg("dt") = 0.5, py::arg("runs") = 100,
      py::arg("eval_seed") = 0, py::arg("rel_tol") = kGroundRelTol, py::arg("workers") = 0,
      "objective over (beta1, beta2, alpha, gamma, xi) returning (tts, p0)");

  m.def(
      "conventional",
      [](long budget, const std::string& sampler, const py::function& objective,
         std::uint64_t seed) {
        return conventional(budget, default_tunables(), sampler_kind_from_string(sampler),
                            wrap_objective(objective), seed);
      },
      py::arg("budget"), py::arg("sampler"), py::arg("objective"), py::arg("seed"));

  m.def(
      "method_a",
      [](long budget, const std::string& sampler, const py::function& objective,
         std::uint64_t seed, std::optional<std::vector<std::string>> order,
         const std::map<std::string, std::string>& assign) {
        const TunableSet tunables = default_tunables();
        return method_a(budget, tunables, order ? *order : tunables.names,
                        assignment_from(sampler, assign), wrap_objective(objective), seed);
      },
      py::arg("budget"), py::arg("sampler"), py::arg("objective"), py::arg("seed"),
      py::arg("order") = std::nullopt, py::arg("assign") = std::map<std::string, std::string>{});

  m.def(
      "method_b",
      [](long budget, int y_initial, const std::string& sampler, const py::function& objective,
         std::uint64_t seed, const std::map<std::string, std::string>& assign,
         bool literal_descending_order) {
        return method_b(budget, y_initial, default_tunables(), assignment_from(sampler, assign),
                        wrap_objective(objective), seed, nlohmann::json::object(),
                        literal_descending_order);
      },
      py::arg("budget"), py::arg("y_initial"), py::arg("sampler"), py::arg("objective"),
      py::arg("seed"), py::arg("assign") = std::map<std::string, std::string>{},
      py::arg("literal_descending_order") = false);

  m.def("speedup", &speedup, py::arg("conventional_tts"), py::arg("proposed_tts"));

  m.attr("GROUND_REL_TOL") = kGroundRelTol;
  m.attr("__version__") = "0.1.0";
}
