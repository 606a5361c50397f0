#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cevo/harness.hpp"

namespace py = pybind11;
using namespace cevo;

namespace {

CopInstance instance_from(const std::string& text) { return instance_from_json(Json::parse(text)); }

Json parse_object(const std::string& text)
{
    if (text.empty())
        return Json::object();
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("malformed JSON: ") + e.what());
    }
}

GenomeSpec spec_for(std::size_t dimension, const std::string& key, const ExperimentPlan& plan)
{
    GenomeSpec spec{dimension, template_from_key(key), plan.coeff_lower, plan.coeff_upper};
    spec.validate();
    return spec;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Constrained DE instance toolkit";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const Json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("evaluate_objective", [](const std::string& kind, const std::vector<double>& x) {
        return evaluate_objective(objective_from_string(kind), x);
    });

    m.def("violation", [](const std::string& instance, const std::vector<double>& x) {
        return violation(instance_from(instance), x);
    });

    m.def("epsilon_compare", [](double f1, double phi1, double f2, double phi2, double eps) {
        switch (epsilon_compare(f1, phi1, f2, phi2, eps)) {
        case Ordering::Less:
            return "less";
        case Ordering::Greater:
            return "greater";
        default:
            return "equal";
        }
    });

    m.def(
        "generate",
        [](std::size_t dimension, const std::string& tmpl, const std::string& objective, std::uint64_t seed) {
            const auto plan = ExperimentPlan::desk();
            const auto spec = spec_for(dimension, tmpl, plan);
            Rng rng(seed);
            const auto genome = random_genome(spec, rng);
            return dump_json(to_json(decode(spec, genome, objective_from_string(objective),
                                            Bounds::uniform(dimension, plan.variable_lower, plan.variable_upper))));
        },
        py::arg("dimension"), py::arg("template"), py::arg("objective") = "sphere", py::arg("seed") = 1);

    m.def(
        "solve",
        [](const std::string& instance, const std::string& config, std::uint64_t seed) {
            const auto inst = instance_from(instance);
            const auto cfg = config.empty() ? SolverConfig::desk() : solver_config_from_json(parse_object(config));
            py::gil_scoped_release release;
            return dump_json(to_json(solve(inst, cfg, seed)));
        },
        py::arg("instance"), py::arg("config") = "", py::arg("seed") = 1);

    m.def(
        "evolve",
        [](std::size_t dimension, const std::string& tmpl, const std::string& objective, const std::string& direction,
           const std::string& plan_json, std::uint64_t seed) {
            const auto plan = plan_from_json(parse_object(plan_json));
            const auto spec = spec_for(dimension, tmpl, plan);
            auto cfg = plan.evolver;
            cfg.direction = direction_from_string(direction);
            cfg.seed = seed;
            const auto kind = objective_from_string(objective);
            const auto bounds = Bounds::uniform(dimension, plan.variable_lower, plan.variable_upper);
            EvolveResult result;
            {
                py::gil_scoped_release release;
                result = evolve(spec, kind, bounds, cfg);
            }
            return py::make_tuple(dump_json(to_json(decode(spec, result.best, kind, bounds))),
                                  dump_json(evolve_metadata(cfg, result)));
        },
        py::arg("dimension"), py::arg("template"), py::arg("objective"), py::arg("direction"),
        py::arg("plan") = "", py::arg("seed") = 1);

    m.def(
        "features",
        [](const std::string& instance, std::size_t samples, std::uint64_t seed, const std::string& id) {
            const auto inst = instance_from(instance);
            Rng rng(seed);
            const auto fv = feature_vector(inst, samples, rng, id);
            const auto k = inst.constraints.size();
            return py::make_tuple(feature_csv_header(k), feature_csv_row(fv, k));
        },
        py::arg("instance"), py::arg("samples") = 1'000'000, py::arg("seed") = 1, py::arg("instance_id") = "");

    m.def(
        "raster",
        [](const std::string& instance, std::size_t resolution) {
            return raster_csv(instance_from(instance), resolution);
        },
        py::arg("instance"), py::arg("resolution") = 100);

    m.def(
        "run_experiment",
        [](const std::string& plan_json) {
            const auto plan = plan_from_json(parse_object(plan_json));
            ExperimentReport report;
            {
                py::gil_scoped_release release;
                report = run_experiment(plan);
            }
            py::dict out;
            out["runs"] = report.runs.size();
            out["executed_runs"] = report.executed_runs;
            out["output_dir"] = plan.output_dir.string();
            out["fen_table"] = report.tables.fen_table;
            return out;
        },
        py::arg("plan"));
}
