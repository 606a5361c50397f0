#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "cevo/harness.hpp"
#include "cevo/solver.hpp"

namespace {

using namespace cevo;

constexpr int kOk = 0;
constexpr int kContract = 2;
constexpr int kIo = 3;

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    std::size_t workers = 1;
    std::string plan;
    bool paper_scale = false;
};

ExperimentPlan load_plan(const Globals& g)
{
    ExperimentPlan base = g.paper_scale ? ExperimentPlan::paper_scale() : ExperimentPlan::desk();
    if (!g.plan.empty())
        base = plan_from_json(read_json_file(g.plan), base);
    base.workers = g.workers;
    base.validate();
    return base;
}

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty())
        std::cout << text;
    else
        write_text_file(g.out, text);
}

Bounds plan_bounds(const ExperimentPlan& p, std::size_t n)
{
    return Bounds::uniform(n, p.variable_lower, p.variable_upper);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constrained DE instance toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed (master seed for experiments)");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--workers", g.workers, "Concurrent worker threads")->check(CLI::PositiveNumber);
    app.add_option("--plan", g.plan, "Experiment plan JSON");
    app.add_flag("--paper-scale", g.paper_scale, "Use the full-scale configuration");

    std::string objective = "sphere";
    std::size_t dimension = 0;
    std::string tmpl = "L";
    std::string direction = "easy";
    std::string instance_path;
    std::string config_path;
    std::size_t samples = 0;
    std::size_t resolution = 100;

    auto* generate = app.add_subcommand("generate", "Random constraint set with the origin feasible");
    generate->add_option("--objective", objective);
    generate->add_option("--dimension", dimension);
    generate->add_option("--template", tmpl, "Constraint kinds, e.g. LLQ");

    auto* solve_cmd = app.add_subcommand("solve", "Solve an instance and print the result JSON");
    solve_cmd->add_option("instance", instance_path)->required();
    solve_cmd->add_option("--config", config_path, "Solver config JSON");

    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve an easy or hard instance");
    evolve_cmd->add_option("--objective", objective);
    evolve_cmd->add_option("--dimension", dimension);
    evolve_cmd->add_option("--template", tmpl);
    evolve_cmd->add_option("--direction", direction)->check(CLI::IsMember({"easy", "hard"}));

    auto* features_cmd = app.add_subcommand("features", "Feature CSV row of an instance");
    features_cmd->add_option("instance", instance_path)->required();
    features_cmd->add_option("--samples", samples, "Monte Carlo samples for the feasibility ratio");

    auto* experiment_cmd = app.add_subcommand("experiment", "Run an experiment plan and write the report");

    auto* raster_cmd = app.add_subcommand("raster", "0/1 feasibility grid of a 2-D instance");
    raster_cmd->add_option("instance", instance_path)->required();
    raster_cmd->add_option("--resolution", resolution)->check(CLI::PositiveNumber);

    for (auto* sub : app.get_subcommands({}))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kContract;
    }

    try {
        if (generate->parsed()) {
            const auto plan = load_plan(g);
            const std::size_t n = dimension ? dimension : plan.dimension;
            const GenomeSpec spec{n, template_from_key(tmpl), plan.coeff_lower, plan.coeff_upper};
            spec.validate();
            Rng rng(g.seed);
            const auto genome = random_genome(spec, rng);
            emit(g, dump_json(to_json(decode(spec, genome, objective_from_string(objective), plan_bounds(plan, n)))));
        } else if (solve_cmd->parsed()) {
            const auto instance = load_instance(instance_path);
            SolverConfig cfg = g.paper_scale ? SolverConfig{} : SolverConfig::desk();
            if (!config_path.empty())
                cfg = solver_config_from_json(read_json_file(config_path));
            else if (!g.plan.empty())
                cfg = load_plan(g).evolver.solver_config;
            emit(g, dump_json(to_json(solve(instance, cfg, g.seed))));
        } else if (evolve_cmd->parsed()) {
            const auto plan = load_plan(g);
            const std::size_t n = dimension ? dimension : plan.dimension;
            const GenomeSpec spec{n, template_from_key(tmpl), plan.coeff_lower, plan.coeff_upper};
            EvolverConfig cfg = plan.evolver;
            cfg.direction = direction_from_string(direction);
            cfg.seed = g.seed;
            cfg.workers = g.workers;
            const auto kind = objective_from_string(objective);
            const auto bounds = plan_bounds(plan, n);
            const auto result = evolve(spec, kind, bounds, cfg, [](std::size_t gen, std::span<const ConstraintGenome>, std::span<const std::size_t> fens) {
                const auto [lo, hi] = std::ranges::minmax(fens);
                std::fprintf(stderr, "generation %zu fen min %zu max %zu\n", gen, lo, hi);
            });
            const std::filesystem::path dir = g.out.empty() ? std::filesystem::path(".") : std::filesystem::path(g.out);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            save_instance(dir / "instance.json", decode(spec, result.best, kind, bounds));
            write_text_file(dir / "meta.json", dump_json(evolve_metadata(cfg, result)));
            std::printf("final_fen %zu\n", result.best_fen);
        } else if (features_cmd->parsed()) {
            const auto instance = load_instance(instance_path);
            const auto plan = load_plan(g);
            Rng rng(g.seed);
            const auto fv = feature_vector(instance, samples ? samples : plan.feature_samples, rng,
                                           std::filesystem::path(instance_path).stem().string());
            const auto k = instance.constraints.size();
            emit(g, feature_csv_header(k) + "\n" + feature_csv_row(fv, k) + "\n");
        } else if (experiment_cmd->parsed()) {
            auto plan = load_plan(g);
            if (app.get_option("--seed")->count() > 0)
                plan.master_seed = g.seed;
            if (!g.out.empty())
                plan.output_dir = g.out;
            const auto report = run_experiment(plan, [](const std::string& line) {
                std::fprintf(stderr, "%s\n", line.c_str());
            });
            std::printf("runs %zu executed %zu report %s\n", report.runs.size(), report.executed_runs,
                        plan.output_dir.string().c_str());
        } else if (raster_cmd->parsed()) {
            emit(g, raster_csv(load_instance(instance_path), resolution));
        }
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kContract;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    }
    return kOk;
}
