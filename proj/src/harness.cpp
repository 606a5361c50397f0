#include "cevo/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>

#include "cevo/parallel.hpp"
#include "cevo/stats.hpp"

namespace cevo {

namespace fs = std::filesystem;

namespace {

std::vector<std::vector<ConstraintKind>> linear_templates()
{
    std::vector<std::vector<ConstraintKind>> t;
    for (std::size_t k = 1; k <= 5; ++k)
        t.emplace_back(k, ConstraintKind::Linear);
    return t;
}

std::string padded(std::size_t v, int width)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, v);
    return buf;
}

constexpr Direction kDirections[] = {Direction::Easy, Direction::Hard};

} // namespace

void ExperimentPlan::validate() const
{
    require(!objectives.empty(), "plan: no objectives");
    require(dimension >= 1, "plan: dimension must be >= 1");
    require(!constraint_templates.empty(), "plan: no constraint templates");
    for (const auto& t : constraint_templates)
        require(!t.empty(), "plan: empty constraint template");
    require(repeats >= 1, "plan: repeats must be >= 1");
    require(variable_lower <= 0.0 && 0.0 <= variable_upper && variable_lower < variable_upper,
            "plan: variable bounds must contain the origin");
    require(coeff_lower < coeff_upper && coeff_lower <= 0.0, "plan: invalid coefficient bounds");
    require(feature_samples >= 1, "plan: feature_samples must be >= 1");
    evolver.validate();
    evolver.solver_config.validate(dimension);
}

ExperimentPlan ExperimentPlan::desk()
{
    ExperimentPlan p;
    p.constraint_templates = linear_templates();
    return p;
}

ExperimentPlan ExperimentPlan::paper_scale()
{
    ExperimentPlan p;
    p.objectives = {ObjectiveKind::Sphere, ObjectiveKind::Ackley, ObjectiveKind::Rosenbrock, ObjectiveKind::Schaffer};
    p.dimension = 30;
    p.repeats = 30;
    p.evolver = EvolverConfig{};
    p.evolver.solver_config.fen_max = 300000;
    p.constraint_templates = linear_templates();
    for (std::size_t k = 1; k <= 5; ++k)
        p.constraint_templates.emplace_back(k, ConstraintKind::Quadratic);
    for (std::size_t lin = 1; lin <= 4; ++lin) {
        std::vector<ConstraintKind> mix(lin, ConstraintKind::Linear);
        mix.insert(mix.end(), 5 - lin, ConstraintKind::Quadratic);
        p.constraint_templates.push_back(std::move(mix));
    }
    return p;
}

Json to_json(const ExperimentPlan& p)
{
    Json j;
    Json objectives = Json::array();
    for (auto o : p.objectives)
        objectives.push_back(std::string(to_string(o)));
    j["objectives"] = std::move(objectives);
    j["dimension"] = p.dimension;
    Json templates = Json::array();
    for (const auto& t : p.constraint_templates)
        templates.push_back(template_key(t));
    j["constraint_templates"] = std::move(templates);
    j["repeats"] = p.repeats;
    j["evolver"] = {{"population_size", p.evolver.population_size},
                    {"generations", p.evolver.generations},
                    {"crossover_rate", p.evolver.crossover_rate},
                    {"scale_factor", p.evolver.scale_factor},
                    {"crossover_rule", p.evolver.crossover_rule == CrossoverRule::CutpointOrRate ? "or" : "and"}};
    j["solver"] = to_json(p.evolver.solver_config);
    j["variable_bounds"] = Json::array({p.variable_lower, p.variable_upper});
    j["coefficient_bounds"] = Json::array({p.coeff_lower, p.coeff_upper});
    j["master_seed"] = p.master_seed;
    j["output_dir"] = p.output_dir.string();
    j["workers"] = p.workers;
    j["feature_samples"] = p.feature_samples;
    return j;
}

ExperimentPlan plan_from_json(const Json& j, ExperimentPlan p)
{
    require(j.is_object(), "plan must be a JSON object");
    try {
        if (j.contains("objectives")) {
            p.objectives.clear();
            for (const auto& o : j.at("objectives"))
                p.objectives.push_back(objective_from_string(o.get<std::string>()));
        }
        p.dimension = j.value("dimension", p.dimension);
        if (j.contains("constraint_templates")) {
            p.constraint_templates.clear();
            for (const auto& t : j.at("constraint_templates"))
                p.constraint_templates.push_back(template_from_key(t.get<std::string>()));
        }
        p.repeats = j.value("repeats", p.repeats);
        if (j.contains("evolver")) {
            const auto& e = j.at("evolver");
            p.evolver.population_size = e.value("population_size", p.evolver.population_size);
            p.evolver.generations = e.value("generations", p.evolver.generations);
            p.evolver.crossover_rate = e.value("crossover_rate", p.evolver.crossover_rate);
            p.evolver.scale_factor = e.value("scale_factor", p.evolver.scale_factor);
            if (e.contains("crossover_rule")) {
                const auto rule = e.at("crossover_rule").get<std::string>();
                require(rule == "or" || rule == "and", "plan: crossover_rule must be \"or\" or \"and\"");
                p.evolver.crossover_rule = rule == "or" ? CrossoverRule::CutpointOrRate : CrossoverRule::CutpointAndRate;
            }
        }
        if (j.contains("solver"))
            p.evolver.solver_config = solver_config_from_json(j.at("solver"));
        if (j.contains("variable_bounds")) {
            p.variable_lower = j.at("variable_bounds").at(0).get<double>();
            p.variable_upper = j.at("variable_bounds").at(1).get<double>();
        }
        if (j.contains("coefficient_bounds")) {
            p.coeff_lower = j.at("coefficient_bounds").at(0).get<double>();
            p.coeff_upper = j.at("coefficient_bounds").at(1).get<double>();
        }
        p.master_seed = j.value("master_seed", p.master_seed);
        if (j.contains("output_dir"))
            p.output_dir = j.at("output_dir").get<std::string>();
        p.workers = j.value("workers", p.workers);
        p.feature_samples = j.value("feature_samples", p.feature_samples);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("malformed plan: ") + e.what());
    }
    p.validate();
    return p;
}

std::vector<Cell> plan_cells(const ExperimentPlan& plan)
{
    std::vector<Cell> cells;
    for (auto objective : plan.objectives)
        for (const auto& t : plan.constraint_templates)
            cells.push_back(Cell{cells.size(), objective, t});
    return cells;
}

std::string run_id(const RunRecord& r)
{
    return "c" + padded(r.cell, 3) + "_" + std::string(to_string(r.objective)) + "_" + r.template_key + "_" +
           std::string(to_string(r.direction)) + "_r" + padded(r.run, 3);
}

namespace {

struct Job {
    const Cell* cell;
    Direction direction;
    std::size_t run;
};

RunRecord make_record(const Job& job, std::uint64_t master_seed)
{
    RunRecord r;
    r.cell = job.cell->index;
    r.objective = job.cell->objective;
    r.template_key = template_key(job.cell->constraint_template);
    r.direction = job.direction;
    r.run = job.run;
    r.seed = derive_seed(master_seed, job.cell->index, job.run);
    return r;
}

Json run_metadata(const RunRecord& r)
{
    Json j;
    j["direction"] = std::string(to_string(r.direction));
    j["seed"] = r.seed;
    j["final_fen"] = r.final_fen;
    j["generations"] = r.generations;
    j["fitness_history"] = r.fitness_history;
    j["objective"] = std::string(to_string(r.objective));
    j["template"] = r.template_key;
    j["cell"] = r.cell;
    j["run"] = r.run;
    return j;
}

bool load_completed(const fs::path& runs_dir, RunRecord& r)
{
    const auto meta_path = runs_dir / (run_id(r) + ".meta.json");
    const auto inst_path = runs_dir / (run_id(r) + ".instance.json");
    if (!fs::exists(meta_path) || !fs::exists(inst_path))
        return false;
    const auto meta = read_json_file(meta_path);
    if (meta.value("seed", std::uint64_t{0}) != r.seed)
        return false;
    r.final_fen = meta.at("final_fen").get<std::size_t>();
    r.generations = meta.at("generations").get<std::size_t>();
    r.fitness_history = meta.at("fitness_history").get<std::vector<std::size_t>>();
    r.instance = load_instance(inst_path);
    return true;
}

std::string csv_line(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

bool is_linear_template(const std::string& key) { return key.find('Q') == std::string::npos; }

struct GroupKey {
    std::size_t cell;
    int direction;
    auto operator<=>(const GroupKey&) const = default;
};

std::vector<std::string> summary_cells(const std::vector<double>& values, bool five_number)
{
    if (values.empty())
        return std::vector<std::string>(five_number ? 5 : 4, "");
    const auto s = summarize_values(values);
    if (five_number)
        return {format_real(s.min), format_real(s.q1), format_real(s.median), format_real(s.q3), format_real(s.max)};
    return {format_real(s.mean), format_real(s.median), format_real(s.q1), format_real(s.q3)};
}

} // namespace

ReportTables summarize(std::span<const RunRecord> runs, std::span<const Cell> cells)
{
    std::vector<const RunRecord*> sorted;
    for (const auto& r : runs)
        sorted.push_back(&r);
    std::ranges::sort(sorted, [](const RunRecord* a, const RunRecord* b) {
        return std::tuple(a->cell, static_cast<int>(a->direction), a->seed, a->run) <
               std::tuple(b->cell, static_cast<int>(b->direction), b->seed, b->run);
    });
    std::map<GroupKey, std::vector<const RunRecord*>> groups;
    for (const auto* r : sorted)
        groups[GroupKey{r->cell, static_cast<int>(r->direction)}].push_back(r);

    ReportTables t;
    t.fen_table = csv_line({"objective", "template", "direction", "mean_fen", "median_fen", "q1", "q3"});
    t.feasibility_table =
        csv_line({"objective", "template", "constraint_count", "direction", "mean_ratio", "median_ratio", "q1", "q3"});
    t.angle_table = csv_line({"objective", "template", "direction", "pair", "median_angle", "count"});
    t.boxplot =
        csv_line({"objective", "template", "direction", "feature", "constraint", "min", "q1", "median", "q3", "max"});
    t.runs = csv_line({"objective", "template", "direction", "run", "seed", "final_fen", "ratio"});

    std::size_t max_k = 0;
    for (const auto& c : cells)
        max_k = std::max(max_k, c.constraint_template.size());
    t.features = feature_csv_header(max_k) + "\n";

    for (const auto& cell : cells) {
        const auto key = template_key(cell.constraint_template);
        const std::string objective(to_string(cell.objective));
        const std::size_t k = cell.constraint_template.size();
        for (auto dir : kDirections) {
            const std::string direction(to_string(dir));
            const auto it = groups.find(GroupKey{cell.index, static_cast<int>(dir)});
            static const std::vector<const RunRecord*> none;
            const auto& members = it == groups.end() ? none : it->second;
            const std::vector<std::string> head{objective, key, direction};
            const auto row = [&](std::vector<std::string> extra, const std::vector<std::string>& values) {
                std::vector<std::string> cells_out = head;
                cells_out.insert(cells_out.end(), extra.begin(), extra.end());
                cells_out.insert(cells_out.end(), values.begin(), values.end());
                return csv_line(cells_out);
            };

            std::vector<double> fen;
            std::vector<double> ratio;
            for (const auto* r : members) {
                fen.push_back(static_cast<double>(r->final_fen));
                ratio.push_back(r->features.ratio);
            }
            t.fen_table += row({}, summary_cells(fen, false));
            {
                std::vector<std::string> line{objective, key, std::to_string(k), direction};
                const auto values = summary_cells(ratio, false);
                line.insert(line.end(), values.begin(), values.end());
                t.feasibility_table += csv_line(line);
            }

            if (is_linear_template(key)) {
                std::size_t idx = 0;
                for (std::size_t i = 0; i < k; ++i) {
                    for (std::size_t j = i + 1; j < k; ++j, ++idx) {
                        std::vector<double> angles;
                        for (const auto* r : members)
                            if (idx < r->features.angles.size() && r->features.angles[idx])
                                angles.push_back(*r->features.angles[idx]);
                        const auto pair = std::to_string(i + 1) + "_" + std::to_string(j + 1);
                        t.angle_table += row({pair}, {angles.empty() ? "" : format_real(quantile(angles, 0.5)),
                                                      std::to_string(angles.size())});
                    }
                }
            }

            for (std::size_t c = 0; c < k; ++c) {
                const auto column = [&](const char* feature, auto&& value) {
                    std::vector<double> v;
                    for (const auto* r : members)
                        if (auto x = value(*r); x)
                            v.push_back(*x);
                    if (v.empty() && !members.empty())
                        return;
                    t.boxplot += row({feature, std::to_string(c + 1)}, summary_cells(v, true));
                };
                column("sd", [&](const RunRecord& r) -> std::optional<double> { return r.features.stats.at(c).stddev; });
                column("dist", [&](const RunRecord& r) -> std::optional<double> { return r.features.distance.at(c); });
                if (cell.constraint_template[c] == ConstraintKind::Quadratic) {
                    column("sdq", [&](const RunRecord& r) -> std::optional<double> {
                        const auto& s = r.features.split.at(c);
                        return s ? std::optional(s->quadratic.stddev) : std::nullopt;
                    });
                    column("sdl", [&](const RunRecord& r) -> std::optional<double> {
                        const auto& s = r.features.split.at(c);
                        return s ? std::optional(s->linear.stddev) : std::nullopt;
                    });
                }
            }

            for (const auto* r : members) {
                t.runs += csv_line({objective, key, direction, std::to_string(r->run), std::to_string(r->seed),
                                    std::to_string(r->final_fen), format_real(r->features.ratio)});
                t.features += feature_csv_row(r->features, max_k) + "\n";
            }
        }
    }
    return t;
}

void write_report(const fs::path& dir, const ReportTables& tables)
{
    write_text_file(dir / "fen_table.csv", tables.fen_table);
    write_text_file(dir / "feasibility_table.csv", tables.feasibility_table);
    write_text_file(dir / "angle_table.csv", tables.angle_table);
    write_text_file(dir / "boxplot.csv", tables.boxplot);
    write_text_file(dir / "features.csv", tables.features);
    write_text_file(dir / "runs.csv", tables.runs);
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const ProgressLog& log)
{
    plan.validate();
    const auto cells = plan_cells(plan);
    const auto runs_dir = plan.output_dir / "runs";
    std::error_code ec;
    fs::create_directories(runs_dir, ec);
    if (ec || !fs::is_directory(runs_dir))
        throw IoError("cannot create output directory " + runs_dir.string());
    write_text_file(plan.output_dir / "plan.json", dump_json(to_json(plan)));

    std::vector<Job> jobs;
    for (const auto& cell : cells)
        for (std::size_t run = 0; run < plan.repeats; ++run)
            for (auto dir : kDirections)
                jobs.push_back(Job{&cell, dir, run});

    const Bounds bounds = Bounds::uniform(plan.dimension, plan.variable_lower, plan.variable_upper);
    ExperimentReport report;
    report.runs.resize(jobs.size());
    std::mutex log_mutex;
    std::size_t executed = 0;

    parallel_for(jobs.size(), plan.workers, [&](std::size_t i) {
        const auto& job = jobs[i];
        RunRecord r = make_record(job, plan.master_seed);
        const GenomeSpec spec{plan.dimension, job.cell->constraint_template, plan.coeff_lower, plan.coeff_upper};
        if (!load_completed(runs_dir, r)) {
            EvolverConfig cfg = plan.evolver;
            cfg.direction = job.direction;
            cfg.seed = r.seed;
            cfg.workers = 1;
            const auto result = evolve(spec, job.cell->objective, bounds, cfg);
            r.final_fen = result.best_fen;
            r.generations = cfg.generations;
            r.fitness_history = result.fitness_history;
            r.instance = decode(spec, result.best, job.cell->objective, bounds);
            save_instance(runs_dir / (run_id(r) + ".instance.json"), r.instance);
            // metadata last: its presence marks the run complete
            write_text_file(runs_dir / (run_id(r) + ".meta.json"), dump_json(run_metadata(r)));
            std::lock_guard lock(log_mutex);
            ++executed;
            if (log)
                log("finished " + run_id(r) + " fen=" + std::to_string(r.final_fen));
        }
        Rng feature_rng(derive_seed(r.seed, r.cell, 0xfea7u + static_cast<std::uint64_t>(r.direction)));
        r.features = feature_vector(r.instance, plan.feature_samples, feature_rng, run_id(r));
        report.runs[i] = std::move(r);
    });

    report.executed_runs = executed;
    report.tables = summarize(report.runs, cells);
    write_report(plan.output_dir, report.tables);
    return report;
}

std::string raster_csv(const CopInstance& instance, std::size_t resolution)
{
    instance.validate();
    if (instance.dimension != 2)
        throw UnsupportedDimension("raster: only 2-D instances are supported (got dimension " +
                                   std::to_string(instance.dimension) + ")");
    require(resolution >= 1, "raster: resolution must be >= 1");
    const auto& lo = instance.bounds.lower;
    const auto& hi = instance.bounds.upper;
    const double hx = (hi[0] - lo[0]) / static_cast<double>(resolution);
    const double hy = (hi[1] - lo[1]) / static_cast<double>(resolution);
    std::string out;
    out.reserve(resolution * resolution * 2);
    std::vector<double> x(2);
    for (std::size_t r = 0; r < resolution; ++r) {
        x[1] = lo[1] + (static_cast<double>(r) + 0.5) * hy;
        for (std::size_t c = 0; c < resolution; ++c) {
            x[0] = lo[0] + (static_cast<double>(c) + 0.5) * hx;
            if (c)
                out += ',';
            out += violation(instance, x) == 0.0 ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

} // namespace cevo
