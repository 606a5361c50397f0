#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cevo/evolver.hpp"
#include "cevo/features.hpp"
#include "cevo/problem.hpp"

namespace cevo {

struct ExperimentPlan {
    std::vector<ObjectiveKind> objectives{ObjectiveKind::Sphere};
    std::size_t dimension = 5;
    std::vector<std::vector<ConstraintKind>> constraint_templates;
    std::size_t repeats = 10;
    /// Direction and seed are set per run.
    EvolverConfig evolver = EvolverConfig::desk();
    double variable_lower = -5.0;
    double variable_upper = 5.0;
    double coeff_lower = -5.0;
    double coeff_upper = 5.0;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "experiment";
    std::size_t workers = 1;
    std::size_t feature_samples = 1'000'000;

    void validate() const;

    /// n = 5, 100 evolver generations, fen_max 50,000, 10 repeats, 1-5
    /// linear constraints on Sphere.
    static ExperimentPlan desk();
    /// n = 30, 5000 generations, fen_max 300,000, 30 repeats, all four
    /// objectives, linear, quadratic and mixed five-constraint templates.
    static ExperimentPlan paper_scale();
};

Json to_json(const ExperimentPlan& plan);
/// Fields absent from `j` keep the values of `base`.
ExperimentPlan plan_from_json(const Json& j, ExperimentPlan base = ExperimentPlan::desk());

/// One (objective, template) combination of a plan.
struct Cell {
    std::size_t index = 0;
    ObjectiveKind objective = ObjectiveKind::Sphere;
    std::vector<ConstraintKind> constraint_template;
};

std::vector<Cell> plan_cells(const ExperimentPlan& plan);

struct RunRecord {
    std::size_t cell = 0;
    ObjectiveKind objective = ObjectiveKind::Sphere;
    std::string template_key;
    Direction direction = Direction::Easy;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t final_fen = 0;
    std::size_t generations = 0;
    std::vector<std::size_t> fitness_history;
    CopInstance instance;
    FeatureVector features;
};

std::string run_id(const RunRecord& r);

struct ReportTables {
    std::string fen_table;
    std::string feasibility_table;
    std::string angle_table;
    std::string boxplot;
    std::string features;
    std::string runs;
};

struct ExperimentReport {
    std::vector<RunRecord> runs;
    ReportTables tables;
    /// Evolver runs executed by this call (completed runs found on disk are
    /// loaded instead).
    std::size_t executed_runs = 0;
};

using ProgressLog = std::function<void(const std::string&)>;

ExperimentReport run_experiment(const ExperimentPlan& plan, const ProgressLog& log = {});

/// Builds every report table. Cells (and directions) with no runs appear as
/// rows with empty value columns.
ReportTables summarize(std::span<const RunRecord> runs, std::span<const Cell> cells);

void write_report(const std::filesystem::path& dir, const ReportTables& tables);

/// resolution x resolution grid of 0/1 feasibility at cell centres over the
/// bounds of a 2-D instance. Row r holds x2 = lower + (r + 0.5) * h, column c
/// holds x1 = lower + (c + 0.5) * h; a centre with g <= 0 for all constraints
/// is 1.
std::string raster_csv(const CopInstance& instance, std::size_t resolution);

class UnsupportedDimension : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

} // namespace cevo
