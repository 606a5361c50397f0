#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cevo/error.hpp"
#include "cevo/problem.hpp"
#include "cevo/random.hpp"
#include "cevo/solver.hpp"

namespace cevo {

enum class ConstraintKind { Linear, Quadratic };

/// Layout of a constraint genome: which constraints, in which order, and the
/// interval every coefficient lives in.
struct GenomeSpec {
    std::size_t dimension = 0;
    std::vector<ConstraintKind> constraint_template;
    double coeff_lower = -5.0;
    double coeff_upper = 5.0;

    void validate() const;
    std::size_t genome_length() const;
    /// True for genes holding a constraint offset b.
    std::vector<bool> offset_mask() const;

    bool operator==(const GenomeSpec&) const = default;
};

/// "LLQ" <-> {Linear, Linear, Quadratic}
std::string template_key(std::span<const ConstraintKind> kinds);
std::vector<ConstraintKind> template_from_key(std::string_view key);

/// Flat coefficients: per constraint, b then its n (linear) or 2n
/// (quadratic, interleaved q_i, l_i) coefficients.
struct ConstraintGenome {
    std::vector<double> genes;

    bool operator==(const ConstraintGenome&) const = default;
};

/// Clamps genes into [coeff_lower, coeff_upper] and offsets into [coeff_lower, 0].
void repair(const GenomeSpec& spec, ConstraintGenome& genome);

/// Whether `genome` satisfies the bound and b <= 0 invariants.
bool is_valid(const GenomeSpec& spec, const ConstraintGenome& genome);

template <RandomStream R>
ConstraintGenome random_genome(const GenomeSpec& spec, R& rng)
{
    spec.validate();
    const auto mask = spec.offset_mask();
    ConstraintGenome g;
    g.genes.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double hi = mask[i] ? 0.0 : spec.coeff_upper;
        g.genes[i] = spec.coeff_lower + (hi - spec.coeff_lower) * rng.uniform();
    }
    return g;
}

CopInstance decode(const GenomeSpec& spec, const ConstraintGenome& genome, ObjectiveKind objective,
                   const Bounds& bounds);

/// Inverse of decode for instances whose constraints follow `spec`.
ConstraintGenome encode(const GenomeSpec& spec, const CopInstance& instance);

/// FEN the solver spends on the decoded instance (fen_max when exhausted).
std::size_t genome_fitness(const ConstraintGenome& genome, const GenomeSpec& spec, ObjectiveKind objective,
                           const Bounds& bounds, const SolverConfig& solver_config, std::uint64_t solver_seed);

enum class CrossoverRule {
    /// gene fires when i == cutpoint or rand <= CR
    CutpointOrRate,
    /// gene fires when i == cutpoint and rand <= CR (literal listing)
    CutpointAndRate,
};

/// Trial genome for population[target_index]: three distinct donors, a random
/// cutpoint, per-gene donor arithmetic P3 + F (P1 - P2), then repair.
template <RandomStream R>
ConstraintGenome newsample(std::size_t target_index, std::span<const ConstraintGenome> population,
                           const GenomeSpec& spec, double F, double CR, R& rng,
                           CrossoverRule rule = CrossoverRule::CutpointOrRate)
{
    require(population.size() >= 4, "newsample: need at least four genomes");
    require(target_index < population.size(), "newsample: target index out of range");
    const std::size_t np = population.size();
    std::size_t p1, p2, p3;
    do
        p1 = rng.index(np);
    while (p1 == target_index);
    do
        p2 = rng.index(np);
    while (p2 == target_index || p2 == p1);
    do
        p3 = rng.index(np);
    while (p3 == target_index || p3 == p1 || p3 == p2);

    const auto& target = population[target_index].genes;
    const auto& a = population[p1].genes;
    const auto& b = population[p2].genes;
    const auto& c = population[p3].genes;
    const std::size_t len = target.size();
    require(a.size() == len && b.size() == len && c.size() == len, "newsample: genome length mismatch");

    const std::size_t cutpoint = rng.index(len);
    ConstraintGenome trial{target};
    for (std::size_t i = 0; i < len; ++i) {
        const bool fire = rule == CrossoverRule::CutpointOrRate ? (i == cutpoint || rng.uniform() <= CR)
                                                                : (i == cutpoint && rng.uniform() <= CR);
        if (fire)
            trial.genes[i] = c[i] + F * (a[i] - b[i]);
    }
    repair(spec, trial);
    return trial;
}

enum class Direction { Easy, Hard };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct EvolverConfig {
    Direction direction = Direction::Easy;
    std::size_t population_size = 40;
    std::size_t generations = 5000;
    double crossover_rate = 0.5;
    double scale_factor = 0.9;
    SolverConfig solver_config;
    std::uint64_t seed = 0;
    CrossoverRule crossover_rule = CrossoverRule::CutpointOrRate;
    /// Threads used for fitness evaluation within a generation.
    std::size_t workers = 1;

    void validate() const;
    static EvolverConfig desk();
};

struct EvolveResult {
    ConstraintGenome best;
    std::size_t best_fen = 0;
    /// Best FEN of the population after each generation; entry 0 is the
    /// initial population.
    std::vector<std::size_t> fitness_history;
};

/// Called after the initial population (generation 0) and after every
/// generation with the population and its FEN values.
using GenerationObserver =
    std::function<void(std::size_t generation, std::span<const ConstraintGenome>, std::span<const std::size_t>)>;

EvolveResult evolve(const GenomeSpec& spec, ObjectiveKind objective, const Bounds& bounds,
                    const EvolverConfig& config, const GenerationObserver& observer = {});

/// Solver seed shared by every fitness evaluation of one evolver run.
std::uint64_t solver_seed_for(std::uint64_t evolver_seed);

Json evolve_metadata(const EvolverConfig& config, const EvolveResult& result);

} // namespace cevo
