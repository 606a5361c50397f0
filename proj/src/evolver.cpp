#include "cevo/evolver.hpp"

#include <algorithm>

#include "cevo/parallel.hpp"

namespace cevo {

void GenomeSpec::validate() const
{
    require(dimension >= 1, "genome spec: dimension must be >= 1");
    require(!constraint_template.empty(), "genome spec: template must name at least one constraint");
    require(coeff_lower < coeff_upper, "genome spec: coeff_lower must be < coeff_upper");
    require(coeff_lower <= 0.0, "genome spec: coeff_lower must be <= 0 so that b <= 0 is reachable");
}

std::size_t GenomeSpec::genome_length() const
{
    std::size_t len = 0;
    for (auto kind : constraint_template)
        len += 1 + (kind == ConstraintKind::Linear ? dimension : 2 * dimension);
    return len;
}

std::vector<bool> GenomeSpec::offset_mask() const
{
    std::vector<bool> mask;
    mask.reserve(genome_length());
    for (auto kind : constraint_template) {
        mask.push_back(true);
        mask.insert(mask.end(), kind == ConstraintKind::Linear ? dimension : 2 * dimension, false);
    }
    return mask;
}

std::string template_key(std::span<const ConstraintKind> kinds)
{
    std::string key;
    for (auto k : kinds)
        key.push_back(k == ConstraintKind::Linear ? 'L' : 'Q');
    return key;
}

std::vector<ConstraintKind> template_from_key(std::string_view key)
{
    require(!key.empty(), "template key is empty");
    std::vector<ConstraintKind> kinds;
    for (char ch : key) {
        if (ch == 'L' || ch == 'l')
            kinds.push_back(ConstraintKind::Linear);
        else if (ch == 'Q' || ch == 'q')
            kinds.push_back(ConstraintKind::Quadratic);
        else
            throw ContractViolation("template key may only contain L and Q: " + std::string(key));
    }
    return kinds;
}

void repair(const GenomeSpec& spec, ConstraintGenome& genome)
{
    const auto mask = spec.offset_mask();
    require(genome.genes.size() == mask.size(), "repair: genome length does not match spec");
    for (std::size_t i = 0; i < mask.size(); ++i)
        genome.genes[i] = std::clamp(genome.genes[i], spec.coeff_lower, mask[i] ? 0.0 : spec.coeff_upper);
}

bool is_valid(const GenomeSpec& spec, const ConstraintGenome& genome)
{
    const auto mask = spec.offset_mask();
    if (genome.genes.size() != mask.size())
        return false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double v = genome.genes[i];
        if (!(v >= spec.coeff_lower && v <= (mask[i] ? 0.0 : spec.coeff_upper)))
            return false;
    }
    return true;
}

CopInstance decode(const GenomeSpec& spec, const ConstraintGenome& genome, ObjectiveKind objective,
                   const Bounds& bounds)
{
    spec.validate();
    require(genome.genes.size() == spec.genome_length(), "decode: genome length does not match spec");
    require(bounds.dimension() == spec.dimension, "decode: bounds dimension does not match spec");
    const std::size_t n = spec.dimension;

    CopInstance inst{objective, n, bounds, {}};
    inst.constraints.reserve(spec.constraint_template.size());
    auto it = genome.genes.begin();
    for (auto kind : spec.constraint_template) {
        const double b = *it++;
        if (kind == ConstraintKind::Linear) {
            inst.constraints.emplace_back(LinearConstraint{b, std::vector<double>(it, it + static_cast<long>(n))});
            it += static_cast<long>(n);
        } else {
            QuadraticConstraint qc{b, std::vector<double>(n), std::vector<double>(n)};
            for (std::size_t i = 0; i < n; ++i) {
                qc.quad[i] = *it++;
                qc.lin[i] = *it++;
            }
            inst.constraints.emplace_back(std::move(qc));
        }
    }
    return inst;
}

ConstraintGenome encode(const GenomeSpec& spec, const CopInstance& instance)
{
    require(instance.constraints.size() == spec.constraint_template.size(),
            "encode: constraint count does not match spec");
    ConstraintGenome g;
    g.genes.reserve(spec.genome_length());
    for (std::size_t k = 0; k < instance.constraints.size(); ++k) {
        const auto& c = instance.constraints[k];
        const bool quad = spec.constraint_template[k] == ConstraintKind::Quadratic;
        require(is_quadratic(c) == quad, "encode: constraint kind does not match spec");
        if (const auto* lc = std::get_if<LinearConstraint>(&c)) {
            g.genes.push_back(lc->b);
            g.genes.insert(g.genes.end(), lc->a.begin(), lc->a.end());
        } else {
            const auto& qc = std::get<QuadraticConstraint>(c);
            g.genes.push_back(qc.b);
            for (std::size_t i = 0; i < qc.quad.size(); ++i) {
                g.genes.push_back(qc.quad[i]);
                g.genes.push_back(qc.lin[i]);
            }
        }
    }
    return g;
}

std::size_t genome_fitness(const ConstraintGenome& genome, const GenomeSpec& spec, ObjectiveKind objective,
                           const Bounds& bounds, const SolverConfig& solver_config, std::uint64_t solver_seed)
{
    const auto instance = decode(spec, genome, objective, bounds);
    const auto result = solve(instance, solver_config, solver_seed);
    return result.status == SolveStatus::Solved ? result.fen : solver_config.fen_max;
}

std::string_view to_string(Direction d) { return d == Direction::Easy ? "easy" : "hard"; }

Direction direction_from_string(std::string_view s)
{
    if (s == "easy" || s == "Easy")
        return Direction::Easy;
    if (s == "hard" || s == "Hard")
        return Direction::Hard;
    throw ContractViolation("direction must be easy or hard: " + std::string(s));
}

void EvolverConfig::validate() const
{
    require(population_size >= 4, "evolver config: population_size must be >= 4");
    require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "evolver config: crossover_rate must be in [0, 1]");
    require(scale_factor > 0.0, "evolver config: scale_factor must be positive");
}

EvolverConfig EvolverConfig::desk()
{
    EvolverConfig c;
    c.generations = 100;
    c.solver_config = SolverConfig::desk();
    return c;
}

std::uint64_t solver_seed_for(std::uint64_t evolver_seed) { return mix64(evolver_seed ^ 0x5eed5eed5eed5eedULL); }

EvolveResult evolve(const GenomeSpec& spec, ObjectiveKind objective, const Bounds& bounds,
                    const EvolverConfig& config, const GenerationObserver& observer)
{
    spec.validate();
    config.validate();
    require(bounds.dimension() == spec.dimension, "evolve: bounds dimension does not match spec");

    Rng rng(config.seed);
    const auto solver_seed = solver_seed_for(config.seed);
    const std::size_t np = config.population_size;
    const auto cost = [&](std::size_t fen) {
        const auto v = static_cast<double>(fen);
        return config.direction == Direction::Easy ? v : -v;
    };
    const auto evaluate_all = [&](const std::vector<ConstraintGenome>& genomes, std::vector<std::size_t>& fens) {
        fens.resize(genomes.size());
        parallel_for(genomes.size(), config.workers, [&](std::size_t i) {
            fens[i] = genome_fitness(genomes[i], spec, objective, bounds, config.solver_config, solver_seed);
        });
    };

    std::vector<ConstraintGenome> population;
    population.reserve(np);
    for (std::size_t i = 0; i < np; ++i)
        population.push_back(random_genome(spec, rng));
    std::vector<std::size_t> fens;
    evaluate_all(population, fens);

    const auto best_index = [&] {
        std::size_t b = 0;
        for (std::size_t i = 1; i < np; ++i)
            if (cost(fens[i]) < cost(fens[b]))
                b = i;
        return b;
    };

    EvolveResult result;
    result.fitness_history.push_back(fens[best_index()]);
    if (observer)
        observer(0, population, fens);

    std::vector<ConstraintGenome> trials(np);
    std::vector<std::size_t> trial_fens;
    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        for (std::size_t i = 0; i < np; ++i)
            trials[i] = newsample(i, std::span<const ConstraintGenome>(population), spec, config.scale_factor,
                                  config.crossover_rate, rng, config.crossover_rule);
        evaluate_all(trials, trial_fens);
        for (std::size_t i = 0; i < np; ++i) {
            if (cost(trial_fens[i]) <= cost(fens[i])) {
                population[i] = std::move(trials[i]);
                fens[i] = trial_fens[i];
            }
        }
        result.fitness_history.push_back(fens[best_index()]);
        if (observer)
            observer(gen, population, fens);
    }

    const auto b = best_index();
    result.best = population[b];
    result.best_fen = fens[b];
    return result;
}

Json evolve_metadata(const EvolverConfig& config, const EvolveResult& result)
{
    Json j;
    j["direction"] = std::string(to_string(config.direction));
    j["seed"] = config.seed;
    j["final_fen"] = result.best_fen;
    j["generations"] = config.generations;
    j["fitness_history"] = result.fitness_history;
    return j;
}

} // namespace cevo
