#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "cevo/error.hpp"
#include "cevo/problem.hpp"
#include "cevo/random.hpp"

namespace cevo {

/// Candidate point with its cached objective value and violation.
struct Individual {
    std::vector<double> x;
    double f = 0.0;
    double phi = 0.0;

    bool operator==(const Individual&) const = default;
};

Individual make_individual(const CopInstance& instance, std::vector<double> x);

enum class Ordering { Less, Equal, Greater };

/// Strict epsilon-level relation (f1, phi1) <_eps (f2, phi2). Unchecked.
inline bool epsilon_less(double f1, double phi1, double f2, double phi2, double eps)
{
    if ((phi1 <= eps && phi2 <= eps) || phi1 == phi2)
        return f1 < f2;
    return phi1 < phi2;
}

/// Non-strict relation (f1, phi1) <=_eps (f2, phi2). Unchecked.
inline bool epsilon_less_equal(double f1, double phi1, double f2, double phi2, double eps)
{
    if ((phi1 <= eps && phi2 <= eps) || phi1 == phi2)
        return f1 <= f2;
    return phi1 < phi2;
}

Ordering epsilon_compare(double lhs_f, double lhs_phi, double rhs_f, double rhs_phi, double eps);
Ordering epsilon_compare(const Individual& lhs, const Individual& rhs, double eps);

/// eps0 * (1 - t/Tc)^cp before the control generation, 0 from then on.
double epsilon_schedule(std::size_t t, double eps0, std::size_t control_generation, double cp);

/// Violation of the ceil(q*M)-th member when the archive is ranked by phi.
double initial_epsilon(std::span<const Individual> archive, double q);

struct SolverConfig {
    std::size_t population_size = 40;
    /// 0 selects 100 * dimension.
    std::size_t archive_size = 0;
    std::size_t generations = 1500;
    double crossover_rate = 0.5;
    double scale_factor = 0.9;
    std::size_t epsilon_control_generation = 1000;
    double initial_level_fraction = 0.9;
    double gradient_mutation_rate = 0.2;
    std::size_t gradient_mutation_repeats = 3;
    double schedule_exponent = 5.0;
    std::size_t fen_max = 300000;
    double success_tolerance = 1e-12;

    std::size_t resolved_archive_size(std::size_t dimension) const
    {
        return archive_size == 0 ? 100 * dimension : archive_size;
    }

    void validate(std::size_t dimension) const;

    /// Reduced budget used for the quick experiment plan.
    static SolverConfig desk();

    bool operator==(const SolverConfig&) const = default;
};

enum class SolveStatus { Solved, Exhausted };

struct SolverResult {
    SolveStatus status = SolveStatus::Exhausted;
    Individual best;
    std::size_t fen = 0;
    std::vector<std::pair<std::size_t, double>> epsilon_trace;
};

/// Fills `trial` with a DE/rand/1/exp child of population[target_index].
/// Donors are drawn from the concatenation population ++ extra_donors, all
/// mutually distinct and distinct from the target.
template <RandomStream R>
void de_rand_1_exp_into(std::size_t target_index, std::span<const Individual> population, double F, double CR,
                        R& rng, std::span<double> trial, const Bounds* bounds = nullptr,
                        std::span<const Individual> extra_donors = {})
{
    const std::size_t pool = population.size() + extra_donors.size();
    require(pool >= 4, "de_rand_1_exp: need at least four individuals");
    require(target_index < population.size(), "de_rand_1_exp: target index out of range");
    const auto member = [&](std::size_t k) -> const std::vector<double>& {
        return k < population.size() ? population[k].x : extra_donors[k - population.size()].x;
    };
    const auto& target = population[target_index].x;
    const std::size_t n = target.size();
    require(trial.size() == n, "de_rand_1_exp: trial buffer has wrong length");

    std::size_t r1, r2, r3;
    do
        r1 = rng.index(pool);
    while (r1 == target_index);
    do
        r2 = rng.index(pool);
    while (r2 == target_index || r2 == r1);
    do
        r3 = rng.index(pool);
    while (r3 == target_index || r3 == r1 || r3 == r2);

    const auto& x1 = member(r1);
    const auto& x2 = member(r2);
    const auto& x3 = member(r3);
    std::copy(target.begin(), target.end(), trial.begin());

    std::size_t j = rng.index(n);
    std::size_t taken = 0;
    do {
        trial[j] = x3[j] + F * (x1[j] - x2[j]);
        j = (j + 1) % n;
        ++taken;
    } while (taken < n && rng.uniform() <= CR);

    if (bounds)
        bounds->clamp(trial);
}

template <RandomStream R>
std::vector<double> de_rand_1_exp(std::size_t target_index, std::span<const Individual> population, double F,
                                  double CR, R& rng, const Bounds* bounds = nullptr,
                                  std::span<const Individual> extra_donors = {})
{
    require(target_index < population.size(), "de_rand_1_exp: target index out of range");
    std::vector<double> trial(population[target_index].x.size());
    de_rand_1_exp_into(target_index, population, F, CR, rng, std::span<double>(trial), bounds, extra_donors);
    return trial;
}

struct GradientMutationResult {
    std::vector<double> x;
    /// Constraint evaluations spent on the updated points.
    std::size_t evaluations = 0;
};

/// Newton-like repair x <- x - pinv(J) * C over the violated constraints,
/// repeated up to `repeats` times or until feasible. Requires phi(x) > 0.
GradientMutationResult gradient_mutation(std::span<const double> x, const CopInstance& instance,
                                         std::size_t repeats,
                                         std::size_t max_evaluations = std::numeric_limits<std::size_t>::max());

/// Called with generation 0 and the initial population, then after each
/// generation t with t + 1, the level used during t and the survivors.
using SolveObserver = std::function<void(std::size_t generation, double eps, std::span<const Individual> population)>;

SolverResult solve(const CopInstance& instance, const SolverConfig& config, std::uint64_t seed,
                   const SolveObserver& observer = {});

std::string_view to_string(SolveStatus status);

Json to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const Json& j);
Json to_json(const SolverResult& result);

} // namespace cevo
