#include "cevo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

namespace cevo {

namespace {

/// Sort key equivalent to the strict epsilon-level relation for a fixed eps:
/// members within the level rank by f alone, the rest by (phi, f).
struct LevelKey {
    int tier;
    double phi;
    double f;

    auto operator<=>(const LevelKey&) const = default;
};

LevelKey level_key(const Individual& ind, double eps)
{
    if (ind.phi <= eps)
        return {0, 0.0, ind.f};
    return {1, ind.phi, ind.f};
}

/// Binary max-heap over member indices with position tracking, so a member
/// whose key changed can be re-sifted in place.
template <typename Less>
class IndexedMaxHeap {
public:
    IndexedMaxHeap(std::size_t size, Less less) : less_(less), heap_(size), pos_(size)
    {
        std::iota(heap_.begin(), heap_.end(), std::size_t{0});
        for (std::size_t k = size / 2; k-- > 0;)
            sift_down(k);
        for (std::size_t k = 0; k < size; ++k)
            pos_[heap_[k]] = k;
    }

    std::size_t top() const { return heap_.front(); }

    void update(std::size_t member)
    {
        const auto k = pos_[member];
        sift_down(sift_up(k));
    }

private:
    void place(std::size_t k, std::size_t member)
    {
        heap_[k] = member;
        pos_[member] = k;
    }

    std::size_t sift_up(std::size_t k)
    {
        const auto member = heap_[k];
        while (k > 0) {
            const auto parent = (k - 1) / 2;
            if (!less_(heap_[parent], member))
                break;
            place(k, heap_[parent]);
            k = parent;
        }
        place(k, member);
        return k;
    }

    void sift_down(std::size_t k)
    {
        const auto member = heap_[k];
        const auto size = heap_.size();
        while (true) {
            auto child = 2 * k + 1;
            if (child >= size)
                break;
            if (child + 1 < size && less_(heap_[child], heap_[child + 1]))
                ++child;
            if (!less_(member, heap_[child]))
                break;
            place(k, heap_[child]);
            k = child;
        }
        place(k, member);
    }

    Less less_;
    std::vector<std::size_t> heap_;
    std::vector<std::size_t> pos_;
};

/// Fixed-size archive that can name its worst member under any epsilon
/// level. Members above the level are always worse than those within it and
/// rank among themselves by (phi, f) regardless of the level; members within
/// the level rank by f. Two level-independent heaps therefore suffice.
class RankedArchive {
public:
    explicit RankedArchive(std::vector<Individual> members)
        : members_(std::move(members)), by_violation_(members_.size(), ViolationLess{&members_}),
          by_objective_(members_.size(), ObjectiveLess{&members_})
    {
    }

    std::span<const Individual> members() const { return members_; }

    std::size_t worst(double eps) const
    {
        const auto v = by_violation_.top();
        return members_[v].phi > eps ? v : by_objective_.top();
    }

    /// Replaces the worst member when `child` is strictly better at level eps.
    void offer(const Individual& child, double eps)
    {
        const auto w = worst(eps);
        if (!(level_key(child, eps) < level_key(members_[w], eps)))
            return;
        members_[w] = child;
        by_violation_.update(w);
        by_objective_.update(w);
    }

private:
    struct ViolationLess {
        const std::vector<Individual>* m;
        bool operator()(std::size_t a, std::size_t b) const
        {
            const auto& x = (*m)[a];
            const auto& y = (*m)[b];
            return x.phi < y.phi || (x.phi == y.phi && x.f < y.f);
        }
    };
    struct ObjectiveLess {
        const std::vector<Individual>* m;
        bool operator()(std::size_t a, std::size_t b) const { return (*m)[a].f < (*m)[b].f; }
    };

    std::vector<Individual> members_;
    IndexedMaxHeap<ViolationLess> by_violation_;
    IndexedMaxHeap<ObjectiveLess> by_objective_;
};

/// Scratch buffers for the pseudo-inverse repair.
struct RepairWorkspace {
    std::vector<double> values;
    std::vector<std::size_t> active;
    std::vector<double> grad;
    Eigen::MatrixXd jac;
    Eigen::VectorXd rhs;
    Eigen::VectorXd step;
};

/// In-place body of gradient_mutation; `ws.values` must hold g_k(x) on entry.
std::size_t repair_in_place(std::span<double> x, const CopInstance& instance, std::size_t repeats,
                            std::size_t max_evaluations, RepairWorkspace& ws)
{
    const std::size_t n = instance.dimension;
    ws.grad.resize(n);
    std::size_t evaluations = 0;
    for (std::size_t rep = 0; rep < repeats && evaluations < max_evaluations; ++rep) {
        ws.active.clear();
        for (std::size_t k = 0; k < ws.values.size(); ++k)
            if (ws.values[k] > 0.0)
                ws.active.push_back(k);
        if (ws.active.empty())
            break;

        const auto rows = static_cast<Eigen::Index>(ws.active.size());
        ws.jac.resize(rows, static_cast<Eigen::Index>(n));
        ws.rhs.resize(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto k = ws.active[static_cast<std::size_t>(r)];
            constraint_gradient(instance.constraints[k], x, ws.grad);
            for (std::size_t i = 0; i < n; ++i)
                ws.jac(r, static_cast<Eigen::Index>(i)) = ws.grad[i];
            ws.rhs(r) = ws.values[k];
        }
        if (ws.jac.isZero(0.0))
            break;

        if (rows == 1) {
            // pinv of a single row a is a^T / |a|^2
            ws.step = ws.jac.row(0).transpose() * (ws.rhs(0) / ws.jac.row(0).squaredNorm());
        } else {
            ws.step = ws.jac.completeOrthogonalDecomposition().solve(ws.rhs);
        }
        for (std::size_t i = 0; i < n; ++i)
            x[i] -= ws.step(static_cast<Eigen::Index>(i));
        instance.bounds.clamp(x);

        for (std::size_t k = 0; k < ws.values.size(); ++k)
            ws.values[k] = evaluate_constraint(instance.constraints[k], x);
        ++evaluations;
    }
    return evaluations;
}

std::vector<double> random_point(const Bounds& bounds, Rng& rng)
{
    std::vector<double> x(bounds.dimension());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
    return x;
}

} // namespace

Individual make_individual(const CopInstance& instance, std::vector<double> x)
{
    Individual ind;
    ind.f = evaluate_objective(instance.objective, x);
    ind.phi = violation(instance, x);
    ind.x = std::move(x);
    return ind;
}

Ordering epsilon_compare(double lhs_f, double lhs_phi, double rhs_f, double rhs_phi, double eps)
{
    require(eps >= 0.0, "epsilon_compare: eps must be non-negative");
    require(lhs_phi >= 0.0 && rhs_phi >= 0.0, "epsilon_compare: violations must be non-negative");
    if (epsilon_less(lhs_f, lhs_phi, rhs_f, rhs_phi, eps))
        return Ordering::Less;
    if (epsilon_less(rhs_f, rhs_phi, lhs_f, lhs_phi, eps))
        return Ordering::Greater;
    return Ordering::Equal;
}

Ordering epsilon_compare(const Individual& lhs, const Individual& rhs, double eps)
{
    return epsilon_compare(lhs.f, lhs.phi, rhs.f, rhs.phi, eps);
}

double epsilon_schedule(std::size_t t, double eps0, std::size_t control_generation, double cp)
{
    if (control_generation == 0 || t >= control_generation)
        return 0.0;
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(control_generation);
    return eps0 * std::pow(frac, cp);
}

double initial_epsilon(std::span<const Individual> archive, double q)
{
    require(!archive.empty(), "initial_epsilon: archive is empty");
    require(q > 0.0 && q <= 1.0, "initial_epsilon: q must be in (0, 1]");
    std::vector<double> phis;
    phis.reserve(archive.size());
    for (const auto& ind : archive)
        phis.push_back(ind.phi);
    std::ranges::sort(phis);
    const auto m = static_cast<double>(archive.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * m - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, archive.size());
    return phis[rank - 1];
}

void SolverConfig::validate(std::size_t dimension) const
{
    require(population_size >= 4, "solver config: population_size must be >= 4");
    require(population_size <= resolved_archive_size(dimension), "solver config: population_size exceeds archive_size");
    require(epsilon_control_generation >= 1, "solver config: epsilon_control_generation must be >= 1");
    require(epsilon_control_generation <= generations, "solver config: epsilon_control_generation exceeds generations");
    require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "solver config: crossover_rate must be in [0, 1]");
    require(scale_factor > 0.0, "solver config: scale_factor must be positive");
    require(initial_level_fraction > 0.0 && initial_level_fraction <= 1.0,
            "solver config: initial_level_fraction must be in (0, 1]");
    require(gradient_mutation_rate >= 0.0 && gradient_mutation_rate <= 1.0,
            "solver config: gradient_mutation_rate must be in [0, 1]");
    require(schedule_exponent >= 0.0, "solver config: schedule_exponent must be non-negative");
    require(fen_max >= 1, "solver config: fen_max must be >= 1");
    require(success_tolerance >= 0.0, "solver config: success_tolerance must be non-negative");
}

SolverConfig SolverConfig::desk()
{
    SolverConfig c;
    c.fen_max = 50000;
    return c;
}

GradientMutationResult gradient_mutation(std::span<const double> x, const CopInstance& instance, std::size_t repeats,
                                         std::size_t max_evaluations)
{
    require(x.size() == instance.dimension, "gradient_mutation: dimension mismatch");
    require(violation(instance, x) > 0.0, "gradient_mutation: point is already feasible");

    GradientMutationResult out{std::vector<double>(x.begin(), x.end()), 0};
    RepairWorkspace ws;
    ws.values.resize(instance.constraints.size());
    for (std::size_t k = 0; k < instance.constraints.size(); ++k)
        ws.values[k] = evaluate_constraint(instance.constraints[k], out.x);
    out.evaluations = repair_in_place(out.x, instance, repeats, max_evaluations, ws);
    return out;
}

SolverResult solve(const CopInstance& instance, const SolverConfig& config, std::uint64_t seed,
                   const SolveObserver& observer)
{
    instance.validate();
    config.validate(instance.dimension);

    const std::size_t n = instance.dimension;
    const std::size_t pop_size = config.population_size;
    const std::size_t archive_size = config.resolved_archive_size(n);
    Rng rng(seed);

    SolverResult result;
    bool have_best = false;
    // Tracks the best point seen under the feasibility-first order and
    // reports whether it meets the termination test.
    const auto record = [&](const Individual& ind) {
        if (!have_best || epsilon_less(ind.f, ind.phi, result.best.f, result.best.phi, 0.0)) {
            result.best = ind;
            have_best = true;
        }
        return ind.phi == 0.0 && std::abs(ind.f) <= config.success_tolerance;
    };

    RepairWorkspace ws;
    ws.values.resize(instance.constraints.size());
    const auto evaluate = [&](Individual& ind) {
        ind.f = evaluate_objective(instance.objective, ind.x);
        double phi = 0.0;
        for (std::size_t k = 0; k < instance.constraints.size(); ++k) {
            ws.values[k] = evaluate_constraint(instance.constraints[k], ind.x);
            phi += std::max(0.0, ws.values[k]);
        }
        ind.phi = phi;
        ++result.fen;
    };
    const auto solved = [&] {
        result.status = SolveStatus::Solved;
        return result;
    };

    std::vector<Individual> initial;
    initial.reserve(archive_size);
    for (std::size_t k = 0; k < archive_size; ++k) {
        if (result.fen >= config.fen_max)
            return result;
        Individual ind;
        ind.x = random_point(instance.bounds, rng);
        evaluate(ind);
        initial.push_back(std::move(ind));
        if (record(initial.back()))
            return solved();
    }

    const double eps0 = initial_epsilon(initial, config.initial_level_fraction);
    double eps = eps0;
    result.epsilon_trace.emplace_back(0, eps);

    std::vector<Individual> population;
    {
        std::vector<std::size_t> order(initial.size());
        std::iota(order.begin(), order.end(), 0);
        std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
            return level_key(initial[a], eps) < level_key(initial[b], eps);
        });
        population.reserve(pop_size);
        for (std::size_t k = 0; k < pop_size; ++k)
            population.push_back(initial[order[k]]);
    }
    RankedArchive archive(std::move(initial));
    if (observer)
        observer(0, eps, population);

    Individual child;
    child.x.resize(n);
    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        for (std::size_t i = 0; i < pop_size; ++i) {
            if (result.fen >= config.fen_max)
                return result;
            de_rand_1_exp_into(i, std::span<const Individual>(population), config.scale_factor,
                               config.crossover_rate, rng, std::span<double>(child.x), &instance.bounds);
            evaluate(child);
            if (record(child))
                return solved();

            if (child.phi > 0.0 && rng.uniform() < config.gradient_mutation_rate) {
                const auto spent = repair_in_place(child.x, instance, config.gradient_mutation_repeats,
                                                   config.fen_max - result.fen, ws);
                if (spent > 0) {
                    // the last repair evaluation covers the objective as well
                    result.fen += spent;
                    child.f = evaluate_objective(instance.objective, child.x);
                    child.phi = 0.0;
                    for (double g : ws.values)
                        child.phi += std::max(0.0, g);
                    if (record(child))
                        return solved();
                }
            }

            archive.offer(child, eps);
            if (epsilon_less_equal(child.f, child.phi, population[i].f, population[i].phi, eps))
                std::swap(population[i], child);
        }
        if (observer)
            observer(gen + 1, eps, population);
        eps = epsilon_schedule(gen + 1, eps0, config.epsilon_control_generation, config.schedule_exponent);
        result.epsilon_trace.emplace_back(gen + 1, eps);
    }
    return result;
}

std::string_view to_string(SolveStatus status) { return status == SolveStatus::Solved ? "solved" : "exhausted"; }

Json to_json(const SolverConfig& c)
{
    Json j;
    j["population_size"] = c.population_size;
    j["archive_size"] = c.archive_size;
    j["generations"] = c.generations;
    j["crossover_rate"] = c.crossover_rate;
    j["scale_factor"] = c.scale_factor;
    j["epsilon_control_generation"] = c.epsilon_control_generation;
    j["initial_level_fraction"] = c.initial_level_fraction;
    j["gradient_mutation_rate"] = c.gradient_mutation_rate;
    j["gradient_mutation_repeats"] = c.gradient_mutation_repeats;
    j["schedule_exponent"] = c.schedule_exponent;
    j["fen_max"] = c.fen_max;
    j["success_tolerance"] = c.success_tolerance;
    return j;
}

SolverConfig solver_config_from_json(const Json& j)
{
    require(j.is_object(), "solver config must be a JSON object");
    static const std::set<std::string> known{"population_size",
                                             "archive_size",
                                             "generations",
                                             "crossover_rate",
                                             "scale_factor",
                                             "epsilon_control_generation",
                                             "initial_level_fraction",
                                             "gradient_mutation_rate",
                                             "gradient_mutation_repeats",
                                             "schedule_exponent",
                                             "fen_max",
                                             "success_tolerance"};
    for (const auto& [key, _] : j.items())
        require(known.contains(key), "solver config: unknown field '" + key + "'");

    SolverConfig c;
    try {
        c.population_size = j.value("population_size", c.population_size);
        c.archive_size = j.value("archive_size", c.archive_size);
        c.generations = j.value("generations", c.generations);
        c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
        c.scale_factor = j.value("scale_factor", c.scale_factor);
        c.epsilon_control_generation = j.value("epsilon_control_generation", c.epsilon_control_generation);
        c.initial_level_fraction = j.value("initial_level_fraction", c.initial_level_fraction);
        c.gradient_mutation_rate = j.value("gradient_mutation_rate", c.gradient_mutation_rate);
        c.gradient_mutation_repeats = j.value("gradient_mutation_repeats", c.gradient_mutation_repeats);
        c.schedule_exponent = j.value("schedule_exponent", c.schedule_exponent);
        c.fen_max = j.value("fen_max", c.fen_max);
        c.success_tolerance = j.value("success_tolerance", c.success_tolerance);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("malformed solver config: ") + e.what());
    }
    return c;
}

Json to_json(const SolverResult& r)
{
    Json j;
    j["status"] = std::string(to_string(r.status));
    j["fen"] = r.fen;
    j["best_x"] = r.best.x;
    j["best_f"] = r.best.f;
    j["best_phi"] = r.best.phi;
    Json trace = Json::array();
    for (const auto& [t, e] : r.epsilon_trace)
        trace.push_back(Json::array({t, e}));
    j["epsilon_trace"] = std::move(trace);
    return j;
}

} // namespace cevo
