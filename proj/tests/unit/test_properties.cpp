#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cevo/evolver.hpp"
#include "cevo/features.hpp"
#include "cevo/harness.hpp"
#include "cevo/stats.hpp"

using namespace cevo;

namespace {

std::vector<double> random_point(std::size_t n, Rng& rng, double lo = -5, double hi = 5)
{
    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.uniform(lo, hi);
    return x;
}

Constraint random_constraint(std::size_t n, bool quadratic, Rng& rng)
{
    if (quadratic)
        return QuadraticConstraint{rng.uniform(-5, 0), random_point(n, rng), random_point(n, rng)};
    return LinearConstraint{rng.uniform(-5, 0), random_point(n, rng)};
}

CopInstance random_instance(std::size_t n, std::size_t k, Rng& rng)
{
    CopInstance inst;
    inst.dimension = n;
    inst.bounds = Bounds::uniform(n);
    for (std::size_t i = 0; i < k; ++i)
        inst.constraints.push_back(random_constraint(n, rng.uniform() < 0.5, rng));
    return inst;
}

double sample_variance(const std::vector<double>& v)
{
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_SUITE("properties")
{
    TEST_CASE("objectives vanish at the origin")
    {
        for (auto kind : {ObjectiveKind::Sphere, ObjectiveKind::Ackley, ObjectiveKind::Rosenbrock,
                          ObjectiveKind::Schaffer})
            for (std::size_t n : {2u, 5u, 10u, 30u})
                CHECK(evaluate_objective(kind, std::vector<double>(n, 0.0)) == 0.0);
    }

    TEST_CASE("violation matches a per-constraint brute force")
    {
        Rng rng(101);
        for (int trial = 0; trial < 10; ++trial) {
            const auto inst = random_instance(4, 1 + trial % 5, rng);
            for (int p = 0; p < 1000; ++p) {
                const auto x = random_point(4, rng);
                double phi = 0;
                bool feasible = true;
                for (const auto& c : inst.constraints) {
                    const double g = evaluate_constraint(c, x);
                    if (g > 0) {
                        phi += g;
                        feasible = false;
                    }
                }
                const double v = violation(inst, x);
                REQUIRE(v >= 0.0);
                REQUIRE(v == doctest::Approx(phi).epsilon(1e-12));
                REQUIRE((v == 0.0) == feasible);
            }
        }
    }

    TEST_CASE("linear constraints are affine")
    {
        Rng rng(102);
        for (int trial = 0; trial < 1000; ++trial) {
            const LinearConstraint c{rng.uniform(-5, 0), random_point(6, rng)};
            const auto x = random_point(6, rng), y = random_point(6, rng);
            const double alpha = rng.uniform(-1, 2);
            std::vector<double> z(6);
            for (std::size_t i = 0; i < 6; ++i)
                z[i] = alpha * x[i] + (1 - alpha) * y[i];
            const double lhs = evaluate_constraint(c, z);
            const double rhs = alpha * evaluate_constraint(c, x) + (1 - alpha) * evaluate_constraint(c, y);
            REQUIRE(std::abs(lhs - rhs) <= 1e-9);
        }
    }

    TEST_CASE("quadratic evaluation matches a direct sum")
    {
        Rng rng(103);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + rng.index(10);
            const QuadraticConstraint c{rng.uniform(-5, 0), random_point(n, rng), random_point(n, rng)};
            const auto x = random_point(n, rng);
            long double sum = c.b;
            for (std::size_t i = 0; i < n; ++i)
                sum += static_cast<long double>(c.quad[i]) * x[i] * x[i] + static_cast<long double>(c.lin[i]) * x[i];
            const double g = evaluate_constraint(c, x);
            double scale = std::abs(c.b);
            for (std::size_t i = 0; i < n; ++i)
                scale += std::abs(c.quad[i] * x[i] * x[i]) + std::abs(c.lin[i] * x[i]);
            REQUIRE(std::abs(g - static_cast<double>(sum)) <= 1e-12 * scale);
        }
    }

    TEST_CASE("epsilon comparison with eps zero is lexicographic in (phi, f)")
    {
        Rng rng(104);
        for (int trial = 0; trial < 10000; ++trial) {
            const double f1 = std::round(rng.uniform(-3, 3)), f2 = std::round(rng.uniform(-3, 3));
            const double p1 = std::max(0.0, std::round(rng.uniform(-2, 3))), p2 = std::max(0.0, std::round(rng.uniform(-2, 3)));
            const auto oracle = std::pair(p1, f1) < std::pair(p2, f2)   ? Ordering::Less
                                : std::pair(p2, f2) < std::pair(p1, f1) ? Ordering::Greater
                                                                        : Ordering::Equal;
            REQUIRE(epsilon_compare(f1, p1, f2, p2, 0.0) == oracle);
        }
    }

    TEST_CASE("epsilon comparison with an infinite level orders by f")
    {
        Rng rng(105);
        const double inf = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 10000; ++trial) {
            const double f1 = rng.uniform(-3, 3), f2 = trial % 7 ? rng.uniform(-3, 3) : f1;
            const double p1 = rng.uniform(0, 1e6), p2 = rng.uniform(0, 1e6);
            const auto oracle = f1 < f2 ? Ordering::Less : f2 < f1 ? Ordering::Greater : Ordering::Equal;
            REQUIRE(epsilon_compare(f1, p1, f2, p2, inf) == oracle);
        }
    }

    TEST_CASE("epsilon comparison is a total preorder")
    {
        Rng rng(106);
        const auto draw = [&] {
            return std::pair(std::round(rng.uniform(-3, 3)), std::max(0.0, std::round(rng.uniform(-2, 3)) / 2));
        };
        for (int trial = 0; trial < 10000; ++trial) {
            const double eps = std::round(rng.uniform(0, 2)) / 2;
            const auto a = draw(), b = draw(), c = draw();
            const auto ab = epsilon_compare(a.first, a.second, b.first, b.second, eps);
            const auto ba = epsilon_compare(b.first, b.second, a.first, a.second, eps);
            REQUIRE((ab == Ordering::Less) == (ba == Ordering::Greater));
            REQUIRE((ab == Ordering::Equal) == (ba == Ordering::Equal));
            const auto le = [&](auto x, auto y) {
                return epsilon_compare(x.first, x.second, y.first, y.second, eps) != Ordering::Greater;
            };
            if (le(a, b) && le(b, c))
                REQUIRE(le(a, c));
            const auto lt = [&](auto x, auto y) {
                return epsilon_compare(x.first, x.second, y.first, y.second, eps) == Ordering::Less;
            };
            if (lt(a, b) && lt(b, c))
                REQUIRE(lt(a, c));
        }
    }

    TEST_CASE("epsilon schedule is non-increasing and reaches zero at Tc")
    {
        for (double cp : {0.5, 1.0, 5.0}) {
            double prev = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t <= 1200; ++t) {
                const double e = epsilon_schedule(t, 3.0, 1000, cp);
                REQUIRE(e <= prev);
                REQUIRE(e >= 0.0);
                prev = e;
            }
            CHECK(epsilon_schedule(1000, 3.0, 1000, cp) == 0.0);
        }
    }

    TEST_CASE("solver survivors never lose to their parents and stay consistent")
    {
        Rng rng(107);
        for (int trial = 0; trial < 6; ++trial) {
            const auto inst = random_instance(3, 1 + trial % 3, rng);
            SolverConfig cfg;
            cfg.generations = 60;
            cfg.epsilon_control_generation = 40;
            cfg.fen_max = 1000000;
            cfg.success_tolerance = 0.0;
            std::vector<Individual> prev;
            std::size_t observed = 0;
            solve(inst, cfg, 500 + trial, [&](std::size_t gen, double eps, std::span<const Individual> pop) {
                for (const auto& ind : pop) {
                    REQUIRE(ind.f == evaluate_objective(inst.objective, ind.x));
                    REQUIRE(ind.phi == doctest::Approx(violation(inst, ind.x)).epsilon(1e-12));
                    REQUIRE(inst.bounds.contains(ind.x));
                }
                if (gen > 0)
                    for (std::size_t i = 0; i < pop.size(); ++i)
                        REQUIRE(epsilon_compare(pop[i], prev[i], eps) != Ordering::Greater);
                prev.assign(pop.begin(), pop.end());
                ++observed;
            });
            CHECK(observed > 1);
        }
    }

    TEST_CASE("solver FEN never exceeds the budget and runs are reproducible")
    {
        Rng rng(108);
        for (int trial = 0; trial < 8; ++trial) {
            const auto inst = random_instance(2 + trial % 3, 1 + trial % 4, rng);
            SolverConfig cfg;
            cfg.fen_max = 500 + 937 * static_cast<std::size_t>(trial);
            const auto a = solve(inst, cfg, trial);
            const auto b = solve(inst, cfg, trial);
            REQUIRE(a.fen <= cfg.fen_max);
            REQUIRE(dump_json(to_json(a)) == dump_json(to_json(b)));
            if (a.status == SolveStatus::Solved) {
                CHECK(a.best.phi == 0.0);
                CHECK(std::abs(a.best.f) <= cfg.success_tolerance);
            } else {
                CHECK(a.fen == cfg.fen_max);
            }
        }
    }

    TEST_CASE("evolver populations stay valid and elitist")
    {
        const GenomeSpec spec{2, {ConstraintKind::Linear, ConstraintKind::Quadratic}};
        for (auto direction : {Direction::Easy, Direction::Hard}) {
            EvolverConfig cfg;
            cfg.direction = direction;
            cfg.population_size = 6;
            cfg.generations = 6;
            cfg.seed = 17;
            cfg.solver_config.fen_max = 8000;
            std::vector<std::size_t> prev;
            const auto worse = [&](std::size_t now, std::size_t before) {
                return direction == Direction::Easy ? now > before : now < before;
            };
            const auto r = evolve(spec, ObjectiveKind::Sphere, Bounds::uniform(2), cfg,
                                  [&](std::size_t gen, std::span<const ConstraintGenome> pop,
                                      std::span<const std::size_t> fens) {
                                      for (const auto& g : pop) {
                                          REQUIRE(is_valid(spec, g));
                                          const auto inst = decode(spec, g, ObjectiveKind::Sphere, Bounds::uniform(2));
                                          REQUIRE(violation(inst, std::vector<double>{0, 0}) == 0.0);
                                      }
                                      if (gen > 0)
                                          for (std::size_t i = 0; i < fens.size(); ++i)
                                              REQUIRE_FALSE(worse(fens[i], prev[i]));
                                      prev.assign(fens.begin(), fens.end());
                                  });
            for (std::size_t g = 1; g < r.fitness_history.size(); ++g)
                REQUIRE_FALSE(worse(r.fitness_history[g], r.fitness_history[g - 1]));
            const auto again = evolve(spec, ObjectiveKind::Sphere, Bounds::uniform(2), cfg);
            CHECK(again.best == r.best);
        }
    }

    TEST_CASE("decode is injective on valid genomes")
    {
        const GenomeSpec spec{3, {ConstraintKind::Quadratic, ConstraintKind::Linear}};
        Rng rng(109);
        for (int trial = 0; trial < 500; ++trial) {
            const auto g = random_genome(spec, rng);
            auto h = g;
            const auto i = rng.index(h.genes.size());
            h.genes[i] = std::nextafter(h.genes[i], -10.0);
            repair(spec, h);
            const auto a = decode(spec, g, ObjectiveKind::Sphere, Bounds::uniform(3));
            const auto b = decode(spec, h, ObjectiveKind::Sphere, Bounds::uniform(3));
            REQUIRE((g == h) == (a == b));
            REQUIRE(encode(spec, a) == g);
        }
    }

    TEST_CASE("degenerate quadrics agree with the linear distance")
    {
        Rng rng(110);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + rng.index(10);
            const LinearConstraint lin{rng.uniform(-5, 0), random_point(n, rng)};
            const QuadraticConstraint quad{lin.b, std::vector<double>(n, 0.0), lin.a};
            const std::vector<double> origin(n, 0.0);
            REQUIRE(quadratic_distance(quad, origin) == doctest::Approx(linear_distance(lin, origin)).epsilon(1e-6));
        }
    }

    TEST_CASE("quadratic distance vanishes exactly on the surface")
    {
        Rng rng(111);
        for (int trial = 0; trial < 200; ++trial) {
            const QuadraticConstraint c{rng.uniform(-5, 0), random_point(2, rng), random_point(2, rng)};
            const auto p = random_point(2, rng, -1, 1);
            const double g = evaluate_constraint(c, p);
            const double d = quadratic_distance(c, p);
            REQUIRE(d >= 0.0);
            if (g == 0.0)
                REQUIRE(d == 0.0);
            else if (std::abs(g) > 1e-9)
                REQUIRE(d > 0.0);
        }
        // points placed on the circle x1^2 + x2^2 = 4
        for (int trial = 0; trial < 50; ++trial) {
            const double t = rng.uniform(0, 6.283185307179586);
            const std::vector<double> p{2 * std::cos(t), 2 * std::sin(t)};
            const QuadraticConstraint circle{-4, {1, 1}, {0, 0}};
            REQUIRE(quadratic_distance(circle, p) <= 1e-9);
        }
    }

    TEST_CASE("pairwise angles are symmetric, scale invariant and folded")
    {
        Rng rng(112);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng.index(3);
            const bool q1 = trial % 3 == 0, q2 = trial % 5 == 0;
            const auto c1 = random_constraint(n, q1, rng);
            const auto c2 = random_constraint(n, q2, rng);
            const std::vector<double> origin(n, 0.0);
            const auto ab = pairwise_angle(c1, c2, origin);
            const auto ba = pairwise_angle(c2, c1, origin);
            REQUIRE(ab.has_value() == ba.has_value());
            if (!ab)
                continue;
            REQUIRE(*ab >= 0.0);
            REQUIRE(*ab <= 90.0);
            REQUIRE(*ab == doctest::Approx(*ba).epsilon(1e-6));
            const double s = rng.uniform(0.1, 10);
            auto scaled = c1;
            std::visit(
                [&](auto& c) {
                    c.b *= s;
                    if constexpr (std::is_same_v<std::decay_t<decltype(c)>, LinearConstraint>) {
                        for (auto& v : c.a)
                            v *= s;
                    } else {
                        for (auto& v : c.quad)
                            v *= s;
                        for (auto& v : c.lin)
                            v *= s;
                    }
                },
                scaled);
            const auto sc = pairwise_angle(scaled, c2, origin);
            REQUIRE(sc.has_value());
            REQUIRE(*sc == doctest::Approx(*ab).epsilon(1e-6));
        }
    }

    TEST_CASE("feasibility ratio ignores constraint order on a fixed point set")
    {
        Rng rng(113);
        for (int trial = 0; trial < 20; ++trial) {
            auto inst = random_instance(3, 4, rng);
            std::vector<std::vector<double>> points;
            for (int p = 0; p < 2000; ++p)
                points.push_back(random_point(3, rng, -0.5, 0.5));
            const double before = feasibility_ratio(inst, points);
            std::ranges::reverse(inst.constraints);
            std::swap(inst.constraints[0], inst.constraints[2]);
            REQUIRE(feasibility_ratio(inst, points) == before);
        }
    }

    TEST_CASE("doubling the sample count halves the ratio variance")
    {
        CopInstance inst;
        inst.dimension = 2;
        inst.bounds = Bounds::uniform(2);
        inst.constraints = {LinearConstraint{-0.3, {1, 1}}};
        std::vector<double> small, large;
        for (std::uint64_t s = 0; s < 30; ++s) {
            Rng a(1000 + s), b(2000 + s);
            small.push_back(feasibility_ratio(inst, 2000, a));
            large.push_back(feasibility_ratio(inst, 4000, b));
        }
        const double ratio = sample_variance(small) / sample_variance(large);
        // 99% band of an F(29, 29) variance ratio around 2
        CHECK(ratio > 2 / 2.66);
        CHECK(ratio < 2 * 2.66);
    }

    TEST_CASE("feature vectors respect their ranges")
    {
        Rng rng(114);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t k = 1 + trial % 5;
            const auto inst = random_instance(3, k, rng);
            const auto fv = feature_vector(inst, 2000, rng);
            REQUIRE(fv.constraint_count == k);
            REQUIRE(fv.ratio >= 0.0);
            REQUIRE(fv.ratio <= 1.0);
            REQUIRE(fv.angles.size() == k * (k - 1) / 2);
            for (double d : fv.distance)
                REQUIRE(d >= 0.0);
            for (const auto& a : fv.angles)
                if (a) {
                    REQUIRE(*a >= 0.0);
                    REQUIRE(*a <= 90.0);
                }
        }
    }

    TEST_CASE("quantiles match a sort-and-interpolate oracle")
    {
        Rng rng(115);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> v(1 + rng.index(30));
            for (auto& x : v)
                x = std::round(rng.uniform(-50, 50));
            const double p = rng.uniform();
            auto sorted = v;
            std::sort(sorted.begin(), sorted.end());
            const double h = (static_cast<double>(sorted.size()) - 1) * p;
            const auto lo = static_cast<std::size_t>(std::floor(h));
            const auto hi = std::min(lo + 1, sorted.size() - 1);
            const double oracle = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
            REQUIRE(quantile(v, p) == doctest::Approx(oracle).epsilon(1e-12));
        }
    }

    TEST_CASE("seed derivation is pure and spreads cells and runs")
    {
        std::vector<std::uint64_t> seen;
        for (std::uint64_t cell = 0; cell < 30; ++cell)
            for (std::uint64_t run = 0; run < 30; ++run) {
                REQUIRE(derive_seed(7, cell, run) == derive_seed(7, cell, run));
                seen.push_back(derive_seed(7, cell, run));
            }
        std::ranges::sort(seen);
        CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    }
}
