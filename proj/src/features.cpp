#include "cevo/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "cevo/error.hpp"
#include "cevo/parallel.hpp"

namespace cevo {

namespace {

using Eigen::Index;

Eigen::VectorXd as_vector(std::span<const double> v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

double evaluate(const QuadraticConstraint& qc, const Eigen::VectorXd& x)
{
    double g = qc.b;
    for (Index i = 0; i < x.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        g += (qc.quad[k] * x(i) + qc.lin[k]) * x(i);
    }
    return g;
}

Eigen::VectorXd gradient(const QuadraticConstraint& qc, const Eigen::VectorXd& x)
{
    Eigen::VectorXd d(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        d(i) = 2.0 * qc.quad[k] * x(i) + qc.lin[k];
    }
    return d;
}

double evaluate(const Constraint& c, const Eigen::VectorXd& x)
{
    return evaluate_constraint(c, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd gradient(const Constraint& c, const Eigen::VectorXd& x)
{
    Eigen::VectorXd d(x.size());
    constraint_gradient(c, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                        std::span<double>(d.data(), static_cast<std::size_t>(d.size())));
    return d;
}

/// Whether b + sum(q_i x_i^2 + l_i x_i) attains zero somewhere.
bool surface_nonempty(const QuadraticConstraint& qc)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lo = qc.b;
    double hi = qc.b;
    for (std::size_t i = 0; i < qc.quad.size(); ++i) {
        const double q = qc.quad[i];
        const double l = qc.lin[i];
        if (q > 0.0) {
            lo -= l * l / (4.0 * q);
            hi = inf;
        } else if (q < 0.0) {
            lo = -inf;
            hi -= l * l / (4.0 * q);
        } else if (l != 0.0) {
            lo = -inf;
            hi = inf;
        }
    }
    return lo <= 0.0 && 0.0 <= hi;
}

double coefficient_scale(const QuadraticConstraint& qc)
{
    double s = std::max(1.0, std::abs(qc.b));
    for (std::size_t i = 0; i < qc.quad.size(); ++i)
        s = std::max({s, std::abs(qc.quad[i]), std::abs(qc.lin[i])});
    return s;
}

std::vector<Eigen::VectorXd> start_points(std::span<const double> point, const SurfaceSearch& search)
{
    const auto n = static_cast<Index>(point.size());
    const Eigen::VectorXd p = as_vector(point);
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(static_cast<std::size_t>(2 * n) + search.random_starts);
    for (Index i = 0; i < n; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd s = p;
            s(i) += sign * search.radius;
            starts.push_back(std::move(s));
        }
    }
    Rng rng(search.seed);
    for (std::size_t k = 0; k < search.random_starts; ++k) {
        Eigen::VectorXd s(n);
        for (Index i = 0; i < n; ++i)
            s(i) = p(i) + rng.uniform(-search.radius, search.radius);
        starts.push_back(std::move(s));
    }
    return starts;
}

/// Stationary point of |x - p|^2 on g(x) = 0 reached from `x`: Newton
/// projection onto the surface, then Newton on the Lagrange system.
std::optional<Eigen::VectorXd> project_to_quadric(const QuadraticConstraint& qc, const Eigen::VectorXd& p,
                                                  Eigen::VectorXd x, const SurfaceSearch& search)
{
    const auto n = x.size();
    const double tol = search.tolerance * coefficient_scale(qc);

    for (std::size_t it = 0; it < search.max_iterations; ++it) {
        const double g = evaluate(qc, x);
        if (std::abs(g) <= tol)
            break;
        const Eigen::VectorXd d = gradient(qc, x);
        const double dd = d.squaredNorm();
        if (dd == 0.0 || !std::isfinite(dd))
            return std::nullopt;
        x -= (g / dd) * d;
    }
    Eigen::VectorXd d = gradient(qc, x);
    if (d.squaredNorm() == 0.0)
        return std::nullopt;
    double lambda = -2.0 * (x - p).dot(d) / d.squaredNorm();

    const auto residual = [&](const Eigen::VectorXd& y, double lam, Eigen::VectorXd& out) {
        out.resize(n + 1);
        out.head(n) = 2.0 * (y - p) + lam * gradient(qc, y);
        out(n) = evaluate(qc, y);
        return out.lpNorm<Eigen::Infinity>();
    };

    Eigen::VectorXd r;
    Eigen::VectorXd trial_r;
    double norm = residual(x, lambda, r);
    Eigen::MatrixXd jac(n + 1, n + 1);
    for (std::size_t it = 0; it < search.max_iterations && norm > tol; ++it) {
        d = gradient(qc, x);
        jac.setZero();
        for (Index i = 0; i < n; ++i)
            jac(i, i) = 2.0 + 2.0 * lambda * qc.quad[static_cast<std::size_t>(i)];
        jac.block(0, n, n, 1) = d;
        jac.block(n, 0, 1, n) = d.transpose();
        const Eigen::VectorXd step = jac.fullPivLu().solve(-r);
        if (!step.allFinite())
            return std::nullopt;

        // backtrack on the residual norm
        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            const Eigen::VectorXd y = x + t * step.head(n);
            const double lam = lambda + t * step(n);
            const double trial_norm = residual(y, lam, trial_r);
            if (std::isfinite(trial_norm) && trial_norm < norm) {
                x = y;
                lambda = lam;
                r = trial_r;
                norm = trial_norm;
                improved = true;
                break;
            }
        }
        if (!improved)
            break;
    }
    if (std::abs(evaluate(qc, x)) > 1e-9 * coefficient_scale(qc))
        return std::nullopt;
    return x;
}

/// Point on {g1 = 0} and {g2 = 0} reached from `x` by minimum-norm
/// Gauss-Newton on (g1, g2).
std::optional<Eigen::VectorXd> find_intersection(const Constraint& c1, const Constraint& c2, Eigen::VectorXd x,
                                                 const SurfaceSearch& search)
{
    constexpr double accept = 1e-8;
    Eigen::MatrixXd jac(2, x.size());
    Eigen::Vector2d r;
    for (std::size_t it = 0; it <= search.max_iterations; ++it) {
        r << evaluate(c1, x), evaluate(c2, x);
        if (!r.allFinite())
            return std::nullopt;
        if (r.norm() <= accept)
            return x;
        if (it == search.max_iterations)
            break;
        jac.row(0) = gradient(c1, x).transpose();
        jac.row(1) = gradient(c2, x).transpose();
        const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(r);
        if (!step.allFinite() || step.norm() == 0.0)
            return std::nullopt;
        x -= step;
    }
    return std::nullopt;
}

Eigen::VectorXd hessian_diagonal(const Constraint& c, Index n)
{
    if (const auto* qc = std::get_if<QuadraticConstraint>(&c)) {
        Eigen::VectorXd h(n);
        for (Index i = 0; i < n; ++i)
            h(i) = 2.0 * qc->quad[static_cast<std::size_t>(i)];
        return h;
    }
    return Eigen::VectorXd::Zero(n);
}

/// Newton on the Lagrange system of min |x - p|^2 subject to g1 = g2 = 0,
/// started from a point already on the intersection.
std::optional<Eigen::VectorXd> nearest_on_intersection(const Constraint& c1, const Constraint& c2,
                                                       const Eigen::VectorXd& p, Eigen::VectorXd x,
                                                       const SurfaceSearch& search)
{
    const Index n = x.size();
    const Eigen::VectorXd h1 = hessian_diagonal(c1, n);
    const Eigen::VectorXd h2 = hessian_diagonal(c2, n);
    Eigen::MatrixXd normals(n, 2);
    normals.col(0) = gradient(c1, x);
    normals.col(1) = gradient(c2, x);
    Eigen::Vector2d lambda = normals.completeOrthogonalDecomposition().solve(-2.0 * (x - p));
    if (!lambda.allFinite())
        return std::nullopt;

    const auto residual = [&](const Eigen::VectorXd& y, const Eigen::Vector2d& lam, Eigen::VectorXd& out) {
        out.resize(n + 2);
        out.head(n) = 2.0 * (y - p) + lam(0) * gradient(c1, y) + lam(1) * gradient(c2, y);
        out(n) = evaluate(c1, y);
        out(n + 1) = evaluate(c2, y);
        return out.lpNorm<Eigen::Infinity>();
    };
    Eigen::VectorXd r, trial_r;
    double norm = residual(x, lambda, r);
    Eigen::MatrixXd jac(n + 2, n + 2);
    for (std::size_t it = 0; it < search.max_iterations && norm > search.tolerance; ++it) {
        jac.setZero();
        for (Index i = 0; i < n; ++i)
            jac(i, i) = 2.0 + lambda(0) * h1(i) + lambda(1) * h2(i);
        const Eigen::VectorXd d1 = gradient(c1, x);
        const Eigen::VectorXd d2 = gradient(c2, x);
        jac.block(0, n, n, 1) = d1;
        jac.block(0, n + 1, n, 1) = d2;
        jac.block(n, 0, 1, n) = d1.transpose();
        jac.block(n + 1, 0, 1, n) = d2.transpose();
        const Eigen::VectorXd step = jac.fullPivLu().solve(-r);
        if (!step.allFinite())
            return std::nullopt;
        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            const Eigen::VectorXd y = x + t * step.head(n);
            const Eigen::Vector2d lam = lambda + t * step.tail(2);
            const double trial_norm = residual(y, lam, trial_r);
            if (std::isfinite(trial_norm) && trial_norm < norm) {
                x = y;
                lambda = lam;
                r = trial_r;
                norm = trial_norm;
                improved = true;
                break;
            }
        }
        if (!improved)
            break;
    }
    if (std::hypot(evaluate(c1, x), evaluate(c2, x)) > 1e-8)
        return std::nullopt;
    return x;
}

double angle_between(const Eigen::VectorXd& n1, const Eigen::VectorXd& n2)
{
    const double c = std::abs(n1.dot(n2)) / (n1.norm() * n2.norm());
    return std::acos(std::min(1.0, c)) * 180.0 / std::numbers::pi;
}

std::string join(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out += ',';
        out += cells[i];
    }
    return out;
}

} // namespace

CoeffStats coeff_stats(std::span<const double> values)
{
    require(values.size() >= 2, "coeff_stats: need at least two values");
    const auto k = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    CoeffStats s;
    s.variance = ss / k;
    s.pop_stddev = std::sqrt(s.variance);
    s.stddev = std::sqrt(ss / (k - 1.0));
    return s;
}

CoeffStats coeff_stats(const Constraint& c)
{
    std::vector<double> genes;
    if (const auto* lc = std::get_if<LinearConstraint>(&c)) {
        genes.push_back(lc->b);
        genes.insert(genes.end(), lc->a.begin(), lc->a.end());
    } else {
        const auto& qc = std::get<QuadraticConstraint>(c);
        genes.push_back(qc.b);
        for (std::size_t i = 0; i < qc.quad.size(); ++i) {
            genes.push_back(qc.quad[i]);
            genes.push_back(qc.lin[i]);
        }
    }
    return coeff_stats(genes);
}

std::optional<SplitStats> split_stats(const Constraint& c)
{
    const auto* qc = std::get_if<QuadraticConstraint>(&c);
    if (!qc || qc->quad.size() < 2)
        return std::nullopt;
    return SplitStats{coeff_stats(qc->quad), coeff_stats(qc->lin)};
}

double linear_distance(const LinearConstraint& lc, std::span<const double> point)
{
    require(lc.a.size() == point.size(), "linear_distance: dimension mismatch");
    double dot = lc.b;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        dot += lc.a[i] * point[i];
        norm2 += lc.a[i] * lc.a[i];
    }
    if (norm2 == 0.0)
        return kNoSurface;
    return std::abs(dot) / std::sqrt(norm2);
}

double quadratic_distance(const QuadraticConstraint& qc, std::span<const double> point, const SurfaceSearch& search)
{
    require(qc.quad.size() == point.size() && qc.lin.size() == point.size(),
            "quadratic_distance: dimension mismatch");
    const Eigen::VectorXd p = as_vector(point);
    if (evaluate(qc, p) == 0.0)
        return 0.0;
    if (!surface_nonempty(qc))
        return kNoSurface;

    double best = kNoSurface;
    for (const auto& start : start_points(point, search)) {
        if (auto x = project_to_quadric(qc, p, start, search))
            best = std::min(best, (*x - p).norm());
    }
    return best;
}

double shortest_distance(const Constraint& c, std::span<const double> point, const SurfaceSearch& search)
{
    if (const auto* lc = std::get_if<LinearConstraint>(&c))
        return linear_distance(*lc, point);
    return quadratic_distance(std::get<QuadraticConstraint>(c), point, search);
}

std::optional<double> pairwise_angle(const Constraint& c1, const Constraint& c2, std::span<const double> point,
                                     const SurfaceSearch& search)
{
    require(constraint_dimension(c1) == point.size() && constraint_dimension(c2) == point.size(),
            "pairwise_angle: dimension mismatch");
    const auto* l1 = std::get_if<LinearConstraint>(&c1);
    const auto* l2 = std::get_if<LinearConstraint>(&c2);
    if (l1 && l2) {
        const Eigen::VectorXd n1 = as_vector(l1->a);
        const Eigen::VectorXd n2 = as_vector(l2->a);
        if (n1.squaredNorm() == 0.0 || n2.squaredNorm() == 0.0)
            return std::nullopt;
        return angle_between(n1, n2);
    }

    const Eigen::VectorXd p = as_vector(point);
    std::optional<Eigen::VectorXd> nearest;
    double nearest_dist = kNoSurface;
    auto starts = start_points(point, search);
    starts.insert(starts.begin(), p);
    for (const auto& start : starts) {
        if (auto x = find_intersection(c1, c2, start, search)) {
            if (auto refined = nearest_on_intersection(c1, c2, p, *x, search))
                x = std::move(refined);
            const double dist = (*x - p).norm();
            if (dist < nearest_dist) {
                nearest_dist = dist;
                nearest = std::move(x);
            }
        }
    }
    if (!nearest)
        return std::nullopt;
    const Eigen::VectorXd n1 = gradient(c1, *nearest);
    const Eigen::VectorXd n2 = gradient(c2, *nearest);
    if (n1.squaredNorm() == 0.0 || n2.squaredNorm() == 0.0)
        return std::nullopt;
    return angle_between(n1, n2);
}

Bounds optimum_vicinity(const Bounds& bounds)
{
    bounds.validate();
    Bounds box = bounds;
    for (std::size_t i = 0; i < bounds.dimension(); ++i) {
        const double half = (bounds.upper[i] - bounds.lower[i]) / 10.0;
        box.lower[i] = std::max(bounds.lower[i], -half);
        box.upper[i] = std::min(bounds.upper[i], half);
    }
    return box;
}

namespace {

bool feasible(const CopInstance& instance, std::span<const double> x)
{
    for (const auto& c : instance.constraints)
        if (evaluate_constraint(c, x) > 0.0)
            return false;
    return true;
}

std::size_t count_feasible(const CopInstance& instance, const Bounds& box, std::size_t samples, Rng& rng)
{
    std::vector<double> x(instance.dimension);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = rng.uniform(box.lower[i], box.upper[i]);
        hits += feasible(instance, x) ? 1 : 0;
    }
    return hits;
}

} // namespace

double feasibility_ratio(const CopInstance& instance, std::size_t sample_count, Rng& rng)
{
    require(sample_count >= 1, "feasibility_ratio: sample_count must be >= 1");
    instance.validate();
    const auto box = optimum_vicinity(instance.bounds);
    return static_cast<double>(count_feasible(instance, box, sample_count, rng)) / static_cast<double>(sample_count);
}

double feasibility_ratio(const CopInstance& instance, std::span<const std::vector<double>> points)
{
    require(!points.empty(), "feasibility_ratio: no points");
    std::size_t hits = 0;
    for (const auto& x : points) {
        require(x.size() == instance.dimension, "feasibility_ratio: dimension mismatch");
        hits += feasible(instance, x) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(points.size());
}

double feasibility_ratio_sharded(const CopInstance& instance, std::size_t sample_count, std::uint64_t seed,
                                 std::size_t workers)
{
    constexpr std::size_t shards = 16;
    require(sample_count >= 1, "feasibility_ratio: sample_count must be >= 1");
    instance.validate();
    const auto box = optimum_vicinity(instance.bounds);
    std::vector<std::size_t> hits(shards, 0);
    parallel_for(shards, workers, [&](std::size_t k) {
        const std::size_t share = sample_count / shards + (k < sample_count % shards ? 1 : 0);
        Rng rng(derive_seed(seed, 0xfea5, k));
        hits[k] = count_feasible(instance, box, share, rng);
    });
    const auto total = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(sample_count);
}

FeatureVector feature_vector(const CopInstance& instance, std::size_t sample_count, Rng& rng,
                             std::string instance_id)
{
    instance.validate();
    const std::vector<double> origin(instance.dimension, 0.0);
    SurfaceSearch search;
    search.seed = rng.next_u64();
    for (std::size_t i = 0; i < instance.dimension; ++i)
        search.radius = std::max(search.radius, (instance.bounds.upper[i] - instance.bounds.lower[i]) / 10.0);

    FeatureVector fv;
    fv.instance_id = std::move(instance_id);
    fv.constraint_count = instance.constraints.size();
    for (const auto& c : instance.constraints) {
        fv.distance.push_back(shortest_distance(c, origin, search));
        fv.stats.push_back(coeff_stats(c));
        fv.split.push_back(split_stats(c));
    }
    for (std::size_t i = 0; i < instance.constraints.size(); ++i)
        for (std::size_t j = i + 1; j < instance.constraints.size(); ++j)
            fv.angles.push_back(pairwise_angle(instance.constraints[i], instance.constraints[j], origin, search));
    fv.ratio = feasibility_ratio(instance, sample_count, rng);
    return fv;
}

std::string format_real(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string feature_csv_header(std::size_t k)
{
    std::vector<std::string> cells{"instance_id", "constraint_count", "ratio"};
    for (const char* prefix : {"dist_", "sd_", "psd_", "var_"})
        for (std::size_t i = 1; i <= k; ++i)
            cells.push_back(prefix + std::to_string(i));
    for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = i + 1; j <= k; ++j)
            cells.push_back("angle_" + std::to_string(i) + "_" + std::to_string(j));
    for (const char* prefix : {"sdq_", "sdl_"})
        for (std::size_t i = 1; i <= k; ++i)
            cells.push_back(prefix + std::to_string(i));
    return join(cells);
}

std::string feature_csv_row(const FeatureVector& fv, std::size_t k)
{
    const std::size_t m = fv.constraint_count;
    require(m <= k, "feature_csv_row: row has more constraints than the header");
    std::vector<std::string> cells{fv.instance_id, std::to_string(m), format_real(fv.ratio)};
    const auto column = [&](auto&& value) {
        for (std::size_t i = 0; i < k; ++i)
            cells.push_back(i < m ? value(i) : std::string());
    };
    column([&](std::size_t i) { return format_real(fv.distance[i]); });
    column([&](std::size_t i) { return format_real(fv.stats[i].stddev); });
    column([&](std::size_t i) { return format_real(fv.stats[i].pop_stddev); });
    column([&](std::size_t i) { return format_real(fv.stats[i].variance); });

    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (j < m) {
                const auto& a = fv.angles[idx++];
                cells.push_back(a ? format_real(*a) : std::string());
            } else {
                cells.emplace_back();
            }
        }
    }
    column([&](std::size_t i) { return fv.split[i] ? format_real(fv.split[i]->quadratic.stddev) : std::string(); });
    column([&](std::size_t i) { return fv.split[i] ? format_real(fv.split[i]->linear.stddev) : std::string(); });
    return join(cells);
}

} // namespace cevo
