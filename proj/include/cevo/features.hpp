#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cevo/problem.hpp"
#include "cevo/random.hpp"

namespace cevo {

inline constexpr double kNoSurface = std::numeric_limits<double>::infinity();

struct CoeffStats {
    double stddev = 0.0;     ///< sample, divisor k - 1
    double pop_stddev = 0.0; ///< divisor k
    double variance = 0.0;   ///< pop_stddev squared
};

CoeffStats coeff_stats(std::span<const double> values);

/// Statistics over (b, coefficients...) of one constraint.
CoeffStats coeff_stats(const Constraint& c);

/// Quadratic constraints only: statistics of the x_i^2 coefficients and of
/// the x_i coefficients, each taken separately (b excluded).
struct SplitStats {
    CoeffStats quadratic;
    CoeffStats linear;
};
std::optional<SplitStats> split_stats(const Constraint& c);

/// |a . p + b| / |a|; kNoSurface when a = 0.
double linear_distance(const LinearConstraint& lc, std::span<const double> point);

/// Settings for the multi-start local solvers behind the quadric features.
struct SurfaceSearch {
    /// Axis starts sit at point +- radius * e_i; random starts fill the same box.
    double radius = 1.0;
    std::size_t random_starts = 8;
    double tolerance = 1e-10;
    std::size_t max_iterations = 200;
    std::uint64_t seed = 0x9d2c5680u;
};

/// Shortest Euclidean distance from `point` to {x : g(x) = 0}; kNoSurface
/// when the surface is empty or no start converges.
double quadratic_distance(const QuadraticConstraint& qc, std::span<const double> point,
                          const SurfaceSearch& search = {});

double shortest_distance(const Constraint& c, std::span<const double> point, const SurfaceSearch& search = {});

/// Angle in degrees, folded to [0, 90], between the normals of two constraint
/// surfaces. Linear pairs use their coefficient vectors; pairs involving a
/// quadric use gradients at the intersection point nearest to `point`.
/// Empty when the intersection cannot be located or a normal vanishes.
std::optional<double> pairwise_angle(const Constraint& c1, const Constraint& c2, std::span<const double> point,
                                     const SurfaceSearch& search = {});

/// Half-width (u_i - l_i) / 10 box around the origin, clipped to the bounds.
Bounds optimum_vicinity(const Bounds& bounds);

double feasibility_ratio(const CopInstance& instance, std::size_t sample_count, Rng& rng);

/// Fraction of the given points that satisfy every constraint.
double feasibility_ratio(const CopInstance& instance, std::span<const std::vector<double>> points);

/// Sharded estimate: a fixed number of substreams derived from `seed`, so the
/// value does not depend on `workers`.
double feasibility_ratio_sharded(const CopInstance& instance, std::size_t sample_count, std::uint64_t seed,
                                 std::size_t workers);

struct FeatureVector {
    std::string instance_id;
    std::size_t constraint_count = 0;
    double ratio = 0.0;
    std::vector<double> distance;
    std::vector<CoeffStats> stats;
    std::vector<std::optional<SplitStats>> split;
    /// Upper triangle in (1,2), (1,3), ..., (k-1,k) order.
    std::vector<std::optional<double>> angles;
};

FeatureVector feature_vector(const CopInstance& instance, std::size_t sample_count, Rng& rng,
                             std::string instance_id = {});

/// Header for rows with `k` constraints.
std::string feature_csv_header(std::size_t k);
/// Row padded with empty cells up to `k` constraints.
std::string feature_csv_row(const FeatureVector& fv, std::size_t k);

/// Shortest real formatting that round-trips; "inf" for infinities.
std::string format_real(double v);

} // namespace cevo
