#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cevo/error.hpp"
#include "json.hpp"

namespace cevo {

using Json = nlohmann::ordered_json;

enum class ObjectiveKind { Sphere, Ackley, Rosenbrock, Schaffer };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(std::string_view tag);

/// Box [lower_i, upper_i] for each decision variable.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    /// Same interval in every dimension.
    static Bounds uniform(std::size_t n, double lo = -5.0, double hi = 5.0);

    std::size_t dimension() const { return lower.size(); }
    void validate() const;
    bool contains(std::span<const double> x) const;
    void clamp(std::span<double> x) const;

    bool operator==(const Bounds&) const = default;
};

/// g(x) = b + sum_i a_i x_i
struct LinearConstraint {
    double b = 0.0;
    std::vector<double> a;

    bool operator==(const LinearConstraint&) const = default;
};

/// g(x) = b + sum_i (quad_i x_i^2 + lin_i x_i). Univariate terms only.
struct QuadraticConstraint {
    double b = 0.0;
    std::vector<double> quad;
    std::vector<double> lin;

    bool operator==(const QuadraticConstraint&) const = default;
};

using Constraint = std::variant<LinearConstraint, QuadraticConstraint>;

std::size_t constraint_dimension(const Constraint& c);
bool is_quadratic(const Constraint& c);

/// A constrained optimization problem whose known optimum is the origin.
struct CopInstance {
    ObjectiveKind objective = ObjectiveKind::Sphere;
    std::size_t dimension = 0;
    Bounds bounds;
    std::vector<Constraint> constraints;

    /// Throws ContractViolation when dimensions disagree or the origin is
    /// outside the bounds.
    void validate() const;

    bool operator==(const CopInstance&) const = default;
};

double evaluate_objective(ObjectiveKind kind, std::span<const double> x);

/// Raw g(x); a value <= 0 means the constraint is satisfied.
double evaluate_constraint(const Constraint& c, std::span<const double> x);

/// Writes dg/dx into `out` (same length as x).
void constraint_gradient(const Constraint& c, std::span<const double> x, std::span<double> out);

/// Sum of positive constraint values; zero exactly on feasible points.
double violation(const CopInstance& instance, std::span<const double> x);

/// |h| - tol, for turning h(x) = 0 into an inequality.
double transform_equality(double h_value, double tol = 1e-4);

Json to_json(const Constraint& c);
Constraint constraint_from_json(const Json& j);
Json to_json(const CopInstance& instance);
CopInstance instance_from_json(const Json& j);

std::string dump_json(const Json& j);
Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

CopInstance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const CopInstance& instance);

} // namespace cevo
