#include "cevo/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cevo/error.hpp"

namespace cevo {

namespace {

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

void require_dimension(std::size_t expected, std::size_t actual, const char* what)
{
    if (expected != actual)
        throw ContractViolation(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) +
                                ", got " + std::to_string(actual) + ")");
}

double sphere(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return s;
}

double ackley(std::span<const double> x)
{
    const double n = static_cast<double>(x.size());
    double sq = 0.0;
    double cs = 0.0;
    for (double v : x) {
        sq += v * v;
        cs += std::cos(2.0 * std::numbers::pi * v);
    }
    // Grouped so that the origin evaluates to exactly zero.
    return (20.0 - 20.0 * std::exp(-0.2 * std::sqrt(sq / n))) + (std::numbers::e - std::exp(cs / n));
}

double rosenbrock_shifted(std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double zi = x[i] + 1.0;
        const double zn = x[i + 1] + 1.0;
        const double t = zn - zi * zi;
        s += 100.0 * t * t + x[i] * x[i];
    }
    return s;
}

double schaffer_f6(std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double r2 = x[i] * x[i] + x[i + 1] * x[i + 1];
        const double sn = std::sin(std::sqrt(r2));
        const double den = 1.0 + 0.001 * r2;
        s += 0.5 + (sn * sn - 0.5) / (den * den);
    }
    return s;
}

} // namespace

std::string_view to_string(ObjectiveKind kind)
{
    switch (kind) {
    case ObjectiveKind::Sphere:
        return "sphere";
    case ObjectiveKind::Ackley:
        return "ackley";
    case ObjectiveKind::Rosenbrock:
        return "rosenbrock";
    case ObjectiveKind::Schaffer:
        return "schaffer";
    }
    return "unknown";
}

ObjectiveKind objective_from_string(std::string_view tag)
{
    const auto t = lowercase(tag);
    if (t == "sphere")
        return ObjectiveKind::Sphere;
    if (t == "ackley")
        return ObjectiveKind::Ackley;
    if (t == "rosenbrock")
        return ObjectiveKind::Rosenbrock;
    if (t == "schaffer")
        return ObjectiveKind::Schaffer;
    throw ContractViolation("unknown objective: " + std::string(tag));
}

Bounds Bounds::uniform(std::size_t n, double lo, double hi)
{
    return Bounds{std::vector<double>(n, lo), std::vector<double>(n, hi)};
}

void Bounds::validate() const
{
    require(!lower.empty(), "bounds: dimension must be >= 1");
    require(lower.size() == upper.size(), "bounds: lower and upper differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i)
        require(lower[i] < upper[i], "bounds: lower must be < upper in dimension " + std::to_string(i));
}

bool Bounds::contains(std::span<const double> x) const
{
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i])
            return false;
    return true;
}

void Bounds::clamp(std::span<double> x) const
{
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], lower[i], upper[i]);
}

std::size_t constraint_dimension(const Constraint& c)
{
    return std::visit(
        [](const auto& k) -> std::size_t {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, LinearConstraint>)
                return k.a.size();
            else
                return k.quad.size();
        },
        c);
}

bool is_quadratic(const Constraint& c) { return std::holds_alternative<QuadraticConstraint>(c); }

void CopInstance::validate() const
{
    require(dimension >= 1, "instance: dimension must be >= 1");
    bounds.validate();
    require_dimension(dimension, bounds.dimension(), "instance bounds");
    for (const auto& c : constraints) {
        require_dimension(dimension, constraint_dimension(c), "instance constraint");
        if (const auto* q = std::get_if<QuadraticConstraint>(&c))
            require(q->lin.size() == q->quad.size(), "quadratic constraint: pair count mismatch");
    }
    for (std::size_t i = 0; i < dimension; ++i)
        require(bounds.lower[i] <= 0.0 && 0.0 <= bounds.upper[i], "instance: origin lies outside the bounds");
}

double evaluate_objective(ObjectiveKind kind, std::span<const double> x)
{
    require(!x.empty(), "evaluate_objective: empty point");
    switch (kind) {
    case ObjectiveKind::Sphere:
        return sphere(x);
    case ObjectiveKind::Ackley:
        return ackley(x);
    case ObjectiveKind::Rosenbrock:
        return rosenbrock_shifted(x);
    case ObjectiveKind::Schaffer:
        return schaffer_f6(x);
    }
    throw ContractViolation("evaluate_objective: unknown objective kind");
}

double evaluate_constraint(const Constraint& c, std::span<const double> x)
{
    if (const auto* lc = std::get_if<LinearConstraint>(&c)) {
        require_dimension(lc->a.size(), x.size(), "evaluate_constraint");
        double g = lc->b;
        for (std::size_t i = 0; i < x.size(); ++i)
            g += lc->a[i] * x[i];
        return g;
    }
    const auto& qc = std::get<QuadraticConstraint>(c);
    require_dimension(qc.quad.size(), x.size(), "evaluate_constraint");
    double g = qc.b;
    for (std::size_t i = 0; i < x.size(); ++i)
        g += (qc.quad[i] * x[i] + qc.lin[i]) * x[i];
    return g;
}

void constraint_gradient(const Constraint& c, std::span<const double> x, std::span<double> out)
{
    require_dimension(constraint_dimension(c), x.size(), "constraint_gradient");
    require_dimension(x.size(), out.size(), "constraint_gradient output");
    if (const auto* lc = std::get_if<LinearConstraint>(&c)) {
        std::ranges::copy(lc->a, out.begin());
        return;
    }
    const auto& qc = std::get<QuadraticConstraint>(c);
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = 2.0 * qc.quad[i] * x[i] + qc.lin[i];
}

double violation(const CopInstance& instance, std::span<const double> x)
{
    require_dimension(instance.dimension, x.size(), "violation");
    double phi = 0.0;
    for (const auto& c : instance.constraints)
        phi += std::max(0.0, evaluate_constraint(c, x));
    return phi;
}

double transform_equality(double h_value, double tol)
{
    require(tol > 0.0, "transform_equality: tolerance must be positive");
    return std::abs(h_value) - tol;
}

Json to_json(const Constraint& c)
{
    Json j;
    if (const auto* lc = std::get_if<LinearConstraint>(&c)) {
        j["type"] = "linear";
        j["b"] = lc->b;
        j["a"] = lc->a;
        return j;
    }
    const auto& qc = std::get<QuadraticConstraint>(c);
    j["type"] = "quadratic";
    j["b"] = qc.b;
    Json pairs = Json::array();
    for (std::size_t i = 0; i < qc.quad.size(); ++i)
        pairs.push_back(Json::array({qc.quad[i], qc.lin[i]}));
    j["pairs"] = std::move(pairs);
    return j;
}

Constraint constraint_from_json(const Json& j)
{
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "linear")
            return LinearConstraint{j.at("b").get<double>(), j.at("a").get<std::vector<double>>()};
        if (type == "quadratic") {
            QuadraticConstraint qc;
            qc.b = j.at("b").get<double>();
            for (const auto& p : j.at("pairs")) {
                require(p.is_array() && p.size() == 2, "quadratic pair must be [q, l]");
                qc.quad.push_back(p[0].get<double>());
                qc.lin.push_back(p[1].get<double>());
            }
            return qc;
        }
        throw ContractViolation("unknown constraint type: " + type);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("malformed constraint: ") + e.what());
    }
}

Json to_json(const CopInstance& instance)
{
    Json j;
    j["objective"] = std::string(to_string(instance.objective));
    j["dimension"] = instance.dimension;
    j["bounds"] = {{"lower", instance.bounds.lower}, {"upper", instance.bounds.upper}};
    Json cs = Json::array();
    for (const auto& c : instance.constraints)
        cs.push_back(to_json(c));
    j["constraints"] = std::move(cs);
    return j;
}

CopInstance instance_from_json(const Json& j)
{
    CopInstance inst;
    try {
        inst.objective = objective_from_string(j.at("objective").get<std::string>());
        inst.dimension = j.at("dimension").get<std::size_t>();
        inst.bounds.lower = j.at("bounds").at("lower").get<std::vector<double>>();
        inst.bounds.upper = j.at("bounds").at("upper").get<std::vector<double>>();
        for (const auto& c : j.at("constraints"))
            inst.constraints.push_back(constraint_from_json(c));
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("malformed instance: ") + e.what());
    }
    inst.validate();
    return inst;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ContractViolation("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out)
            throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

CopInstance load_instance(const std::filesystem::path& path) { return instance_from_json(read_json_file(path)); }

void save_instance(const std::filesystem::path& path, const CopInstance& instance)
{
    write_text_file(path, dump_json(to_json(instance)));
}

} // namespace cevo
