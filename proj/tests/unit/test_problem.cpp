#include <doctest.h>

#include <cmath>

#include "cevo/problem.hpp"
#include "cevo/random.hpp"

using namespace cevo;

namespace {

CopInstance two_linear()
{
    CopInstance inst;
    inst.dimension = 2;
    inst.bounds = Bounds::uniform(2);
    inst.constraints = {LinearConstraint{-1.5, {1.0, 0.0}}, LinearConstraint{-3.0, {0.0, 1.0}}};
    return inst;
}

} // namespace

TEST_CASE("objective values")
{
    const std::vector<double> origin2(2, 0.0);
    CHECK(evaluate_objective(ObjectiveKind::Sphere, origin2) == 0.0);
    CHECK(evaluate_objective(ObjectiveKind::Sphere, std::vector<double>{1.0, 2.0}) == 5.0);
    CHECK(evaluate_objective(ObjectiveKind::Rosenbrock, origin2) == 0.0);
    CHECK(evaluate_objective(ObjectiveKind::Ackley, std::vector<double>(7, 0.0)) == 0.0);
    CHECK(evaluate_objective(ObjectiveKind::Schaffer, origin2) == 0.0);
}

TEST_CASE("objective formulas against direct evaluation")
{
    const std::vector<double> x{0.3, -1.2, 2.0};
    const double pi = std::acos(-1.0);
    double sq = 0.0, cs = 0.0;
    for (double v : x) {
        sq += v * v;
        cs += std::cos(2 * pi * v);
    }
    const double ackley = -20 * std::exp(-0.2 * std::sqrt(sq / 3)) - std::exp(cs / 3) + 20 + std::exp(1.0);
    CHECK(evaluate_objective(ObjectiveKind::Ackley, x) == doctest::Approx(ackley).epsilon(1e-12));

    double rosen = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i] + 1, b = x[i + 1] + 1;
        rosen += 100 * (b - a * a) * (b - a * a) + (a - 1) * (a - 1);
    }
    CHECK(evaluate_objective(ObjectiveKind::Rosenbrock, x) == doctest::Approx(rosen).epsilon(1e-12));

    double schaffer = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double s = x[i] * x[i] + x[i + 1] * x[i + 1];
        const double t = std::sin(std::sqrt(s));
        schaffer += 0.5 + (t * t - 0.5) / ((1 + 0.001 * s) * (1 + 0.001 * s));
    }
    CHECK(evaluate_objective(ObjectiveKind::Schaffer, x) == doctest::Approx(schaffer).epsilon(1e-12));
}

TEST_CASE("objective rejects empty input and parses tags")
{
    CHECK_THROWS_AS(evaluate_objective(ObjectiveKind::Sphere, std::vector<double>{}), ContractViolation);
    CHECK(objective_from_string("Ackley") == ObjectiveKind::Ackley);
    CHECK(to_string(ObjectiveKind::Rosenbrock) == "rosenbrock");
    CHECK_THROWS_AS(objective_from_string("griewank"), ContractViolation);
}

TEST_CASE("constraint evaluation examples")
{
    const LinearConstraint lin{-2.0, {1.0, 1.0}};
    CHECK(evaluate_constraint(lin, std::vector<double>{0.0, 0.0}) == -2.0);
    CHECK(evaluate_constraint(lin, std::vector<double>{1.0, 1.0}) == 0.0);
    const QuadraticConstraint quad{-1.0, {1.0}, {0.0}};
    CHECK(evaluate_constraint(quad, std::vector<double>{2.0}) == 3.0);
    CHECK_THROWS_AS(evaluate_constraint(lin, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("violation sums positive parts")
{
    auto inst = two_linear();
    CHECK(violation(inst, std::vector<double>{0.0, 0.0}) == 0.0);
    // g = (1.5, -3)
    CHECK(violation(inst, std::vector<double>{3.0, 0.0}) == 1.5);
    // g = (1, 2)
    CHECK(violation(inst, std::vector<double>{2.5, 5.0}) == 3.0);
    CHECK_THROWS_AS(violation(inst, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("equality transform")
{
    CHECK(transform_equality(0.0) == -1e-4);
    CHECK(transform_equality(1e-4) == 0.0);
    CHECK(transform_equality(0.5) == doctest::Approx(0.4999).epsilon(1e-15));
    CHECK(transform_equality(-0.5, 0.1) == doctest::Approx(0.4));
    CHECK_THROWS_AS(transform_equality(1.0, 0.0), ContractViolation);
    CHECK_THROWS_AS(transform_equality(1.0, -1.0), ContractViolation);
}

TEST_CASE("bounds and instance validation")
{
    CHECK_THROWS_AS((Bounds{{0.0}, {0.0}}).validate(), ContractViolation);
    CHECK_THROWS_AS((Bounds{{}, {}}).validate(), ContractViolation);
    CHECK_THROWS_AS((Bounds{{0.0, 1.0}, {1.0}}).validate(), ContractViolation);

    auto inst = two_linear();
    CHECK_NOTHROW(inst.validate());
    inst.bounds = Bounds{{1.0, -1.0}, {2.0, 1.0}};
    CHECK_THROWS_AS(inst.validate(), ContractViolation);
    inst = two_linear();
    inst.constraints.push_back(LinearConstraint{0.0, {1.0}});
    CHECK_THROWS_AS(inst.validate(), ContractViolation);

    const auto b = Bounds::uniform(2, -1.0, 1.0);
    std::vector<double> x{3.0, -0.5};
    b.clamp(x);
    CHECK(x == std::vector<double>{1.0, -0.5});
    CHECK(b.contains(x));
}

TEST_CASE("instance JSON round trip keeps field order and values")
{
    CopInstance inst;
    inst.objective = ObjectiveKind::Schaffer;
    inst.dimension = 2;
    inst.bounds = Bounds::uniform(2);
    inst.constraints = {LinearConstraint{-0.1, {0.1 + 0.2, -1.0 / 3.0}},
                        QuadraticConstraint{-2.0, {1.0, std::nextafter(1.0, 2.0)}, {0.5, -0.25}}};
    const auto j = to_json(inst);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it)
        keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"objective", "dimension", "bounds", "constraints"});
    CHECK(j["constraints"][1]["type"] == "quadratic");
    CHECK(j["constraints"][1]["pairs"][1][0].get<double>() == std::nextafter(1.0, 2.0));

    const auto back = instance_from_json(Json::parse(dump_json(j)));
    CHECK(back == inst);
}

TEST_CASE("malformed instance JSON is a contract violation")
{
    CHECK_THROWS_AS(instance_from_json(Json::parse(R"({"objective":"sphere"})")), ContractViolation);
    CHECK_THROWS_AS(instance_from_json(Json::parse(
                        R"({"objective":"sphere","dimension":1,"bounds":{"lower":[-1],"upper":[1]},
                            "constraints":[{"type":"cubic","b":0}]})")),
                    ContractViolation);
    CHECK_THROWS_AS(read_json_file("/nonexistent/instance.json"), IoError);
}

TEST_CASE("constraint gradient matches finite differences")
{
    const QuadraticConstraint q{-1.0, {2.0, -1.0, 0.5}, {1.0, 0.0, -3.0}};
    const std::vector<double> x{0.4, -1.1, 2.2};
    std::vector<double> grad(3);
    constraint_gradient(q, x, grad);
    for (std::size_t i = 0; i < 3; ++i) {
        auto hi = x, lo = x;
        hi[i] += 1e-6;
        lo[i] -= 1e-6;
        const double fd = (evaluate_constraint(q, hi) - evaluate_constraint(q, lo)) / 2e-6;
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}
