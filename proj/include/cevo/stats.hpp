#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cevo {

/// Linear-interpolation (type 7) quantile, p in [0, 1].
double quantile(std::span<const double> values, double p);

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

Summary summarize_values(std::span<const double> values);

/// One-sided sign test: P(X >= successes) for X ~ Binomial(trials, 1/2).
double sign_test_p(std::size_t successes, std::size_t trials);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> average_ranks(std::span<const double> values);

} // namespace cevo
