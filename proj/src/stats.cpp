#include "cevo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cevo/error.hpp"

namespace cevo {

double quantile(std::span<const double> values, double p)
{
    require(!values.empty(), "quantile: no values");
    require(p >= 0.0 && p <= 1.0, "quantile: p must be in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::ranges::sort(v);
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Summary summarize_values(std::span<const double> values)
{
    require(!values.empty(), "summarize_values: no values");
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.min = quantile(values, 0.0);
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.max = quantile(values, 1.0);
    return s;
}

double sign_test_p(std::size_t successes, std::size_t trials)
{
    require(successes <= trials, "sign_test_p: successes exceed trials");
    // sum_{k >= successes} C(trials, k) / 2^trials, in log space
    double p = 0.0;
    for (std::size_t k = successes; k <= trials; ++k) {
        const double log_c = std::lgamma(static_cast<double>(trials) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                             std::lgamma(static_cast<double>(trials - k) + 1.0);
        p += std::exp(log_c - static_cast<double>(trials) * std::log(2.0));
    }
    return std::min(1.0, p);
}

std::vector<double> average_ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && x.size() >= 2, "spearman: need two equal-length samples of size >= 2");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace cevo
