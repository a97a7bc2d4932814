#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace contact {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion (default 95%).
ConfidenceInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                   double z = 1.959963984540054);

/// Plain binomial standard error sqrt(p(1-p)/n).
double binomial_se(std::uint64_t successes, std::uint64_t trials);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Pearson chi-square test of observed counts against expected probabilities.
/// Cells with tiny expectation are pooled into their neighbor before the
/// statistic is formed. Returns the p-value (upper tail).
struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};
ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed,
                                std::span<const double> expected_probability,
                                std::uint64_t trials, double min_expected = 5.0);

} // namespace contact
