#include "contact/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "contact/errors.hpp"

namespace contact {

ConfidenceInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double binomial_se(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) return 0.0;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    return std::sqrt(p * (1.0 - p) / n);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("fit_line: size mismatch");
    if (x.size() < 2) throw NumericalError("fit_line: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw NumericalError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = x.size();
    return f;
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed,
                                std::span<const double> expected_probability,
                                std::uint64_t trials, double min_expected) {
    if (observed.size() != expected_probability.size())
        throw UsageError("chi_square_test: size mismatch");
    const double n = static_cast<double>(trials);

    // Pool under-populated cells: sort-free greedy merge into a spill cell.
    std::vector<double> exp_counts;
    std::vector<double> obs_counts;
    double spill_exp = 0.0, spill_obs = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_probability[i] * n;
        if (e < min_expected) {
            spill_exp += e;
            spill_obs += static_cast<double>(observed[i]);
        } else {
            exp_counts.push_back(e);
            obs_counts.push_back(static_cast<double>(observed[i]));
        }
    }
    if (spill_exp > 0.0) {
        exp_counts.push_back(spill_exp);
        obs_counts.push_back(spill_obs);
    }
    if (exp_counts.size() < 2) throw NumericalError("chi_square_test: fewer than 2 usable cells");

    ChiSquareResult r;
    for (std::size_t i = 0; i < exp_counts.size(); ++i) {
        const double d = obs_counts[i] - exp_counts[i];
        r.statistic += d * d / exp_counts[i];
    }
    r.dof = exp_counts.size() - 1;
    boost::math::chi_squared dist(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

} // namespace contact
