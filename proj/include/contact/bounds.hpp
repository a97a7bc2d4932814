#pragma once

#include <cstddef>
#include <vector>

#include "contact/errors.hpp"

namespace contact {
namespace bounds {

/// phi_eps(z) = (e^{-eps z} - 1 + eps z) / eps. Convex, phi(0) = phi'(0) = 0.
/// Evaluated through a short series for small |eps z| to dodge cancellation.
double phi_eps(double eps, double z);

/// f_eps(h) = (1 - e^{-eps h}) / eps; strictly increasing, saturates at 1/eps.
double f_eps(double eps, double h_value);

/// The (eps, eps1, eps2, gamma) bundle: eps1/(1+eps1) = eps/2,
/// eps2/(1-eps2) = (eps/2) e^eps, gamma = (eps + e^eps eps)/(2 + e^eps eps),
/// which make (1-eps2)/(1+eps1) = 1-gamma.
struct EpsParams {
    double eps = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double gamma = 0.0;
};
EpsParams eps_params(double eps); // requires 0 < eps < 2

double gamma_of_eps(double eps);
/// Inverts gamma_of_eps on (0,2) by bisection to |d eps| <= 1e-14.
double eps_of_gamma(double gamma);
/// phi(gamma) = 1 - e^{-eps(gamma)}; satisfies phi = gamma - gamma^2/2 + O(gamma^3).
double phi_of_gamma(double gamma);

/// Largest value of phi_eps(z) - eps z^2 / 2 over [0,1] and of
/// phi_eps(z) - eps e^eps z^2 / 2 over [-1,0], scanned on `grid_points`
/// points per interval. Nonpositive (up to roundoff) for 0 < eps < 2.
struct QuadraticBoundReport {
    double max_violation_pos = 0.0; // over [0,1]
    double max_violation_neg = 0.0; // over [-1,0]
};
QuadraticBoundReport quadratic_bound_check(double eps, std::size_t grid_points = 10000);

/// Conservative rate matrix: off-diagonals >= 0, rows sum to zero.
class QMatrix {
public:
    QMatrix(std::size_t states, std::vector<double> row_major);
    static QMatrix from_off_diagonal(std::size_t states, std::vector<double> row_major_off_diag);

    std::size_t states() const { return n_; }
    double entry(std::size_t x, std::size_t y) const { return m_[x * n_ + y]; }

    /// (G f)(x) = sum_y G(x,y) f(y).
    std::vector<double> apply(const std::vector<double>& f) const;

private:
    std::size_t n_;
    std::vector<double> m_;
};

/// Evaluates both sides of the submartingale-transformation identity
///   G f_eps = e^{-eps h} (G h - H_eps h),
/// where H_eps h(x) = sum_y G(x,y) phi_eps(h(y) - h(x)). The two routes are
/// computed independently; agreement certifies the sign equivalence
/// (G f_eps >= 0 everywhere) <=> (G h - H_eps h >= 0 everywhere).
struct SubmartingaleReport {
    std::vector<double> g_f;      // G f_eps, direct route
    std::vector<double> drift;    // G h - H_eps h
    std::vector<double> scaled;   // e^{-eps h} * drift
    double max_rel_error = 0.0;   // entrywise |g_f - scaled| / max(1,|g_f|,|scaled|)
    bool sign_equivalent = true;  // with a tolerance band excluded around 0
    double sign_band = 0.0;
};
SubmartingaleReport submartingale_check(const QMatrix& q, const std::vector<double>& h,
                                        double eps, double sign_band = 1e-8);

} // namespace bounds
} // namespace contact
