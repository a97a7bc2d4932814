#include "contact/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contact {
namespace bounds {

double phi_eps(double eps, double z) {
    if (!(eps > 0.0)) throw UsageError("phi_eps: eps must be > 0");
    const double x = eps * z;
    if (std::fabs(x) < 1e-5) {
        // (e^{-x} - 1 + x)/eps = (x^2/2 - x^3/6 + x^4/24 - ...)/eps
        return (x * x) / eps * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 + x * (-1.0 / 120.0))));
    }
    return (std::expm1(-x) + x) / eps;
}

double f_eps(double eps, double h_value) {
    if (!(eps > 0.0)) throw UsageError("f_eps: eps must be > 0");
    return -std::expm1(-eps * h_value) / eps;
}

EpsParams eps_params(double eps) {
    if (!(eps > 0.0) || !(eps < 2.0)) throw UsageError("eps_params: eps must lie in (0,2)");
    EpsParams p;
    p.eps = eps;
    p.eps1 = (eps / 2.0) / (1.0 - eps / 2.0);
    const double x = (eps / 2.0) * std::exp(eps);
    p.eps2 = x / (1.0 + x);
    p.gamma = gamma_of_eps(eps);
    return p;
}

double gamma_of_eps(double eps) {
    const double ee = std::exp(eps) * eps;
    return (eps + ee) / (2.0 + ee);
}

double eps_of_gamma(double gamma) {
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw UsageError("eps_of_gamma: gamma must lie in (0,1)");
    double lo = 0.0, hi = 2.0;
    // gamma_of_eps is strictly increasing with range (0,1); plain bisection.
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if (gamma_of_eps(mid) < gamma)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double phi_of_gamma(double gamma) {
    return -std::expm1(-eps_of_gamma(gamma));
}

QuadraticBoundReport quadratic_bound_check(double eps, std::size_t grid_points) {
    if (!(eps > 0.0) || !(eps < 2.0)) throw UsageError("quadratic_bound_check: eps must lie in (0,2)");
    if (grid_points < 2) throw UsageError("quadratic_bound_check: need >= 2 grid points");
    QuadraticBoundReport r;
    r.max_violation_pos = -std::numeric_limits<double>::infinity();
    r.max_violation_neg = -std::numeric_limits<double>::infinity();
    const double ee = std::exp(eps);
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double z = static_cast<double>(k) / static_cast<double>(grid_points - 1);
        r.max_violation_pos =
            std::max(r.max_violation_pos, phi_eps(eps, z) - 0.5 * eps * z * z);
        r.max_violation_neg =
            std::max(r.max_violation_neg, phi_eps(eps, -z) - 0.5 * eps * ee * z * z);
    }
    return r;
}

QMatrix::QMatrix(std::size_t states, std::vector<double> row_major)
    : n_(states), m_(std::move(row_major)) {
    if (m_.size() != n_ * n_) throw UsageError("QMatrix: wrong element count");
    for (std::size_t x = 0; x < n_; ++x) {
        double row_sum = 0.0;
        double scale = 1.0;
        for (std::size_t y = 0; y < n_; ++y) {
            const double v = m_[x * n_ + y];
            if (x != y && v < 0.0) throw UsageError("QMatrix: negative off-diagonal entry");
            row_sum += v;
            scale = std::max(scale, std::fabs(v));
        }
        if (std::fabs(row_sum) > 1e-9 * scale)
            throw UsageError("QMatrix: row " + std::to_string(x) + " does not sum to zero");
    }
}

QMatrix QMatrix::from_off_diagonal(std::size_t states, std::vector<double> off) {
    if (off.size() != states * states) throw UsageError("QMatrix: wrong element count");
    for (std::size_t x = 0; x < states; ++x) {
        off[x * states + x] = 0.0;
        double total = 0.0;
        for (std::size_t y = 0; y < states; ++y) total += off[x * states + y];
        off[x * states + x] = -total; // exact zero row sum by construction
    }
    return QMatrix(states, std::move(off));
}

std::vector<double> QMatrix::apply(const std::vector<double>& f) const {
    if (f.size() != n_) throw UsageError("QMatrix::apply: dimension mismatch");
    std::vector<double> out(n_, 0.0);
    for (std::size_t x = 0; x < n_; ++x) {
        // sum_y G(x,y) (f(y) - f(x)) is the numerically kinder form.
        double acc = 0.0;
        for (std::size_t y = 0; y < n_; ++y) {
            if (y == x) continue;
            acc += m_[x * n_ + y] * (f[y] - f[x]);
        }
        out[x] = acc;
    }
    return out;
}

SubmartingaleReport submartingale_check(const QMatrix& q, const std::vector<double>& h,
                                        double eps, double sign_band) {
    if (h.size() != q.states()) throw UsageError("submartingale_check: dimension mismatch");
    if (!(eps > 0.0)) throw UsageError("submartingale_check: eps must be > 0");
    const std::size_t n = q.states();

    std::vector<double> f(n);
    for (std::size_t x = 0; x < n; ++x) f[x] = f_eps(eps, h[x]);

    SubmartingaleReport rep;
    rep.g_f = q.apply(f);
    rep.drift.resize(n);
    rep.scaled.resize(n);
    rep.sign_band = sign_band;

    std::vector<double> gh = q.apply(h);
    for (std::size_t x = 0; x < n; ++x) {
        double heps = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            heps += q.entry(x, y) * phi_eps(eps, h[y] - h[x]);
        }
        rep.drift[x] = gh[x] - heps;
        rep.scaled[x] = std::exp(-eps * h[x]) * rep.drift[x];
        const double denom = std::max({1.0, std::fabs(rep.g_f[x]), std::fabs(rep.scaled[x])});
        rep.max_rel_error = std::max(rep.max_rel_error, std::fabs(rep.g_f[x] - rep.scaled[x]) / denom);
    }

    const double min_gf = *std::min_element(rep.g_f.begin(), rep.g_f.end());
    const double min_drift = *std::min_element(rep.drift.begin(), rep.drift.end());
    // The equivalence claim only applies outside a band around 0, where
    // roundoff could flip a sign.
    if (std::fabs(min_gf) > sign_band && std::fabs(min_drift) > sign_band)
        rep.sign_equivalent = (min_gf >= 0.0) == (min_drift >= 0.0);
    return rep;
}

} // namespace bounds
} // namespace contact
