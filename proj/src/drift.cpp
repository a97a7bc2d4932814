#include "contact/drift.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "contact/errors.hpp"

namespace contact {
namespace bounds {

DriftCertificate drift_certificate(const GroupSpec& torus, const InfectionKernel& kernel,
                                   double delta, double eps, bool compensate_r,
                                   std::optional<double> eps1_override,
                                   std::optional<double> eps2_override) {
    SiteIndex sites(torus);
    if (sites.count() > 10)
        throw CapacityError("drift certificate builds a dense Q-matrix; 10 sites max");

    // h from the reversed-kernel eigenmeasure: G h = r h for the kernel-a
    // generator by the eigenfunction lemma.
    exact::RestrictedGenerator reversed_gen(torus, kernel.reversed(), delta);
    const exact::EigenResult eig = exact::exact_growth_rate(reversed_gen);
    const std::size_t size = eig.h.size();
    const std::uint32_t n = sites.count();

    DriftCertificate cert;
    cert.growth_rate = eig.r;
    cert.eps = eps;
    const EpsParams base = eps_params(eps);
    cert.eps1 = eps1_override.value_or(base.eps1);
    cert.eps2 = eps2_override.value_or(base.eps2);
    cert.coeff_infection = cert.eps1 - 0.5 * eps * (1.0 + cert.eps1);
    cert.coeff_recovery = cert.eps2 - 0.5 * eps * std::exp(eps) * (1.0 - cert.eps2);

    // Increment bound h(A) - h(A \ {i}) <= 1 is what the quadratic estimates
    // rely on; reject h that breaks it (cannot happen with the per-site
    // normalization, but overrides of nu would).
    cert.max_increment = 0.0;
    for (std::size_t a = 1; a < size; ++a) {
        auto mask = static_cast<exact::StateMask>(a);
        while (mask) {
            const exact::StateMask bit = mask & (~mask + 1);
            cert.max_increment =
                std::max(cert.max_increment, eig.h[a] - eig.h[a ^ bit]);
            mask &= mask - 1;
        }
    }
    if (cert.max_increment > 1.0 + 1e-9)
        throw NumericalError("h increments exceed 1 after normalization");

    // Modified full generator on all subsets: rates (1+eps1) a, (1-eps2) delta.
    exact::RestrictedGenerator modified(
        torus,
        InfectionKernel::from_pairs(torus,
                                    [&] {
                                        std::vector<std::pair<Site, double>> scaled;
                                        for (const auto& [site, rate] : kernel.base())
                                            scaled.emplace_back(site, (1.0 + cert.eps1) * rate);
                                        return scaled;
                                    }()),
        (1.0 - cert.eps2) * delta);

    std::vector<double> off(size * size, 0.0);
    for (std::size_t a = 1; a < size; ++a)
        for (const auto& tr : modified.row(static_cast<exact::StateMask>(a)))
            off[a * size + tr.target] = tr.rate;
    // Recovery into the empty set is part of the full generator.
    if (modified.delta() > 0.0)
        for (std::uint32_t i = 0; i < n; ++i) off[(std::size_t{1} << i) * size + 0] = modified.delta();
    const QMatrix q = QMatrix::from_off_diagonal(size, std::move(off));

    const SubmartingaleReport rep = submartingale_check(q, eig.h, eps);
    cert.identity_max_rel_error = rep.max_rel_error;

    cert.min_drift = std::numeric_limits<double>::infinity();
    cert.min_drift_compensated = std::numeric_limits<double>::infinity();
    cert.compensated = compensate_r;
    for (std::size_t a = 1; a < size; ++a) {
        cert.min_drift = std::min(cert.min_drift, rep.g_f[a]);
        const double compensated =
            rep.g_f[a] - eig.r * std::exp(-eps * eig.h[a]) * eig.h[a];
        cert.min_drift_compensated = std::min(cert.min_drift_compensated, compensated);
    }
    return cert;
}

} // namespace bounds
} // namespace contact
