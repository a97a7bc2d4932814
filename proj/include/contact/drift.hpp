#pragma once

#include <optional>

#include "contact/bounds.hpp"
#include "contact/exact.hpp"

namespace contact {
namespace bounds {

struct DriftCertificate {
    double growth_rate = 0.0;      // r of the reversed-kernel generator
    double eps = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double coeff_infection = 0.0;  // eps1 - (eps/2)(1+eps1)
    double coeff_recovery = 0.0;   // eps2 - (eps/2)e^eps (1-eps2)
    double min_drift = 0.0;        // min over nonempty A of  Gtilde f_eps (A)
    double min_drift_compensated = 0.0; // min of Gtilde f_eps - r e^{-eps h} h
    bool compensated = false;
    double identity_max_rel_error = 0.0; // Gtilde f_eps vs e^{-eps h}(Gtilde h - H_eps h)
    double max_increment = 0.0;    // max_i h(A) - h(A \ {i}) after normalization
};

/// Builds h from the eigenmeasure of the reversed-kernel process (so that
/// G h = r h for the kernel-a generator), forms the modified generator with
/// rates (1+eps1) a and (1-eps2) delta, and evaluates the transformed drift
/// Gtilde f_eps on every nonempty state. With eps1, eps2 from eps_params the
/// two bracket coefficients vanish; the r-compensated drift is then
/// nonnegative up to roundoff. eps1/eps2 may be overridden to probe the
/// strict-inequality direction.
DriftCertificate drift_certificate(const GroupSpec& torus, const InfectionKernel& kernel,
                                   double delta, double eps, bool compensate_r = false,
                                   std::optional<double> eps1_override = std::nullopt,
                                   std::optional<double> eps2_override = std::nullopt);

} // namespace bounds
} // namespace contact
