#pragma once

#include <cstdint>
#include <vector>

#include "contact/group.hpp"
#include "contact/kernel.hpp"

namespace contact {
namespace exact {

/// Subsets of an enumerated finite group as bitmasks: bit i set means site i
/// is infected. Vectors over states are indexed by mask; slot 0 is the empty
/// set and is kept at zero in measure vectors.
using StateMask = std::uint32_t;

/// The contact-process generator restricted to the nonempty subsets of a
/// finite torus. Rows are generated on the fly from the site-to-site rate
/// table; nothing quadratic in the state count is ever materialized.
class RestrictedGenerator {
public:
    RestrictedGenerator(const GroupSpec& torus, const InfectionKernel& kernel, double delta);

    const SiteIndex& sites() const { return sites_; }
    const GroupSpec& group() const { return group_; }
    const InfectionKernel& kernel() const { return kernel_; }
    double delta() const { return delta_; }
    std::uint32_t site_count() const { return n_; }
    std::size_t state_count() const { return std::size_t{1} << n_; }
    StateMask full_state() const { return static_cast<StateMask>(state_count() - 1); }

    /// a(site_i, site_j) by enumeration index.
    double site_rate(std::uint32_t i, std::uint32_t j) const { return site_rate_[i * n_ + j]; }

    /// Max total exit rate over nonempty states (the uniformization constant).
    double max_exit_rate() const { return theta_; }
    /// Theta' = Theta + 1, the rate actually used for uniformization.
    double uniformization_rate() const { return theta_ + 1.0; }

    /// Total rate out of state a, including the leak to the empty set.
    double exit_rate(StateMask a) const;

    struct Transition {
        StateMask target;
        double rate;
    };
    /// Off-diagonal row entries within the nonempty states (positive rates only).
    std::vector<Transition> row(StateMask a) const;

    /// out = v G (both over all 2^n slots; slot 0 is ignored and left zero).
    void apply_row(const double* v, double* out) const;
    /// out = G f with the convention f(empty) = 0.
    void apply_col(const double* f, double* out) const;

    /// v P_t by uniformization (measure evolution, mass may leak to empty).
    std::vector<double> semigroup_row(std::vector<double> v, double t) const;
    /// P_t f by uniformization (function evolution).
    std::vector<double> semigroup_col(std::vector<double> f, double t) const;

    /// True iff every site is reachable from the origin along positive-rate
    /// kernel steps; with delta > 0 this makes the restriction irreducible.
    bool kernel_support_connects() const;

private:
    std::vector<double> uniformized_sweep(std::vector<double> v, double t, bool row) const;

    GroupSpec group_;
    SiteIndex sites_;
    InfectionKernel kernel_;
    double delta_;
    std::uint32_t n_;
    std::vector<double> site_rate_;            // n x n, row major
    std::vector<StateMask> infect_src_mask_;   // per target j: sites that can infect j
    double theta_;
};

struct EigenResult {
    double r = 0.0;                 // Perron eigenvalue (exponential growth rate)
    std::vector<double> nu;         // eigenmeasure, sum_B nu(B) 1{0 in B} = 1
    std::vector<double> h;          // h(A) = sum_B nu(B) 1{A cap B nonempty}
    double residual_nu = 0.0;       // || nu G - r nu ||_inf
    double residual_h = 0.0;        // || G_dual h - r h ||_inf
    double normalization = 0.0;     // divisor applied to reach the per-site normalization
    std::uint64_t iterations = 0;
};

/// Perron eigenvalue and left eigenvector of the restricted generator via
/// power iteration on I + G/Theta', plus the derived eigenfunction h of the
/// reversed-kernel generator. Requires connected kernel support.
EigenResult exact_growth_rate(const RestrictedGenerator& gen);

struct ResolventMeasure {
    double lambda = 0.0;
    std::vector<double> nu;     // nu_lambda over states
    double pi = 0.0;            // sum_B nu_lambda(B) 1{0 in B}
    double residual = 0.0;      // || nu(lambda I - G) - mu ||_inf
};

/// Solves nu_lambda (lambda I - G) = mu with mu = sum_i delta_{{i}}, by the
/// uniformized resolvent series with iterative refinement. Requires
/// lambda > r; pass the growth rate if it is already known.
ResolventMeasure resolvent_eigenmeasure(const RestrictedGenerator& gen, double lambda);
ResolventMeasure resolvent_eigenmeasure(const RestrictedGenerator& gen, double lambda,
                                        double growth_rate);

/// h(A) = sum_B mu(B) 1{A cap B nonempty} for every A, via a subset-sum
/// (zeta) transform in n 2^n steps. mu must be nonnegative with slot 0 zero.
std::vector<double> harmonic_from_measure(std::uint32_t n_sites, const std::vector<double>& mu);

struct DualityResult {
    double lhs = 0.0; // P[ eta^A_t  cap B nonempty ] under kernel a
    double rhs = 0.0; // P[ A cap eta^dagger-B_t nonempty ] under kernel a^dagger
};
DualityResult duality_check(const GroupSpec& torus, const InfectionKernel& kernel, double delta,
                            StateMask a, StateMask b, double t);

struct SubmultResult {
    double lhs = 0.0; // E |eta^{0}_{s+t}|
    double rhs = 0.0; // E |eta^{0}_s| * E |eta^{0}_t|
};
SubmultResult submultiplicativity_check(const RestrictedGenerator& gen, double s, double t);

/// E |eta^{{0}}_t| for the generator's process.
double expected_size_from_origin(const RestrictedGenerator& gen, double t);

/// Distribution of eta^A_t over all states; slot 0 carries the mass absorbed
/// by the empty set (extinction probability by time t).
std::vector<double> state_distribution(const RestrictedGenerator& gen, StateMask a, double t);

/// Image of a state under a site permutation.
StateMask permute_mask(const std::vector<std::uint32_t>& perm, StateMask mask);

/// Max entrywise change of nu under any left-translation permutation;
/// zero (up to roundoff) exactly when nu is homogeneous.
double homogeneity_defect(const SiteIndex& sites, const std::vector<double>& nu);

} // namespace exact
} // namespace contact
