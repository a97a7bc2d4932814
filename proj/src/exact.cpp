#include "contact/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "contact/errors.hpp"

namespace contact {
namespace exact {

namespace {

constexpr double kPoissonTailMass = 1e-13;
constexpr double kRayleighTol = 1e-13;
constexpr double kResidualTarget = 1e-10;
constexpr std::uint64_t kMaxPowerIterations = 200000;

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

} // namespace

RestrictedGenerator::RestrictedGenerator(const GroupSpec& torus, const InfectionKernel& kernel,
                                         double delta)
    : group_(torus), sites_(torus), kernel_(kernel), delta_(delta) {
    if (!(kernel.group() == torus)) throw UsageError("kernel group does not match torus");
    if (delta < 0.0 || !std::isfinite(delta)) throw UsageError("delta must be finite and >= 0");
    n_ = sites_.count();

    site_rate_.assign(std::size_t{n_} * n_, 0.0);
    for (std::uint32_t i = 0; i < n_; ++i) {
        for (const auto& [offset, rate] : kernel_.base()) {
            if (rate <= 0.0) continue;
            const std::uint32_t j = sites_.index_of(group_.multiply(sites_.site(i), offset));
            site_rate_[i * n_ + j] += rate;
        }
    }
    infect_src_mask_.assign(n_, 0);
    for (std::uint32_t j = 0; j < n_; ++j)
        for (std::uint32_t i = 0; i < n_; ++i)
            if (site_rate_[i * n_ + j] > 0.0) infect_src_mask_[j] |= StateMask{1} << i;

    theta_ = 0.0;
    const StateMask full = full_state();
    for (StateMask a = 1; a <= full; ++a) theta_ = std::max(theta_, exit_rate(a));
}

double RestrictedGenerator::exit_rate(StateMask a) const {
    double total = delta_ * static_cast<double>(std::popcount(a));
    for (std::uint32_t j = 0; j < n_; ++j) {
        if (a & (StateMask{1} << j)) continue;
        StateMask m = a & infect_src_mask_[j];
        while (m) {
            const std::uint32_t i = static_cast<std::uint32_t>(std::countr_zero(m));
            total += site_rate_[i * n_ + j];
            m &= m - 1;
        }
    }
    return total;
}

std::vector<RestrictedGenerator::Transition> RestrictedGenerator::row(StateMask a) const {
    std::vector<Transition> out;
    if (delta_ > 0.0) {
        StateMask m = a;
        while (m) {
            const StateMask bit = m & (~m + 1);
            if (a ^ bit) out.push_back({static_cast<StateMask>(a ^ bit), delta_});
            m &= m - 1;
        }
    }
    for (std::uint32_t j = 0; j < n_; ++j) {
        if (a & (StateMask{1} << j)) continue;
        double s = 0.0;
        StateMask m = a & infect_src_mask_[j];
        while (m) {
            const std::uint32_t i = static_cast<std::uint32_t>(std::countr_zero(m));
            s += site_rate_[i * n_ + j];
            m &= m - 1;
        }
        if (s > 0.0) out.push_back({static_cast<StateMask>(a | (StateMask{1} << j)), s});
    }
    return out;
}

void RestrictedGenerator::apply_row(const double* v, double* out) const {
    const StateMask full = full_state();
    std::fill(out, out + state_count(), 0.0);
    for (StateMask a = 1; a <= full; ++a) {
        const double va = v[a];
        if (va == 0.0) continue;
        double exit = delta_ * static_cast<double>(std::popcount(a));
        if (delta_ > 0.0) {
            StateMask m = a;
            while (m) {
                const StateMask bit = m & (~m + 1);
                const StateMask b = a ^ bit;
                if (b) out[b] += delta_ * va;
                m &= m - 1;
            }
        }
        for (std::uint32_t j = 0; j < n_; ++j) {
            if (a & (StateMask{1} << j)) continue;
            double s = 0.0;
            StateMask m = a & infect_src_mask_[j];
            while (m) {
                const std::uint32_t i = static_cast<std::uint32_t>(std::countr_zero(m));
                s += site_rate_[i * n_ + j];
                m &= m - 1;
            }
            if (s > 0.0) {
                exit += s;
                out[a | (StateMask{1} << j)] += s * va;
            }
        }
        out[a] -= exit * va;
    }
}

void RestrictedGenerator::apply_col(const double* f, double* out) const {
    const StateMask full = full_state();
    out[0] = 0.0;
    for (StateMask a = 1; a <= full; ++a) {
        double acc = 0.0;
        double exit = delta_ * static_cast<double>(std::popcount(a));
        if (delta_ > 0.0) {
            StateMask m = a;
            while (m) {
                const StateMask bit = m & (~m + 1);
                const StateMask b = a ^ bit;
                if (b) acc += delta_ * f[b]; // f(empty) = 0
                m &= m - 1;
            }
        }
        for (std::uint32_t j = 0; j < n_; ++j) {
            if (a & (StateMask{1} << j)) continue;
            double s = 0.0;
            StateMask m = a & infect_src_mask_[j];
            while (m) {
                const std::uint32_t i = static_cast<std::uint32_t>(std::countr_zero(m));
                s += site_rate_[i * n_ + j];
                m &= m - 1;
            }
            if (s > 0.0) {
                exit += s;
                acc += s * f[a | (StateMask{1} << j)];
            }
        }
        out[a] = acc - exit * f[a];
    }
}

std::vector<double> RestrictedGenerator::uniformized_sweep(std::vector<double> v, double t,
                                                           bool row_form) const {
    if (t < 0.0) throw UsageError("semigroup time must be >= 0");
    v[0] = 0.0;
    if (t == 0.0) return v;

    const double theta_p = uniformization_rate();
    const double mean = theta_p * t;
    if (mean > 600.0) {
        // Stay clear of exp underflow by the semigroup property.
        return uniformized_sweep(uniformized_sweep(std::move(v), t * 0.5, row_form), t * 0.5,
                                 row_form);
    }

    const std::size_t size = state_count();
    std::vector<double> acc(size, 0.0);
    std::vector<double> work(size);
    double pmf = std::exp(-mean);
    double cumulative = pmf;
    for (std::size_t i = 0; i < size; ++i) acc[i] = pmf * v[i];
    const std::uint64_t cap =
        static_cast<std::uint64_t>(mean + 60.0 * std::sqrt(mean + 1.0) + 100.0);
    for (std::uint64_t k = 1; cumulative < 1.0 - kPoissonTailMass && k <= cap; ++k) {
        // v <- Q v with Q = I + G/Theta'
        if (row_form)
            apply_row(v.data(), work.data());
        else
            apply_col(v.data(), work.data());
        for (std::size_t i = 0; i < size; ++i) v[i] += work[i] / theta_p;
        v[0] = 0.0;
        pmf *= mean / static_cast<double>(k);
        cumulative += pmf;
        for (std::size_t i = 0; i < size; ++i) acc[i] += pmf * v[i];
    }
    return acc;
}

std::vector<double> RestrictedGenerator::semigroup_row(std::vector<double> v, double t) const {
    return uniformized_sweep(std::move(v), t, true);
}

std::vector<double> RestrictedGenerator::semigroup_col(std::vector<double> f, double t) const {
    return uniformized_sweep(std::move(f), t, false);
}

bool RestrictedGenerator::kernel_support_connects() const {
    std::vector<bool> seen(n_, false);
    std::vector<std::uint32_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const std::uint32_t i = queue.back();
        queue.pop_back();
        for (std::uint32_t j = 0; j < n_; ++j) {
            if (!seen[j] && site_rate_[i * n_ + j] > 0.0) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

EigenResult exact_growth_rate(const RestrictedGenerator& gen) {
    const std::size_t size = gen.state_count();
    EigenResult result;

    if (gen.site_count() == 1) {
        // Single nonempty state {0}; the generator is the 1x1 matrix [-delta].
        result.r = -gen.delta();
        result.nu.assign(2, 0.0);
        result.nu[1] = 1.0;
        result.h = harmonic_from_measure(1, result.nu);
        result.normalization = 1.0;
        return result;
    }

    if (!gen.kernel_support_connects())
        throw UsageError("kernel support does not connect the torus; restricted generator "
                         "is reducible");

    const double theta_p = gen.uniformization_rate();
    std::vector<double> v(size, 1.0 / static_cast<double>(size - 1));
    v[0] = 0.0;
    std::vector<double> gv(size), w(size);
    double rayleigh_prev = std::numeric_limits<double>::quiet_NaN();
    bool rayleigh_settled = false;
    double residual = std::numeric_limits<double>::infinity();

    std::uint64_t iter = 0;
    for (; iter < kMaxPowerIterations; ++iter) {
        gen.apply_row(v.data(), gv.data());
        double dot_wv = 0.0, dot_vv = 0.0, l1 = 0.0;
        for (std::size_t i = 1; i < size; ++i) {
            w[i] = v[i] + gv[i] / theta_p;
            dot_wv += w[i] * v[i];
            dot_vv += v[i] * v[i];
            l1 += std::fabs(w[i]);
        }
        const double rayleigh = dot_wv / dot_vv;
        const double r_est = theta_p * (rayleigh - 1.0);
        const bool settled = std::fabs(rayleigh - rayleigh_prev) < kRayleighTol;
        rayleigh_prev = rayleigh;
        for (std::size_t i = 1; i < size; ++i) v[i] = w[i] / l1;

        if (settled || (iter & 63u) == 63u) {
            rayleigh_settled = rayleigh_settled || settled;
            gen.apply_row(v.data(), gv.data());
            residual = 0.0;
            for (std::size_t i = 1; i < size; ++i)
                residual = std::max(residual, std::fabs(gv[i] - r_est * v[i]));
            if (rayleigh_settled && residual <= kResidualTarget) {
                result.r = r_est;
                break;
            }
        }
    }
    if (iter == kMaxPowerIterations)
        throw NumericalError("power iteration did not converge; residual " +
                             std::to_string(residual));
    result.iterations = iter + 1;

    // Normalize so that sum_B nu(B) 1{0 in B} = 1; homogeneity makes the
    // same hold at every site.
    double origin_mass = 0.0;
    for (std::size_t b = 1; b < size; ++b)
        if (b & 1u) origin_mass += v[b];
    if (origin_mass <= 0.0) throw NumericalError("eigenmeasure has no mass on the origin");
    for (std::size_t b = 1; b < size; ++b) v[b] /= origin_mass;
    result.normalization = origin_mass;
    result.nu = v;

    gen.apply_row(v.data(), gv.data());
    result.residual_nu = 0.0;
    for (std::size_t b = 1; b < size; ++b)
        result.residual_nu = std::max(result.residual_nu, std::fabs(gv[b] - result.r * v[b]));

    result.h = harmonic_from_measure(gen.site_count(), result.nu);

    RestrictedGenerator dual(gen.group(), gen.kernel().reversed(), gen.delta());
    std::vector<double> gh(size);
    dual.apply_col(result.h.data(), gh.data());
    result.residual_h = 0.0;
    for (std::size_t a = 1; a < size; ++a)
        result.residual_h = std::max(result.residual_h, std::fabs(gh[a] - result.r * result.h[a]));
    return result;
}

ResolventMeasure resolvent_eigenmeasure(const RestrictedGenerator& gen, double lambda) {
    return resolvent_eigenmeasure(gen, lambda, exact_growth_rate(gen).r);
}

ResolventMeasure resolvent_eigenmeasure(const RestrictedGenerator& gen, double lambda,
                                        double growth_rate) {
    if (!(lambda > growth_rate))
        throw UsageError("resolvent requires lambda > r (got lambda = " + std::to_string(lambda) +
                         ", r = " + std::to_string(growth_rate) + ")");
    const std::size_t size = gen.state_count();
    const double theta_p = gen.uniformization_rate();
    const double shift = lambda + theta_p;
    const double ratio = theta_p / shift;

    std::vector<double> mu(size, 0.0);
    for (std::uint32_t i = 0; i < gen.site_count(); ++i) mu[std::size_t{1} << i] = 1.0;

    std::vector<double> x(size, 0.0), term(size), work(size), residual_vec(size);
    const std::uint64_t max_terms = 5u << 20;
    double residual = 0.0;

    for (int restart = 0; restart < 64; ++restart) {
        const std::vector<double>& b = restart == 0 ? mu : residual_vec;
        for (std::size_t i = 0; i < size; ++i) term[i] = b[i] / shift;
        double term_norm = inf_norm(term);
        for (std::uint64_t k = 0; k < max_terms && term_norm > 1e-18; ++k) {
            for (std::size_t i = 0; i < size; ++i) x[i] += term[i];
            gen.apply_row(term.data(), work.data());
            term_norm = 0.0;
            for (std::size_t i = 1; i < size; ++i) {
                term[i] = ratio * (term[i] + work[i] / theta_p);
                term_norm = std::max(term_norm, std::fabs(term[i]));
            }
            term[0] = 0.0;
        }
        // residual = mu - x (lambda I - G)
        gen.apply_row(x.data(), work.data());
        residual = 0.0;
        for (std::size_t i = 1; i < size; ++i) {
            residual_vec[i] = mu[i] - lambda * x[i] + work[i];
            residual = std::max(residual, std::fabs(residual_vec[i]));
        }
        residual_vec[0] = 0.0;
        if (residual <= 1e-12) break;
    }
    if (residual > 1e-10)
        throw NumericalError("resolvent solve stalled at residual " + std::to_string(residual));

    ResolventMeasure rm;
    rm.lambda = lambda;
    rm.nu = std::move(x);
    rm.residual = residual;
    for (std::size_t b = 1; b < size; ++b)
        if (b & 1u) rm.pi += rm.nu[b];
    return rm;
}

std::vector<double> harmonic_from_measure(std::uint32_t n_sites, const std::vector<double>& mu) {
    const std::size_t size = std::size_t{1} << n_sites;
    if (mu.size() != size) throw UsageError("harmonic_from_measure: wrong vector length");
    if (mu[0] != 0.0) throw UsageError("harmonic_from_measure: mass on the empty set");
    for (double m : mu)
        if (m < 0.0) throw UsageError("harmonic_from_measure: negative entries");

    // ssum[S] = sum of mu over subsets of S, then
    // h(A) = total - mass avoiding A = total - ssum[complement of A].
    std::vector<double> ssum = mu;
    for (std::uint32_t d = 0; d < n_sites; ++d) {
        const std::size_t bit = std::size_t{1} << d;
        for (std::size_t s = 0; s < size; ++s)
            if (s & bit) ssum[s] += ssum[s ^ bit];
    }
    const double total = ssum[size - 1];
    std::vector<double> h(size);
    for (std::size_t a = 0; a < size; ++a) h[a] = total - ssum[(size - 1) ^ a];
    return h;
}

DualityResult duality_check(const GroupSpec& torus, const InfectionKernel& kernel, double delta,
                            StateMask a, StateMask b, double t) {
    if (a == 0 || b == 0) throw UsageError("duality_check: A and B must be nonempty");
    RestrictedGenerator forward(torus, kernel, delta);
    RestrictedGenerator backward(torus, kernel.reversed(), delta);
    const std::size_t size = forward.state_count();
    if (a >= size || b >= size) throw UsageError("duality_check: state mask out of range");

    std::vector<double> hit_b(size, 0.0), hit_a(size, 0.0);
    for (std::size_t c = 1; c < size; ++c) {
        hit_b[c] = (c & b) ? 1.0 : 0.0;
        hit_a[c] = (c & a) ? 1.0 : 0.0;
    }
    DualityResult res;
    res.lhs = forward.semigroup_col(std::move(hit_b), t)[a];
    res.rhs = backward.semigroup_col(std::move(hit_a), t)[b];
    return res;
}

double expected_size_from_origin(const RestrictedGenerator& gen, double t) {
    const std::size_t size = gen.state_count();
    std::vector<double> sizes(size);
    for (std::size_t s = 0; s < size; ++s)
        sizes[s] = static_cast<double>(std::popcount(static_cast<StateMask>(s)));
    return gen.semigroup_col(std::move(sizes), t)[1];
}

SubmultResult submultiplicativity_check(const RestrictedGenerator& gen, double s, double t) {
    SubmultResult r;
    r.lhs = expected_size_from_origin(gen, s + t);
    r.rhs = expected_size_from_origin(gen, s) * expected_size_from_origin(gen, t);
    return r;
}

std::vector<double> state_distribution(const RestrictedGenerator& gen, StateMask a, double t) {
    if (a == 0) throw UsageError("state_distribution: initial state must be nonempty");
    std::vector<double> v(gen.state_count(), 0.0);
    v[a] = 1.0;
    v = gen.semigroup_row(std::move(v), t);
    const double mass = std::accumulate(v.begin(), v.end(), 0.0);
    v[0] = std::max(0.0, 1.0 - mass);
    return v;
}

StateMask permute_mask(const std::vector<std::uint32_t>& perm, StateMask mask) {
    StateMask out = 0;
    while (mask) {
        const std::uint32_t i = static_cast<std::uint32_t>(std::countr_zero(mask));
        out |= StateMask{1} << perm[i];
        mask &= mask - 1;
    }
    return out;
}

double homogeneity_defect(const SiteIndex& sites, const std::vector<double>& nu) {
    const std::size_t size = std::size_t{1} << sites.count();
    if (nu.size() != size) throw UsageError("homogeneity_defect: wrong vector length");
    double defect = 0.0;
    for (std::uint32_t k = 1; k < sites.count(); ++k) {
        const std::vector<std::uint32_t> perm = sites.left_translation(sites.site(k));
        for (std::size_t b = 1; b < size; ++b) {
            const StateMask image = permute_mask(perm, static_cast<StateMask>(b));
            defect = std::max(defect, std::fabs(nu[image] - nu[b]));
        }
    }
    return defect;
}

} // namespace exact
} // namespace contact
