#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "contact/exact.hpp"
#include "contact/montecarlo.hpp"
#include "contact/stats.hpp"

using namespace contact;
using namespace contact::mc;

namespace {

const GroupSpec kZ = GroupSpec::integer_lattice(1);

SimConfig z_config(double delta, double horizon, std::uint32_t n, std::uint64_t seed) {
    return SimConfig(kZ, InfectionKernel::nearest_neighbor(kZ, 1.0), delta, horizon, n, seed);
}

} // namespace

TEST_CASE("simulate: delta = 0 never goes extinct and sizes are nondecreasing") {
    SimConfig cfg = z_config(0.0, 10.0, 100, 7);
    cfg.record_grid = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    for (std::uint32_t i = 0; i < 20; ++i) {
        const TrajectoryRecord rec = simulate(cfg, i);
        CHECK(rec.outcome == Outcome::Alive);
        CHECK(std::is_sorted(rec.sizes.begin(), rec.sizes.end()));
        CHECK(rec.sizes.front() == 1);
    }
}

TEST_CASE("simulate: empty initial set is extinct at time zero") {
    SimConfig cfg = z_config(0.5, 5.0, 100, 7);
    cfg.initial.clear();
    cfg.record_grid = {0.0, 1.0};
    const TrajectoryRecord rec = simulate(cfg, 0);
    CHECK(rec.outcome == Outcome::Extinct);
    CHECK(rec.extinction_time == 0.0);
    CHECK(rec.sizes == std::vector<std::uint64_t>{0, 0});
}

TEST_CASE("simulate: zero kernel extinction times are Exp(delta)") {
    const double delta = 0.8;
    SimConfig cfg(kZ, InfectionKernel::zero(kZ), delta, 200.0, 10000, 21);
    const SurvivalStats st = estimate_survival(cfg);
    CHECK(st.theta_hat == 0.0); // T = 200 >> 1/delta
    double sum = 0.0, sumsq = 0.0;
    for (double t : st.extinction_times) {
        sum += t;
        sumsq += t * t;
    }
    const double n = static_cast<double>(st.extinction_times.size());
    const double mean = sum / n;
    const double sd = std::sqrt((sumsq - n * mean * mean) / (n - 1.0));
    const double se = sd / std::sqrt(n);
    CHECK(std::fabs(mean - 1.0 / delta) <= 3.0 * se);
}

TEST_CASE("simulate: size cap flags the trajectory") {
    SimConfig cfg = z_config(0.0, 50.0, 100, 3);
    cfg.size_cap = 8;
    const TrajectoryRecord rec = simulate(cfg, 1);
    CHECK(rec.outcome == Outcome::Capped);
    CHECK(rec.final_size == 8);
    CHECK(rec.end_time < 50.0);
}

TEST_CASE("estimate_survival basics") {
    SUBCASE("delta = 0 gives theta = 1") {
        const SurvivalStats st = estimate_survival(z_config(0.0, 5.0, 200, 9));
        CHECK(st.theta_hat == 1.0);
        CHECK(st.ci_hi == 1.0);
        CHECK(st.survived + st.extinct + st.capped == 200);
    }
    SUBCASE("pure death: extinct-by-T count matches 1 - e^{-delta T}") {
        const double delta = 1.0, horizon = 1.0;
        SimConfig cfg(kZ, InfectionKernel::zero(kZ), delta, horizon, 4000, 11);
        const SurvivalStats st = estimate_survival(cfg);
        const double p = 1.0 - std::exp(-delta * horizon);
        const double se = std::sqrt(p * (1.0 - p) / 4000.0);
        CHECK(std::fabs(static_cast<double>(st.extinct) / 4000.0 - p) <= 3.0 * se);
        CHECK(st.ci_lo <= st.theta_hat);
        CHECK(st.theta_hat <= st.ci_hi);
    }
    SUBCASE("replica floor is enforced") {
        CHECK_THROWS_AS(estimate_survival(z_config(0.5, 5.0, 50, 1)), UsageError);
    }
}

TEST_CASE("estimate_growth_rate: pure death process has r = -delta") {
    // Horizon chosen so the default window keeps healthy counts: at t = 5
    // the expected survivor count is 40000 e^{-5} ~ 270, far from the
    // starved-tail regime where log-of-mean is biased.
    SimConfig cfg(kZ, InfectionKernel::zero(kZ), 1.0, 5.0, 40000, 13);
    for (double t = 0.0; t <= 5.0; t += 0.25) cfg.record_grid.push_back(t);
    cfg.threads = 2;
    const GrowthFit fit = estimate_growth_rate(cfg);
    CHECK(fit.se > 0.0);
    CHECK(std::fabs(fit.r_hat - (-1.0)) <= 3.0 * fit.se);
}

TEST_CASE("estimate_growth_rate: delta = 0 on Z grows, slope >= 0") {
    SimConfig cfg = z_config(0.0, 10.0, 400, 15);
    for (double t = 0.0; t <= 10.0; t += 1.0) cfg.record_grid.push_back(t);
    const GrowthFit fit = estimate_growth_rate(cfg);
    CHECK(fit.r_hat >= 0.0);
    CHECK(fit.window_lo == doctest::Approx(10.0 / 3.0));
    CHECK(fit.window_hi == 10.0);
}

TEST_CASE("estimate_growth_rate: starved fit reports a numerical failure") {
    // Zero kernel with a huge delta: everything dies almost immediately,
    // so the window [T/3, T] has no positive means.
    SimConfig cfg(kZ, InfectionKernel::zero(kZ), 50.0, 9.0, 200, 17);
    for (double t = 0.0; t <= 9.0; t += 1.0) cfg.record_grid.push_back(t);
    CHECK_THROWS_AS(estimate_growth_rate(cfg), NumericalError);
}

TEST_CASE("reproducibility: identical seeds give bit-identical results at any thread count") {
    SimConfig cfg = z_config(0.55, 40.0, 600, 12345);
    for (double t = 0.0; t <= 40.0; t += 2.0) cfg.record_grid.push_back(t);

    SimConfig cfg1 = cfg;
    cfg1.threads = 1;
    SimConfig cfg3 = cfg;
    cfg3.threads = 3;

    const SurvivalStats s1 = estimate_survival(cfg1);
    const SurvivalStats s3 = estimate_survival(cfg3);
    CHECK(s1.theta_hat == s3.theta_hat);
    CHECK(s1.survived == s3.survived);
    CHECK(s1.capped == s3.capped);
    REQUIRE(s1.extinction_times.size() == s3.extinction_times.size());
    for (std::size_t i = 0; i < s1.extinction_times.size(); ++i) {
        const double a = s1.extinction_times[i], b = s3.extinction_times[i];
        CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
    }

    const GrowthFit f1 = estimate_growth_rate(cfg1);
    const GrowthFit f3 = estimate_growth_rate(cfg3);
    CHECK(f1.r_hat == f3.r_hat);
    CHECK(f1.se == f3.se);
    CHECK(f1.mean_size == f3.mean_size);
}

TEST_CASE("survival stability on Z: independent seeds give overlapping CIs") {
    const SurvivalStats a = estimate_survival(z_config(0.3, 200.0, 2000, 1001));
    const SurvivalStats b = estimate_survival(z_config(0.3, 200.0, 2000, 2002));
    CHECK(a.ci_lo <= b.ci_hi);
    CHECK(b.ci_lo <= a.ci_hi);
}

TEST_CASE("survival is statistically monotone in delta") {
    std::vector<SurvivalStats> stats;
    for (double delta : {0.15, 0.35, 0.55, 0.75})
        stats.push_back(estimate_survival(z_config(delta, 60.0, 800, 77)));
    for (std::size_t i = 0; i + 1 < stats.size(); ++i)
        CHECK(stats[i].theta_hat >= stats[i + 1].theta_hat - 2.0 * (stats[i].se + stats[i + 1].se));
}

TEST_CASE("simulate on the 2d lattice and the free group") {
    const GroupSpec z2 = GroupSpec::integer_lattice(2);
    SimConfig plane(z2, InfectionKernel::nearest_neighbor(z2, 1.0), 0.0, 3.0, 100, 8);
    const TrajectoryRecord rec = simulate(plane, 0);
    CHECK(rec.outcome == Outcome::Alive);
    CHECK(rec.final_size > 1);

    const GroupSpec tree = GroupSpec::free_group(2);
    SimConfig cfg(tree, InfectionKernel::nearest_neighbor(tree, 1.0), 0.5, 3.0, 100, 8);
    const TrajectoryRecord tr = simulate(cfg, 1);
    CHECK(tr.final_size >= 0); // runs to completion on word sites
    for (const Site& s : tr.final_sites) CHECK(tree.contains(s));
}

TEST_CASE("config validation rejects bad grids and rates") {
    SimConfig cfg = z_config(0.5, 10.0, 100, 1);
    cfg.record_grid = {0.0, 11.0}; // beyond the horizon
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.record_grid = {2.0, 1.0}; // unsorted
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.record_grid = {};
    cfg.delta = -0.1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("verify_lower_bound near gamma = 1 is easy survival") {
    SimConfig cfg = z_config(0.0, 60.0, 300, 99);
    const auto rows = verify_lower_bound(cfg, 0.63, {0.95});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].delta == doctest::Approx(0.63 * 0.05));
    CHECK(rows[0].theta_hat > rows[0].phi_gamma); // theta ~ 1 > phi(0.95) < 1
    CHECK(rows[0].pass);
}

TEST_CASE("bisect_critical") {
    SUBCASE("zero kernel has no valid bracket away from zero") {
        SimConfig cfg(kZ, InfectionKernel::zero(kZ), 0.0, 30.0, 200, 5);
        CHECK_THROWS_AS(bisect_critical(cfg, 0.2, 1.0, 4), UsageError);
    }
    SUBCASE("bracket shrinks by 2^iterations and the path separates cleanly") {
        SimConfig cfg = z_config(0.0, 60.0, 300, 42);
        const CriticalEstimate est = bisect_critical(cfg, 0.2, 1.4, 5, 0.05);
        CHECK(est.hi - est.lo == doctest::Approx((1.4 - 0.2) / 32.0));
        CHECK(est.lo >= 0.2);
        CHECK(est.hi <= 1.4);
        CHECK(est.delta_c_hat == doctest::Approx(0.5 * (est.lo + est.hi)));
        // Sorted by delta, decisions flip from survive to die exactly once.
        auto path = est.path;
        std::sort(path.begin(), path.end(),
                  [](const DecisionPoint& x, const DecisionPoint& y) { return x.delta < y.delta; });
        bool seen_die = false;
        for (const DecisionPoint& p : path) {
            if (!p.survives) seen_die = true;
            if (seen_die) CHECK_FALSE(p.survives);
        }
        CHECK(est.p_star == 0.05);
    }
}

TEST_CASE("pathwise duality on the graphical representation") {
    const GroupSpec torus = GroupSpec::torus(6, 1);
    const auto kernel =
        InfectionKernel::from_pairs(torus, {{Site({1}), 2.0}, {Site({-1}), 1.0}});

    SUBCASE("overlapping A and B with delta = 0 hit on both sides") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto res =
                pathwise_duality_check(torus, kernel, 0.0, 0b000111, 0b000100, 1.5, seed);
            CHECK(res.forward_hit);
            CHECK(res.backward_hit);
        }
    }
    SUBCASE("tiny horizons reduce to the overlap indicator when nothing happens") {
        const auto res =
            pathwise_duality_check(torus, kernel, 0.7, 0b000011, 0b110000, 1e-9, 99);
        CHECK(res.events == 0);
        CHECK_FALSE(res.forward_hit);
        CHECK_FALSE(res.backward_hit);
        const auto hit =
            pathwise_duality_check(torus, kernel, 0.7, 0b000011, 0b100001, 1e-9, 99);
        CHECK(hit.forward_hit);
        CHECK(hit.backward_hit);
    }
    SUBCASE("forward and backward hits agree on every realization") {
        std::uint64_t hits = 0;
        for (std::uint64_t seed = 0; seed < 10000; ++seed) {
            const auto res =
                pathwise_duality_check(torus, kernel, 0.7, 0b000110, 0b101000, 1.2, seed);
            CHECK(res.forward_hit == res.backward_hit);
            hits += res.forward_hit ? 1 : 0;
        }
        CHECK(hits > 0);      // the check is not vacuous
        CHECK(hits < 10000);
    }
}

TEST_CASE("thinning matches the exact semigroup distribution (chi-square)") {
    const GroupSpec torus = GroupSpec::torus(3, 1);
    const auto kernel = InfectionKernel::nearest_neighbor(torus, 1.0);
    const double delta = 1.0, t = 1.0;

    const exact::RestrictedGenerator gen(torus, kernel, delta);
    const std::vector<double> expected = exact::state_distribution(gen, 1, t);

    SimConfig cfg(torus, kernel, delta, t, 100000, 314159);
    const SiteIndex sites(torus);
    std::vector<std::uint64_t> observed(gen.state_count(), 0);
    for (std::uint32_t i = 0; i < cfg.replicas; ++i) {
        const TrajectoryRecord rec = simulate(cfg, i);
        exact::StateMask mask = 0;
        for (const Site& s : rec.final_sites) mask |= exact::StateMask{1} << sites.index_of(s);
        ++observed[mask];
    }

    const ChiSquareResult res = chi_square_test(observed, expected, cfg.replicas, 5.0);
    CHECK(res.p_value > 0.001);
}
