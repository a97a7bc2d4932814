#include <doctest.h>

#include <cmath>

#include "contact/bounds.hpp"
#include "contact/rng.hpp"

using namespace contact;
using namespace contact::bounds;

TEST_CASE("phi_eps basics") {
    CHECK(phi_eps(0.3, 0.0) == 0.0);
    CHECK(phi_eps(1.7, 0.0) == 0.0);
    CHECK(phi_eps(1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(phi_eps(0.0, 1.0), UsageError);
    CHECK_THROWS_AS(phi_eps(-1.0, 1.0), UsageError);
}

TEST_CASE("phi_eps survives tiny arguments without cancellation") {
    // Series oracle: phi_eps(eps,z) = z^2 eps/2 - z^3 eps^2/6 + O(z^4).
    const double z = 1e-9;
    const double expected = z * z * 0.5 - z * z * z / 6.0;
    const double got = phi_eps(1.0, z);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12).scale(0.0));
    CHECK(got > 0.0);
    // And symmetric territory just above the series cutoff.
    for (double x : {1e-6, 1e-5, 2e-5, 1e-4}) {
        const double direct = (std::expm1(-x) + x); // eps = 1
        const double series = x * x * (0.5 + x * (-1.0 / 6.0 + x / 24.0));
        CHECK(phi_eps(1.0, x) == doctest::Approx(series).epsilon(1e-10).scale(0.0));
        if (x >= 1e-5)
            CHECK(phi_eps(1.0, x) == doctest::Approx(direct).epsilon(1e-9).scale(0.0));
    }
}

TEST_CASE("phi_eps is convex with second derivative eps e^{-eps z}") {
    const double h = 1e-4;
    for (double eps : {0.1, 0.7, 1.3, 1.9}) {
        for (int k = -10; k <= 10; ++k) {
            const double z = 0.2 * k;
            const double fd =
                (phi_eps(eps, z + h) - 2.0 * phi_eps(eps, z) + phi_eps(eps, z - h)) / (h * h);
            CHECK(fd >= 0.0);
            CHECK(fd == doctest::Approx(eps * std::exp(-eps * z)).epsilon(1e-6));
        }
    }
}

TEST_CASE("f_eps basics") {
    CHECK(f_eps(1.0, 0.0) == 0.0);
    CHECK(f_eps(2.5, 0.0) == 0.0);
    CHECK(f_eps(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(f_eps(1.0, 1000.0) == doctest::Approx(1.0).epsilon(1e-12)); // saturation at 1/eps
    // strictly increasing
    double prev = f_eps(0.8, -3.0);
    for (double hv = -2.5; hv < 3.1; hv += 0.5) {
        const double cur = f_eps(0.8, hv);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK_THROWS_AS(f_eps(0.0, 1.0), UsageError);
}

TEST_CASE("eps_params closed form at eps = 1") {
    const double e = std::exp(1.0);
    const EpsParams p = eps_params(1.0);
    CHECK(p.eps1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.eps2 == doctest::Approx(e / (2.0 + e)).epsilon(1e-14));
    CHECK(p.gamma == doctest::Approx((1.0 + e) / (2.0 + e)).epsilon(1e-14));
}

TEST_CASE("eps_params identities hold across (0,2)") {
    for (double eps = 0.05; eps < 2.0; eps += 0.05) {
        const EpsParams p = eps_params(eps);
        CHECK(p.eps1 / (1.0 + p.eps1) == doctest::Approx(eps / 2.0).epsilon(1e-12));
        CHECK(p.eps2 / (1.0 - p.eps2) ==
              doctest::Approx((eps / 2.0) * std::exp(eps)).epsilon(1e-12));
        CHECK((1.0 - p.eps2) / (1.0 + p.eps1) == doctest::Approx(1.0 - p.gamma).epsilon(1e-12));
        CHECK(p.gamma > 0.0);
        CHECK(p.gamma < 1.0);
    }
}

TEST_CASE("eps_params limits and domain") {
    const EpsParams tiny = eps_params(1e-9);
    CHECK(tiny.eps1 == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(tiny.eps2 == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(tiny.gamma == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(gamma_of_eps(2.0 - 1e-9) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(eps_params(0.0), UsageError);
    CHECK_THROWS_AS(eps_params(2.0), UsageError);
    // gamma is strictly increasing on a 1000-point grid
    double prev = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double g = gamma_of_eps(2.0 * k / 1000.0);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("phi_of_gamma") {
    const EpsParams p = eps_params(1.0);
    SUBCASE("round trip through eps = 1") {
        CHECK(phi_of_gamma(p.gamma) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
    }
    SUBCASE("small gamma matches the quadratic Taylor polynomial") {
        CHECK(phi_of_gamma(0.01) == doctest::Approx(0.01 - 0.5 * 1e-4).epsilon(2e-4));
        CHECK(std::fabs(phi_of_gamma(0.01) - 0.009950) < 2e-6);
    }
    SUBCASE("inverse-function identity on random gammas") {
        Rng rng(3);
        for (int k = 0; k < 100; ++k) {
            const double gamma = 0.001 + 0.998 * rng.next_double();
            CHECK(gamma_of_eps(eps_of_gamma(gamma)) == doctest::Approx(gamma).epsilon(1e-12));
        }
    }
    SUBCASE("strictly increasing, below the diagonal") {
        double prev = 0.0;
        for (double g = 0.02; g < 1.0; g += 0.02) {
            const double phi = phi_of_gamma(g);
            CHECK(phi > prev);
            CHECK(phi < g);
            prev = phi;
        }
    }
    CHECK_THROWS_AS(phi_of_gamma(0.0), UsageError);
    CHECK_THROWS_AS(phi_of_gamma(1.0), UsageError);
}

TEST_CASE("Taylor remainder of phi is cubic with a small constant") {
    double sup = 0.0;
    for (double g = 0.002; g <= 0.1; g += 0.002) {
        const double rem = std::fabs(phi_of_gamma(g) - g + 0.5 * g * g) / (g * g * g);
        sup = std::max(sup, rem);
    }
    CHECK(sup <= 2.0);
}

TEST_CASE("quadratic bounds on phi_eps hold on dense grids") {
    CHECK(phi_eps(1.0, 1.0) <= 0.5);
    for (double eps : {0.1, 0.5, 1.0, 1.9}) {
        const QuadraticBoundReport rep = quadratic_bound_check(eps, 10000);
        CHECK(rep.max_violation_pos <= 1e-15);
        CHECK(rep.max_violation_neg <= 1e-15);
    }
}

TEST_CASE("QMatrix validation") {
    CHECK_THROWS_AS(QMatrix(2, {-1.0, 1.0, 1.0, -1.0, 0.0, 0.0}), UsageError); // wrong count
    CHECK_THROWS_AS(QMatrix(2, {-1.0, 1.0, -0.5, 0.5}), UsageError);           // negative off-diag
    CHECK_THROWS_AS(QMatrix(2, {-1.0, 0.5, 1.0, -1.0}), UsageError);           // bad row sum
    CHECK_NOTHROW(QMatrix(2, {-1.0, 1.0, 1.0, -1.0}));
}

TEST_CASE("submartingale identity: frozen 2-state oracle") {
    // Q = [[-1,1],[1,-1]], h = (0,1), eps = 1. Hand expansion:
    //   f = (0, 1-e^{-1}),  G f = (1-e^{-1}, e^{-1}-1)
    //   G h = (1,-1), H h = (phi_1(1), phi_1(-1)) = (e^{-1}, e-2)
    //   e^{-eps h} (Gh - Hh) = (1 - e^{-1}, e^{-1}(1-e)) = G f.
    const QMatrix q(2, {-1.0, 1.0, 1.0, -1.0});
    const auto rep = submartingale_check(q, {0.0, 1.0}, 1.0);
    const double em1 = std::exp(-1.0);
    CHECK(rep.g_f[0] == doctest::Approx(1.0 - em1).epsilon(1e-14));
    CHECK(rep.g_f[1] == doctest::Approx(em1 - 1.0).epsilon(1e-14));
    CHECK(rep.drift[0] == doctest::Approx(1.0 - em1).epsilon(1e-14));
    CHECK(rep.drift[1] == doctest::Approx(-1.0 - (std::exp(1.0) - 2.0)).epsilon(1e-14));
    CHECK(rep.max_rel_error <= 1e-14);
}

TEST_CASE("submartingale identity: constant h gives identically zero vectors") {
    const QMatrix q = QMatrix::from_off_diagonal(3, {0, 2, 1, 0.5, 0, 0, 3, 1, 0});
    const auto rep = submartingale_check(q, {0.7, 0.7, 0.7}, 1.3);
    for (int i = 0; i < 3; ++i) {
        CHECK(rep.g_f[i] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(rep.drift[i] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(rep.scaled[i] == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("submartingale identity: 1000 random (Q,h,eps) cases") {
    Rng rng(99);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 2 + rng.next_below(7); // up to 8 states
        std::vector<double> off(n * n, 0.0);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y)
                if (x != y && rng.next_double() > 0.3) off[x * n + y] = 5.0 * rng.next_double();
        const QMatrix q = QMatrix::from_off_diagonal(n, std::move(off));
        std::vector<double> h(n);
        for (double& v : h) v = -2.0 + 4.0 * rng.next_double();
        const double eps = 0.01 + 1.98 * rng.next_double();
        const auto rep = submartingale_check(q, h, eps);
        CHECK(rep.max_rel_error <= 1e-10);
        CHECK(rep.sign_equivalent);
    }
}

TEST_CASE("submartingale check rejects dimension mismatches") {
    const QMatrix q(2, {-1.0, 1.0, 1.0, -1.0});
    CHECK_THROWS_AS(submartingale_check(q, {0.0, 1.0, 2.0}, 1.0), UsageError);
}
