#include <cmath>

#include "coulomb/equilibrium.hpp"
#include "doctest.h"

using namespace coulomb;

namespace {
const SpaceDim d2{2}, d3{3};

std::shared_ptr<const PotentialSpec> quad(double a = 0.5) {
    return std::make_shared<PotentialSpec>(PotentialSpec::quadratic(a));
}

// Radial quartic r^4/4 as a profile, used as a non-quadratic solver target.
std::shared_ptr<const PotentialSpec> quartic_profile(double rmax = 8.0, int k = 800) {
    std::vector<double> r(k + 1), v(k + 1), dv(k + 1);
    for (int i = 0; i <= k; ++i) {
        r[i] = rmax * i / k;
        v[i] = 0.25 * std::pow(r[i], 4.0);
        dv[i] = std::pow(r[i], 3.0);
    }
    return std::make_shared<PotentialSpec>(
        PotentialSpec::radial_profile(std::move(r), std::move(v), std::move(dv)));
}
}  // namespace

TEST_SUITE_BEGIN("equilibrium");

TEST_CASE("closed-form quadratic d=2") {
    auto eq = solve_equilibrium(quad(), d2, {});
    CHECK(eq.droplet_radius1() == doctest::Approx(1.0));
    CHECK(eq.c1() == doctest::Approx(0.5));
    CHECK(eq.density1({0.3, 0.2}) == doctest::Approx(1.0 / M_PI));
    CHECK(eq.density1({1.5, 0.0}) == 0.0);
    CHECK(eq.zeta1({0.5, 0.0}) == 0.0);
    const double r = 2.0;
    CHECK(eq.zeta1({r, 0.0}) == doctest::Approx(r * r / 2 - std::log(r) - 0.5));
    CHECK(eq.h_mu1({0, 0}) == doctest::Approx(0.5));
    CHECK(eq.h_mu1({2, 0}) == doctest::Approx(-std::log(2.0)));
    CHECK(eq.self_energy1() == doctest::Approx(0.25));
    CHECK(eq.potential_moment1() == doctest::Approx(0.25));

    SUBCASE("N-scaling of zeta matches the hand computation") {
        // N=4, x=(4,0): zeta_1(2) = 2 - log 2 - 1/2, scaled by N.
        CHECK(zeta_eval(eq, 4, {4, 0}) == doctest::Approx(4.0 * (1.5 - std::log(2.0))));
    }
    SUBCASE("measure views integrate to the right mass") {
        auto m1 = eq.measure1(2048);
        CHECK(m1.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
        auto m16 = eq.measureN(16, 2048);
        CHECK(m16.total_mass() == doctest::Approx(16.0).epsilon(1e-12));
    }
    SUBCASE("splitting constants are consistent: self + potmom = c") {
        CHECK(eq.self_energy1() + eq.potential_moment1() == doctest::Approx(eq.c1()).epsilon(1e-14));
    }
}

TEST_CASE("closed-form quadratic d=3") {
    auto eq = solve_equilibrium(quad(), d3, {});
    CHECK(eq.droplet_radius1() == doctest::Approx(1.0));
    CHECK(eq.c1() == doctest::Approx(1.5));
    CHECK(eq.density1({0.1, 0, 0}) == doctest::Approx(3.0 / (4 * M_PI)));
    const double r = 1.7;
    CHECK(eq.zeta1({r, 0, 0}) == doctest::Approx(r * r / 2 + 1 / r - 1.5));
    CHECK(eq.self_energy1() == doctest::Approx(1.2));
    CHECK(eq.potential_moment1() == doctest::Approx(0.3));
    CHECK(eq.self_energy1() + eq.potential_moment1() == doctest::Approx(eq.c1()).epsilon(1e-14));
}

TEST_CASE("zeta growth lower bound for the quadratic droplet") {
    // zeta(x) >= alpha min(dist^2, N^{2/d}) with a fitted positive alpha.
    auto eq = solve_equilibrium(quad(), d2, {});
    const int n = 16;
    double alpha = 1e30;
    for (int k = 1; k <= 200; ++k) {
        const double r = 4.0 + 12.0 * k / 200.0;  // outside droplet radius 4
        const double dist = r - 4.0;
        const double z = eq.zetaN(n, {r, 0});
        alpha = std::min(alpha, z / std::min(dist * dist, std::pow(n, 1.0)));
    }
    CHECK(alpha > 0.05);
}

TEST_CASE("radial grid solver recovers the quadratic closed form") {
    GridSpec g;
    g.spacing = 1.0 / 128.0;
    g.force_numeric = true;
    auto eq = solve_equilibrium(quad(), d2, g);
    CHECK(!eq.closed_form());
    CHECK(eq.log().residual < 1e-9);
    CHECK(eq.log().mass_error < 1e-10);
    CHECK(std::abs(eq.droplet_radius1() - 1.0) <= 2.0 / 128.0);
    // Density sup-error away from the free boundary.
    double sup_err = 0.0;
    for (int k = 0; k < 400; ++k) {
        const double r = 2.0 * k / 400.0;
        if (std::abs(r - 1.0) < 2.0 / 128.0) continue;
        const double exact = r < 1.0 ? 1.0 / M_PI : 0.0;
        sup_err = std::max(sup_err, std::abs(eq.density1({r, 0}) - exact));
    }
    CHECK(sup_err < 2e-2);
    CHECK(eq.c1() == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(eq.zeta1({2, 0}) == doctest::Approx(2.0 - std::log(2.0) - 0.5).epsilon(1e-3));
    CHECK(eq.log().c_consistency < 1e-3);
}

TEST_CASE("monotone refinement of the radial solver") {
    double prev = 1e30;
    for (const double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        GridSpec g;
        g.spacing = h;
        g.force_numeric = true;
        auto eq = solve_equilibrium(quad(), d2, g);
        double sup = 0.0;
        for (int k = 0; k < 300; ++k) {
            const double r = 2.0 * k / 300.0;
            if (std::abs(r - 1.0) < 2.5 * h) continue;
            const double exact = r < 1.0 ? 1.0 / M_PI : 0.0;
            sup = std::max(sup, std::abs(eq.density1({r, 0}) - exact));
        }
        // Refinement must not worsen the error beyond the solver tolerance
        // floor (quadratic density is resolved exactly away from the edge).
        CHECK(sup <= prev + 1e-8);
        prev = sup;
    }
}

TEST_CASE("radial solver on the quartic profile") {
    GridSpec g;
    g.spacing = 1.0 / 128.0;
    auto eq = solve_equilibrium(quartic_profile(), d2, g);
    // ΔV = 4r^2 in d=2; droplet radius from mass(R)=1: R^4 = 1 -> R = 1.
    CHECK(std::abs(eq.droplet_radius1() - 1.0) < 0.03);
    // Density on the droplet: 4r^2/(2 pi).
    CHECK(eq.density1({0.5, 0}) == doctest::Approx(4 * 0.25 / (2 * M_PI)).epsilon(0.05));
    CHECK(eq.log().mass_error < 1e-10);
}

TEST_CASE("cartesian solver cross-checks the radial one") {
    GridSpec g;
    g.spacing = 1.0 / 48.0;
    g.mode = GridSpec::Mode::Cartesian;
    g.force_numeric = true;
    auto eq = solve_equilibrium(quad(), d2, g);
    CHECK(std::abs(eq.droplet_radius1() - 1.0) < 0.05);
    CHECK(eq.c1() == doctest::Approx(0.5).epsilon(5e-3));
    CHECK(eq.density1({0.3, 0.1}) == doctest::Approx(1.0 / M_PI).epsilon(0.05));
    CHECK(eq.zeta1({1.8, 0.4}) ==
          doctest::Approx(solve_equilibrium(quad(), d2, {}).zeta1({1.8, 0.4})).epsilon(0.02));
    CHECK(eq.in_droplet1({0.2, 0.2}));
    CHECK(!eq.in_droplet1({1.4, 0.0}));
    CHECK(eq.dist_to_droplet1({1.5, 0.0}) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("equilibrium artifacts round-trip") {
    GridSpec g;
    g.spacing = 1.0 / 64.0;
    g.force_numeric = true;
    auto eq = solve_equilibrium(quad(), d2, g);
    const auto j = eq.to_json();
    auto back = EquilibriumData::from_json(j);
    CHECK(back.c1() == doctest::Approx(eq.c1()).epsilon(1e-15));
    CHECK(back.zeta1({1.7, 0.3}) == doctest::Approx(eq.zeta1({1.7, 0.3})).epsilon(1e-14));
    CHECK(back.density1({0.4, 0.2}) == doctest::Approx(eq.density1({0.4, 0.2})).epsilon(1e-14));
}

TEST_CASE("thermal equilibrium at moderate theta") {
    GridSpec g;
    g.spacing = 1.0 / 256.0;
    for (const double theta : {5.0, 50.0}) {
        auto t = solve_thermal_equilibrium(quad(), d2, theta, g);
        CHECK(t.residual() < 1e-8);
        CHECK(t.log().mass_error < 1e-10);
        for (int j = 0; j < t.cells(); ++j) CHECK(t.grid_mu(j) > 0.0);

        // Sandwich against exp(-theta zeta): the spread of the ratio is the
        // empirical sandwich constant and stays O(1).
        auto eq = solve_equilibrium(quad(), d2, {});
        double lo = 1e30, hi = 0.0;
        for (int j = 0; j < t.cells(); ++j) {
            const Vec x{t.grid_r(j), 0.0};
            const double ratio = t.grid_mu(j) / std::exp(-theta * eq.zeta1(x));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        CAPTURE(theta);
        CHECK(lo > 0.0);
        const double sandwich = hi / lo;
        CHECK(sandwich >= 0.1);
        CHECK(sandwich <= 10.0);
    }
}

TEST_CASE("thermal equilibrium approaches the obstacle solution at large theta") {
    GridSpec g;
    g.spacing = 1.0 / 256.0;
    auto t = solve_thermal_equilibrium(quad(), d2, 200.0, g);
    auto eq = solve_equilibrium(quad(), d2, {});
    double sup = 0.0;
    for (double r = 0.0; r < 0.75; r += 0.01)
        sup = std::max(sup, std::abs(t.density1({r, 0}) - eq.density1({r, 0})));
    CHECK(sup < 5e-2);
}

TEST_CASE("thermal properties report") {
    GridSpec g;
    g.spacing = 1.0 / 256.0;
    SUBCASE("d=3 theta=20: h bounds") {
        auto t = solve_thermal_equilibrium(quad(), d3, 20.0, g);
        auto eq = solve_equilibrium(quad(), d3, {});
        auto rep = thermal_properties_report(t, eq);
        CHECK(rep.all_pass());
        for (const auto& c : rep.checks)
            if (c.name == "h_min_nonnegative") CHECK(c.value >= -1e-8);
    }
    SUBCASE("d=2 theta=20: h + log bound and O(1) self-energy") {
        auto t = solve_thermal_equilibrium(quad(), d2, 20.0, g);
        auto eq = solve_equilibrium(quad(), d2, {});
        auto rep = thermal_properties_report(t, eq);
        CHECK(rep.all_pass());
        CHECK(std::abs(t.self_energy1()) < 1.0);
    }
}

TEST_CASE("thermal rescaling identities") {
    GridSpec g;
    g.spacing = 1.0 / 256.0;
    auto t = solve_thermal_equilibrium(quad(), d2, 12.0, g);
    const int n = 9;
    const Vec x{3.0, 1.0};
    const double s = std::pow(n, -0.5);
    CHECK(t.densityN(n, x) == doctest::Approx(t.density1(x * s)).epsilon(1e-10));
    CHECK(t.h_muN(n, x) ==
          doctest::Approx(n * t.h_mu1(x * s) - 0.5 * n * std::log(static_cast<double>(n)))
              .epsilon(1e-10));
    CHECK(t.cN(n) == doctest::Approx(n * t.c1() - 0.5 * n * std::log(static_cast<double>(n))));
}

TEST_CASE("thermal solve rejects theta <= 2") {
    CHECK_THROWS_AS(solve_thermal_equilibrium(quad(), d2, 1.0, {}), Error);
}

TEST_SUITE_END();
