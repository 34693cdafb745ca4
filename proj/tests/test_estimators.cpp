#include <cmath>

#include "coulomb/estimators.hpp"
#include "doctest.h"

using namespace coulomb;

namespace {
const SpaceDim d2{2};

std::shared_ptr<const PotentialSpec> quad() {
    return std::make_shared<PotentialSpec>(PotentialSpec::quadratic(0.5));
}

GasParams make_params(int n, double beta) {
    GasParams p;
    p.dim = d2;
    p.n = n;
    p.beta = beta;
    p.potential = quad();
    p.equilibrium = std::make_shared<EquilibriumData>(solve_equilibrium(p.potential, d2, {}));
    return p;
}

SampleSet small_gas(int n, double beta, long count, std::uint64_t seed) {
    auto p = make_params(n, beta);
    GridSpec g;
    g.spacing = 1.0 / 256.0;
    p.thermal = std::make_shared<ThermalEquilibriumData>(
        solve_thermal_equilibrium(p.potential, d2, p.theta(), g));
    return rejection_sample_small_n(p, seed, count);
}
}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("count_in_ball basics") {
    auto samples = small_gas(2, 1.5, 2000, 7);
    SUBCASE("gamma = 0 gives MGF exactly 1") {
        auto cs = count_in_ball(samples, {0, 0}, 1.0, {0.0, 0.5});
        CHECK(cs.mgf[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cs.mgf[1] > 1.0);
        CHECK(cs.mgf_se[0] == doctest::Approx(0.0));
    }
    SUBCASE("a huge ball always counts N") {
        auto cs = count_in_ball(samples, {0, 0}, 1e9);
        CHECK(cs.mean == doctest::Approx(2.0));
        CHECK(cs.variance == doctest::Approx(0.0));
    }
    SUBCASE("consistency with the binned density") {
        auto rho = estimate_rho1(samples, BinGrid::covering(d2, 6.0, 0.25));
        auto cs = count_in_ball(samples, {0, 0}, 1.5);
        // Integrate the binned density over the ball.
        double integral = 0.0;
        for (long i = 0; i < rho.grid.cells(); ++i) {
            if (rho.grid.center_of(i).norm() <= 1.5) integral += rho.density[i];
        }
        integral *= rho.grid.cell_volume();
        const double se = std::sqrt(cs.variance / cs.counts.size());
        CHECK(std::abs(cs.mean - integral) <= 3.0 * std::max(se, 0.03));
    }
}

TEST_CASE("estimate_rho1 normalization and concentration") {
    SUBCASE("integral over bins recovers N") {
        auto samples = small_gas(2, 1.5, 1500, 8);
        auto rho = estimate_rho1(samples, BinGrid::covering(d2, 8.0, 0.5));
        CHECK(rho.total_integral == doctest::Approx(2.0).epsilon(0.01));
    }
    SUBCASE("single cold particle concentrates at the potential minimum") {
        auto samples = small_gas(1, 60.0, 800, 9);
        auto rho = estimate_rho1(samples, BinGrid::covering(d2, 4.0, 0.5));
        long best = 0;
        for (long i = 0; i < rho.grid.cells(); ++i)
            if (rho.density[i] > rho.density[best]) best = i;
        CHECK(rho.grid.center_of(best).norm() < 0.5);
    }
}

TEST_CASE("estimate_rho2 repulsion and Poisson flatness") {
    SUBCASE("pair density vanishes at coincidence") {
        auto samples = small_gas(2, 2.0, 6000, 10);
        auto table = estimate_rho2(samples, {{0, 0}}, 3.0, 24, 2.0);
        CHECK(table.rows.front().rho2 < 0.2 * table.rows.back().rho2);
    }
    SUBCASE("synthetic Poisson input gives a flat table at intensity^2") {
        const double intensity = 0.8;
        auto samples = synthetic_poisson(d2, intensity, 6.0, 4000, 11);
        auto table = estimate_rho2(samples, {{0, 0}}, 3.0, 6, 2.0);
        for (std::size_t b = 1; b < table.rows.size(); ++b) {
            const auto& row = table.rows[b];
            CHECK(std::abs(row.rho2 - intensity * intensity) <=
                  3.5 * std::max(row.se, 0.01 * intensity * intensity));
        }
    }
}

TEST_CASE("subharmonicity test on synthetic fields") {
    auto p = make_params(16, 0.0);  // beta = 0 so u equals the raw field
    const double r_drop = p.equilibrium->droplet_radiusN(p.n);
    const Ball ball{{r_drop + 3.0, 0.5}, 1.0};

    BinGrid grid = BinGrid::covering(d2, r_drop + 8.0, 0.25);
    DensityEstimate field;
    field.grid = grid;
    field.density.assign(grid.cells(), 0.0);
    field.se.assign(grid.cells(), 0.0);

    SUBCASE("constant field satisfies the mean value equality") {
        for (long i = 0; i < grid.cells(); ++i) field.density[i] = 3.25;
        auto rep = subharmonicity_test(field, *p.equilibrium, p, {ball});
        CHECK(std::abs(rep.balls[0].violation) < 1e-12);
    }
    SUBCASE("|x|^2 field is strictly subharmonic: average exceeds center") {
        for (long i = 0; i < grid.cells(); ++i) field.density[i] = grid.center_of(i).norm2();
        auto rep = subharmonicity_test(field, *p.equilibrium, p, {ball});
        // Circle average of |x|^2 minus center value is exactly R^2 in d=2.
        CHECK(rep.balls[0].violation == doctest::Approx(-1.0).epsilon(0.05));
    }
    SUBCASE("balls touching the droplet are rejected") {
        CHECK_THROWS_AS(
            subharmonicity_test(field, *p.equilibrium, p, {Ball{{r_drop + 0.5, 0.0}, 1.0}}),
            Error);
    }
}

TEST_CASE("confinement profile basics") {
    auto samples = small_gas(2, 1.5, 3000, 12);
    auto p = make_params(2, 1.5);
    auto rep = confinement_profile(samples, *p.equilibrium, p, 0.5, 3.0);
    CHECK(rep.max_rho_inside > 0.0);
    CHECK(rep.sup_q_outside >= 0.0);
    // Far shells with zero observed particles report q = 0.
    CHECK(rep.shells.back().q == 0.0);
}

TEST_CASE("extreme radius basics") {
    auto samples = small_gas(1, 4.0, 600, 13);
    auto p = make_params(1, 4.0);
    auto rep = extreme_radius(samples, p);
    CHECK(rep.per_sample_max.size() == 600);
    // N=1: the max is the particle radius itself.
    CHECK(rep.per_sample_max[5] ==
          doctest::Approx(samples.samples[5].positions[0].norm()));
    // Survival function is nonincreasing in t.
    for (std::size_t i = 1; i < rep.empirical_exceedance.size(); ++i)
        CHECK(rep.empirical_exceedance[i] <= rep.empirical_exceedance[i - 1] + 1e-12);
}

TEST_CASE("vacuum tail basics") {
    auto samples = small_gas(2, 1.5, 1500, 14);
    auto p = make_params(2, 1.5);
    auto rep = vacuum_tail(samples, *p.equilibrium, p, {0.0, 0.5, 50.0});
    CHECK(rep.rows[0].empirical == doctest::Approx(1.0));  // zeta >= 0 always
    CHECK(rep.rows[2].empirical == doctest::Approx(0.0));  // beyond observed range
    CHECK(rep.rows[1].integral > 0.0);
}

TEST_CASE("poisson tests on a synthetic control") {
    const double intensity = 0.5;
    auto samples = synthetic_poisson(d2, intensity, 8.0, 6000, 15);
    std::vector<Vec> centers;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) centers.push_back({3.0 * i, 3.0 * j});
    auto rep = poisson_tests(samples, centers, 0.5);
    for (const auto& w : rep.windows) {
        CHECK(std::abs(w.dispersion - 1.0) <= 3.0 * std::max(w.dispersion_se, 0.02));
        CHECK(w.tv_to_poisson < 0.05);
    }
    CHECK(rep.rho1_flatness < 1.25);
}

TEST_CASE("farfield geometry gate") {
    auto samples = small_gas(2, 1.5, 200, 16);
    auto p = make_params(2, 1.5);
    CHECK_THROWS_AS(farfield_conditional_check(samples, *p.equilibrium, p, 0.5, 2.0), Error);
    const double rd = p.equilibrium->droplet_radiusN(p.n);
    auto rep = farfield_conditional_check(samples, *p.equilibrium, p, 3.0 * rd, 4.0 * rd);
    CHECK(rep.integral > 0.0);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("estimators_extra");

TEST_CASE("binomial pair-moment comparison reports a finite constant") {
    auto samples = small_gas(2, 2.0, 4000, 21);
    auto p = make_params(2, 2.0);
    auto table = estimate_rho2(samples, {{0, 0}}, 3.0, 12, 2.0, &p, {0.25, 0.5}, 4.0);
    REQUIRE(table.binom_fitted_c.size() == 2);
    for (const double c : table.binom_fitted_c) {
        CHECK(c >= 0.0);
        CHECK(c < 1e3);
    }
}

TEST_SUITE_END();
