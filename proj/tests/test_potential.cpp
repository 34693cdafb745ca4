#include <cmath>

#include "coulomb/potential.hpp"
#include "doctest.h"

using namespace coulomb;

namespace {
const SpaceDim d2{2}, d3{3};

std::shared_ptr<const PotentialSpec> quad(double a = 0.5) {
    return std::make_shared<PotentialSpec>(PotentialSpec::quadratic(a));
}

PotentialSpec half_r2_profile(double rmax = 20.0, int k = 400) {
    std::vector<double> r(k + 1), v(k + 1), dv(k + 1);
    for (int i = 0; i <= k; ++i) {
        r[i] = rmax * i / k;
        v[i] = 0.5 * r[i] * r[i];
        dv[i] = r[i];
    }
    return PotentialSpec::radial_profile(std::move(r), std::move(v), std::move(dv));
}
}  // namespace

TEST_SUITE_BEGIN("potential");

TEST_CASE("quadratic evaluation and scaling") {
    ScaledPotential p1(quad(), 1, d2);
    CHECK(p1.eval({2, 0}) == doctest::Approx(2.0));
    ScaledPotential p4(quad(), 4, d2);
    // N^{2/d} V_1(N^{-1/d} x) = 4 * (1/2 |(1,0)|^2) = 2.
    CHECK(p4.eval({2, 0}) == doctest::Approx(2.0));

    SUBCASE("scaling identity is exact for analytic kinds") {
        ScaledPotential pn(quad(0.7), 13, d3);
        ScaledPotential base(quad(0.7), 1, d3);
        const Vec x{1.3, -0.4, 2.2};
        const double s = std::pow(13.0, -1.0 / 3.0);
        const double lhs = pn.eval(x);
        const double rhs = std::pow(13.0, 2.0 / 3.0) * base.eval(x * s);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("radial profile matches the quadratic it samples") {
    auto prof = std::make_shared<PotentialSpec>(half_r2_profile());
    ScaledPotential p(prof, 1, d2);
    ScaledPotential q(quad(), 1, d2);
    for (double r = 0.05; r < 18.0; r += 0.37) {
        CHECK(p.eval({r, 0}) == doctest::Approx(q.eval({r, 0})).epsilon(1e-6));
    }
    CHECK_THROWS_AS(p.eval({25.0, 0}), Error);  // no extrapolation
}

TEST_CASE("laplacian bounds") {
    SUBCASE("quadratic is constant") {
        ScaledPotential p2(quad(), 7, d2);
        CHECK(laplacian_bound(p2, {3.1, -0.2}) == doctest::Approx(2.0));
        ScaledPotential p3(quad(), 7, d3);
        CHECK(laplacian_bound(p3, {0.4, 1.0, 2.0}) == doctest::Approx(3.0));
    }
    SUBCASE("radial quartic against the symbolic Laplacian") {
        // V = r^4/4: ΔV_1 = (d+2) r^2 in dimension d... for d=2: 4 r^2.
        const int k = 2000;
        std::vector<double> r(k + 1), v(k + 1), dv(k + 1);
        for (int i = 0; i <= k; ++i) {
            r[i] = 10.0 * i / k;
            v[i] = 0.25 * std::pow(r[i], 4.0);
            dv[i] = std::pow(r[i], 3.0);
        }
        auto prof = std::make_shared<PotentialSpec>(
            PotentialSpec::radial_profile(std::move(r), std::move(v), std::move(dv)));
        ScaledPotential p(prof, 1, d2);
        // M at macroscopic radius R is the sup over the unit ball: 4 (R+1)^2.
        const double R = 3.0;
        CHECK(laplacian_bound(p, {R, 0}) == doctest::Approx(4.0 * (R + 1) * (R + 1)).epsilon(0.05));
    }
    SUBCASE("microscopic and macroscopic forms agree") {
        auto prof = std::make_shared<PotentialSpec>(half_r2_profile());
        ScaledPotential pn(prof, 9, d2);
        ScaledPotential p1(prof, 1, d2);
        const Vec x{4.2, 1.0};
        CHECK(laplacian_bound(pn, x) ==
              doctest::Approx(laplacian_bound(p1, x * std::pow(9.0, -0.5))).epsilon(1e-9));
    }
}

TEST_CASE("assumption validation") {
    SUBCASE("quadratic with theta_star = 4 passes the checkable set") {
        TemperatureSchedule sched;
        sched.beta_of_n = {{4, 1.0}, {16, 0.25}};  // theta = 4 for both
        CHECK(sched.theta_star(d2) == doctest::Approx(4.0));
        auto rep = validate_assumptions(*quad(), d2, sched);
        CHECK(rep.all_checkable_pass());
        for (const auto& e : rep.entries) {
            if (e.assumption == "A1") CHECK(e.status == ValidationEntry::Status::Pass);
            if (e.assumption == "A2") CHECK(e.status == ValidationEntry::Status::Pass);
            if (e.assumption == "A3") CHECK(e.status == ValidationEntry::Status::Pass);
            if (e.assumption == "A6") CHECK(e.status == ValidationEntry::Status::Pass);
        }
    }
    SUBCASE("theta at or below 2 fails A1") {
        TemperatureSchedule sched;
        sched.beta_of_n = {{4, 0.25}};  // theta = 1
        auto rep = validate_assumptions(*quad(), d2, sched);
        bool a1_fail = false;
        for (const auto& e : rep.entries)
            if (e.assumption == "A1") a1_fail = e.status == ValidationEntry::Status::Fail;
        CHECK(a1_fail);
    }
    SUBCASE("log-growth potential fails A2 in d=2") {
        // V_1(r) = (1/2) log(1 + r^2): V_1 + g -> -(1/2) log r -> -inf.
        const int k = 600;
        std::vector<double> r(k + 1), v(k + 1), dv(k + 1);
        for (int i = 0; i <= k; ++i) {
            r[i] = 60.0 * i / k;
            v[i] = 0.5 * std::log(1.0 + r[i] * r[i]);
            dv[i] = r[i] / (1.0 + r[i] * r[i]);
        }
        auto weak = PotentialSpec::radial_profile(std::move(r), std::move(v), std::move(dv));
        TemperatureSchedule sched;
        sched.beta_of_n = {{4, 1.0}};
        auto rep = validate_assumptions(weak, d2, sched);
        bool a2_fail = false;
        for (const auto& e : rep.entries)
            if (e.assumption == "A2") a2_fail = e.status == ValidationEntry::Status::Fail;
        CHECK(a2_fail);
    }
    SUBCASE("reports are deterministic") {
        TemperatureSchedule sched;
        sched.beta_of_n = {{4, 1.0}};
        auto a = validate_assumptions(*quad(), d2, sched).to_json().dump();
        auto b = validate_assumptions(*quad(), d2, sched).to_json().dump();
        CHECK(a == b);
    }
}

TEST_CASE("potential JSON round trip") {
    auto j = quad(0.8)->to_json();
    auto back = PotentialSpec::from_json(j);
    CHECK(back.kind() == PotentialKind::Quadratic);
    CHECK(back.coefficient() == doctest::Approx(0.8));

    auto prof = half_r2_profile();
    auto back2 = PotentialSpec::from_json(prof.to_json());
    CHECK(back2.eval1({3.0, 0.0}) == doctest::Approx(prof.eval1({3.0, 0.0})));

    CHECK_THROWS_AS(PotentialSpec::from_json(nlohmann::json{{"kind", "nope"}}), Error);
}

TEST_CASE("grid sampled potential") {
    // Sample 0.6|x|^2 on a grid and compare values and Laplacian.
    SampleGrid2 g{-3.0, -3.0, 6.0 / 127.0, 128, 128};
    std::vector<double> vals(static_cast<std::size_t>(g.nx) * g.ny);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x0 + ix * g.h, y = g.y0 + iy * g.h;
            vals[static_cast<std::size_t>(iy) * g.nx + ix] = 0.6 * (x * x + y * y);
        }
    auto p = PotentialSpec::grid_sampled(g, vals);
    CHECK(p.eval1({0.5, -0.7}) == doctest::Approx(0.6 * (0.25 + 0.49)).epsilon(1e-3));
    CHECK(p.laplacian1({0.4, 0.3}, d2) == doctest::Approx(2.4).epsilon(1e-6));
    CHECK_THROWS_AS(p.eval1({4.0, 0.0}), Error);
}

TEST_SUITE_END();
