#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coulomb/sampler.hpp"
#include "doctest.h"

using namespace coulomb;

namespace {
const SpaceDim d2{2}, d3{3};

std::shared_ptr<const PotentialSpec> quad(double a = 0.5) {
    return std::make_shared<PotentialSpec>(PotentialSpec::quadratic(a));
}

GasParams make_params(SpaceDim dim, int n, double beta, bool with_thermal = true) {
    GasParams p;
    p.dim = dim;
    p.n = n;
    p.beta = beta;
    p.potential = quad();
    p.equilibrium = std::make_shared<EquilibriumData>(solve_equilibrium(p.potential, dim, {}));
    if (with_thermal) {
        GridSpec g;
        g.spacing = 1.0 / 256.0;
        p.thermal = std::make_shared<ThermalEquilibriumData>(
            solve_thermal_equilibrium(p.potential, dim, std::max(2.5, p.theta()), g));
    }
    return p;
}

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

// Regularized lower incomplete gamma P(k, x) for integer k.
double gamma_cdf_integer(int k, double x) {
    if (x <= 0) return 0.0;
    double term = std::exp(-x);
    double sum = term;
    for (int j = 1; j < k; ++j) {
        term *= x / j;
        sum += term;
    }
    return 1.0 - sum;
}
}  // namespace

TEST_SUITE_BEGIN("sampler");

TEST_CASE("determinism and thread independence") {
    auto p = make_params(d2, 8, 1.0);
    Schedule sched{10, 2, 20};
    auto a = run_chains(p, 42, sched, 4, 1);
    auto b = run_chains(p, 42, sched, 4, 2);
    CHECK(a.content_digest() == b.content_digest());
    auto c = run_chains(p, 43, sched, 4, 2);
    CHECK(a.content_digest() != c.content_digest());

    auto s1 = init_configuration(p, 7, 0);
    auto s2 = init_configuration(p, 7, 0);
    for (int i = 0; i < p.n; ++i)
        CHECK(s1.config.positions[i].x == s2.config.positions[i].x);
}

TEST_CASE("initialization support") {
    auto p = make_params(d2, 100, 2.0);
    auto st = init_configuration(p, 5, 0);
    // Thermal init keeps nearly all points within the dilated droplet.
    const double rad = p.equilibrium->droplet_radiusN(p.n);
    int inside = 0;
    for (const auto& x : st.config.positions)
        if (x.norm() <= 2.0 * rad) ++inside;
    CHECK(inside >= 95);
    // N=1 point lands in the rescaled effective support.
    auto p1 = make_params(d2, 1, 2.0);
    auto st1 = init_configuration(p1, 5, 0);
    CHECK(st1.config.positions[0].norm() <= p1.thermal->extent());
}

TEST_CASE("beta = 0 accepts every proposal") {
    auto p = make_params(d2, 6, 0.0, false);
    auto st = init_configuration(p, 11, 0);
    for (int k = 0; k < 500; ++k) mh_step(st, p);
    CHECK(st.stats.accepted == st.stats.proposed);
}

TEST_CASE("detailed balance identity on random pairs") {
    auto p = make_params(d2, 5, 1.3, false);
    auto st = init_configuration(p, 3, 0);
    const ScaledPotential sp = p.scaled();
    Philox rng(99, 1);
    for (int rep = 0; rep < 200; ++rep) {
        const auto i = static_cast<std::size_t>(rng.uniform_below(p.n));
        const Vec to{st.config.positions[i].x + rng.uniform01() - 0.5,
                     st.config.positions[i].y + rng.uniform01() - 0.5};
        const double d_ab = energy_delta(st.config, i, to, sp);
        auto cfg_b = st.config.positions;
        cfg_b[i] = to;
        Configuration b(p.dim, cfg_b);
        const double d_ba = energy_delta(b, i, st.config.positions[i], sp);
        // log pi(a) + log alpha(a->b) == log pi(b) + log alpha(b->a) reduces to
        // d_ab == -d_ba for symmetric proposals.
        CHECK(d_ab == doctest::Approx(-d_ba).epsilon(1e-12));
        const double lhs = -p.beta * std::max(0.0, d_ab);
        const double rhs = -p.beta * d_ab - p.beta * std::max(0.0, d_ba);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("run_chain bookkeeping and frozen step scale") {
    auto p = make_params(d2, 4, 1.0);
    auto st = init_configuration(p, 21, 0);
    Schedule sched{40, 1, 64};
    auto out = run_chain(st, p, sched);
    CHECK(out.samples.size() == 64);
    CHECK(out.step_scale == st.step_scale);  // frozen during sampling
    CHECK(out.acceptance > 0.0);
    CHECK(out.acceptance < 1.0);
}

TEST_CASE("single particle matches the Gaussian marginal") {
    // N=1 quadratic: stationary density ∝ e^{-beta |x|^2 / 2}, so each
    // coordinate has variance 1/beta.
    const double beta = 1.7;
    auto p = make_params(d2, 1, beta, false);
    auto st = init_configuration(p, 17, 0);
    Schedule sched{200, 4, 4000};
    auto out = run_chain(st, p, sched);
    std::vector<double> xs;
    for (const auto& c : out.samples) xs.push_back(c.positions[0].x);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (xs.size() - 1);
    // Batch-means standard error of the variance estimate.
    const int nb = 20;
    std::vector<double> batch(nb, 0.0);
    const std::size_t bs = xs.size() / nb;
    for (int b = 0; b < nb; ++b) {
        double bm = 0.0, bv = 0.0;
        for (std::size_t i = b * bs; i < (b + 1) * bs; ++i) bm += xs[i];
        bm /= bs;
        for (std::size_t i = b * bs; i < (b + 1) * bs; ++i) bv += (xs[i] - bm) * (xs[i] - bm);
        batch[b] = bv / (bs - 1);
    }
    double bmean = 0.0, bvar = 0.0;
    for (double v : batch) bmean += v;
    bmean /= nb;
    for (double v : batch) bvar += (v - bmean) * (v - bmean);
    bvar /= (nb - 1);
    const double se = std::sqrt(bvar / nb);
    CHECK(std::abs(var - 1.0 / beta) <= 3.5 * std::max(se, 1e-3));
}

TEST_CASE("rejection sampler: N=1 against the direct construction") {
    const double beta = 4.0;  // theta = 4 at N=1, matched thermal proposal
    auto p = make_params(d2, 1, beta);
    auto exact = rejection_sample_small_n(p, 31, 10000);
    CHECK(exact.acceptance > 0.0);
    std::vector<double> radii;
    for (const auto& c : exact.samples) radii.push_back(c.positions[0].norm());
    // Direct inverse-CDF: P(|x| <= r) = 1 - exp(-beta r^2 / 2) for V = |x|^2/2.
    Philox rng(77, 5);
    std::vector<double> direct;
    for (int k = 0; k < 10000; ++k)
        direct.push_back(std::sqrt(-2.0 / beta * std::log(rng.uniform01())));
    CHECK(ks_distance(radii, direct) < 0.02);
}

TEST_CASE("rejection sampler vs MCMC marginal at N=2") {
    const double beta = 1.5;  // theta = 3 at N=2
    auto p = make_params(d2, 2, beta);
    auto exact = rejection_sample_small_n(p, 13, 10000);
    auto mcmc = run_chains(p, 14, Schedule{400, 4, 2500}, 4, 2);
    std::vector<double> re, rm;
    for (const auto& c : exact.samples)
        for (const auto& x : c.positions) re.push_back(x.norm());
    for (const auto& c : mcmc.samples)
        for (const auto& x : c.positions) rm.push_back(x.norm());
    CHECK(ks_distance(re, rm) < 0.03);
}

TEST_CASE("stationarity: chains started from exact samples stay put") {
    const double beta = 1.5;
    auto p = make_params(d2, 2, beta);
    auto exact = rejection_sample_small_n(p, 101, 3000);
    std::vector<double> before, after;
    for (std::size_t k = 0; k < exact.samples.size(); ++k) {
        for (const auto& x : exact.samples[k].positions) before.push_back(x.norm());
        ChainState st{exact.samples[k], 500 + k, k, Philox(500 + k, k), 0.5,
                      total_energy(exact.samples[k], p.scaled()), 0, {}};
        for (int s = 0; s < 10; ++s)
            for (int i = 0; i < p.n; ++i) mh_step(st, p);
        for (const auto& x : st.config.positions) after.push_back(x.norm());
    }
    CHECK(ks_distance(before, after) < 0.035);
}

TEST_CASE("ginibre max-radius law (kostlan) at moderate N") {
    // At beta=2, V=|x|^2/2, d=2 the squared radii have the law of N
    // independent Gamma(k,1) variables, k=1..N; the mean of max|x_i| is an
    // exact finite-N oracle for the whole sampling stack.
    const int n = 16;
    auto p = make_params(d2, n, 2.0);
    double e_max = 0.0;
    {
        const double dt = 1e-3;
        for (double t = 0.0; t < 12.0; t += dt) {
            double cdf = 1.0;
            for (int k = 1; k <= n; ++k) cdf *= gamma_cdf_integer(k, t * t);
            e_max += (1.0 - cdf) * dt;
        }
    }
    auto out = run_chains(p, 2024, Schedule{600, 8, 500}, 4, 2);
    std::vector<double> maxima;
    for (const auto& c : out.samples) {
        double m = 0.0;
        for (const auto& x : c.positions) m = std::max(m, x.norm());
        maxima.push_back(m);
    }
    double mean = 0.0, var = 0.0;
    for (double m : maxima) mean += m;
    mean /= maxima.size();
    for (double m : maxima) var += (m - mean) * (m - mean);
    var /= (maxima.size() - 1);
    const double se = std::sqrt(var / maxima.size()) *
                      std::sqrt(std::max(1.0, out.energy_autocorr / 8.0));
    CAPTURE(e_max);
    CAPTURE(mean);
    CHECK(std::abs(mean - e_max) <= 4.0 * std::max(se, 5e-3));
}

TEST_CASE("sample set IO round trip") {
    auto p = make_params(d2, 3, 1.0);
    auto out = run_chains(p, 5, Schedule{10, 1, 8}, 2, 2);
    const std::string path = "/tmp/coulomb_test_samples.bin";
    out.save(path);
    auto back = SampleSet::load(path);
    CHECK(back.content_digest() == out.content_digest());
    CHECK(back.n == out.n);
    CHECK(back.samples.size() == out.samples.size());
    CHECK(back.chain_ids == out.chain_ids);
    CHECK(back.samples[3].positions[1].y == out.samples[3].positions[1].y);
    std::remove(path.c_str());
}

TEST_CASE("rejection sampler rejects N > 3") {
    auto p = make_params(d2, 4, 1.0);
    CHECK_THROWS_AS(rejection_sample_small_n(p, 1, 10), Error);
}

TEST_SUITE_END();
