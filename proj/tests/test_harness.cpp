#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coulomb/io_util.hpp"
#include "coulomb/manifest.hpp"
#include "coulomb/oracle.hpp"
#include "coulomb/rng.hpp"
#include "doctest.h"

using namespace coulomb;

TEST_SUITE_BEGIN("harness");

TEST_CASE("digests are stable and content sensitive") {
    CHECK(fnv1a64("abc") == fnv1a64("abc"));
    CHECK(fnv1a64("abc") != fnv1a64("abd"));
    CHECK(hex64(fnv1a64("abc")).size() == 16);
}

TEST_CASE("manifest round trip") {
    RunManifest m;
    m.config_digest = "deadbeef00000000";
    m.seed = 99;
    m.params = {{"N", 4}};
    m.schedule = {{"samples", 10}};
    m.outputs.emplace_back("samples.bin", "0011223344556677");
    m.threads = 2;
    const std::string path = "/tmp/coulomb_manifest_test.json";
    m.save(path);
    std::ifstream f(path);
    nlohmann::json j;
    f >> j;
    CHECK(j.at("seed").get<std::uint64_t>() == 99);
    CHECK(j.at("outputs")[0].at("digest") == "0011223344556677");
    CHECK(j.at("tool_version").get<std::string>() == kToolVersion);
    std::remove(path.c_str());
}

TEST_CASE("run directories key on name and digest") {
    const std::string root = "/tmp/coulomb_rundir_test";
    std::filesystem::remove_all(root);
    const auto d1 = run_directory(root, "exp", "aabbccddeeff0011");
    const auto d2 = run_directory(root, "exp", "aabbccddeeff0011");
    const auto d3 = run_directory(root, "exp", "ffeeddccbbaa9988");
    CHECK(d1 == d2);
    CHECK(d1 != d3);
    CHECK(std::filesystem::exists(d1));
    std::filesystem::remove_all(root);
}

TEST_CASE("iso-energy check is sensitive to a sign mutation") {
    // The fixture recomputes the isotropic-averaging comparison with the
    // image-charge correction sign flipped; the residual must blow past the
    // contract by orders of magnitude, which is what guards the suite against
    // a silent kernel regression.
    auto quad = std::make_shared<PotentialSpec>(PotentialSpec::quadratic(0.5));
    const SpaceDim d2{2};
    auto eq = solve_equilibrium(quad, d2, {});
    const int n = 4;
    auto bg = eq.measureN(n, 4096);
    Configuration cfg(d2, {{0.0, 0.0}, {0.2, 0.05}, {-1.0, 0.6}, {0.8, -0.9}});
    const double radius = 0.45;
    const double honest = check_iso_energy(cfg, 0, radius, bg, 512);
    CHECK(honest < 1e-6);

    // Mutated comparison: Iso average against F + h_omega (wrong sign).
    const Ball ball{cfg.positions[0], radius};
    double f_rest = 0.5 * bg.self_energy();
    for (int a = 1; a < n; ++a) {
        for (int b = a + 1; b < n; ++b)
            f_rest += coulomb_kernel(cfg.positions[a] - cfg.positions[b], d2);
        f_rest -= electric_potential(bg, cfg.positions[a]);
    }
    const auto f_with = [&](const Vec& y) {
        double f = f_rest;
        for (int j = 1; j < n; ++j) f += coulomb_kernel(y - cfg.positions[j], d2);
        return f - electric_potential(bg, y);
    };
    double iso = 0.0;
    for (const auto& nd : harmonic_measure_nodes(ball, d2, 512)) iso += nd.weight * f_with(nd.point);
    double correction = 0.0;
    for (int j = 1; j < n; ++j)
        if ((cfg.positions[j] - ball.center).norm() < radius)
            correction += green_function_ball(ball, ball.center, cfg.positions[j], d2);
    correction -= ball_green_radial_measure([&](double u) { return bg.density({u, 0.0}); },
                                            {bg.radial().support_radius}, ball.center.norm(),
                                            radius, d2);
    const double mutated = std::abs(iso - (f_with(ball.center) + correction));
    CHECK(mutated > 100.0 * std::max(honest, 1e-9));
}

TEST_SUITE_END();
