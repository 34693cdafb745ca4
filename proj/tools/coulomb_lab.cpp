// coulomb_lab: equilibrium measures, Gibbs sampling and verification suite
// for the one-component Coulomb gas.
//
// Subcommands: equilibrium, sample, verify, estimate, report. Exit codes:
//   0 success, 1 failed contract, 2 config/schema error, 3 missing artifact,
//   4 empty or invalid input data, 5 solver non-convergence.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "coulomb/estimators.hpp"
#include "coulomb/io_util.hpp"
#include "coulomb/manifest.hpp"
#include "coulomb/oracle.hpp"
#include "coulomb/rng.hpp"

namespace fs = std::filesystem;
using namespace coulomb;
using nlohmann::json;

namespace {

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::SchemaError: return 2;
        case Errc::MissingArtifact: return 3;
        case Errc::EmptyInput: return 4;
        case Errc::NonConvergence: return 5;
        default: return 1;
    }
}

json preset_config(const std::string& name);

json load_config(const std::string& config_path, const std::string& preset) {
    if (!preset.empty()) return preset_config(preset);
    if (config_path.empty())
        throw Error(Errc::SchemaError, "either --config or --preset is required");
    std::ifstream f(config_path);
    if (!f) throw Error(Errc::MissingArtifact, "cannot read config " + config_path);
    try {
        json j;
        f >> j;
        return j;
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaError, std::string("malformed config JSON: ") + e.what());
    }
}

std::shared_ptr<const PotentialSpec> config_potential(const json& cfg) {
    const auto& p = cfg.at("potential");
    if (p.is_string()) {
        std::ifstream f(p.get<std::string>());
        if (!f)
            throw Error(Errc::MissingArtifact, "cannot read potential file " + p.get<std::string>());
        json pj;
        try {
            f >> pj;
        } catch (const json::exception& e) {
            throw Error(Errc::SchemaError, std::string("malformed potential JSON: ") + e.what());
        }
        return std::make_shared<PotentialSpec>(PotentialSpec::from_json(pj));
    }
    return std::make_shared<PotentialSpec>(PotentialSpec::from_json(p));
}

GridSpec config_grid(const json& cfg, const char* key) {
    GridSpec g;
    if (cfg.contains(key)) {
        const auto& e = cfg.at(key);
        g.spacing = e.value("spacing", g.spacing);
        g.extent = e.value("extent", 0.0);
        g.force_numeric = e.value("force_numeric", false);
        const std::string mode = e.value("mode", "auto");
        g.mode = mode == "radial"
                     ? GridSpec::Mode::Radial
                     : (mode == "cartesian" ? GridSpec::Mode::Cartesian : GridSpec::Mode::Auto);
    }
    return g;
}

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("COULOMB_LAB_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct RunPaths {
    std::string dir;
    std::string eq = "equilibrium.json";
    std::string thermal = "thermal.json";
    std::string samples = "samples.bin";
    std::string manifest = "manifest.json";
    std::string index = "index.json";
    std::string in(const std::string& f) const { return dir + "/" + f; }
};

RunPaths run_paths(const json& cfg, const std::string& out) {
    RunPaths rp;
    const std::string digest = hex64(fnv1a64(cfg.dump()));
    rp.dir = run_directory(out, cfg.value("name", "run"), digest);
    return rp;
}

// ---------------------------------------------------------------------------

int cmd_equilibrium(const json& cfg, const std::string& out) {
    const SpaceDim dim{cfg.value("dim", 2)};
    auto potential = config_potential(cfg);
    const RunPaths rp = run_paths(cfg, out);

    TemperatureSchedule sched;
    if (cfg.contains("N") && cfg.contains("beta"))
        sched.beta_of_n[cfg.at("N").get<int>()] = cfg.at("beta").get<double>();
    const auto validation = validate_assumptions(*potential, dim, sched);
    {
        std::ofstream f(rp.in("validation.json"));
        f << validation.to_json().dump(2) << "\n";
    }

    const auto eq = solve_equilibrium(potential, dim, config_grid(cfg, "equilibrium"));
    eq.save(rp.in(rp.eq));
    std::cout << "equilibrium: c1=" << eq.c1() << " droplet_radius=" << eq.droplet_radius1()
              << " residual=" << eq.log().residual << "\n";

    if (cfg.contains("N") && cfg.contains("beta")) {
        const int n = cfg.at("N").get<int>();
        const double beta = cfg.at("beta").get<double>();
        const double theta = beta * std::pow(static_cast<double>(n), 2.0 / dim.value());
        if (theta > 2.0) {
            const auto t =
                solve_thermal_equilibrium(potential, dim, theta, config_grid(cfg, "thermal"));
            t.save(rp.in(rp.thermal));
            const auto props = thermal_properties_report(t, eq);
            std::ofstream f(rp.in("thermal_properties.json"));
            f << props.to_json().dump(2) << "\n";
            std::cout << "thermal: theta=" << theta << " c1=" << t.c1()
                      << " residual=" << t.residual() << "\n";
        } else {
            std::cout << "thermal: skipped (theta = " << theta << " <= 2)\n";
        }
    }
    std::cout << "artifacts in " << rp.dir << "\n";
    return 0;
}

GasParams gas_from_config(const json& cfg, const RunPaths& rp) {
    GasParams p;
    p.dim = SpaceDim{cfg.value("dim", 2)};
    p.n = cfg.at("N").get<int>();
    p.beta = cfg.at("beta").get<double>();
    p.potential = config_potential(cfg);
    if (fs::exists(rp.in(rp.eq)))
        p.equilibrium = std::make_shared<EquilibriumData>(EquilibriumData::load(rp.in(rp.eq)));
    if (fs::exists(rp.in(rp.thermal)))
        p.thermal =
            std::make_shared<ThermalEquilibriumData>(ThermalEquilibriumData::load(rp.in(rp.thermal)));
    return p;
}

int cmd_sample(const json& cfg, const std::string& out, std::uint64_t seed, int threads) {
    const RunPaths rp = run_paths(cfg, out);
    if (!fs::exists(rp.in(rp.eq)))
        throw Error(Errc::MissingArtifact,
                    "equilibrium artifact not found; run the equilibrium subcommand first");
    GasParams p = gas_from_config(cfg, rp);
    const double theta = p.theta();
    const bool want_thermal_init =
        cfg.value("sample", json::object()).value("thermal_init", theta > 2.0);
    if (want_thermal_init && !p.thermal)
        throw Error(Errc::MissingArtifact, "thermal artifact required for mu_theta initialization");
    if (!want_thermal_init) p.thermal.reset();
    if (theta <= 2.0)
        std::cerr << "warning: theta = " << theta << " <= 2; confinement checks not meaningful\n";

    Schedule sched;
    const auto sj = cfg.value("sample", json::object());
    sched.samples = sj.value("samples", 1000);
    sched.burn_in_sweeps = sj.value("burn_in_sweeps", -1);
    sched.thin_sweeps = sj.value("thin_sweeps", -1);
    const int chains = sj.value("chains", 4);

    const auto t0 = std::chrono::steady_clock::now();
    const SampleSet samples = run_chains(p, seed, sched, chains, threads);
    const auto t1 = std::chrono::steady_clock::now();
    samples.save(rp.in(rp.samples));

    RunManifest m;
    m.config_digest = hex64(fnv1a64(cfg.dump()));
    m.seed = seed;
    m.params = p.to_json();
    m.schedule = sched.to_json();
    m.threads = threads;
    m.wall_clock_sec = std::chrono::duration<double>(t1 - t0).count();
    m.outputs.emplace_back(rp.samples, file_digest(rp.in(rp.samples)));
    m.save(rp.in(rp.manifest));
    std::cout << "samples: " << samples.samples.size() << " acceptance=" << samples.acceptance
              << " autocorr=" << samples.energy_autocorr << " sweeps\n"
              << "digest: " << samples.content_digest() << "\nartifacts in " << rp.dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyCase {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
};

int cmd_verify(const json& cfg, const std::string& out, const std::string& only,
               std::uint64_t seed) {
    const RunPaths rp = run_paths(cfg, out);
    std::vector<VerifyCase> cases;
    const auto want = [&](const std::string& name) {
        return only.empty() || name.find(only) != std::string::npos;
    };
    auto quad = std::make_shared<PotentialSpec>(PotentialSpec::quadratic(0.5));
    Philox rng(seed, 0xC0DA);

    const auto droplet_config = [&](const EquilibriumData& eq, int n) {
        const int d = eq.dim().value();
        const double r = 0.9 * eq.droplet_radiusN(n);
        std::vector<Vec> pts;
        while (static_cast<int>(pts.size()) < n) {
            Vec p{r * (2 * rng.uniform01() - 1), r * (2 * rng.uniform01() - 1),
                  d == 3 ? r * (2 * rng.uniform01() - 1) : 0.0};
            if (p.norm() <= r) pts.push_back(p);
        }
        return Configuration(eq.dim(), std::move(pts));
    };

    if (want("split")) {
        for (const int d : {2, 3}) {
            auto eq = solve_equilibrium(quad, SpaceDim{d}, {});
            double worst = 0.0;
            for (int rep = 0; rep < 50; ++rep)
                worst = std::max(worst, check_split_identity(droplet_config(eq, 12), eq).residual);
            cases.push_back({"split.d" + std::to_string(d), worst < 1e-8, worst, 1e-8});

            GridSpec g;
            g.spacing = 1.0 / 256.0;
            auto t = solve_thermal_equilibrium(quad, SpaceDim{d}, 10.0, g);
            GasParams p;
            p.dim = SpaceDim{d};
            p.n = 12;
            p.beta = 10.0 * std::pow(12.0, -2.0 / d);
            p.potential = quad;
            double worst_t = 0.0;
            for (int rep = 0; rep < 20; ++rep)
                worst_t =
                    std::max(worst_t, check_split_thermal(droplet_config(eq, 12), t, p).residual);
            cases.push_back({"split.thermal.d" + std::to_string(d), worst_t < 1e-6, worst_t, 1e-6});
        }
    }

    if (want("iso")) {
        for (const int d : {2, 3}) {
            auto eq = solve_equilibrium(quad, SpaceDim{d}, {});
            auto bg = eq.measureN(6, 8192);
            double worst = 0.0;
            int done = 0;
            while (done < 25) {
                auto cfg_rand = droplet_config(eq, 6);
                const double radius = 0.45;
                bool clean = true;
                for (int j = 1; j < 6; ++j) {
                    const double dist = (cfg_rand.positions[j] - cfg_rand.positions[0]).norm();
                    if (dist > 0.5 * radius && dist < 2.0 * radius) clean = false;
                }
                if (cfg_rand.positions[0].norm() > eq.droplet_radiusN(6) - radius - 0.05)
                    clean = false;
                if (!clean) continue;
                worst = std::max(worst, check_iso_energy(cfg_rand, 0, radius, bg, 512));
                ++done;
            }
            cases.push_back({"iso.energy.d" + std::to_string(d), worst < 1e-6, worst, 1e-6});
        }
        auto res = check_iso_adjoint(
            Ball{{0.2, -0.1}, 1.4}, SpaceDim{2},
            [](const Vec& x) { return std::sin(1.1 * x.x) + 0.4 * x.y * x.y; },
            [](const Vec& z) { return std::cos(0.9 * z.y) + 0.2 * z.x; }, 256, 512);
        cases.push_back({"iso.adjoint", res.residual < 1e-4, res.residual, 1e-4});
    }

    if (want("1pt") || want("meanvalue")) {
        auto eq = solve_equilibrium(quad, SpaceDim{2}, {});
        GasParams p;
        p.dim = SpaceDim{2};
        p.n = 1;
        p.beta = 1.0;
        p.potential = quad;
        QuadratureGas gas(p, 0.0, 128);
        auto rep = check_1pt_iso(gas, eq, {Ball{{0.0, 0.0}, 0.8}, Ball{{0.5, 0.2}, 0.5}}, {}, 256);
        cases.push_back({"1pt.meanvalue", rep.max_violation <= 1e-4, rep.max_violation, 1e-4});
    }

    if (want("kpt")) {
        GasParams p;
        p.dim = SpaceDim{2};
        p.n = 2;
        p.beta = 1.0;
        p.potential = quad;
        QuadratureGas gas(p, 0.0, 128);
        auto rep = check_kpt_comp(gas, {{Vec{0.0, 0.0}, 1.0}}, {Vec{0.25, 0.0}});
        cases.push_back({"kpt.comparison", rep.max_violation <= 1e-4, rep.max_violation, 1e-4});
    }

    if (want("squeeze")) {
        auto eq = solve_equilibrium(quad, SpaceDim{3}, {});
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto res = check_squeeze(droplet_config(eq, 8), eq);
            worst = std::max(worst, res.implied_c);
        }
        cases.push_back({"squeeze.implied_c", worst < 20.0 && std::isfinite(worst), worst, 20.0});
    }

    json arr = json::array();
    bool all = true;
    std::string first_fail;
    for (const auto& c : cases) {
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"bound", c.bound}});
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
                  << " bound=" << c.bound << "\n";
        if (!c.pass && all) {
            all = false;
            first_fail = c.name;
        }
    }
    std::ofstream f(rp.in("verify_report.json"));
    f << json{{"schema", "coulomb-lab/verify-v1"}, {"cases", arr}, {"all_pass", all}}.dump(2)
      << "\n";
    if (!all) {
        std::cerr << "first failing contract: " << first_fail << "\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_estimate(const json& cfg, const std::string& out, const std::string& samples_path) {
    const RunPaths rp = run_paths(cfg, out);
    const std::string spath = samples_path.empty() ? rp.in(rp.samples) : samples_path;
    if (!fs::exists(spath)) throw Error(Errc::MissingArtifact, "sample set not found: " + spath);
    const SampleSet samples = SampleSet::load(spath);
    GasParams p = gas_from_config(cfg, rp);
    if (p.dim != samples.dim)
        throw Error(Errc::SchemaError, "estimate: sample dimension differs from the configuration");
    if (!p.equilibrium)
        throw Error(Errc::MissingArtifact, "estimate: equilibrium artifact required");
    const auto& eq = *p.equilibrium;

    json index;
    index["schema"] = "coulomb-lab/index-v1";
    index["reports"] = json::array();
    const auto emit = [&](const std::string& stem, const json& j, const std::string& csv = "") {
        std::ofstream f(rp.in(stem + ".json"));
        f << j.dump(2) << "\n";
        index["reports"].push_back(stem + ".json");
        if (!csv.empty()) {
            std::ofstream c(rp.in(stem + ".csv"));
            c << csv;
            index["reports"].push_back(stem + ".csv");
        }
    };

    const auto est = cfg.value("estimators", json::object());
    const double r_drop = eq.droplet_radiusN(p.n);

    if (est.value("rho1", true)) {
        const double halfwidth = est.value("rho1_halfwidth", 1.8 * r_drop);
        const auto grid = BinGrid::covering(p.dim, halfwidth, est.value("rho1_bin", 0.5));
        const auto rho = estimate_rho1(samples, grid);
        emit("rho1", rho.to_json(), rho.to_csv());
    }
    if (est.value("subharmonicity", false)) {
        if (p.dim.value() != samples.dim.value())
            throw Error(Errc::SchemaError, "subharmonicity: dimension mismatch");
        const auto grid = BinGrid::covering(p.dim, 1.8 * r_drop, est.value("rho1_bin", 0.5));
        const auto rho = estimate_rho1(samples, grid);
        std::vector<Ball> balls;
        const int k = est.value("subharmonicity_balls", 20);
        const double br = est.value("subharmonicity_radius", 1.0);
        const double rc = r_drop + br + est.value("subharmonicity_gap", 0.6);
        for (int i = 0; i < k; ++i) {
            const double a = 2.0 * M_PI * i / k;
            balls.push_back({{rc * std::cos(a), rc * std::sin(a)}, br});
        }
        emit("subharmonicity", subharmonicity_test(rho, eq, p, balls).to_json());
    }
    if (est.value("confinement", false)) {
        const auto prof = confinement_profile(samples, eq, p);
        emit("confinement", prof.to_json(), prof.to_csv());
    }
    if (est.value("extreme_radius", false)) {
        const auto rep = extreme_radius(samples, p);
        emit("extreme_radius", rep.to_json(), rep.to_csv());
    }
    if (est.value("vacuum_tail", false)) {
        std::vector<double> gammas = est.value("vacuum_gammas", std::vector<double>{0.5, 1, 2, 4});
        const auto rep = vacuum_tail(samples, eq, p, gammas);
        emit("vacuum_tail", rep.to_json(), rep.to_csv());
    }
    if (est.value("poisson", false)) {
        std::vector<Vec> centers;
        const int g = est.value("poisson_grid", 5);
        const double spacing = est.value("poisson_spacing", 3.0);
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j)
                centers.push_back({(i - (g - 1) / 2.0) * spacing, (j - (g - 1) / 2.0) * spacing});
        const auto rep = poisson_tests(samples, centers, est.value("poisson_half_side", 0.5));
        emit("poisson", rep.to_json(), rep.to_csv());
    }
    if (est.value("farfield", false)) {
        const auto rep = farfield_conditional_check(samples, eq, p, 1.5 * r_drop, 2.0 * r_drop);
        emit("farfield", rep.to_json());
    }
    if (est.value("rho2", false)) {
        const auto rep =
            estimate_rho2(samples, {{0, 0}}, est.value("rho2_smax", 4.0), est.value("rho2_bins", 16),
                          est.value("rho2_window", 2.0), &p, {0.25, 0.5}, 4.0);
        emit("rho2", rep.to_json(), rep.to_csv());
    }

    std::ofstream f(rp.in(rp.index));
    f << index.dump(2) << "\n";
    std::cout << "reports in " << rp.dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_report(const std::string& out) {
    struct Row {
        const char* statement;
        const char* report;
        const char* headline;
    };
    const std::vector<Row> rows = {
        {"electric splitting identity (exact)", "verify_report", "split"},
        {"isotropic-averaging energy identity", "verify_report", "iso.energy"},
        {"harmonic extension adjoint duality", "verify_report", "iso.adjoint"},
        {"one-point mean value inequality", "verify_report", "1pt.meanvalue"},
        {"local comparison inequality", "verify_report", "kpt.comparison"},
        {"interstitial squeeze inequality", "verify_report", "squeeze.implied_c"},
        {"subharmonicity of e^{beta zeta} rho1", "subharmonicity", "max_violation_se"},
        {"confinement envelope rho1 e^{beta zeta}", "confinement", "ratio"},
        {"vacuum tail bound", "vacuum_tail", "fitted_c"},
        {"extreme radius law", "extreme_radius", "mean"},
        {"high-temperature Poisson statistics", "poisson", "rho1_flatness"},
        {"far-field conditional bound", "farfield", "fitted_c"},
    };

    std::map<std::string, json> found;
    if (fs::exists(out)) {
        for (const auto& entry : fs::recursive_directory_iterator(out)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            std::ifstream f(entry.path());
            json j;
            try {
                f >> j;
            } catch (...) {
                continue;
            }
            found[entry.path().stem().string()] = j;
        }
    }

    std::ostringstream md;
    md << "# Verification summary\n\n";

    // Acceptance criteria table when the suite's report is available.
    md << "## Acceptance criteria\n\n| # | criterion | outcome |\n|---|---|---|\n";
    const auto acc = found.find("acceptance_report");
    for (int id = 1; id <= 10; ++id) {
        std::string name = "criterion " + std::to_string(id);
        std::string outcome = "NOT RUN";
        if (acc != found.end() && acc->second.contains("criteria")) {
            for (const auto& c : acc->second["criteria"]) {
                if (c.value("id", 0) == id) {
                    name = c.value("name", name);
                    outcome = c.value("pass", false) ? "PASS" : "FAIL";
                }
            }
        }
        md << "| " << id << " | " << name << " | " << outcome << " |\n";
    }

    md << "\n## Statement reports\n\n| statement | outcome | headline |\n|---|---|---|\n";
    for (const auto& row : rows) {
        const auto it = found.find(row.report);
        if (it == found.end()) {
            md << "| " << row.statement << " | NOT RUN | - |\n";
            continue;
        }
        std::string outcome = "REPORTED";
        std::string head = row.headline;
        const json& j = it->second;
        if (j.contains("all_pass")) outcome = j["all_pass"].get<bool>() ? "PASS" : "FAIL";
        if (j.contains(row.headline)) head += " = " + j[row.headline].dump();
        md << "| " << row.statement << " | " << outcome << " | " << head << " |\n";
    }
    fs::create_directories(out);
    std::ofstream f(out + "/summary.md");
    f << md.str();
    std::cout << md.str();
    return 0;
}

// ---------------------------------------------------------------------------

json preset_config(const std::string& name) {
    const json quad_pot = PotentialSpec::quadratic(0.5).to_json();
    if (name == "ginibre-64") {
        return {{"name", "ginibre-64"},
                {"dim", 2},
                {"potential", quad_pot},
                {"N", 64},
                {"beta", 2.0},
                {"sample", {{"chains", 4}, {"samples", 20000}, {"thin_sweeps", 16}}},
                {"estimators",
                 {{"rho1", true},
                  {"subharmonicity", true},
                  {"confinement", true},
                  {"extreme_radius", true},
                  {"vacuum_tail", true}}}};
    }
    if (name == "ginibre-128") {
        return {{"name", "ginibre-128"},
                {"dim", 2},
                {"potential", quad_pot},
                {"N", 128},
                {"beta", 2.0},
                {"sample", {{"chains", 4}, {"samples", 2000}}},
                {"estimators", {{"rho1", true}, {"extreme_radius", true}, {"vacuum_tail", true}}}};
    }
    if (name == "hot-256") {
        return {{"name", "hot-256"},
                {"dim", 2},
                {"potential", quad_pot},
                {"N", 256},
                {"beta", 0.02},
                {"sample", {{"chains", 4}, {"samples", 8000}, {"thin_sweeps", 8}}},
                {"estimators", {{"rho1", true}, {"poisson", true}}}};
    }
    if (name == "confinement-sweep") {
        return {{"name", "confinement-sweep"},
                {"dim", 2},
                {"potential", quad_pot},
                {"N", 64},
                {"beta", 1.0},
                {"sample", {{"chains", 4}, {"samples", 4000}, {"thin_sweeps", 16}}},
                {"estimators",
                 {{"rho1", true}, {"vacuum_tail", true}, {"confinement", true}, {"farfield", true}}}};
    }
    if (name == "quartic-radial") {
        const int k = 800;
        std::vector<double> r(k + 1), v(k + 1), dv(k + 1);
        for (int i = 0; i <= k; ++i) {
            r[i] = 8.0 * i / k;
            v[i] = 0.25 * std::pow(r[i], 4.0);
            dv[i] = std::pow(r[i], 3.0);
        }
        return {{"name", "quartic-radial"},
                {"dim", 2},
                {"potential", PotentialSpec::radial_profile(r, v, dv).to_json()},
                {"N", 32},
                {"beta", 1.0},
                {"equilibrium", {{"spacing", 1.0 / 128.0}}},
                {"sample", {{"chains", 2}, {"samples", 2000}}},
                {"estimators", {{"rho1", true}, {"confinement", true}}}};
    }
    if (name == "verify") {
        return {{"name", "verify"}, {"dim", 2}, {"potential", quad_pot}};
    }
    throw Error(Errc::SchemaError,
                "unknown preset '" + name +
                    "' (available: ginibre-64, ginibre-128, hot-256, confinement-sweep, "
                    "quartic-radial, verify)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coulomb-lab: numerical laboratory for the one-component Coulomb gas"};
    app.require_subcommand(1);

    std::string config_path, preset, out = "runs", only, samples_path;
    std::uint64_t seed = 1;
    int threads = 0;

    const auto add_common = [&](CLI::App* sub, bool with_samples = false) {
        sub->add_option("--config", config_path, "experiment config JSON");
        sub->add_option("--preset", preset, "built-in experiment preset name");
        sub->add_option("--out", out, "output root directory");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--threads", threads,
                        "worker threads (default: COULOMB_LAB_THREADS or all cores)");
        sub->add_option("--only", only, "filter verification cases by substring");
        if (with_samples) sub->add_option("--samples", samples_path, "sample-set file");
    };

    auto* eq_cmd = app.add_subcommand("equilibrium", "solve equilibrium and thermal measures");
    add_common(eq_cmd);
    auto* sample_cmd = app.add_subcommand("sample", "run Metropolis chains");
    add_common(sample_cmd);
    auto* verify_cmd = app.add_subcommand("verify", "run the identity/inequality suite");
    add_common(verify_cmd);
    auto* estimate_cmd = app.add_subcommand("estimate", "compute observables from samples");
    add_common(estimate_cmd, true);
    auto* report_cmd = app.add_subcommand("report", "summarize reports in the output directory");
    report_cmd->add_option("--out", out, "output root directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (eq_cmd->parsed()) return cmd_equilibrium(load_config(config_path, preset), out);
        if (sample_cmd->parsed())
            return cmd_sample(load_config(config_path, preset), out, seed, resolve_threads(threads));
        if (verify_cmd->parsed())
            return cmd_verify(preset.empty() && config_path.empty()
                                  ? preset_config("verify")
                                  : load_config(config_path, preset),
                              out, only, seed);
        if (estimate_cmd->parsed())
            return cmd_estimate(load_config(config_path, preset), out, samples_path);
        if (report_cmd->parsed()) return cmd_report(out);
    } catch (const Error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
