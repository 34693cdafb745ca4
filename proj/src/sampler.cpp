#include "coulomb/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "coulomb/io_util.hpp"

namespace coulomb {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json GasParams::to_json() const {
    return {{"dim", dim.value()},
            {"N", n},
            {"beta", beta},
            {"potential", potential ? potential->to_json() : nlohmann::json()}};
}

std::string GasParams::digest() const { return hex64(fnv1a64(to_json().dump())); }

nlohmann::json Schedule::to_json() const {
    return {{"burn_in_sweeps", burn_in_sweeps}, {"thin_sweeps", thin_sweeps}, {"samples", samples}};
}

void ChainStats::record_energy(double e) {
    constexpr std::size_t cap = 65536;
    if (energy_trace.size() < cap) {
        energy_trace.push_back(e);
    } else {
        energy_trace[trace_head] = e;
        trace_head = (trace_head + 1) % cap;
    }
}

Vec sample_from_thermal(const ThermalEquilibriumData& t, int n, Philox& rng) {
    const auto& cdf = t.mass_cdf();
    const double total = cdf.back();
    const int d = t.dim().value();
    const double u = rng.uniform01() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto j = static_cast<std::size_t>(
        std::min<long>(static_cast<long>(cdf.size()) - 2, std::max<long>(0, (it - cdf.begin()) - 1)));
    const double frac = (u - cdf[j]) / std::max(1e-300, cdf[j + 1] - cdf[j]);
    const double dr = t.extent() / t.cells();
    const double a = j * dr, b = (j + 1) * dr;
    const double r = std::pow(std::pow(a, d) + frac * (std::pow(b, d) - std::pow(a, d)), 1.0 / d);
    const double scale = std::pow(static_cast<double>(n), 1.0 / d);
    if (d == 2) {
        const double angle = 2.0 * M_PI * rng.uniform01();
        return Vec{r * std::cos(angle), r * std::sin(angle)} * scale;
    }
    const double z = 2.0 * rng.uniform01() - 1.0;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double angle = 2.0 * M_PI * rng.uniform01();
    return Vec{r * rho * std::cos(angle), r * rho * std::sin(angle), r * z} * scale;
}

ChainState init_configuration(const GasParams& params, std::uint64_t seed, std::uint64_t chain_id) {
    if (!params.potential) throw Error(Errc::SchemaError, "init_configuration: missing potential");
    Philox rng(seed, chain_id);
    const int d = params.dim.value();
    std::vector<Vec> pts;
    pts.reserve(params.n);
    if (params.thermal) {
        for (int i = 0; i < params.n; ++i) pts.push_back(sample_from_thermal(*params.thermal, params.n, rng));
    } else {
        const double r1 = params.equilibrium ? std::max(params.equilibrium->droplet_radius1(), 0.5) : 1.0;
        const double half = std::pow(static_cast<double>(params.n), 1.0 / d) * r1;
        for (int i = 0; i < params.n; ++i) {
            Vec p{half * (2 * rng.uniform01() - 1), half * (2 * rng.uniform01() - 1)};
            if (d == 3) p.z = half * (2 * rng.uniform01() - 1);
            pts.push_back(p);
        }
    }
    Configuration config(params.dim, std::move(pts));
    const double e0 = total_energy(config, params.scaled());
    return ChainState{std::move(config), seed, chain_id, std::move(rng), 0.5, e0, 0, {}};
}

void mh_step(ChainState& state, const GasParams& params, const ScaledPotential& sp) {
    const int d = params.dim.value();
    const auto i = static_cast<std::size_t>(state.rng.uniform_below(params.n));
    const auto n1 = state.rng.normal_pair();
    Vec disp{n1[0], n1[1], 0.0};
    if (d == 3) {
        const auto n2 = state.rng.normal_pair();
        disp.z = n2[0];
    }
    const Vec proposal = state.config.positions[i] + disp * state.step_scale;
    const double u = state.rng.uniform01();
    const double delta = energy_delta(state.config, i, proposal, sp);
    ++state.stats.proposed;
    if (delta <= 0.0 || u <= std::exp(-params.beta * delta)) {
        state.config.positions[i] = proposal;
        state.cached_energy += delta;
        ++state.stats.accepted;
    }
    ++state.steps;
    if (state.steps % 4096 == 0) {
        const double fresh = total_energy(state.config, sp);
        if (std::abs(state.cached_energy - fresh) > 1e-8 * (1.0 + std::abs(fresh)))
            throw Error(Errc::NonConvergence, "mh_step: cached energy drifted beyond tolerance");
        state.cached_energy = fresh;
    }
}

void mh_step(ChainState& state, const GasParams& params) { mh_step(state, params, params.scaled()); }

namespace {

void sweep(ChainState& state, const GasParams& params, const ScaledPotential& sp) {
    for (int k = 0; k < params.n; ++k) mh_step(state, params, sp);
}

}  // namespace

SampleSet run_chain(ChainState& state, const GasParams& params, const Schedule& schedule) {
    if (schedule.samples <= 0)
        throw Error(Errc::SchemaError, "run_chain: schedule.samples must be positive");
    const long burn = schedule.burn_in(params.n);
    const long thin = std::max<long>(1, schedule.thin(params.n));
    const ScaledPotential sp = params.scaled();

    // Step-scale adaptation during burn-in only, in windows of 50 sweeps.
    const long window = 50;
    std::uint64_t win_prop = 0, win_acc = 0;
    for (long s = 0; s < burn; ++s) {
        const std::uint64_t p0 = state.stats.proposed, a0 = state.stats.accepted;
        sweep(state, params, sp);
        win_prop += state.stats.proposed - p0;
        win_acc += state.stats.accepted - a0;
        if ((s + 1) % window == 0 && win_prop > 0) {
            const double rate = static_cast<double>(win_acc) / static_cast<double>(win_prop);
            if (rate > 0.5) state.step_scale *= 1.12;
            if (rate < 0.23) state.step_scale /= 1.12;
            state.step_scale = std::clamp(state.step_scale, 1e-3, 10.0);
            win_prop = win_acc = 0;
        }
    }

    state.stats.proposed = state.stats.accepted = 0;
    SampleSet out;
    out.dim = params.dim;
    out.n = params.n;
    out.beta = params.beta;
    out.seed = state.seed;
    out.schedule = schedule;
    out.step_scale = state.step_scale;
    out.params_digest = params.digest();
    std::vector<double> energies;
    energies.reserve(schedule.samples);
    for (long s = 0; s < schedule.samples; ++s) {
        for (long t = 0; t < thin; ++t) {
            sweep(state, params, sp);
            state.stats.record_energy(state.cached_energy);
        }
        out.samples.push_back(state.config);
        out.chain_ids.push_back(static_cast<std::uint32_t>(state.chain_id));
        energies.push_back(state.cached_energy);
    }
    out.acceptance = state.stats.acceptance_rate();
    out.energy_autocorr = integrated_autocorr_time(energies) * static_cast<double>(thin);
    return out;
}

SampleSet run_chains(const GasParams& params, std::uint64_t seed, const Schedule& schedule,
                     int chains, int threads) {
    if (chains < 1) throw Error(Errc::SchemaError, "run_chains: need at least one chain");
    std::vector<SampleSet> parts(chains);
    std::vector<std::exception_ptr> errors(chains);
    const int workers = std::max(1, std::min(threads, chains));
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int k = next.fetch_add(1);
                if (k >= chains) return;
                try {
                    ChainState st = init_configuration(params, seed, static_cast<std::uint64_t>(k));
                    parts[k] = run_chain(st, params, schedule);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SampleSet merged = std::move(parts[0]);
    for (int k = 1; k < chains; ++k) {
        auto& p = parts[k];
        merged.samples.insert(merged.samples.end(), p.samples.begin(), p.samples.end());
        merged.chain_ids.insert(merged.chain_ids.end(), p.chain_ids.begin(), p.chain_ids.end());
        merged.acceptance += p.acceptance;
        merged.energy_autocorr += p.energy_autocorr;
        merged.step_scale += p.step_scale;
    }
    merged.acceptance /= chains;
    merged.energy_autocorr /= chains;
    merged.step_scale /= chains;
    return merged;
}

SampleSet rejection_sample_small_n(const GasParams& params, std::uint64_t seed, long count) {
    if (params.n > 3)
        throw Error(Errc::Unsupported, "rejection_sample_small_n: exact sampling capped at N <= 3");
    if (!params.thermal)
        throw Error(Errc::MissingArtifact, "rejection_sample_small_n: needs thermal equilibrium data");
    const auto& t = *params.thermal;
    // The acceptance weight e^{-beta F} is exact only against the matched
    // thermal measure (theta = beta N^{2/d}).
    if (std::abs(t.theta() - params.theta()) > 1e-9 * std::max(1.0, params.theta()))
        throw Error(Errc::SchemaError,
                    "rejection_sample_small_n: thermal data solved at theta=" +
                        std::to_string(t.theta()) + " but the gas has theta=" +
                        std::to_string(params.theta()));
    const int d = params.dim.value();
    const int n = params.n;
    const double beta = params.beta;

    // Envelope: density of e^{-beta H} against the mu_theta product equals
    // e^{-beta F(X, mu_theta)} up to a constant, and F is bounded below on
    // the truncated proposal support by pair terms at maximal separation
    // minus the largest attainable h, pairwise.
    const double extent_n = t.extent() * std::pow(static_cast<double>(n), 1.0 / d);
    double h_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < t.cells(); ++j) h_max = std::max(h_max, t.grid_h(j));
    // Slack for interpolation overshoot of the identity-derived h between
    // grid cells (O(dr^2) curvature terms).
    h_max += 1e-3;
    const double h_max_n = d == 2 ? n * h_max - 0.5 * n * std::log(static_cast<double>(n))
                                  : std::pow(static_cast<double>(n), 2.0 / 3.0) * h_max;
    const double g_min = coulomb_kernel_r(2.0 * extent_n, params.dim);
    const double pairs = 0.5 * n * (n - 1);
    const double f_lower = pairs * g_min - n * h_max_n + 0.5 * t.self_energyN(n);
    const double log_envelope = -beta * f_lower;

    SampleSet out;
    out.dim = params.dim;
    out.n = n;
    out.beta = beta;
    out.seed = seed;
    out.schedule = Schedule{0, 0, count};
    out.params_digest = params.digest();

    Philox rng(seed, 0x8000000000000000ULL);
    long attempts = 0;
    const long max_attempts = 2000000L * std::max(1L, count / 100);
    while (static_cast<long>(out.samples.size()) < count) {
        if (++attempts > max_attempts)
            throw Error(Errc::NonConvergence, "rejection_sample_small_n: acceptance rate too low");
        std::vector<Vec> pts;
        for (int i = 0; i < n; ++i) pts.push_back(sample_from_thermal(t, n, rng));
        Configuration cfg(params.dim, std::move(pts));
        double f = 0.5 * t.self_energyN(n);
        bool reject = false;
        for (int i = 0; i < n && !reject; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double r2 = (cfg.positions[i] - cfg.positions[j]).norm2();
                if (r2 == 0.0) {
                    reject = true;  // coincident proposal draws again
                    break;
                }
                f += coulomb_kernel_r(std::sqrt(r2), params.dim);
            }
            f -= t.h_muN(n, cfg.positions[i]);
        }
        if (reject) continue;
        const double log_ratio = -beta * f - log_envelope;
        if (log_ratio > 1e-9)
            throw Error(Errc::EnvelopeFailure,
                        "rejection_sample_small_n: envelope violated by " + std::to_string(log_ratio));
        if (rng.uniform01() <= std::exp(log_ratio)) {
            out.samples.push_back(std::move(cfg));
            out.chain_ids.push_back(0);
        }
    }
    out.acceptance = static_cast<double>(count) / static_cast<double>(attempts);
    out.energy_autocorr = 0.0;  // i.i.d.
    return out;
}

double integrated_autocorr_time(const std::vector<double>& series) {
    const std::size_t m = series.size();
    if (m < 8) return 1.0;
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double x : series) var += (x - mean) * (x - mean);
    var /= static_cast<double>(m);
    if (var <= 0.0) return 1.0;
    double tau = 1.0;
    for (std::size_t lag = 1; lag < m / 2; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < m; ++i) c += (series[i] - mean) * (series[i + lag] - mean);
        c /= static_cast<double>(m - lag) * var;
        if (c <= 0.0) break;
        tau += 2.0 * c;
    }
    return tau;
}

// ---------------------------------------------------------------------------
// SampleSet IO: 8-byte magic, u64 little-endian header length, JSON header,
// then samples*N*d float64 little-endian positions (row-major per sample).

namespace {
constexpr char kMagic[8] = {'C', 'G', 'L', 'S', 'A', 'M', 'P', '1'};
}

void SampleSet::save(const std::string& path) const {
    nlohmann::json header{{"schema", "coulomb-lab/samples-v1"},
                          {"dim", dim.value()},
                          {"N", n},
                          {"beta", beta},
                          {"seed", seed},
                          {"schedule", schedule.to_json()},
                          {"acceptance", acceptance},
                          {"autocorrelation", energy_autocorr},
                          {"step_scale", step_scale},
                          {"params_digest", params_digest},
                          {"samples", samples.size()},
                          {"chain_ids", chain_ids}};
    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::OutOfDomain, "SampleSet: cannot write " + path);
    f.write(kMagic, 8);
    const std::uint64_t len = hs.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    const int d = dim.value();
    std::vector<double> row(static_cast<std::size_t>(n) * d);
    for (const auto& cfg : samples) {
        std::size_t k = 0;
        for (const auto& p : cfg.positions) {
            row[k++] = p.x;
            row[k++] = p.y;
            if (d == 3) row[k++] = p.z;
        }
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

SampleSet SampleSet::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::MissingArtifact, "SampleSet: cannot read " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw Error(Errc::SchemaError, "SampleSet: bad magic in " + path);
    std::uint64_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 8);
    std::string hs(len, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaError, std::string("SampleSet: bad header: ") + e.what());
    }
    SampleSet out;
    out.dim = SpaceDim{header.at("dim").get<int>()};
    out.n = header.at("N").get<int>();
    out.beta = header.at("beta").get<double>();
    out.seed = header.at("seed").get<std::uint64_t>();
    out.acceptance = header.at("acceptance").get<double>();
    out.energy_autocorr = header.at("autocorrelation").get<double>();
    out.step_scale = header.value("step_scale", 0.0);
    out.params_digest = header.at("params_digest").get<std::string>();
    out.chain_ids = header.at("chain_ids").get<std::vector<std::uint32_t>>();
    const auto count = header.at("samples").get<std::size_t>();
    const int d = out.dim.value();
    std::vector<double> row(static_cast<std::size_t>(out.n) * d);
    for (std::size_t s = 0; s < count; ++s) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!f) throw Error(Errc::EmptyInput, "SampleSet: truncated payload in " + path);
        std::vector<Vec> pts(out.n);
        std::size_t k = 0;
        for (int i = 0; i < out.n; ++i) {
            pts[i].x = row[k++];
            pts[i].y = row[k++];
            if (d == 3) pts[i].z = row[k++];
        }
        out.samples.emplace_back(out.dim, std::move(pts));
    }
    if (out.samples.empty()) throw Error(Errc::EmptyInput, "SampleSet: no samples in " + path);
    return out;
}

std::string SampleSet::content_digest() const {
    std::uint64_t h = fnv1a64(params_digest);
    const int d = dim.value();
    for (const auto& cfg : samples) {
        for (const auto& p : cfg.positions) {
            h = fnv1a64(&p.x, sizeof(double), h);
            h = fnv1a64(&p.y, sizeof(double), h);
            if (d == 3) h = fnv1a64(&p.z, sizeof(double), h);
        }
    }
    return hex64(h);
}

}  // namespace coulomb
