#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coulomb/equilibrium.hpp"
#include "coulomb/kernel.hpp"
#include "coulomb/rng.hpp"

namespace coulomb {

// Everything needed to define the Gibbs measure e^{-beta H} and to set up
// chains: equilibrium/thermal data are optional but enable the splitting
// energy form, droplet-based initialization and the rejection envelope.
struct GasParams {
    SpaceDim dim{2};
    int n = 1;
    double beta = 1.0;
    std::shared_ptr<const PotentialSpec> potential;
    std::shared_ptr<const EquilibriumData> equilibrium;
    std::shared_ptr<const ThermalEquilibriumData> thermal;

    double theta() const { return beta * std::pow(static_cast<double>(n), 2.0 / dim.value()); }
    ScaledPotential scaled() const { return ScaledPotential(potential, n, dim); }
    nlohmann::json to_json() const;
    std::string digest() const;
};

struct Schedule {
    long burn_in_sweeps = -1;  // -1: default 200*N
    long thin_sweeps = -1;     // -1: default N
    long samples = 100;

    long burn_in(int n) const { return burn_in_sweeps >= 0 ? burn_in_sweeps : 200L * n; }
    long thin(int n) const { return thin_sweeps >= 0 ? thin_sweeps : n; }
    nlohmann::json to_json() const;
};

struct ChainStats {
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
    std::vector<double> energy_trace;  // ring buffer of per-sweep energies
    std::size_t trace_head = 0;

    double acceptance_rate() const {
        return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    }
    void record_energy(double e);
};

// One Metropolis chain. The RNG stream is keyed by (seed, chainId), so a
// chain's trajectory is independent of scheduling and of other chains.
struct ChainState {
    Configuration config;
    std::uint64_t seed = 0;
    std::uint64_t chain_id = 0;
    Philox rng;
    double step_scale = 0.5;
    double cached_energy = 0.0;
    std::uint64_t steps = 0;
    ChainStats stats;
};

struct SampleSet {
    SpaceDim dim{2};
    int n = 1;
    double beta = 1.0;
    std::uint64_t seed = 0;
    Schedule schedule;
    double acceptance = 0.0;
    double energy_autocorr = 0.0;  // integrated autocorrelation time (sweeps)
    double step_scale = 0.0;
    std::string params_digest;
    std::vector<std::uint32_t> chain_ids;  // one per sample
    std::vector<Configuration> samples;

    void save(const std::string& path) const;
    static SampleSet load(const std::string& path);
    std::string content_digest() const;
};

// Positions drawn i.i.d. from mu_theta when thermal data is present, else
// uniform on the N^{1/d}-scaled droplet bounding box. Deterministic in
// (seed, chain_id).
ChainState init_configuration(const GasParams& params, std::uint64_t seed,
                              std::uint64_t chain_id = 0);

// One Metropolis step: uniform particle, Gaussian displacement of scale
// step_scale, acceptance min(1, e^{-beta dH}).
void mh_step(ChainState& state, const GasParams& params);
void mh_step(ChainState& state, const GasParams& params, const ScaledPotential& sp);

// Burn-in with step-scale adaptation toward acceptance in [0.23, 0.5]
// (frozen afterward), then `samples` thinned snapshots.
SampleSet run_chain(ChainState& state, const GasParams& params, const Schedule& schedule);

// Independent chains merged in chain-id order; bit-identical results for a
// given (seed, params, schedule) regardless of thread count.
SampleSet run_chains(const GasParams& params, std::uint64_t seed, const Schedule& schedule,
                     int chains, int threads);

// Exact i.i.d. sampler for N <= 3 by rejection against the mu_theta product
// envelope; the envelope constant is a rigorous bound on the truncated
// support, and any violation aborts with EnvelopeFailure.
SampleSet rejection_sample_small_n(const GasParams& params, std::uint64_t seed, long count);

// Draw from the thermal measure at N-scale (shared with estimators' synthetic
// controls). Uses two uniforms in d=2 and three in d=3.
Vec sample_from_thermal(const ThermalEquilibriumData& t, int n, Philox& rng);

// Integrated autocorrelation time by the initial positive sequence estimator.
double integrated_autocorr_time(const std::vector<double>& series);

}  // namespace coulomb
