#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coulomb/sampler.hpp"

namespace coulomb {

// Uniform binning grid for density estimates (2D or 3D).
struct BinGrid {
    SpaceDim dim{2};
    Vec origin;
    double h = 0.5;
    int nx = 0, ny = 0, nz = 1;

    static BinGrid covering(SpaceDim dim, double halfwidth, double h);
    long cells() const { return static_cast<long>(nx) * ny * nz; }
    double cell_volume() const { return dim.value() == 2 ? h * h : h * h * h; }
    long index_of(const Vec& x) const;  // -1 if outside
    Vec center_of(long idx) const;
};

struct DensityEstimate {
    BinGrid grid;
    std::vector<double> density;  // per-bin rho1 estimate
    std::vector<double> se;      // between-sample standard error of the density
    double total_integral = 0.0;
    long sample_count = 0;
    int n_particles = 0;

    double value(const Vec& x) const;  // multilinear interpolation
    double se_at(const Vec& x) const;
    double max_in_droplet(const EquilibriumData& eq, int n) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

DensityEstimate estimate_rho1(const SampleSet& samples, const BinGrid& grid);

struct CountStatistics {
    Vec center;
    double radius = 0.0;
    std::vector<int> counts;
    double mean = 0.0, variance = 0.0, dispersion = 0.0;
    std::vector<double> gammas, mgf, mgf_se;
    nlohmann::json to_json() const;
};

CountStatistics count_in_ball(const SampleSet& samples, const Vec& center, double r,
                              const std::vector<double>& gammas = {});

struct Rho2Row {
    double s_lo = 0.0, s_hi = 0.0;
    double rho2 = 0.0, se = 0.0;
    double pairs = 0.0;
};

struct Rho2Table {
    Vec center;
    double window_radius = 0.0;
    std::vector<Rho2Row> rows;
    // pair-count comparison at the requested scales: fitted constants of the
    // binomial-moment inequality, one entry per requested s.
    std::vector<double> binom_s, binom_fitted_c;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

Rho2Table estimate_rho2(const SampleSet& samples, const std::vector<Vec>& centers, double s_max,
                        int bins, double window_radius, const GasParams* params = nullptr,
                        const std::vector<double>& binom_s = {}, double binom_r = 4.0);

struct BallTestResult {
    Vec center;
    double radius = 0.0;
    double u_center = 0.0, u_average = 0.0;
    double violation = 0.0;     // u_center - u_average (positive = violation)
    double se = 0.0;            // propagated standard error
    double violation_in_se = 0.0;
};

struct SubharmonicityReport {
    std::vector<BallTestResult> balls;
    double max_violation_se = 0.0;
    nlohmann::json to_json() const;
};

// Mean-value test of u = e^{beta zeta} rho1 over spheres outside the droplet.
SubharmonicityReport subharmonicity_test(const DensityEstimate& rho1, const EquilibriumData& eq,
                                         const GasParams& params,
                                         const std::vector<Ball>& circles, int nodes = 64);

struct ProfileRow {
    double r_lo = 0.0, r_hi = 0.0;
    double rho = 0.0;
    double q = 0.0;  // rho * e^{beta zeta} at the shell midpoint
};

struct ProfileReport {
    std::vector<ProfileRow> shells;
    double sup_q_outside = 0.0;
    double max_rho_inside = 0.0;
    double ratio = 0.0;      // sup_q / max_rho_inside
    double implied_c = 0.0;  // sup_q itself
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

ProfileReport confinement_profile(const SampleSet& samples, const EquilibriumData& eq,
                                  const GasParams& params, double shell_width = 0.5,
                                  double r_max_factor = 2.5);

struct ExtremeRadiusReport {
    std::vector<double> per_sample_max;
    double mean = 0.0, se = 0.0;
    std::vector<double> quantiles;  // 0, .25, .5, .75, .95, .99, 1
    std::vector<double> t_grid, empirical_exceedance, bound_shape;  // e^{-t}
    double fitted_c = 0.0;  // sup over t of empirical / e^{-t}
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

ExtremeRadiusReport extreme_radius(const SampleSet& samples, const GasParams& params);

struct TailRow {
    double gamma = 0.0;
    double empirical = 0.0;
    double integral = 0.0;  // ∫_{zeta >= gamma} e^{-beta zeta}
    double fitted_c = 0.0;
};

struct TailReport {
    std::vector<TailRow> rows;
    double fitted_c = 0.0;  // max over rows with nonzero empirical mass
    // distance-to-droplet exceedance curve (soft version)
    std::vector<double> dist_grid, dist_exceedance;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

TailReport vacuum_tail(const SampleSet& samples, const EquilibriumData& eq, const GasParams& params,
                       const std::vector<double>& gammas);

struct WindowResult {
    Vec center;
    double half_side = 0.0;
    double mean = 0.0, dispersion = 0.0, dispersion_se = 0.0;
    double tv_to_poisson = 0.0;
    double intensity = 0.0;       // mean / area
    double pair_intensity = 0.0;  // E[k(k-1)/2] / area^2
};

struct PoissonReport {
    std::vector<WindowResult> windows;
    double rho1_flatness = 0.0;  // max/min of window intensity
    double rho2_flatness = 0.0;
    double max_abs_dispersion_dev_se = 0.0;  // max |dispersion-1|/se
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

PoissonReport poisson_tests(const SampleSet& samples, const std::vector<Vec>& window_centers,
                            double half_side);

struct FarfieldReport {
    double r_lo = 0.0, r_hi = 0.0;
    double empirical_per_particle = 0.0;
    double integral = 0.0;  // ∫_annulus e^{-beta(log|y| 1_{d=2} + zeta)} dy
    double fitted_c = 0.0;  // log(emp N / integral) / (beta N^{2/d} scale)
    bool empty = false;
    nlohmann::json to_json() const;
};

FarfieldReport farfield_conditional_check(const SampleSet& samples, const EquilibriumData& eq,
                                          const GasParams& params, double r_lo, double r_hi);

// Synthetic homogeneous Poisson control matched to a window set: each sample
// is a Poisson(intensity*|box|) cloud uniform in the box.
SampleSet synthetic_poisson(SpaceDim dim, double intensity, double half_box, long count,
                            std::uint64_t seed);

}  // namespace coulomb
