#pragma once

#include <functional>
#include <vector>

#include "coulomb/estimators.hpp"

namespace coulomb {

// Tensor-grid Boltzmann quadrature for N <= 3 particles: exact (to grid
// resolution) one-point functions used as the oracle for samplers and for
// the mean-value inequalities. The extent is chosen so the boundary weight
// is below 1e-12 of the peak unless given explicitly (mandatory at beta=0).
class QuadratureGas {
  public:
    QuadratureGas(GasParams params, double extent = 0.0, int points_per_axis = 64);

    const GasParams& params() const { return params_; }
    double extent() const { return extent_; }
    int points_per_axis() const { return pts_; }

    // Exact rho1, conditional on the given fixed positions (normalization
    // N - k + 1 with k - 1 = conditioned.size()).
    DensityEstimate rho1(const std::vector<Vec>& conditioned = {}) const;

    // Pointwise evaluator: rho1 at arbitrary positions with the remaining
    // particles integrated on the grid (no interpolation of kinked fields).
    class Pointwise {
      public:
        double operator()(const Vec& x) const;
        double integral_over_ball(const Vec& center, double radius) const;

      private:
        friend class QuadratureGas;
        const QuadratureGas* gas_ = nullptr;
        std::vector<Vec> conditioned_;
        std::vector<Vec> centers_;   // pruned cells for the marginal particle
        std::vector<double> site_;   // matching -beta * single-particle energy
        double site_max_ = 0.0;
        double z_ = 0.0;
        double vol_ = 0.0;  // cell volume of the construction grid
        double norm_ = 1.0;  // N - k + 1
        int free_ = 1;
    };
    Pointwise pointwise(const std::vector<Vec>& conditioned = {}) const;

    // Sup relative change of pointwise rho1 at probe positions under one
    // halving of the grid; throws GridTooCoarse from ensure_resolved().
    double refinement_error(const std::vector<Vec>& conditioned = {}) const;
    void ensure_resolved(double bound = 1e-4) const;

    double boundary_weight_ratio() const;

  private:
    DensityEstimate rho1_at(int pts, const std::vector<Vec>& conditioned) const;
    Pointwise pointwise_at(int pts, const std::vector<Vec>& conditioned) const;

    GasParams params_;
    double extent_ = 0.0;
    int pts_ = 64;
};

// ∫_ω g_ω(center, y) ν(dy) over the ball for a radial density about the
// origin, with quadrature panels split at the density's discontinuity radii.
double ball_green_radial_measure(const std::function<double(double)>& radial_density,
                                 const std::vector<double>& discontinuities, double center_dist,
                                 double radius, SpaceDim dim);

struct SplitResult {
    double energy = 0.0;           // H
    double reconstructed = 0.0;    // E + F + sum zeta (or thermal analogue)
    double residual = 0.0;         // relative (zero-temperature) or log (thermal)
};

// |H - (E(mu_inf,V) + F + sum zeta)| / (1 + |H|), all terms from the
// equilibrium data's consistent evaluators.
SplitResult check_split_identity(const Configuration& config, const EquilibriumData& eq);

// Log-residual of the thermal factorization e^{-beta H} =
// e^{-beta E_theta - beta F} prod mu_theta(x_i) with the free-energy
// constant E_theta = E(mu,V) + beta^{-1} ∫ mu log mu.
SplitResult check_split_thermal(const Configuration& config, const ThermalEquilibriumData& t,
                                const GasParams& params);

// Isotropic-averaging energy identity on a ball centered at particle i:
// quadrature average of F over the sphere against F - h_omega at the center.
double check_iso_energy(const Configuration& config, std::size_t center_idx, double radius,
                        const DiscreteMeasure& background, int nodes = 512);

struct AdjointResult {
    double lhs = 0.0, rhs = 0.0;
    double residual = 0.0;
    double quadrature_error = 0.0;  // harmonic-measure mass defect of the node rule
};

// Duality of the harmonic extension against its adjoint under matched
// quadratures (grid cells inside the ball, Poisson kernel at boundary nodes).
AdjointResult check_iso_adjoint(const Ball& ball, SpaceDim dim,
                                const std::function<double(const Vec&)>& interior_field,
                                const std::function<double(const Vec&)>& boundary_field,
                                int grid_per_side = 256, int boundary_nodes = 512);

struct BallViolation {
    Vec center;
    double radius = 0.0;
    double lhs = 0.0, rhs = 0.0;
    double violation = 0.0;  // max(0, lhs - rhs)
};

struct ViolationReport {
    std::vector<BallViolation> plain;  // potential-form inequality
    std::vector<BallViolation> zeta;   // zeta-form inequality
    double max_violation = 0.0;
    nlohmann::json to_json() const;
};

// Mean-value inequalities for the (conditional) one-point function, both the
// potential form and the zeta form, on balls with exact quadrature rho1.
ViolationReport check_1pt_iso(const QuadratureGas& gas, const EquilibriumData& eq,
                              const std::vector<Ball>& balls,
                              const std::vector<Vec>& conditioned = {}, int nodes = 256);

// Local comparison rho1(y) <= C_d r^{-d} e^A ∫_{B_r(y)} rho1 with the
// dimensional constant from the annulus average (see kDimensionalComparisonC)
// and A = beta M r^2/(2d) - beta sum_j max(0, g(y-y_j) - g(r/2)).
ViolationReport check_kpt_comp(const QuadratureGas& gas,
                               const std::vector<std::pair<Vec, double>>& targets,
                               const std::vector<Vec>& conditioned = {});

// Annulus-averaged mean-value constant: averaging the sphere inequality over
// radii s in [r/2, r] against s^{d-1} ds gives
//   rho(y) * (r^d - (r/2)^d)/d <= e^A / sigma_d * ∫_{B_r \ B_{r/2}} rho,
// i.e. C_d = d / (sigma_d (1 - 2^{-d})).
double dimensional_comparison_constant(SpaceDim dim);

struct SqueezeResult {
    double lhs = 0.0;        // nu-averaged F + zeta terms
    double rhs_main = 0.0;   // (1 + 1/(N-1)) (F + sum zeta) - self/(2(N-1))
    double err = 0.0;        // lhs - rhs_main
    double denom = 0.0;      // 1 + (1/(N-1)) sum (g(eta_i)^+ + M_{x_i})
    double implied_c = 0.0;  // err / denom
};

// Interstitial-replacement inequality in d=3: the energy cost of averaging
// particle 1 over shell measures around the others.
SqueezeResult check_squeeze(const Configuration& config, const EquilibriumData& eq);

struct EtaEnergyResult {
    double sum_g_eta = 0.0;
    double jellium = 0.0;
    double excess_per_particle = 0.0;  // (sum g(eta) - 2F)/N
    double ratio = 0.0;                // sum g(eta) / max(2F, 1)
};

// sum_i g(eta_i) against twice the jellium energy (diagnostic; the additive
// constant is reported, not asserted).
EtaEnergyResult check_eta_energy(const Configuration& config, const DiscreteMeasure& background);

// eta_i = (1/4) min(1, min_{j != i} |x_i - x_j|); the empty minimum truncates
// to 1 so a lone particle gets eta = 1/4.
std::vector<double> truncated_nearest_distances(const Configuration& config);

}  // namespace coulomb
