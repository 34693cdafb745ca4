#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coulomb/kernel.hpp"
#include "coulomb/potential.hpp"
#include "json.hpp"

namespace coulomb {

// Discretization request for the obstacle / thermal solvers.
struct GridSpec {
    double extent = 0.0;  // 0 = choose from the potential / zeta decay
    double spacing = 1.0 / 256.0;
    enum class Mode { Auto, Radial, Cartesian } mode = Mode::Auto;
    bool force_numeric = false;  // bypass the quadratic closed forms
};

struct SolverLog {
    long sweeps = 0;
    double residual = 0.0;       // complementarity / fixed-point residual
    double mass_error = 0.0;     // |mass - 1| after the constant was pinned
    double c_consistency = 0.0;  // |c from interior evaluation - stored c|
    std::vector<std::string> notes;
    nlohmann::json to_json() const;
};

// Equilibrium measure mu_{infty,1} of unit mass in macroscopic coordinates,
// with the droplet, the constant c_{infty,1} and the confining potential
// zeta_1, plus the N-rescaled views. h^{mu,1} is evaluated through the exact
// identity h = zeta - V_1 + c so all evaluators stay mutually consistent.
class EquilibriumData {
  public:
    SpaceDim dim() const { return dim_; }
    std::shared_ptr<const PotentialSpec> potential() const { return potential_; }
    bool closed_form() const { return kind_ == Kind::Quadratic; }

    double c1() const { return c1_; }
    double self_energy1() const { return self1_; }
    double potential_moment1() const { return potmom1_; }
    double droplet_radius1() const;

    double zeta1(const Vec& x) const;
    double h_mu1(const Vec& x) const;
    double density1(const Vec& x) const;
    bool in_droplet1(const Vec& x) const;
    double dist_to_droplet1(const Vec& x) const;

    // N-rescaled views: zeta_N(x) = N^{2/d} zeta_1(N^{-1/d}x), etc.
    double zetaN(int n, const Vec& x) const;
    double h_muN(int n, const Vec& x) const;
    double densityN(int n, const Vec& x) const;
    double cN(int n) const;
    double self_energyN(int n) const;
    double electrostatic_energyN(int n) const;  // E(mu_N, V_N)
    double droplet_radiusN(int n) const;
    double dist_to_dropletN(int n, const Vec& x) const;

    // Measure views for quadrature consumers. Quadratic closed forms snap the
    // edge cell to the exact partial-cell mass so the total is machine-exact.
    DiscreteMeasure measure1(int cells) const;
    DiscreteMeasure measureN(int n, int cells) const;

    const SolverLog& log() const { return log_; }

    nlohmann::json to_json() const;
    static EquilibriumData from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static EquilibriumData load(const std::string& path);

  private:
    friend EquilibriumData solve_equilibrium(std::shared_ptr<const PotentialSpec>, SpaceDim,
                                             const GridSpec&);
    EquilibriumData(SpaceDim dim) : dim_(dim) {}

    enum class Kind { Quadratic, RadialGrid, CartesianGrid } kind_ = Kind::Quadratic;

    SpaceDim dim_;
    std::shared_ptr<const PotentialSpec> potential_;
    double c1_ = 0.0, self1_ = 0.0, potmom1_ = 0.0;
    SolverLog log_;

    // Quadratic closed form.
    double quad_a_ = 0.0, quad_R_ = 0.0;

    // Radial grid solution: node-centered zeta/mu at r_i = i*h, i = 0..n.
    double rad_h_ = 0.0, rad_extent_ = 0.0, rad_droplet_ = 0.0;
    std::vector<double> rad_zeta_, rad_mu_;

    // Cartesian d=2 solution.
    double cart_x0_ = 0.0, cart_h_ = 0.0;
    int cart_n_ = 0;
    std::vector<double> cart_zeta_, cart_mu_;
    std::vector<std::uint8_t> cart_contact_;
    std::vector<Vec> cart_boundary_;  // contact-set boundary cell centers
    double cart_requiv_ = 0.0;

    double micro_scale(int n) const { return std::pow(static_cast<double>(n), -1.0 / dim_.value()); }
    double energy_scale(int n) const { return std::pow(static_cast<double>(n), 2.0 / dim_.value()); }
};

// Solves the obstacle problem for the given potential: quadratic kinds use
// closed forms unless grid.force_numeric, radial kinds the 1D radial
// reduction, general d=2 kinds a cartesian grid. Non-radial d=3 is rejected.
EquilibriumData solve_equilibrium(std::shared_ptr<const PotentialSpec> p, SpaceDim dim,
                                  const GridSpec& grid);

// zeta_N(x) >= 0; exact scaling of the stored zeta_1.
double zeta_eval(const EquilibriumData& eq, int n, const Vec& x);

// Thermal equilibrium measure at inverse temperature parameter theta > 2,
// unit mass, N=1 scaling: h^{mu} + V_1 + theta^{-1} log mu = c.
class ThermalEquilibriumData {
  public:
    SpaceDim dim() const { return dim_; }
    double theta() const { return theta_; }
    double c1() const { return c1_; }
    double self_energy1() const { return self1_; }      // ∫ h dmu
    double potential_moment1() const { return potmom1_; }
    double entropy1() const { return entropy1_; }       // ∫ mu log mu dx
    double residual() const { return residual_; }
    double extent() const { return extent_; }
    std::shared_ptr<const PotentialSpec> potential() const { return potential_; }

    double density1(const Vec& x) const;
    double log_density1(const Vec& x) const;
    double h_mu1(const Vec& x) const;  // c - V - theta^{-1} log mu (consistent by construction)
    double grid_h(int cell) const { return h_[cell]; }
    double grid_mu(int cell) const { return mu_[cell]; }
    double grid_r(int cell) const { return (cell + 0.5) * dr_; }
    int cells() const { return static_cast<int>(mu_.size()); }

    // N-rescaled views with theta fixed: mu_{theta,N}(x) = mu_{theta,1}(N^{-1/d}x).
    double densityN(int n, const Vec& x) const;
    double log_densityN(int n, const Vec& x) const;
    double h_muN(int n, const Vec& x) const;
    double cN(int n) const;
    double self_energyN(int n) const;
    // Free energy E(mu_N, V_N) + beta^{-1} ∫ mu_N log mu_N with beta = theta N^{-2/d}.
    double free_energyN(int n) const;

    DiscreteMeasure measure1() const;
    DiscreteMeasure measureN(int n, int cells) const;
    const SolverLog& log() const { return log_; }

    nlohmann::json to_json() const;
    static ThermalEquilibriumData from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static ThermalEquilibriumData load(const std::string& path);

    // Inverse-CDF radial sampling support: mass CDF over cells.
    const std::vector<double>& mass_cdf() const { return cdf_; }

  private:
    friend ThermalEquilibriumData solve_thermal_equilibrium(std::shared_ptr<const PotentialSpec>,
                                                            SpaceDim, double, const GridSpec&);
    ThermalEquilibriumData(SpaceDim dim) : dim_(dim) {}

    SpaceDim dim_;
    double theta_ = 0.0;
    std::shared_ptr<const PotentialSpec> potential_;
    double dr_ = 0.0, extent_ = 0.0;
    std::vector<double> mu_, h_, cdf_;
    double c1_ = 0.0, self1_ = 0.0, potmom1_ = 0.0, entropy1_ = 0.0, residual_ = 0.0;
    SolverLog log_;

    double micro_scale(int n) const { return std::pow(static_cast<double>(n), -1.0 / dim_.value()); }
    double energy_scale(int n) const { return std::pow(static_cast<double>(n), 2.0 / dim_.value()); }
};

// Damped fixed-point solve of the thermal relation on a radial grid. The
// extent is chosen so exp(-theta zeta_1) < 1e-12 at the boundary when not
// given. Radial potentials only.
ThermalEquilibriumData solve_thermal_equilibrium(std::shared_ptr<const PotentialSpec> p,
                                                 SpaceDim dim, double theta, const GridSpec& grid);

struct PropertyCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;  // 0 when informational
    bool informational = false;
    bool pass = true;
};

struct PropertyReport {
    std::vector<PropertyCheck> checks;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

// Evaluates the stated properties of the thermal equilibrium measure
// (sup bound, electric potential bounds, O(1) self-energy, potential
// difference bound) against the equilibrium data.
PropertyReport thermal_properties_report(const ThermalEquilibriumData& t, const EquilibriumData& eq);

}  // namespace coulomb
