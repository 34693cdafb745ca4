#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coulomb/geometry.hpp"
#include "json.hpp"

namespace coulomb {

enum class PotentialKind { Quadratic, RadialProfile, GridSampled };

// Assumption flags the user asserts but which are not fully checkable from a
// potential spec alone (boundary regularity, growth of zeta, ...).
struct DeclaredAssumptions {
    bool a2 = false, a3 = false, a4 = false, a5 = false, a6 = false, a7 = false;
};

// Cell geometry for sampled 2D potentials.
struct SampleGrid2 {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    int nx = 0, ny = 0;
};

// Declarative confining potential V_1 in macroscopic coordinates.
//  - Quadratic(a):      V_1(x) = a|x|^2
//  - RadialProfile:     cubic Hermite interpolation of (r, V, V') samples
//  - GridSampled:       bilinear interpolation on a uniform 2D grid
// Sampled kinds refuse to extrapolate: evaluation beyond the declared domain
// throws OutOfDomain rather than fabricating tail behavior.
class PotentialSpec {
  public:
    static PotentialSpec quadratic(double coefficient, DeclaredAssumptions da = {});
    static PotentialSpec radial_profile(std::vector<double> radii, std::vector<double> values,
                                        std::vector<double> derivatives, DeclaredAssumptions da = {});
    static PotentialSpec grid_sampled(SampleGrid2 grid, std::vector<double> values,
                                      DeclaredAssumptions da = {});

    PotentialKind kind() const { return kind_; }
    bool is_radial() const { return kind_ != PotentialKind::GridSampled; }
    double coefficient() const;
    const DeclaredAssumptions& declared() const { return declared_; }

    double eval1(const Vec& x) const;                    // V_1(x)
    double radial_value(double r) const;                 // V_1 at radius r (radial kinds)
    double radial_derivative(double r) const;            // V_1'(r) (radial kinds)
    double laplacian1(const Vec& x, SpaceDim dim) const; // ΔV_1(x)

    // Largest radius at which evaluation is defined (infinity for quadratic).
    double domain_radius() const;

    static PotentialSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

  private:
    PotentialSpec() = default;

    struct Quad {
        double a;
    };
    struct Radial {
        std::vector<double> r, v, dv;
    };
    struct Sampled {
        SampleGrid2 grid;
        std::vector<double> v;
        std::vector<double> lap;  // 5-point Laplacian of v, grid interior
    };

    PotentialKind kind_ = PotentialKind::Quadratic;
    std::variant<Quad, Radial, Sampled> data_{Quad{0.5}};
    DeclaredAssumptions declared_;
};

// V_N(x) = N^{2/d} V_1(N^{-1/d} x). The composition is evaluated literally so
// the scaling identity is exact for analytic kinds.
class ScaledPotential {
  public:
    ScaledPotential(std::shared_ptr<const PotentialSpec> base, int n, SpaceDim dim);

    double eval(const Vec& x) const;       // V_N(x)
    double laplacian(const Vec& x) const;  // ΔV_N(x) = (ΔV_1)(N^{-1/d}x)
    int n() const { return n_; }
    SpaceDim dim() const { return dim_; }
    const PotentialSpec& base() const { return *base_; }
    std::shared_ptr<const PotentialSpec> base_ptr() const { return base_; }

  private:
    std::shared_ptr<const PotentialSpec> base_;
    int n_;
    SpaceDim dim_;
    double micro_scale_;  // N^{-1/d}
    double energy_scale_; // N^{2/d}
};

// M_{x,N}: sup of max(ΔV_1, 0) over the unit macroscopic ball centered at
// N^{-1/d}x, sampled on an 11^d lattice of the ball.
double laplacian_bound(const ScaledPotential& p, const Vec& x);

// β as a function of N; validation enforces θ_N = β_N N^{2/d} > 2.
struct TemperatureSchedule {
    std::map<int, double> beta_of_n;

    double beta(int n) const;
    double theta(int n, SpaceDim dim) const;
    double theta_star(SpaceDim dim) const;  // inf over configured N
};

struct ValidationEntry {
    std::string assumption;  // "A1".."A7"
    enum class Status { Pass, Fail, Declared } status;
    std::string detail;
    double value = 0.0;  // headline number (tail integral, min Laplacian, ...)
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    bool all_checkable_pass() const;
    nlohmann::json to_json() const;
};

// Checks what is numerically checkable: A1 exactly; A2/A3 on a log-spaced
// radial tail grid with a one-term asymptotic remainder; A5/A6 on lattices
// (A6 only when a closed-form zeta exists); A4/A7 recorded as declarations
// with spot checks.
ValidationReport validate_assumptions(const PotentialSpec& p, SpaceDim dim,
                                      const TemperatureSchedule& schedule);

}  // namespace coulomb
