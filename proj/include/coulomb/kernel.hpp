#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "coulomb/geometry.hpp"
#include "coulomb/potential.hpp"

namespace coulomb {

// Snapshot of N particle positions in microscopic coordinates (O(1) spacing).
struct Configuration {
    SpaceDim dim;
    std::vector<Vec> positions;

    Configuration(SpaceDim d, std::vector<Vec> pos) : dim(d), positions(std::move(pos)) {
        for (const auto& p : positions)
            if (!p.finite()) throw Error(Errc::Singular, "Configuration: non-finite coordinate");
    }
    int size() const { return static_cast<int>(positions.size()); }
};

// Nonnegative density sampled at cell centers r_j = (j+1/2)*dr on a uniform
// radial grid. Quadrature treats the density as constant per cell and uses
// exact in-cell primitives, so a piecewise-constant density integrates
// exactly. support_radius, when >= 0, marks a discontinuity the quadrature
// splits at (e.g. a droplet edge).
struct RadialDensity {
    double dr = 0.0;
    std::vector<double> values;
    double support_radius = -1.0;

    double extent() const { return dr * static_cast<double>(values.size()); }
};

// Uniform 2D cartesian grid of cell-centered densities (d=2 only).
struct GridDensity {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    int nx = 0, ny = 0;
    std::vector<double> values;  // row-major, values[iy*nx + ix]

    Vec cell_center(int ix, int iy) const {
        return {x0 + (ix + 0.5) * h, y0 + (iy + 0.5) * h, 0.0};
    }
};

// A compactly supported measure with Lebesgue density, used as jellium
// background and as the numerical form of equilibrium measures.
class DiscreteMeasure {
  public:
    DiscreteMeasure(SpaceDim dim, RadialDensity radial);
    DiscreteMeasure(SpaceDim dim, GridDensity grid);

    SpaceDim dim() const { return dim_; }
    double total_mass() const { return mass_; }
    bool is_radial() const { return std::holds_alternative<RadialDensity>(support_); }
    const RadialDensity& radial() const { return std::get<RadialDensity>(support_); }
    const GridDensity& grid() const { return std::get<GridDensity>(support_); }

    // Density value (radial measures take |x|).
    double density(const Vec& x) const;

    // Double Coulomb integral of the measure against itself. Computed once
    // and cached; radial measures use the O(n) shell reduction.
    double self_energy() const;

  private:
    SpaceDim dim_;
    std::variant<RadialDensity, GridDensity> support_;
    double mass_ = 0.0;
    struct SelfCache;
    std::shared_ptr<SelfCache> self_;
};

struct WeightedNode {
    Vec point;
    double weight;
};

// g(x) = -log|x| (d=2), |x|^{2-d} (d=3).
double coulomb_kernel(const Vec& x, SpaceDim dim);
double coulomb_kernel_r(double r, SpaceDim dim);

// c_d with -Δg = c_d δ_0: 2π in d=2, 4π in d=3.
double fundamental_constant(SpaceDim dim);

// H(X) = 1/2 Σ_{i≠j} g(x_i-x_j) + Σ_i V_N(x_i). O(N^2).
double total_energy(const Configuration& config, const ScaledPotential& potential);

// H(config with x_i -> new_pos) - H(config) in O(N).
double energy_delta(const Configuration& config, std::size_t i, const Vec& new_pos,
                    const ScaledPotential& potential);

// h^ν(x) = ∫ g(y-x) ν(dy). Radial measures use the shell reduction (Newton's
// theorem); cartesian grids use midpoint quadrature with the cell containing
// x replaced by the exact integral of g over an equal-area disk.
double electric_potential(const DiscreteMeasure& measure, const Vec& x);

// Jellium energy of points on a background measure:
//   F(X,μ) = Σ_{i<j} g(x_i-x_j) - Σ_i h^μ(x_i) + 1/2 ∬ g dμ dμ.
// Warns on stderr when the background mass differs from N by > 1e-8 rel.
double jellium_energy(const Configuration& config, const DiscreteMeasure& background);

// Dirichlet Green's function of the ball scaled by c_d (image charges);
// symmetric, nonnegative, vanishing at the boundary.
double green_function_ball(const Ball& ball, const Vec& x, const Vec& y, SpaceDim dim);

// Quadrature nodes for the uniform harmonic measure on a sphere seen from
// the center. d=2: n equispaced angles. d=3: Gauss-Legendre in the polar
// cosine times equispaced azimuths (n_theta ~ sqrt(n/2), n_phi = n/n_theta,
// so the count is exactly n when n = 2k^2). Weights sum to 1.
std::vector<WeightedNode> harmonic_measure_nodes(const Ball& ball, SpaceDim dim, int n);

// Gauss-Legendre rule on [-1,1] (weights sum to 2).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace coulomb
