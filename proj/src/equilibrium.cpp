#include "coulomb/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace coulomb {

namespace {

constexpr double kPi = std::numbers::pi;

double kernel_g(double r, int d) { return d == 2 ? -std::log(r) : 1.0 / r; }

// Unit-mass droplet radius estimate from mass(R) = ∫_0^R ΔV_1 s^{d-1} ds
// (sigma_d / c_d = 1 in both supported dimensions).
double unit_mass_radius(const PotentialSpec& p, SpaceDim dim, double rmax) {
    const int d = dim.value();
    const int k = 20000;
    double mass = 0.0, prev = 0.0;
    for (int i = 1; i <= k; ++i) {
        const double r = rmax * i / k;
        double lap;
        try {
            lap = p.laplacian1({r, 0.0}, dim);
        } catch (const Error&) {
            break;
        }
        const double val = std::max(0.0, lap) * std::pow(r, d - 1);
        mass += 0.5 * (prev + val) * (rmax / k);
        prev = val;
        if (mass >= 1.0) return r;
    }
    throw Error(Errc::NonConvergence,
                "solve_equilibrium: potential carries less than unit mass within the domain");
}

struct RadialObstacleResult {
    std::vector<double> zeta, mu;
    double mass = 0.0;
    long sweeps = 0;
    double residual = 0.0;
};

// Projected SOR for the radial complementarity system
//   zeta >= 0,  -zeta'' - (d-1) zeta'/r + ΔV_1 >= 0,  product = 0
// with symmetry at r=0 and Dirichlet data V_1 + g - c at r = extent.
RadialObstacleResult radial_psor(const PotentialSpec& p, SpaceDim dim, double h, int n, double c,
                                 std::vector<double> warm, double omega, double tol, long max_sweeps) {
    const int d = dim.value();
    std::vector<double> lap(n + 1);
    for (int i = 0; i <= n; ++i) lap[i] = p.laplacian1({i * h, 0.0}, dim);

    RadialObstacleResult out;
    out.zeta = warm.empty() ? std::vector<double>(n + 1, 0.0) : std::move(warm);
    auto& z = out.zeta;
    z[n] = std::max(0.0, p.radial_value(n * h) + kernel_g(n * h, d) - c);

    const double h2 = h * h;
    const auto residual_at = [&](int i) {
        // (A zeta - b)_i with A the negative radial Laplacian, b = -ΔV.
        if (i == 0) return 2.0 * d * (z[0] - z[1]) / h2 + lap[0];
        const double r = i * h;
        const double second = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / h2;
        const double first = (d - 1) / r * (z[i + 1] - z[i - 1]) / (2.0 * h);
        return -second - first + lap[i];
    };

    for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
        for (int i = 0; i < n; ++i) {
            double gs;
            if (i == 0) {
                gs = z[1] - h2 * lap[0] / (2.0 * d);
            } else {
                const double r = i * h;
                const double cp = 1.0 / h2 + (d - 1) / (2.0 * h * r);
                const double cm = 1.0 / h2 - (d - 1) / (2.0 * h * r);
                gs = (cp * z[i + 1] + cm * z[i - 1] - lap[i]) / (2.0 / h2);
            }
            z[i] = std::max(0.0, (1.0 - omega) * z[i] + omega * gs);
        }
        if (out.sweeps % 16 == 0 || out.sweeps == max_sweeps) {
            double res = 0.0;
            for (int i = 0; i < n; ++i) res = std::max(res, std::abs(std::min(z[i], residual_at(i))));
            out.residual = res;
            if (res < tol) break;
        }
    }

    const double cd = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    out.mu.assign(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        double neg_lap_z;
        if (i == 0) {
            neg_lap_z = 2.0 * d * (z[0] - z[1]) / h2;
        } else {
            const double r = i * h;
            neg_lap_z = -(z[i + 1] - 2.0 * z[i] + z[i - 1]) / h2 -
                        (d - 1) / r * (z[i + 1] - z[i - 1]) / (2.0 * h);
        }
        // mu = (ΔV - Δzeta)/c_d on the contact set, ~0 elsewhere.
        out.mu[i] = std::max(0.0, (neg_lap_z + lap[i]) / cd);
    }
    const double sigma = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    double mass = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double a = std::max(0.0, i * h - 0.5 * h), b = std::min(n * h, i * h + 0.5 * h);
        mass += out.mu[i] * sigma * (std::pow(b, d) - std::pow(a, d)) / d;
    }
    out.mass = mass;
    return out;
}

struct CartObstacleResult {
    std::vector<double> zeta, mu;
    double mass = 0.0;
    long sweeps = 0;
    double residual = 0.0;
};

double grid_total(const GridDensity& g) {
    double m = 0.0;
    for (double v : g.values) m += v;
    return m * g.h * g.h;
}

CartObstacleResult cart_psor(const PotentialSpec& p, double x0, double h, int n, double c,
                             std::vector<double> warm, double omega, double tol, long max_sweeps) {
    const SpaceDim dim{2};
    const auto node = [&](int ix, int iy) { return Vec{x0 + ix * h, x0 + iy * h}; };
    std::vector<double> lap(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            lap[static_cast<std::size_t>(iy) * n + ix] = p.laplacian1(node(ix, iy), dim);

    CartObstacleResult out;
    out.zeta = warm.empty() ? std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)
                            : std::move(warm);
    auto& z = out.zeta;
    const auto at = [&](int ix, int iy) -> double& { return z[static_cast<std::size_t>(iy) * n + ix]; };
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            if (ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1) {
                const Vec q = node(ix, iy);
                at(ix, iy) = std::max(0.0, p.eval1(q) + kernel_g(q.norm(), 2) - c);
            }
        }
    }

    const double h2 = h * h;
    for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
        for (int iy = 1; iy + 1 < n; ++iy) {
            for (int ix = 1; ix + 1 < n; ++ix) {
                const double gs = 0.25 * (at(ix + 1, iy) + at(ix - 1, iy) + at(ix, iy + 1) +
                                          at(ix, iy - 1) - h2 * lap[static_cast<std::size_t>(iy) * n + ix]);
                double& v = at(ix, iy);
                v = std::max(0.0, (1.0 - omega) * v + omega * gs);
            }
        }
        if (out.sweeps % 32 == 0 || out.sweeps == max_sweeps) {
            double res = 0.0;
            for (int iy = 1; iy + 1 < n; ++iy) {
                for (int ix = 1; ix + 1 < n; ++ix) {
                    const double neg_lap = -(at(ix + 1, iy) + at(ix - 1, iy) + at(ix, iy + 1) +
                                             at(ix, iy - 1) - 4.0 * at(ix, iy)) / h2;
                    const double r = neg_lap + lap[static_cast<std::size_t>(iy) * n + ix];
                    res = std::max(res, std::abs(std::min(at(ix, iy), r)));
                }
            }
            out.residual = res;
            if (res < tol) break;
        }
    }

    out.mu.assign(static_cast<std::size_t>(n) * n, 0.0);
    double mass = 0.0;
    for (int iy = 1; iy + 1 < n; ++iy) {
        for (int ix = 1; ix + 1 < n; ++ix) {
            const double neg_lap = -(at(ix + 1, iy) + at(ix - 1, iy) + at(ix, iy + 1) + at(ix, iy - 1) -
                                     4.0 * at(ix, iy)) / h2;
            const double m = std::max(0.0, (neg_lap + lap[static_cast<std::size_t>(iy) * n + ix]) / (2.0 * kPi));
            out.mu[static_cast<std::size_t>(iy) * n + ix] = m;
            mass += m * h2;
        }
    }
    out.mass = mass;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// EquilibriumData evaluators

double EquilibriumData::droplet_radius1() const {
    switch (kind_) {
        case Kind::Quadratic: return quad_R_;
        case Kind::RadialGrid: return rad_droplet_;
        case Kind::CartesianGrid: return cart_requiv_;
    }
    return 0.0;
}

double EquilibriumData::zeta1(const Vec& x) const {
    const int d = dim_.value();
    if (kind_ == Kind::Quadratic) {
        const double r = x.norm();
        if (r <= quad_R_) return 0.0;
        return d == 2 ? quad_a_ * r * r - std::log(r) - c1_
                      : quad_a_ * r * r + 1.0 / r - c1_;
    }
    if (kind_ == Kind::RadialGrid) {
        const double r = x.norm();
        if (r >= rad_extent_)
            return std::max(0.0, potential_->eval1(x) + kernel_g(r, d) - c1_);
        const double t = r / rad_h_;
        const auto i = std::min<std::size_t>(rad_zeta_.size() - 2, static_cast<std::size_t>(t));
        const double f = t - static_cast<double>(i);
        return std::max(0.0, (1.0 - f) * rad_zeta_[i] + f * rad_zeta_[i + 1]);
    }
    const double half = -cart_x0_;
    if (std::max(std::abs(x.x), std::abs(x.y)) >= half - cart_h_)
        return std::max(0.0, potential_->eval1(x) + kernel_g(x.norm(), d) - c1_);
    const double fx = (x.x - cart_x0_) / cart_h_, fy = (x.y - cart_x0_) / cart_h_;
    const int ix = std::min(cart_n_ - 2, static_cast<int>(fx));
    const int iy = std::min(cart_n_ - 2, static_cast<int>(fy));
    const double tx = fx - ix, ty = fy - iy;
    const auto at = [&](int jx, int jy) { return cart_zeta_[static_cast<std::size_t>(jy) * cart_n_ + jx]; };
    return std::max(0.0, (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
                             (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1));
}

double EquilibriumData::h_mu1(const Vec& x) const {
    if (kind_ == Kind::Quadratic) {
        const double r = x.norm();
        const int d = dim_.value();
        if (r >= quad_R_) return kernel_g(r, d);
        return d == 2 ? quad_a_ * (quad_R_ * quad_R_ - r * r) - std::log(quad_R_)
                      : c1_ - quad_a_ * r * r;
    }
    return zeta1(x) - potential_->eval1(x) + c1_;
}

double EquilibriumData::density1(const Vec& x) const {
    const int d = dim_.value();
    if (kind_ == Kind::Quadratic)
        return x.norm() <= quad_R_ ? 2.0 * d * quad_a_ / fundamental_constant(dim_) : 0.0;
    if (kind_ == Kind::RadialGrid) {
        const double r = x.norm();
        if (r >= rad_extent_) return 0.0;
        const double t = r / rad_h_;
        const auto i = std::min<std::size_t>(rad_mu_.size() - 2, static_cast<std::size_t>(t));
        const double f = t - static_cast<double>(i);
        return std::max(0.0, (1.0 - f) * rad_mu_[i] + f * rad_mu_[i + 1]);
    }
    const double half = -cart_x0_;
    if (std::max(std::abs(x.x), std::abs(x.y)) >= half - cart_h_) return 0.0;
    const double fx = (x.x - cart_x0_) / cart_h_, fy = (x.y - cart_x0_) / cart_h_;
    const int ix = std::min(cart_n_ - 2, static_cast<int>(fx));
    const int iy = std::min(cart_n_ - 2, static_cast<int>(fy));
    const double tx = fx - ix, ty = fy - iy;
    const auto at = [&](int jx, int jy) { return cart_mu_[static_cast<std::size_t>(jy) * cart_n_ + jx]; };
    return std::max(0.0, (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
                             (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1));
}

bool EquilibriumData::in_droplet1(const Vec& x) const {
    if (kind_ == Kind::Quadratic) return x.norm() <= quad_R_;
    if (kind_ == Kind::RadialGrid) return x.norm() <= rad_droplet_;
    const double fx = (x.x - cart_x0_) / cart_h_, fy = (x.y - cart_x0_) / cart_h_;
    const int ix = static_cast<int>(std::lround(fx)), iy = static_cast<int>(std::lround(fy));
    if (ix < 0 || iy < 0 || ix >= cart_n_ || iy >= cart_n_) return false;
    return cart_contact_[static_cast<std::size_t>(iy) * cart_n_ + ix] != 0;
}

double EquilibriumData::dist_to_droplet1(const Vec& x) const {
    if (kind_ == Kind::Quadratic) return std::max(0.0, x.norm() - quad_R_);
    if (kind_ == Kind::RadialGrid) return std::max(0.0, x.norm() - rad_droplet_);
    if (in_droplet1(x)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : cart_boundary_) best = std::min(best, (x - b).norm());
    return cart_boundary_.empty() ? 0.0 : best;
}

double EquilibriumData::zetaN(int n, const Vec& x) const {
    return energy_scale(n) * zeta1(x * micro_scale(n));
}

double EquilibriumData::h_muN(int n, const Vec& x) const {
    const double shift = dim_.value() == 2 ? 0.5 * n * std::log(static_cast<double>(n)) : 0.0;
    return energy_scale(n) * h_mu1(x * micro_scale(n)) - shift;
}

double EquilibriumData::densityN(int n, const Vec& x) const { return density1(x * micro_scale(n)); }

double EquilibriumData::cN(int n) const {
    const double shift = dim_.value() == 2 ? 0.5 * n * std::log(static_cast<double>(n)) : 0.0;
    return energy_scale(n) * c1_ - shift;
}

double EquilibriumData::self_energyN(int n) const {
    const double shift =
        dim_.value() == 2 ? 0.5 * n * static_cast<double>(n) * std::log(static_cast<double>(n)) : 0.0;
    return n * energy_scale(n) * self1_ - shift;
}

double EquilibriumData::electrostatic_energyN(int n) const {
    return 0.5 * self_energyN(n) + n * energy_scale(n) * potmom1_;
}

double EquilibriumData::droplet_radiusN(int n) const {
    return droplet_radius1() / micro_scale(n);
}

double EquilibriumData::dist_to_dropletN(int n, const Vec& x) const {
    return dist_to_droplet1(x * micro_scale(n)) / micro_scale(n);
}

DiscreteMeasure EquilibriumData::measure1(int cells) const {
    const int d = dim_.value();
    if (kind_ == Kind::CartesianGrid) {
        // Node values become cell densities on cells centered at the nodes;
        // rescale to unit mass.
        GridDensity g;
        g.x0 = g.y0 = cart_x0_ - 0.5 * cart_h_;
        g.h = cart_h_;
        g.nx = g.ny = cart_n_;
        g.values = cart_mu_;
        const double mass = grid_total(g);
        for (auto& v : g.values) v /= mass;
        return DiscreteMeasure(dim_, std::move(g));
    }
    RadialDensity rd;
    if (kind_ == Kind::Quadratic) {
        rd.dr = quad_R_ * 1.0000001 / cells;
        rd.values.assign(cells, 0.0);
        const double dens = 2.0 * d * quad_a_ / fundamental_constant(dim_);
        for (int i = 0; i < cells; ++i) {
            const double a = i * rd.dr, b = (i + 1) * rd.dr;
            if (b <= quad_R_) {
                rd.values[i] = dens;
            } else if (a < quad_R_) {
                rd.values[i] = dens * (std::pow(quad_R_, d) - std::pow(a, d)) /
                               (std::pow(b, d) - std::pow(a, d));
            }
        }
        rd.support_radius = quad_R_;
        return DiscreteMeasure(dim_, std::move(rd));
    }
    rd.dr = rad_extent_ / cells;
    rd.values.assign(cells, 0.0);
    for (int i = 0; i < cells; ++i) rd.values[i] = density1({(i + 0.5) * rd.dr, 0.0});
    rd.support_radius = rad_droplet_;
    DiscreteMeasure m(dim_, rd);
    const double mass = m.total_mass();
    for (auto& v : rd.values) v /= mass;
    return DiscreteMeasure(dim_, std::move(rd));
}

DiscreteMeasure EquilibriumData::measureN(int n, int cells) const {
    DiscreteMeasure m1 = measure1(cells);
    const double s = 1.0 / micro_scale(n);  // N^{1/d}
    if (m1.is_radial()) {
        RadialDensity rd = m1.radial();
        rd.dr *= s;
        if (rd.support_radius > 0) rd.support_radius *= s;
        // mu_N(x) = mu_1(N^{-1/d}x): values unchanged, mass becomes N.
        return DiscreteMeasure(dim_, std::move(rd));
    }
    GridDensity g = m1.grid();
    g.x0 *= s;
    g.y0 *= s;
    g.h *= s;
    return DiscreteMeasure(dim_, std::move(g));
}

// ---------------------------------------------------------------------------
// Solver entry

EquilibriumData solve_equilibrium(std::shared_ptr<const PotentialSpec> p, SpaceDim dim,
                                  const GridSpec& grid) {
    if (!p) throw Error(Errc::SchemaError, "solve_equilibrium: null potential");
    const int d = dim.value();

    if (p->kind() == PotentialKind::Quadratic && !grid.force_numeric &&
        grid.mode != GridSpec::Mode::Cartesian) {
        const double a = p->coefficient();
        EquilibriumData eq(dim);
        eq.kind_ = EquilibriumData::Kind::Quadratic;
        eq.potential_ = std::move(p);
        eq.quad_a_ = a;
        eq.quad_R_ = std::pow(2.0 * a, -1.0 / d);
        const double R = eq.quad_R_;
        if (d == 2) {
            eq.c1_ = a * R * R - std::log(R);
            eq.self1_ = 0.25 - std::log(R);
            eq.potmom1_ = 0.25;
        } else {
            eq.c1_ = 1.0 / R + a * R * R;
            eq.self1_ = 1.0 / R + 0.4 * a * R * R;
            eq.potmom1_ = 0.6 * a * R * R;
        }
        eq.log_.notes.push_back("closed-form quadratic equilibrium");
        return eq;
    }

    const bool radial = p->is_radial() && grid.mode != GridSpec::Mode::Cartesian;
    if (!radial && d == 3)
        throw Error(Errc::Unsupported, "solve_equilibrium: non-radial potentials require d=2");

    const double tol = 1e-9;
    const long max_sweeps = 100000;
    const double rmax_probe = std::min(50.0, p->domain_radius() * 0.98);
    const double r_star = unit_mass_radius(*p, dim, rmax_probe);

    if (radial) {
        const double extent =
            grid.extent > 0.0 ? grid.extent
                              : std::min(std::max(1.5 * r_star, r_star + 1.0), p->domain_radius() * 0.999);
        const double h = grid.spacing;
        const int n = static_cast<int>(std::ceil(extent / h));
        double c = kernel_g(r_star, d) + p->radial_value(r_star);

        RadialObstacleResult sol;
        long total_sweeps = 0;
        double c_prev = c, m_prev = 0.0;
        std::vector<double> warm;
        for (int it = 0; it < 60; ++it) {
            sol = radial_psor(*p, dim, h, n, c, warm, 1.8, tol, max_sweeps);
            total_sweeps += sol.sweeps;
            warm = sol.zeta;
            const double err = sol.mass - 1.0;
            if (std::abs(err) < 1e-12) break;
            double c_next;
            if (it == 0) {
                c_next = c - err * 0.5;  // bootstrap secant
            } else {
                const double dm = sol.mass - m_prev;
                c_next = std::abs(dm) > 1e-15 ? c - err * (c - c_prev) / dm : c - err * 0.5;
            }
            c_prev = c;
            m_prev = sol.mass;
            c = c_next;
        }
        if (sol.residual >= tol)
            throw Error(Errc::NonConvergence, "solve_equilibrium: radial PSOR residual " +
                                                  std::to_string(sol.residual));

        EquilibriumData eq(dim);
        eq.kind_ = EquilibriumData::Kind::RadialGrid;
        eq.potential_ = std::move(p);
        eq.c1_ = c;
        eq.rad_h_ = h;
        eq.rad_extent_ = n * h;
        eq.rad_zeta_ = std::move(sol.zeta);
        eq.rad_mu_ = std::move(sol.mu);
        int last = 0;
        for (int i = 0; i <= n; ++i)
            if (eq.rad_zeta_[i] <= 1e-7 && eq.rad_mu_[i] > 1e-6) last = i;
        eq.rad_droplet_ = (last + 0.5) * h;
        eq.log_.sweeps = total_sweeps;
        eq.log_.residual = sol.residual;
        eq.log_.mass_error = std::abs(sol.mass - 1.0);

        DiscreteMeasure m = eq.measure1(4 * n);
        eq.self1_ = m.self_energy();
        double pm = 0.0;
        const auto& rd = m.radial();
        const double sigma = sphere_surface(dim);
        for (std::size_t i = 0; i < rd.values.size(); ++i) {
            const double a = i * rd.dr, b = (i + 1) * rd.dr;
            pm += rd.values[i] * sigma * (std::pow(b, d) - std::pow(a, d)) / d *
                  eq.potential_->radial_value((a + b) / 2);
        }
        eq.potmom1_ = pm;
        // Interior consistency check of the constant: h + V at the densest
        // contact radius should reproduce c.
        int imax = 0;
        for (int i = 0; i <= n; ++i)
            if (eq.rad_mu_[i] > eq.rad_mu_[imax]) imax = i;
        const Vec probe{imax * h, 0.0};
        eq.log_.c_consistency =
            std::abs(electric_potential(m, probe) + eq.potential_->eval1(probe) - c);
        return eq;
    }

    // Cartesian d=2 grid.
    const double extent =
        grid.extent > 0.0 ? grid.extent : std::min(1.6 * r_star, p->domain_radius() * 0.7);
    const double h = grid.spacing;
    const int n = 2 * static_cast<int>(std::ceil(extent / h)) + 1;
    const double x0 = -h * ((n - 1) / 2);
    const double omega = 2.0 / (1.0 + std::sin(kPi / n));

    double c = kernel_g(r_star, d) + p->eval1({r_star, 0.0});
    CartObstacleResult sol;
    long total_sweeps = 0;
    double c_prev = c, m_prev = 0.0;
    std::vector<double> warm;
    for (int it = 0; it < 60; ++it) {
        sol = cart_psor(*p, x0, h, n, c, warm, omega, tol, max_sweeps);
        total_sweeps += sol.sweeps;
        warm = sol.zeta;
        const double err = sol.mass - 1.0;
        if (std::abs(err) < 1e-12) break;
        double c_next;
        if (it == 0) {
            c_next = c - err * 0.5;
        } else {
            const double dm = sol.mass - m_prev;
            c_next = std::abs(dm) > 1e-15 ? c - err * (c - c_prev) / dm : c - err * 0.5;
        }
        c_prev = c;
        m_prev = sol.mass;
        c = c_next;
    }
    if (sol.residual >= tol)
        throw Error(Errc::NonConvergence,
                    "solve_equilibrium: cartesian PSOR residual " + std::to_string(sol.residual));

    EquilibriumData eq(dim);
    eq.kind_ = EquilibriumData::Kind::CartesianGrid;
    eq.potential_ = std::move(p);
    eq.c1_ = c;
    eq.cart_x0_ = x0;
    eq.cart_h_ = h;
    eq.cart_n_ = n;
    eq.cart_zeta_ = std::move(sol.zeta);
    eq.cart_mu_ = std::move(sol.mu);
    eq.cart_contact_.assign(eq.cart_mu_.size(), 0);
    double area = 0.0;
    for (std::size_t i = 0; i < eq.cart_mu_.size(); ++i) {
        if (eq.cart_mu_[i] > 1e-6 && eq.cart_zeta_[i] <= 1e-7) {
            eq.cart_contact_[i] = 1;
            area += h * h;
        }
    }
    // Marching over the contact mask: a contact cell with a non-contact
    // 4-neighbor is a boundary cell.
    for (int iy = 1; iy + 1 < n; ++iy) {
        for (int ix = 1; ix + 1 < n; ++ix) {
            const auto m = [&](int jx, int jy) {
                return eq.cart_contact_[static_cast<std::size_t>(jy) * n + jx];
            };
            if (m(ix, iy) && (!m(ix + 1, iy) || !m(ix - 1, iy) || !m(ix, iy + 1) || !m(ix, iy - 1)))
                eq.cart_boundary_.push_back({x0 + ix * h, x0 + iy * h});
        }
    }
    eq.cart_requiv_ = std::sqrt(area / kPi);
    eq.log_.sweeps = total_sweeps;
    eq.log_.residual = sol.residual;
    eq.log_.mass_error = std::abs(sol.mass - 1.0);

    DiscreteMeasure m = eq.measure1(0);
    eq.self1_ = m.self_energy();
    double pm = 0.0;
    const auto& gd = m.grid();
    for (int iy = 0; iy < gd.ny; ++iy)
        for (int ix = 0; ix < gd.nx; ++ix) {
            const double f = gd.values[static_cast<std::size_t>(iy) * gd.nx + ix];
            if (f > 0) pm += f * gd.h * gd.h * eq.potential_->eval1(gd.cell_center(ix, iy));
        }
    eq.potmom1_ = pm;
    double cx = 0.0, cy = 0.0, cm = 0.0;
    for (int iy = 0; iy < gd.ny; ++iy)
        for (int ix = 0; ix < gd.nx; ++ix) {
            const double f = gd.values[static_cast<std::size_t>(iy) * gd.nx + ix] * gd.h * gd.h;
            cx += f * gd.cell_center(ix, iy).x;
            cy += f * gd.cell_center(ix, iy).y;
            cm += f;
        }
    const Vec centroid{cx / cm, cy / cm};
    eq.log_.c_consistency =
        std::abs(electric_potential(m, centroid) + eq.potential_->eval1(centroid) - c);
    return eq;
}

double zeta_eval(const EquilibriumData& eq, int n, const Vec& x) { return eq.zetaN(n, x); }

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json SolverLog::to_json() const {
    return {{"sweeps", sweeps},
            {"residual", residual},
            {"mass_error", mass_error},
            {"c_consistency", c_consistency},
            {"notes", notes}};
}

nlohmann::json EquilibriumData::to_json() const {
    nlohmann::json j;
    j["schema"] = "coulomb-lab/equilibrium-v1";
    j["dim"] = dim_.value();
    j["potential"] = potential_ ? potential_->to_json() : nlohmann::json();
    j["c1"] = c1_;
    j["self1"] = self1_;
    j["potmom1"] = potmom1_;
    j["log"] = log_.to_json();
    switch (kind_) {
        case Kind::Quadratic:
            j["kind"] = "quadratic";
            j["a"] = quad_a_;
            j["R"] = quad_R_;
            break;
        case Kind::RadialGrid:
            j["kind"] = "radial";
            j["h"] = rad_h_;
            j["extent"] = rad_extent_;
            j["droplet_radius"] = rad_droplet_;
            j["zeta"] = rad_zeta_;
            j["mu"] = rad_mu_;
            break;
        case Kind::CartesianGrid:
            j["kind"] = "cartesian";
            j["x0"] = cart_x0_;
            j["h"] = cart_h_;
            j["n"] = cart_n_;
            j["zeta"] = cart_zeta_;
            j["mu"] = cart_mu_;
            j["requiv"] = cart_requiv_;
            break;
    }
    return j;
}

EquilibriumData EquilibriumData::from_json(const nlohmann::json& j) {
    try {
        EquilibriumData eq(SpaceDim{j.at("dim").get<int>()});
        eq.potential_ = std::make_shared<PotentialSpec>(PotentialSpec::from_json(j.at("potential")));
        eq.c1_ = j.at("c1").get<double>();
        eq.self1_ = j.at("self1").get<double>();
        eq.potmom1_ = j.at("potmom1").get<double>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "quadratic") {
            eq.kind_ = Kind::Quadratic;
            eq.quad_a_ = j.at("a").get<double>();
            eq.quad_R_ = j.at("R").get<double>();
        } else if (kind == "radial") {
            eq.kind_ = Kind::RadialGrid;
            eq.rad_h_ = j.at("h").get<double>();
            eq.rad_extent_ = j.at("extent").get<double>();
            eq.rad_droplet_ = j.at("droplet_radius").get<double>();
            eq.rad_zeta_ = j.at("zeta").get<std::vector<double>>();
            eq.rad_mu_ = j.at("mu").get<std::vector<double>>();
        } else if (kind == "cartesian") {
            eq.kind_ = Kind::CartesianGrid;
            eq.cart_x0_ = j.at("x0").get<double>();
            eq.cart_h_ = j.at("h").get<double>();
            eq.cart_n_ = j.at("n").get<int>();
            eq.cart_zeta_ = j.at("zeta").get<std::vector<double>>();
            eq.cart_mu_ = j.at("mu").get<std::vector<double>>();
            eq.cart_requiv_ = j.at("requiv").get<double>();
            eq.cart_contact_.assign(eq.cart_mu_.size(), 0);
            for (std::size_t i = 0; i < eq.cart_mu_.size(); ++i)
                if (eq.cart_mu_[i] > 1e-6 && eq.cart_zeta_[i] <= 1e-7) eq.cart_contact_[i] = 1;
            for (int iy = 1; iy + 1 < eq.cart_n_; ++iy)
                for (int ix = 1; ix + 1 < eq.cart_n_; ++ix) {
                    const auto m = [&](int jx, int jy) {
                        return eq.cart_contact_[static_cast<std::size_t>(jy) * eq.cart_n_ + jx];
                    };
                    if (m(ix, iy) &&
                        (!m(ix + 1, iy) || !m(ix - 1, iy) || !m(ix, iy + 1) || !m(ix, iy - 1)))
                        eq.cart_boundary_.push_back({eq.cart_x0_ + ix * eq.cart_h_,
                                                     eq.cart_x0_ + iy * eq.cart_h_});
                }
        } else {
            throw Error(Errc::SchemaError, "EquilibriumData: unknown kind " + kind);
        }
        return eq;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaError, std::string("EquilibriumData: malformed JSON: ") + e.what());
    }
}

void EquilibriumData::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error(Errc::OutOfDomain, "EquilibriumData: cannot write " + path);
    f << to_json().dump(2) << "\n";
}

EquilibriumData EquilibriumData::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::MissingArtifact, "EquilibriumData: cannot read " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
}

}  // namespace coulomb
