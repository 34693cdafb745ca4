#include "coulomb/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>

namespace coulomb {

namespace {

constexpr double kPi = std::numbers::pi;

// Exact primitives for radial shell quadrature. P(s) = ∫ s^{d-1} g(s) ds and
// Q(s) = ∫ s^{2d-1} g(s) ds, with the s->0 limits equal to 0.
inline double prim_g(double s, int d) {
    if (s <= 0.0) return 0.0;
    if (d == 2) return 0.25 * s * s - 0.5 * s * s * std::log(s);
    return 0.5 * s * s;
}
inline double prim_g_heavy(double s, int d) {
    if (s <= 0.0) return 0.0;
    if (d == 2) return s * s * s * s * (1.0 / 16.0) - 0.25 * s * s * s * s * std::log(s);
    return s * s * s * s * s / 5.0;
}
inline double prim_vol(double s, int d) { return std::pow(s, d) / d; }

}  // namespace

double coulomb_kernel_r(double r, SpaceDim dim) {
    if (r <= 0.0) throw Error(Errc::Singular, "coulomb_kernel: evaluation at the origin");
    return dim.value() == 2 ? -std::log(r) : 1.0 / r;
}

double coulomb_kernel(const Vec& x, SpaceDim dim) { return coulomb_kernel_r(x.norm(), dim); }

double fundamental_constant(SpaceDim dim) { return dim.value() == 2 ? 2.0 * kPi : 4.0 * kPi; }

double total_energy(const Configuration& config, const ScaledPotential& potential) {
    const int n = config.size();
    const SpaceDim dim = config.dim;
    double pair_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r2 = (config.positions[i] - config.positions[j]).norm2();
            if (r2 == 0.0) throw Error(Errc::Singular, "total_energy: coincident particles");
            pair_sum += coulomb_kernel_r(std::sqrt(r2), dim);
        }
    }
    double pot_sum = 0.0;
    for (const auto& p : config.positions) pot_sum += potential.eval(p);
    return pair_sum + pot_sum;
}

double energy_delta(const Configuration& config, std::size_t i, const Vec& new_pos,
                    const ScaledPotential& potential) {
    if (i >= config.positions.size()) throw Error(Errc::OutOfDomain, "energy_delta: bad index");
    const SpaceDim dim = config.dim;
    const Vec old_pos = config.positions[i];
    double delta = 0.0;
    for (std::size_t j = 0; j < config.positions.size(); ++j) {
        if (j == i) continue;
        const double rn = (new_pos - config.positions[j]).norm2();
        if (rn == 0.0) throw Error(Errc::Singular, "energy_delta: proposed coincident position");
        const double ro = (old_pos - config.positions[j]).norm2();
        if (ro == 0.0) throw Error(Errc::Singular, "energy_delta: coincident particles");
        delta += coulomb_kernel_r(std::sqrt(rn), dim) - coulomb_kernel_r(std::sqrt(ro), dim);
    }
    delta += potential.eval(new_pos) - potential.eval(old_pos);
    return delta;
}

// ---------------------------------------------------------------------------
// DiscreteMeasure

struct DiscreteMeasure::SelfCache {
    std::once_flag flag;
    double value = 0.0;
};

namespace {

double radial_mass(const RadialDensity& r, int d) {
    const double sigma = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    double mass = 0.0;
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        const double a = j * r.dr, b = (j + 1) * r.dr;
        mass += r.values[j] * sigma * (prim_vol(b, d) - prim_vol(a, d));
    }
    return mass;
}

// h^ν at radius rho for a piecewise-constant radial density: cells fully
// inside rho contribute their mass times g(rho); outer cells use the exact
// primitive; the straddling cell is split at rho.
double radial_potential(const RadialDensity& r, int d, double rho) {
    const double sigma = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    const double g_rho = rho > 0.0 ? (d == 2 ? -std::log(rho) : 1.0 / rho) : 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        const double f = r.values[j];
        if (f == 0.0) continue;
        const double a = j * r.dr, b = (j + 1) * r.dr;
        if (b <= rho) {
            acc += f * sigma * (prim_vol(b, d) - prim_vol(a, d)) * g_rho;
        } else if (a >= rho) {
            acc += f * sigma * (prim_g(b, d) - prim_g(a, d));
        } else {
            acc += f * sigma * ((prim_vol(rho, d) - prim_vol(a, d)) * g_rho +
                                prim_g(b, d) - prim_g(rho, d));
        }
    }
    return acc;
}

// ∬ g dν dν for a radial measure via prefix sums: exact for the piecewise-
// constant density. Cross terms pair each cell's outer-potential integral
// with the mass inside it; the diagonal uses the in-cell double primitive.
double radial_self_energy(const RadialDensity& r, int d) {
    const double sigma = (d == 2) ? 2.0 * kPi : 4.0 * kPi;
    double self = 0.0;
    double mass_below = 0.0;
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        const double f = r.values[j];
        const double a = j * r.dr, b = (j + 1) * r.dr;
        if (f != 0.0) {
            const double outer = f * sigma * (prim_g(b, d) - prim_g(a, d));
            self += 2.0 * outer * mass_below;
            const double heavy = prim_g_heavy(b, d) - prim_g_heavy(a, d);
            const double light = prim_g(b, d) - prim_g(a, d);
            self += f * f * sigma * sigma * (2.0 / d) * (heavy - std::pow(a, d) * light);
        }
        mass_below += f * sigma * (prim_vol(b, d) - prim_vol(a, d));
    }
    return self;
}

double grid_mass(const GridDensity& g) {
    double m = 0.0;
    for (double v : g.values) m += v;
    return m * g.h * g.h;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(SpaceDim dim, RadialDensity radial)
    : dim_(dim), support_(std::move(radial)), self_(std::make_shared<SelfCache>()) {
    for (double v : std::get<RadialDensity>(support_).values)
        if (v < 0.0) throw Error(Errc::SchemaError, "DiscreteMeasure: negative density");
    mass_ = radial_mass(std::get<RadialDensity>(support_), dim_.value());
}

DiscreteMeasure::DiscreteMeasure(SpaceDim dim, GridDensity grid)
    : dim_(dim), support_(std::move(grid)), self_(std::make_shared<SelfCache>()) {
    if (dim.value() != 2)
        throw Error(Errc::Unsupported, "DiscreteMeasure: cartesian support requires d=2");
    for (double v : std::get<GridDensity>(support_).values)
        if (v < 0.0) throw Error(Errc::SchemaError, "DiscreteMeasure: negative density");
    mass_ = grid_mass(std::get<GridDensity>(support_));
}

double DiscreteMeasure::density(const Vec& x) const {
    if (is_radial()) {
        const auto& r = radial();
        const double rho = x.norm();
        const auto idx = static_cast<long>(rho / r.dr);
        if (idx < 0 || idx >= static_cast<long>(r.values.size())) return 0.0;
        return r.values[idx];
    }
    const auto& g = grid();
    const int ix = static_cast<int>(std::floor((x.x - g.x0) / g.h));
    const int iy = static_cast<int>(std::floor((x.y - g.y0) / g.h));
    if (ix < 0 || iy < 0 || ix >= g.nx || iy >= g.ny) return 0.0;
    return g.values[static_cast<std::size_t>(iy) * g.nx + ix];
}

double DiscreteMeasure::self_energy() const {
    std::call_once(self_->flag, [this] {
        if (is_radial()) {
            self_->value = radial_self_energy(radial(), dim_.value());
            return;
        }
        const auto& g = grid();
        const double cell = g.h * g.h;
        const double a_eq = g.h / std::sqrt(kPi);
        const double diag = kPi * a_eq * a_eq * (0.5 - std::log(a_eq));
        double acc = 0.0;
        const long n = g.nx * static_cast<long>(g.ny);
        for (long p = 0; p < n; ++p) {
            const double fp = g.values[p];
            if (fp == 0.0) continue;
            const Vec xp = g.cell_center(static_cast<int>(p % g.nx), static_cast<int>(p / g.nx));
            double row = 0.0;
            for (long q = p + 1; q < n; ++q) {
                const double fq = g.values[q];
                if (fq == 0.0) continue;
                const Vec xq = g.cell_center(static_cast<int>(q % g.nx), static_cast<int>(q / g.nx));
                row += fq * -0.5 * std::log((xp - xq).norm2());
            }
            acc += 2.0 * fp * row * cell * cell + fp * fp * cell * diag;
        }
        self_->value = acc;
    });
    return self_->value;
}

double electric_potential(const DiscreteMeasure& measure, const Vec& x) {
    const int d = measure.dim().value();
    if (measure.is_radial()) return radial_potential(measure.radial(), d, x.norm());

    const auto& g = measure.grid();
    const int ix = static_cast<int>(std::floor((x.x - g.x0) / g.h));
    const int iy = static_cast<int>(std::floor((x.y - g.y0) / g.h));
    const double cell = g.h * g.h;
    const double a_eq = g.h / std::sqrt(kPi);
    double acc = 0.0;
    for (int jy = 0; jy < g.ny; ++jy) {
        for (int jx = 0; jx < g.nx; ++jx) {
            const double f = g.values[static_cast<std::size_t>(jy) * g.nx + jx];
            if (f == 0.0) continue;
            if (jx == ix && jy == iy) {
                acc += f * kPi * a_eq * a_eq * (0.5 - std::log(a_eq));
            } else {
                acc += f * cell * -0.5 * std::log((g.cell_center(jx, jy) - x).norm2());
            }
        }
    }
    return acc;
}

double jellium_energy(const Configuration& config, const DiscreteMeasure& background) {
    const int n = config.size();
    const double mass = background.total_mass();
    if (std::abs(mass - n) > 1e-8 * std::max(1.0, std::abs(static_cast<double>(n))))
        std::fprintf(stderr, "jellium_energy: background mass %.12g differs from N=%d\n", mass, n);
    const SpaceDim dim = config.dim;
    double pair_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r2 = (config.positions[i] - config.positions[j]).norm2();
            if (r2 == 0.0) throw Error(Errc::Singular, "jellium_energy: coincident particles");
            pair_sum += coulomb_kernel_r(std::sqrt(r2), dim);
        }
    }
    double pot_sum = 0.0;
    for (const auto& p : config.positions) pot_sum += electric_potential(background, p);
    return pair_sum - pot_sum + 0.5 * background.self_energy();
}

double green_function_ball(const Ball& ball, const Vec& x, const Vec& y, SpaceDim dim) {
    const double radius = ball.radius;
    const Vec u = x - ball.center;
    const Vec v = y - ball.center;
    const double ru = u.norm(), rv = v.norm();
    if (ru >= radius || rv >= radius)
        throw Error(Errc::OutOfDomain, "green_function_ball: point outside the open ball");
    const double dxy = (x - y).norm();
    if (dxy == 0.0) throw Error(Errc::Singular, "green_function_ball: x == y");
    if (ru < 1e-14 * radius) {
        return dim.value() == 2 ? -std::log(rv / radius) : 1.0 / rv - 1.0 / radius;
    }
    // (|u|/R)|y - x*| with x* the Kelvin image of x; symmetric in (x, y).
    const Vec w = v * (ru / radius) - u * (radius / ru);
    const double q = w.norm();
    return dim.value() == 2 ? std::log(q / dxy) : 1.0 / dxy - 1.0 / q;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

std::vector<WeightedNode> harmonic_measure_nodes(const Ball& ball, SpaceDim dim, int n) {
    if (n < 2) throw Error(Errc::Unsupported, "harmonic_measure_nodes: need n >= 2");
    std::vector<WeightedNode> out;
    if (dim.value() == 2) {
        out.reserve(n);
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * kPi * k / n;
            out.push_back({ball.center + Vec{ball.radius * std::cos(a), ball.radius * std::sin(a)},
                           1.0 / n});
        }
        return out;
    }
    const int n_theta = std::max(2, static_cast<int>(std::floor(std::sqrt(n / 2.0))));
    const int n_phi = std::max(3, n / n_theta);
    std::vector<double> t, w;
    gauss_legendre(n_theta, t, w);
    out.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    for (int i = 0; i < n_theta; ++i) {
        const double rho = std::sqrt(std::max(0.0, 1.0 - t[i] * t[i]));
        for (int j = 0; j < n_phi; ++j) {
            const double a = 2.0 * kPi * j / n_phi;
            const Vec p{ball.radius * rho * std::cos(a), ball.radius * rho * std::sin(a),
                        ball.radius * t[i]};
            out.push_back({ball.center + p, 0.5 * w[i] / n_phi});
        }
    }
    return out;
}

}  // namespace coulomb
