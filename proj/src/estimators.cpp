#include "coulomb/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace coulomb {

namespace {
constexpr double kPi = std::numbers::pi;

double shell_volume(SpaceDim dim, double a, double b) {
    if (dim.value() == 2) return kPi * (b * b - a * a);
    return 4.0 / 3.0 * kPi * (b * b * b - a * a * a);
}

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}
}  // namespace

// ---------------------------------------------------------------------------
// BinGrid / DensityEstimate

BinGrid BinGrid::covering(SpaceDim dim, double halfwidth, double h) {
    BinGrid g;
    g.dim = dim;
    g.h = h;
    const int n = 2 * static_cast<int>(std::ceil(halfwidth / h));
    g.nx = g.ny = n;
    g.nz = dim.value() == 3 ? n : 1;
    g.origin = {-0.5 * n * h, -0.5 * n * h, dim.value() == 3 ? -0.5 * n * h : 0.0};
    return g;
}

long BinGrid::index_of(const Vec& x) const {
    const int ix = static_cast<int>(std::floor((x.x - origin.x) / h));
    const int iy = static_cast<int>(std::floor((x.y - origin.y) / h));
    const int iz = dim.value() == 3 ? static_cast<int>(std::floor((x.z - origin.z) / h)) : 0;
    if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz) return -1;
    return (static_cast<long>(iz) * ny + iy) * nx + ix;
}

Vec BinGrid::center_of(long idx) const {
    const int ix = static_cast<int>(idx % nx);
    const int iy = static_cast<int>((idx / nx) % ny);
    const int iz = static_cast<int>(idx / (static_cast<long>(nx) * ny));
    return {origin.x + (ix + 0.5) * h, origin.y + (iy + 0.5) * h,
            dim.value() == 3 ? origin.z + (iz + 0.5) * h : 0.0};
}

namespace {
// Multilinear interpolation on bin centers, clamped at the grid edge.
double interp_grid(const BinGrid& g, const std::vector<double>& field, const Vec& x) {
    const auto clamp = [](double t, int n) { return std::min(std::max(t, 0.0), n - 1.0); };
    const double fx = clamp((x.x - g.origin.x) / g.h - 0.5, g.nx);
    const double fy = clamp((x.y - g.origin.y) / g.h - 0.5, g.ny);
    const int ix = std::min(static_cast<int>(fx), g.nx - 2);
    const int iy = std::min(static_cast<int>(fy), g.ny - 2);
    const double tx = fx - ix, ty = fy - iy;
    if (g.dim.value() == 2) {
        const auto at = [&](int jx, int jy) { return field[static_cast<long>(jy) * g.nx + jx]; };
        return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
               (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
    }
    const double fz = clamp((x.z - g.origin.z) / g.h - 0.5, g.nz);
    const int iz = std::min(static_cast<int>(fz), g.nz - 2);
    const double tz = fz - iz;
    const auto at = [&](int jx, int jy, int jz) {
        return field[(static_cast<long>(jz) * g.ny + jy) * g.nx + jx];
    };
    double acc = 0.0;
    for (int dz = 0; dz <= 1; ++dz)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx)
                acc += (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz) *
                       at(ix + dx, iy + dy, iz + dz);
    return acc;
}
}  // namespace

double DensityEstimate::value(const Vec& x) const { return interp_grid(grid, density, x); }
double DensityEstimate::se_at(const Vec& x) const { return interp_grid(grid, se, x); }

double DensityEstimate::max_in_droplet(const EquilibriumData& eq, int n) const {
    double best = 0.0;
    for (long i = 0; i < grid.cells(); ++i) {
        const Vec c = grid.center_of(i);
        if (eq.dist_to_dropletN(n, c) == 0.0) best = std::max(best, density[i]);
    }
    return best;
}

nlohmann::json DensityEstimate::to_json() const {
    return {{"schema", "coulomb-lab/rho1-v1"},
            {"dim", grid.dim.value()},
            {"origin", {grid.origin.x, grid.origin.y, grid.origin.z}},
            {"h", grid.h},
            {"shape", {grid.nx, grid.ny, grid.nz}},
            {"total_integral", total_integral},
            {"samples", sample_count},
            {"N", n_particles},
            {"density", density},
            {"se", se}};
}

std::string DensityEstimate::to_csv() const {
    std::ostringstream os;
    os << "x,y,z,density,se\n";
    for (long i = 0; i < grid.cells(); ++i) {
        const Vec c = grid.center_of(i);
        os << c.x << ',' << c.y << ',' << c.z << ',' << density[i] << ',' << se[i] << '\n';
    }
    return os.str();
}

DensityEstimate estimate_rho1(const SampleSet& samples, const BinGrid& grid) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "estimate_rho1: no samples");
    const long cells = grid.cells();
    const auto s_count = static_cast<long>(samples.samples.size());
    std::vector<double> sum(cells, 0.0), sumsq(cells, 0.0);
    std::vector<int> cur(cells, 0);
    long leaked = 0;
    for (const auto& cfg : samples.samples) {
        std::fill(cur.begin(), cur.end(), 0);
        for (const auto& x : cfg.positions) {
            const long idx = grid.index_of(x);
            if (idx < 0) {
                ++leaked;
                continue;
            }
            ++cur[idx];
        }
        for (long i = 0; i < cells; ++i) {
            sum[i] += cur[i];
            sumsq[i] += static_cast<double>(cur[i]) * cur[i];
        }
    }
    const double total_points = static_cast<double>(s_count) * samples.n;
    if (leaked > 0.01 * total_points)
        std::fprintf(stderr, "estimate_rho1: %.2f%% of particles fall outside the grid\n",
                     100.0 * leaked / total_points);

    DensityEstimate out;
    out.grid = grid;
    out.sample_count = s_count;
    out.n_particles = samples.n;
    out.density.assign(cells, 0.0);
    out.se.assign(cells, 0.0);
    const double vol = grid.cell_volume();
    for (long i = 0; i < cells; ++i) {
        const double mean = sum[i] / s_count;
        const double var = s_count > 1 ? (sumsq[i] - s_count * mean * mean) / (s_count - 1) : 0.0;
        out.density[i] = mean / vol;
        out.se[i] = std::sqrt(std::max(0.0, var) / s_count) / vol;
        out.total_integral += mean;
    }
    return out;
}

// ---------------------------------------------------------------------------
// count_in_ball

nlohmann::json CountStatistics::to_json() const {
    return {{"center", {center.x, center.y, center.z}},
            {"radius", radius},
            {"mean", mean},
            {"variance", variance},
            {"dispersion", dispersion},
            {"gammas", gammas},
            {"mgf", mgf},
            {"mgf_se", mgf_se}};
}

CountStatistics count_in_ball(const SampleSet& samples, const Vec& center, double r,
                              const std::vector<double>& gammas) {
    if (r <= 0.0) throw Error(Errc::GeometryError, "count_in_ball: radius must be positive");
    CountStatistics out;
    out.center = center;
    out.radius = r;
    const double r2 = r * r;
    for (const auto& cfg : samples.samples) {
        int k = 0;
        for (const auto& x : cfg.positions)
            if ((x - center).norm2() <= r2) ++k;
        out.counts.push_back(k);
    }
    const auto s = static_cast<double>(out.counts.size());
    for (int k : out.counts) out.mean += k;
    out.mean /= s;
    for (int k : out.counts) out.variance += (k - out.mean) * (k - out.mean);
    out.variance = out.counts.size() > 1 ? out.variance / (s - 1) : 0.0;
    out.dispersion = out.mean > 0 ? out.variance / out.mean : 0.0;
    out.gammas = gammas;
    for (const double g : gammas) {
        std::vector<double> e(out.counts.size());
        double m = 0.0;
        for (std::size_t i = 0; i < out.counts.size(); ++i) {
            e[i] = std::exp(g * out.counts[i]);
            m += e[i];
        }
        m /= s;
        // Jackknife standard error of the empirical MGF.
        double jk = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double loo = (m * s - e[i]) / (s - 1);
            jk += (loo - m) * (loo - m);
        }
        out.mgf.push_back(m);
        out.mgf_se.push_back(std::sqrt(jk * (s - 1) / s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// estimate_rho2

nlohmann::json Rho2Table::to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"s_lo", r.s_lo}, {"s_hi", r.s_hi}, {"rho2", r.rho2}, {"se", r.se},
                          {"pairs", r.pairs}});
    return {{"center", {center.x, center.y, center.z}},
            {"window_radius", window_radius},
            {"rows", rows_j},
            {"binom_s", binom_s},
            {"binom_fitted_c", binom_fitted_c}};
}

std::string Rho2Table::to_csv() const {
    std::ostringstream os;
    os << "s_lo,s_hi,rho2,se,pairs\n";
    for (const auto& r : rows)
        os << r.s_lo << ',' << r.s_hi << ',' << r.rho2 << ',' << r.se << ',' << r.pairs << '\n';
    return os.str();
}

Rho2Table estimate_rho2(const SampleSet& samples, const std::vector<Vec>& centers, double s_max,
                        int bins, double window_radius, const GasParams* params,
                        const std::vector<double>& binom_s, double binom_r) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "estimate_rho2: no samples");
    if (centers.empty()) throw Error(Errc::SchemaError, "estimate_rho2: no centers");
    Rho2Table out;
    out.center = centers.front();
    out.window_radius = window_radius;
    const double ds = s_max / bins;
    const auto s_count = static_cast<long>(samples.samples.size());
    std::vector<double> sum(bins, 0.0), sumsq(bins, 0.0);
    std::vector<double> cur(bins, 0.0);
    const double w2 = window_radius * window_radius;
    for (const auto& cfg : samples.samples) {
        std::fill(cur.begin(), cur.end(), 0.0);
        for (std::size_t i = 0; i < cfg.positions.size(); ++i) {
            bool near = false;
            for (const auto& c : centers)
                if ((cfg.positions[i] - c).norm2() <= w2) {
                    near = true;
                    break;
                }
            if (!near) continue;
            for (std::size_t j = 0; j < cfg.positions.size(); ++j) {
                if (j == i) continue;
                const double s = (cfg.positions[i] - cfg.positions[j]).norm();
                const int b = static_cast<int>(s / ds);
                if (b >= 0 && b < bins) cur[b] += 1.0;
            }
        }
        for (int b = 0; b < bins; ++b) {
            sum[b] += cur[b];
            sumsq[b] += cur[b] * cur[b];
        }
    }
    const double window_vol =
        static_cast<double>(centers.size()) * shell_volume(samples.dim, 0.0, window_radius);
    for (int b = 0; b < bins; ++b) {
        Rho2Row row;
        row.s_lo = b * ds;
        row.s_hi = (b + 1) * ds;
        const double mean = sum[b] / s_count;
        const double var = s_count > 1 ? (sumsq[b] - s_count * mean * mean) / (s_count - 1) : 0.0;
        const double norm = window_vol * shell_volume(samples.dim, row.s_lo, row.s_hi);
        row.rho2 = mean / norm;
        row.se = std::sqrt(std::max(0.0, var) / s_count) / norm;
        row.pairs = sum[b];
        out.rows.push_back(row);
    }

    // Binomial pair-moment comparison around the first center: the smallest
    // constant that makes E[C(k_s,2)] <= c^2 e^{...} (s/r)^{2d} E[C(k_r,2)].
    if (params && !binom_s.empty()) {
        const auto pair_moment = [&](double rad) {
            double m = 0.0;
            for (const auto& cfg : samples.samples) {
                int k = 0;
                for (const auto& x : cfg.positions)
                    if ((x - centers.front()).norm2() <= rad * rad) ++k;
                m += 0.5 * k * (k - 1);
            }
            return m / s_count;
        };
        const double rhs_moment = pair_moment(binom_r);
        const double mx = laplacian_bound(params->scaled(), centers.front());
        const int d = samples.dim.value();
        for (const double s : binom_s) {
            const double lhs = pair_moment(s);
            out.binom_s.push_back(s);
            if (lhs <= 0.0 || rhs_moment <= 0.0) {
                out.binom_fitted_c.push_back(0.0);
                continue;
            }
            const double gap = coulomb_kernel_r(2.0 * s, samples.dim) -
                               coulomb_kernel_r(binom_r / 2.0, samples.dim);
            const double geom = std::pow(s / binom_r, 2.0 * d);
            // lhs = c^2 exp(2 c beta r^2 Mx) exp(-beta gap) geom rhs: solve for c.
            double lo = 1e-6, hi = 1e6;
            for (int it = 0; it < 200; ++it) {
                const double c = std::sqrt(lo * hi);
                const double rhs = c * c * std::exp(2.0 * c * params->beta * binom_r * binom_r * mx) *
                                   std::exp(-params->beta * gap) * geom * rhs_moment;
                (rhs < lhs ? lo : hi) = c;
            }
            out.binom_fitted_c.push_back(std::sqrt(lo * hi));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// subharmonicity_test

nlohmann::json SubharmonicityReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : balls)
        arr.push_back({{"center", {b.center.x, b.center.y, b.center.z}},
                       {"radius", b.radius},
                       {"u_center", b.u_center},
                       {"u_average", b.u_average},
                       {"violation", b.violation},
                       {"se", b.se},
                       {"violation_in_se", b.violation_in_se}});
    return {{"schema", "coulomb-lab/subharmonicity-v1"},
            {"balls", arr},
            {"max_violation_se", max_violation_se}};
}

SubharmonicityReport subharmonicity_test(const DensityEstimate& rho1, const EquilibriumData& eq,
                                         const GasParams& params, const std::vector<Ball>& circles,
                                         int nodes) {
    SubharmonicityReport rep;
    for (const auto& ball : circles) {
        if (ball.radius < 2.0 * rho1.grid.h)
            throw Error(Errc::GeometryError,
                        "subharmonicity_test: ball radius below two bin widths");
        if (eq.dist_to_dropletN(params.n, ball.center) <= ball.radius)
            throw Error(Errc::GeometryError, "subharmonicity_test: ball intersects the droplet");
        const auto u_at = [&](const Vec& x) {
            return std::exp(params.beta * eq.zetaN(params.n, x)) * rho1.value(x);
        };
        const auto du_at = [&](const Vec& x) {
            return std::exp(params.beta * eq.zetaN(params.n, x)) * rho1.se_at(x);
        };
        BallTestResult r;
        r.center = ball.center;
        r.radius = ball.radius;
        r.u_center = u_at(ball.center);
        double avg = 0.0, var = 0.0;
        for (const auto& nd : harmonic_measure_nodes(ball, params.dim, nodes)) {
            avg += nd.weight * u_at(nd.point);
            const double dv = du_at(nd.point);
            var += nd.weight * nd.weight * dv * dv;
        }
        r.u_average = avg;
        r.violation = r.u_center - r.u_average;
        const double dc = du_at(ball.center);
        r.se = std::sqrt(dc * dc + var);
        r.violation_in_se = r.se > 0 ? r.violation / r.se : (r.violation > 0 ? 1e30 : 0.0);
        rep.balls.push_back(r);
        rep.max_violation_se = std::max(rep.max_violation_se, r.violation_in_se);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// confinement_profile

nlohmann::json ProfileReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : shells)
        arr.push_back({{"r_lo", s.r_lo}, {"r_hi", s.r_hi}, {"rho", s.rho}, {"q", s.q}});
    return {{"schema", "coulomb-lab/confinement-v1"},
            {"shells", arr},
            {"sup_q_outside", sup_q_outside},
            {"max_rho_inside", max_rho_inside},
            {"ratio", ratio},
            {"implied_c", implied_c}};
}

std::string ProfileReport::to_csv() const {
    std::ostringstream os;
    os << "r_lo,r_hi,rho,q\n";
    for (const auto& s : shells) os << s.r_lo << ',' << s.r_hi << ',' << s.rho << ',' << s.q << '\n';
    return os.str();
}

ProfileReport confinement_profile(const SampleSet& samples, const EquilibriumData& eq,
                                  const GasParams& params, double shell_width, double r_max_factor) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "confinement_profile: no samples");
    ProfileReport rep;
    const double r_drop = eq.droplet_radiusN(params.n);
    const double r_max = r_max_factor * r_drop;
    const int nshell = static_cast<int>(std::ceil((r_max - r_drop) / shell_width));
    std::vector<double> counts(nshell, 0.0);
    double max_inside = 0.0;
    {
        // In-droplet max of rho1 from a matching radial histogram.
        const int nin = std::max(2, static_cast<int>(r_drop / shell_width));
        std::vector<double> cin(nin, 0.0);
        for (const auto& cfg : samples.samples) {
            for (const auto& x : cfg.positions) {
                const double r = x.norm();
                if (r < r_drop) {
                    const int b = std::min(nin - 1, static_cast<int>(r / (r_drop / nin)));
                    cin[b] += 1.0;
                } else if (r < r_max) {
                    const int b = std::min(nshell - 1, static_cast<int>((r - r_drop) / shell_width));
                    counts[b] += 1.0;
                }
            }
        }
        const auto s_count = static_cast<double>(samples.samples.size());
        for (int b = 0; b < nin; ++b) {
            const double a = b * (r_drop / nin), c = (b + 1) * (r_drop / nin);
            max_inside = std::max(max_inside, cin[b] / s_count / shell_volume(samples.dim, a, c));
        }
    }
    const auto s_count = static_cast<double>(samples.samples.size());
    for (int b = 0; b < nshell; ++b) {
        ProfileRow row;
        row.r_lo = r_drop + b * shell_width;
        row.r_hi = row.r_lo + shell_width;
        row.rho = counts[b] / s_count / shell_volume(samples.dim, row.r_lo, row.r_hi);
        const double mid = 0.5 * (row.r_lo + row.r_hi);
        row.q = row.rho * std::exp(params.beta * eq.zetaN(params.n, {mid, 0.0}));
        rep.shells.push_back(row);
        rep.sup_q_outside = std::max(rep.sup_q_outside, row.q);
    }
    rep.max_rho_inside = max_inside;
    rep.ratio = max_inside > 0 ? rep.sup_q_outside / max_inside : 0.0;
    rep.implied_c = rep.sup_q_outside;
    return rep;
}

// ---------------------------------------------------------------------------
// extreme_radius

nlohmann::json ExtremeRadiusReport::to_json() const {
    return {{"schema", "coulomb-lab/extreme-radius-v1"},
            {"mean", mean},
            {"se", se},
            {"quantiles", quantiles},
            {"t_grid", t_grid},
            {"empirical_exceedance", empirical_exceedance},
            {"bound_shape", bound_shape},
            {"fitted_c", fitted_c}};
}

std::string ExtremeRadiusReport::to_csv() const {
    std::ostringstream os;
    os << "t,empirical,bound_shape\n";
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        os << t_grid[i] << ',' << empirical_exceedance[i] << ',' << bound_shape[i] << '\n';
    return os.str();
}

ExtremeRadiusReport extreme_radius(const SampleSet& samples, const GasParams& params) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "extreme_radius: no samples");
    ExtremeRadiusReport rep;
    for (const auto& cfg : samples.samples) {
        double m = 0.0;
        for (const auto& x : cfg.positions) m = std::max(m, x.norm());
        rep.per_sample_max.push_back(m);
    }
    rep.mean = mean_of(rep.per_sample_max);
    rep.se = std::sqrt(variance_of(rep.per_sample_max, rep.mean) /
                       static_cast<double>(rep.per_sample_max.size()));
    auto sorted = rep.per_sample_max;
    std::sort(sorted.begin(), sorted.end());
    for (const double q : {0.0, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0}) {
        const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(q * (sorted.size() - 1)));
        rep.quantiles.push_back(sorted[idx]);
    }
    const double n = params.n;
    const double logn = std::log(n), loglogn = std::log(std::log(n));
    for (double t = 0.0; t <= 6.0; t += 0.25) {
        const double arg = logn - loglogn + 2.0 * t;
        if (arg <= 0) continue;
        const double threshold = std::sqrt(n) + std::sqrt(arg / (2.0 * params.beta));
        double exceed = 0.0;
        for (const double m : rep.per_sample_max)
            if (m >= threshold) exceed += 1.0;
        exceed /= static_cast<double>(rep.per_sample_max.size());
        rep.t_grid.push_back(t);
        rep.empirical_exceedance.push_back(exceed);
        rep.bound_shape.push_back(std::exp(-t));
        rep.fitted_c = std::max(rep.fitted_c, exceed / std::exp(-t));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// vacuum_tail

nlohmann::json TailReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"gamma", r.gamma}, {"empirical", r.empirical}, {"integral", r.integral},
                       {"fitted_c", r.fitted_c}});
    return {{"schema", "coulomb-lab/vacuum-tail-v1"},
            {"rows", arr},
            {"fitted_c", fitted_c},
            {"dist_grid", dist_grid},
            {"dist_exceedance", dist_exceedance}};
}

std::string TailReport::to_csv() const {
    std::ostringstream os;
    os << "gamma,empirical,integral,fitted_c\n";
    for (const auto& r : rows)
        os << r.gamma << ',' << r.empirical << ',' << r.integral << ',' << r.fitted_c << '\n';
    return os.str();
}

TailReport vacuum_tail(const SampleSet& samples, const EquilibriumData& eq, const GasParams& params,
                       const std::vector<double>& gammas) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "vacuum_tail: no samples");
    TailReport rep;
    std::vector<double> max_zeta, max_dist;
    for (const auto& cfg : samples.samples) {
        double mz = 0.0, md = 0.0;
        for (const auto& x : cfg.positions) {
            mz = std::max(mz, eq.zetaN(params.n, x));
            md = std::max(md, eq.dist_to_dropletN(params.n, x));
        }
        max_zeta.push_back(mz);
        max_dist.push_back(md);
    }
    const auto s_count = static_cast<double>(max_zeta.size());

    // ∫_{zeta >= gamma} e^{-beta zeta} dx by radial quadrature from the
    // droplet edge out to where the integrand is negligible.
    const double r_drop = eq.droplet_radiusN(params.n);
    const auto zeta_r = [&](double r) { return eq.zetaN(params.n, {r, 0.0}); };
    const auto integral_from = [&](double gamma) {
        const double sigma = sphere_surface(params.dim);
        const int d = params.dim.value();
        double acc = 0.0;
        const double dr = 0.02 * std::max(1.0, r_drop);
        double r = r_drop;
        for (int k = 0; k < 100000; ++k, r += dr) {
            const double z = zeta_r(r);
            if (z < gamma) continue;
            const double w = std::exp(-params.beta * z);
            acc += w * sigma * std::pow(r + 0.5 * dr, d - 1) * dr;
            if (params.beta * z > 46.0) break;
        }
        return acc;
    };

    for (const double gamma : gammas) {
        TailRow row;
        row.gamma = gamma;
        double hits = 0.0;
        for (const double mz : max_zeta)
            if (mz >= gamma) hits += 1.0;
        row.empirical = hits / s_count;
        row.integral = integral_from(gamma);
        row.fitted_c = (row.empirical > 0 && row.integral > 0) ? row.empirical / row.integral : 0.0;
        rep.fitted_c = std::max(rep.fitted_c, row.fitted_c);
        rep.rows.push_back(row);
    }

    std::sort(max_dist.begin(), max_dist.end());
    for (double q = 0.0; q <= max_dist.back() + 1e-12; q += std::max(1e-6, max_dist.back() / 24.0)) {
        const auto it = std::lower_bound(max_dist.begin(), max_dist.end(), q);
        rep.dist_grid.push_back(q);
        rep.dist_exceedance.push_back(
            static_cast<double>(max_dist.end() - it) / s_count);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// poisson_tests

nlohmann::json PoissonReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& w : windows)
        arr.push_back({{"center", {w.center.x, w.center.y, w.center.z}},
                       {"half_side", w.half_side},
                       {"mean", w.mean},
                       {"dispersion", w.dispersion},
                       {"dispersion_se", w.dispersion_se},
                       {"tv_to_poisson", w.tv_to_poisson},
                       {"intensity", w.intensity},
                       {"pair_intensity", w.pair_intensity}});
    return {{"schema", "coulomb-lab/poisson-v1"},
            {"windows", arr},
            {"rho1_flatness", rho1_flatness},
            {"rho2_flatness", rho2_flatness},
            {"max_abs_dispersion_dev_se", max_abs_dispersion_dev_se}};
}

std::string PoissonReport::to_csv() const {
    std::ostringstream os;
    os << "cx,cy,mean,dispersion,dispersion_se,tv,intensity,pair_intensity\n";
    for (const auto& w : windows)
        os << w.center.x << ',' << w.center.y << ',' << w.mean << ',' << w.dispersion << ','
           << w.dispersion_se << ',' << w.tv_to_poisson << ',' << w.intensity << ','
           << w.pair_intensity << '\n';
    return os.str();
}

PoissonReport poisson_tests(const SampleSet& samples, const std::vector<Vec>& window_centers,
                            double half_side) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "poisson_tests: no samples");
    PoissonReport rep;
    const int d = samples.dim.value();
    const double area = d == 2 ? 4.0 * half_side * half_side : 8.0 * half_side * half_side * half_side;
    double min_int = 1e308, max_int = 0.0, min_pair = 1e308, max_pair = 0.0;
    for (const auto& c : window_centers) {
        WindowResult w;
        w.center = c;
        w.half_side = half_side;
        std::vector<int> counts;
        counts.reserve(samples.samples.size());
        for (const auto& cfg : samples.samples) {
            int k = 0;
            for (const auto& x : cfg.positions) {
                if (std::abs(x.x - c.x) <= half_side && std::abs(x.y - c.y) <= half_side &&
                    (d == 2 || std::abs(x.z - c.z) <= half_side))
                    ++k;
            }
            counts.push_back(k);
        }
        const auto s = static_cast<double>(counts.size());
        double mean = 0.0;
        for (int k : counts) mean += k;
        mean /= s;
        double var = 0.0, pair = 0.0;
        int kmax = 0;
        for (int k : counts) {
            var += (k - mean) * (k - mean);
            pair += 0.5 * k * (k - 1);
            kmax = std::max(kmax, k);
        }
        var /= (s - 1);
        pair /= s;
        w.mean = mean;
        w.dispersion = mean > 0 ? var / mean : 0.0;
        // Jackknife over samples for the dispersion error.
        if (mean > 0) {
            double jk = 0.0;
            for (std::size_t i = 0; i < counts.size(); ++i) {
                const double m_i = (mean * s - counts[i]) / (s - 1);
                double v_i = 0.0;
                for (std::size_t j = 0; j < counts.size(); ++j) {
                    if (j == i) continue;
                    v_i += (counts[j] - m_i) * (counts[j] - m_i);
                }
                v_i /= (s - 2);
                const double disp_i = m_i > 0 ? v_i / m_i : 0.0;
                jk += (disp_i - w.dispersion) * (disp_i - w.dispersion);
            }
            w.dispersion_se = std::sqrt(jk * (s - 1) / s);
        }
        // Total variation distance of the count histogram to Poisson(mean).
        std::vector<double> hist(kmax + 1, 0.0);
        for (int k : counts) hist[k] += 1.0 / s;
        double tv = 0.0, pk = std::exp(-mean), ptail = 1.0;
        for (int k = 0; k <= kmax; ++k) {
            tv += std::abs(hist[k] - pk);
            ptail -= pk;
            pk *= mean / (k + 1);
        }
        tv += std::max(0.0, ptail);
        w.tv_to_poisson = 0.5 * tv;
        w.intensity = mean / area;
        w.pair_intensity = pair / (area * area);
        rep.windows.push_back(w);
        min_int = std::min(min_int, w.intensity);
        max_int = std::max(max_int, w.intensity);
        min_pair = std::min(min_pair, w.pair_intensity);
        max_pair = std::max(max_pair, w.pair_intensity);
        if (w.dispersion_se > 0)
            rep.max_abs_dispersion_dev_se = std::max(rep.max_abs_dispersion_dev_se,
                                                     std::abs(w.dispersion - 1.0) / w.dispersion_se);
    }
    rep.rho1_flatness = min_int > 0 ? max_int / min_int : 0.0;
    rep.rho2_flatness = min_pair > 0 ? max_pair / min_pair : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// farfield_conditional_check

nlohmann::json FarfieldReport::to_json() const {
    return {{"schema", "coulomb-lab/farfield-v1"},
            {"r_lo", r_lo},
            {"r_hi", r_hi},
            {"empirical_per_particle", empirical_per_particle},
            {"integral", integral},
            {"fitted_c", fitted_c},
            {"empty", empty}};
}

FarfieldReport farfield_conditional_check(const SampleSet& samples, const EquilibriumData& eq,
                                          const GasParams& params, double r_lo, double r_hi) {
    if (samples.samples.empty()) throw Error(Errc::EmptyInput, "farfield_conditional_check: no samples");
    const double r_drop = eq.droplet_radiusN(params.n);
    if (r_lo <= r_drop)
        throw Error(Errc::GeometryError,
                    "farfield_conditional_check: annulus must lie outside the droplet");
    FarfieldReport rep;
    rep.r_lo = r_lo;
    rep.r_hi = r_hi;
    double occupancy = 0.0;
    for (const auto& cfg : samples.samples) {
        for (const auto& x : cfg.positions) {
            const double r = x.norm();
            if (r >= r_lo && r <= r_hi) occupancy += 1.0;
        }
    }
    occupancy /= static_cast<double>(samples.samples.size()) * params.n;
    rep.empirical_per_particle = occupancy;

    const int d = params.dim.value();
    const double sigma = sphere_surface(params.dim);
    const int k = 4000;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        const double r = r_lo + (r_hi - r_lo) * (i + 0.5) / k;
        double w = -params.beta * eq.zetaN(params.n, {r, 0.0});
        if (d == 2) w -= params.beta * std::log(r);
        acc += std::exp(w) * sigma * std::pow(r, d - 1) * (r_hi - r_lo) / k;
    }
    rep.integral = acc;
    rep.empty = occupancy == 0.0;
    if (occupancy > 0 && acc > 0) {
        const double scale = d == 2 ? params.beta * params.n
                                    : params.beta * std::pow(static_cast<double>(params.n), 2.0 / 3.0);
        rep.fitted_c = std::log(occupancy * params.n / acc) / scale;
    }
    return rep;
}

SampleSet synthetic_poisson(SpaceDim dim, double intensity, double half_box, long count,
                            std::uint64_t seed) {
    SampleSet out;
    out.dim = dim;
    out.beta = 0.0;
    out.seed = seed;
    out.params_digest = "synthetic-poisson";
    const int d = dim.value();
    const double volume = d == 2 ? 4.0 * half_box * half_box : 8.0 * half_box * half_box * half_box;
    const double lambda = intensity * volume;
    Philox rng(seed, 0x7070707070707070ULL);
    int max_n = 0;
    std::vector<std::vector<Vec>> clouds;
    for (long s = 0; s < count; ++s) {
        // Poisson count by inversion on the uniform.
        int k = 0;
        double p = std::exp(-lambda), cdf = p;
        const double u = rng.uniform01();
        while (u > cdf && k < 10000) {
            ++k;
            p *= lambda / k;
            cdf += p;
        }
        std::vector<Vec> pts;
        for (int i = 0; i < k; ++i) {
            Vec v{half_box * (2 * rng.uniform01() - 1), half_box * (2 * rng.uniform01() - 1)};
            if (d == 3) v.z = half_box * (2 * rng.uniform01() - 1);
            pts.push_back(v);
        }
        max_n = std::max(max_n, k);
        clouds.push_back(std::move(pts));
    }
    // Pad with far-away sentinels so every snapshot has the same particle
    // count (the estimators tolerate out-of-window points).
    out.n = std::max(1, max_n);
    for (auto& pts : clouds) {
        while (static_cast<int>(pts.size()) < out.n)
            pts.push_back({1e6, 1e6, d == 3 ? 1e6 : 0.0});
        out.samples.emplace_back(dim, std::move(pts));
        out.chain_ids.push_back(0);
    }
    return out;
}

}  // namespace coulomb
