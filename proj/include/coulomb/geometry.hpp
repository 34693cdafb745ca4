#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coulomb {

// Error taxonomy shared by all modules. The CLI maps codes to exit codes.
enum class Errc {
    Singular,
    Unsupported,
    OutOfDomain,
    NonConvergence,
    GridTooCoarse,
    GeometryError,
    EnvelopeFailure,
    DegenerateConfig,
    SchemaError,
    MissingArtifact,
    EmptyInput,
};

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

const char* errc_name(Errc c);

// Spatial dimension, restricted to d in {2,3}. Kernel formulas generalize to
// d >= 4 but the solvers do not, so construction rejects those outright.
class SpaceDim {
  public:
    explicit SpaceDim(int d) : d_(d) {
        if (d != 2 && d != 3)
            throw Error(Errc::Unsupported, "SpaceDim: only d=2 and d=3 are supported, got d=" + std::to_string(d));
    }
    int value() const { return d_; }
    bool operator==(const SpaceDim& o) const { return d_ == o.d_; }
    bool operator!=(const SpaceDim& o) const { return d_ != o.d_; }

  private:
    int d_;
};

// Point in R^2 or R^3. Two-dimensional points carry z == 0, so norms and
// distances are dimension-agnostic.
struct Vec {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec() = default;
    Vec(double x_, double y_) : x(x_), y(y_) {}
    Vec(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec operator+(const Vec& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec operator-(const Vec& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec& operator+=(const Vec& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec operator*(double s, const Vec& v) { return v * s; }

struct Ball {
    Vec center;
    double radius = 1.0;
};

// Surface area of the unit sphere S^{d-1} and volume of the unit ball.
double sphere_surface(SpaceDim dim);
double ball_volume(SpaceDim dim, double radius);

}  // namespace coulomb
