#include "coulomb/geometry.hpp"

#include <numbers>

namespace coulomb {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::Singular: return "Singular";
        case Errc::Unsupported: return "Unsupported";
        case Errc::OutOfDomain: return "OutOfDomain";
        case Errc::NonConvergence: return "NonConvergence";
        case Errc::GridTooCoarse: return "GridTooCoarse";
        case Errc::GeometryError: return "GeometryError";
        case Errc::EnvelopeFailure: return "EnvelopeFailure";
        case Errc::DegenerateConfig: return "DegenerateConfig";
        case Errc::SchemaError: return "SchemaError";
        case Errc::MissingArtifact: return "MissingArtifact";
        case Errc::EmptyInput: return "EmptyInput";
    }
    return "Unknown";
}

double sphere_surface(SpaceDim dim) {
    return dim.value() == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

double ball_volume(SpaceDim dim, double radius) {
    if (dim.value() == 2) return std::numbers::pi * radius * radius;
    return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
}

}  // namespace coulomb
