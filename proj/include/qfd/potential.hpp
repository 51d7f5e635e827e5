#pragma once

#include <functional>
#include <string>
#include <variant>

#include "qfd/field.hpp"

namespace qfd {

namespace potentials {

struct Free {};

/// V = m w^2 (x - center)^2 / 2.
struct Harmonic {
    double omega = 1.0;
    double mass = 1.0;
    double center = 0.0;
};

/// V = height * exp(-(x - center)^2 / (2 width^2)).
struct GaussianBarrier {
    double height = 0.0;
    double width = 1.0;
    double center = 0.0;
};

/// Wall of given height and thickness at x = wall_x, pierced by two slits
/// of width slit_width centred at y = +/- slit_separation/2. 2D grids only.
struct DoubleSlit2D {
    double wall_x = 0.0;
    double wall_thickness = 0.5;
    double height = 50.0;
    double slit_separation = 4.0;
    double slit_width = 1.0;
};

/// Tabulated values; the table's grid must match the evaluation grid.
struct CustomTable {
    RealField table;
};

}  // namespace potentials

/// Time-dependent scaling f(t) multiplying the static profile.
struct Envelope {
    enum class Kind { constant, sinusoidal } kind = Kind::constant;
    double amplitude = 0.0;  ///< f(t) = 1 + amplitude * sin(omega t)
    double omega = 0.0;

    [[nodiscard]] double operator()(double t) const;
};

/// External potential V(x, t) = f(t) * V(x).
///
/// The 1D profiles (harmonic, barrier) applied to a 2D grid act on both
/// axes additively, V(x, y) = V(x) + V(y), which is the per-particle
/// convention for a two-coordinate configuration space.
class PotentialSpec {
public:
    using Profile = std::variant<potentials::Free, potentials::Harmonic, potentials::GaussianBarrier,
                                 potentials::DoubleSlit2D, potentials::CustomTable>;

    PotentialSpec() = default;
    PotentialSpec(Profile profile, Envelope envelope = {})  // NOLINT(google-explicit-constructor)
        : profile_(std::move(profile)), envelope_(envelope) {}

    static PotentialSpec free() { return PotentialSpec(potentials::Free{}); }
    static PotentialSpec harmonic(double omega, double mass = 1.0, double center = 0.0) {
        return PotentialSpec(potentials::Harmonic{omega, mass, center});
    }

    [[nodiscard]] const Profile& profile() const { return profile_; }
    [[nodiscard]] const Envelope& envelope() const { return envelope_; }
    [[nodiscard]] bool time_dependent() const { return envelope_.kind != Envelope::Kind::constant; }
    [[nodiscard]] bool is_free() const { return std::holds_alternative<potentials::Free>(profile_); }

    /// Static profile V(x) on the grid (no envelope).
    [[nodiscard]] RealField profile_on(const Grid& g) const;
    /// V(x, t) on the grid. Throws NumericalError on non-finite values.
    [[nodiscard]] RealField evaluate(const Grid& g, double t) const;
    [[nodiscard]] std::string describe() const;

private:
    Profile profile_ = potentials::Free{};
    Envelope envelope_{};
};

}  // namespace qfd
