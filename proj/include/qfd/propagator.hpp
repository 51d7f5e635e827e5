#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <filesystem>
#include <vector>

#include "qfd/field.hpp"
#include "qfd/potential.hpp"

namespace qfd {

enum class Scheme { split_operator, crank_nicolson };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

/// Complex absorbing potential -i*W(x) with a quartic ramp over the outer
/// `fraction` of each axis: W = strength * (depth / ramp_width)^4.
struct AbsorbingLayer {
    bool enabled = false;
    double fraction = 0.1;
    double strength = 0.0;
};

struct PropagatorConfig {
    double dt = 0.0;
    Scheme scheme = Scheme::split_operator;
    double mass = 1.0;
    double t_final = 0.0;
    AbsorbingLayer absorbing{};

    /// 0.01 * m * dx^2 / hbar with the finest axis spacing.
    static double default_dt(const Grid& g, double mass);
    /// Throws InvalidArgument naming the offending field.
    void validate(const Grid& g) const;
    [[nodiscard]] std::size_t step_count() const;
};

/// Time stepper for a fixed grid and configuration.
///
/// split_operator: Strang splitting exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2)
/// with the kinetic factor applied in Fourier space (periodic axes only).
///
/// crank_nicolson: in 1D the full Cayley form (1 + iH dt/2)^-1 (1 - iH dt/2)
/// with a 3-point kinetic stencil. In 2D the potential is Strang-split
/// around the product of the per-axis kinetic Cayley factors, each solved
/// as tridiagonal systems along grid lines (ADI); the factors commute, so
/// the step stays unitary and exchange symmetric.
class Propagator {
public:
    Propagator(Grid grid, PropagatorConfig cfg);
    ~Propagator();
    Propagator(Propagator&&) noexcept;
    Propagator& operator=(Propagator&&) noexcept;

    [[nodiscard]] const Grid& grid() const;
    [[nodiscard]] const PropagatorConfig& config() const;

    /// Advances psi by signed `dt`. `v_start` is applied in the first half
    /// of the step and `v_end` in the second (Crank-Nicolson averages them).
    void advance(ComplexField& psi, std::span<const double> v_start, std::span<const double> v_end, double dt);

    /// psi(t) -> psi(t + cfg.dt) under V evaluated at t and t + dt.
    void step(ComplexField& psi, const PotentialSpec& v, double t);

    /// <psi|H|psi> with the scheme's own kinetic operator.
    [[nodiscard]] double energy(const ComplexField& psi, const RealField& v) const;
    [[nodiscard]] double kinetic_energy(const ComplexField& psi) const;

    /// Norm removed by the absorbing layer since construction.
    [[nodiscard]] double absorbed_norm() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot helper: returns psi(t + cfg.dt).
ComplexField step(const ComplexField& psi, const PotentialSpec& v, const PropagatorConfig& cfg, double t);

struct Snapshot {
    std::size_t step;
    double t;
    const ComplexField& psi;
};

/// Read-only callback invoked at every stride (and at t = 0).
using Observer = std::function<void(const Snapshot&)>;

struct RunRow {
    double t;
    double norm;
    double energy;
    double absorbed_flux;  ///< norm absorbed per unit time since the previous row
};

struct RunRecord {
    std::vector<RunRow> rows;
    ComplexField final_state;
    std::size_t steps = 0;
    double dt = 0.0;

    [[nodiscard]] double max_norm_deviation() const;
    void write_csv(const std::filesystem::path& path) const;
};

/// Steps from t = 0 to cfg.t_final, calling observers every `stride`
/// steps (t = 0 included). Non-finite values abort with NumericalError.
RunRecord propagate(ComplexField psi0, const PotentialSpec& v, const PropagatorConfig& cfg,
                    std::span<const Observer> observers = {}, std::size_t stride = 1);

}  // namespace qfd
