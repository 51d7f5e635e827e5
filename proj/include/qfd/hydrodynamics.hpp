#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "qfd/field.hpp"
#include "qfd/potential.hpp"

namespace qfd::hydro {

inline constexpr double default_eps_node = 1e-12;

/// Madelung fields of a wavefunction. Velocity, Q and V_eff are NaN on
/// masked (nodal) points; rho and the current are valid everywhere.
struct HydroFields {
    RealField rho;
    std::vector<RealField> velocity;  ///< one per axis
    std::vector<RealField> current;   ///< one per axis
    RealField q_potential;
    RealField v_eff;
    MaskField node_mask;  ///< 1 where rho < eps_node * max(rho)
    double eps_node = default_eps_node;
    double mass = 1.0;
    double time = 0.0;

    [[nodiscard]] const Grid& grid() const { return rho.grid(); }
    [[nodiscard]] std::size_t mask_count() const;
};

/// rho = |psi|^2, v = Im(D psi / psi)/m, j = Im(conj(psi) D psi)/m,
/// Q = -lap(R)/(2m R), V_eff = V(t) + Q. D is the central gradient.
HydroFields decompose(const ComplexField& psi, const PotentialSpec& v, double t, double mass = 1.0,
                      double eps_node = default_eps_node);
HydroFields decompose(const ComplexField& psi, const RealField& v, double t, double mass = 1.0,
                      double eps_node = default_eps_node);

MaskField node_mask(const RealField& rho, double eps_node = default_eps_node);

/// -(hbar^2 / 2m) lap(R) / R with R = sqrt(rho); NaN where masked.
RealField quantum_potential(const RealField& rho, double mass = 1.0, double eps_node = default_eps_node);

/// The same potential written through rho alone:
/// -(hbar^2 / 4m) [lap(rho)/rho - |grad rho|^2 / (2 rho^2)].
RealField quantum_potential_density_form(const RealField& rho, double mass = 1.0,
                                         double eps_node = default_eps_node);

/// Probability current (hbar/m) Im(conj(psi) d psi / dx_axis).
RealField probability_current(const ComplexField& psi, std::size_t axis, double mass = 1.0);

struct ContinuityReport {
    RealField residual;  ///< d rho/dt + div j at the middle snapshot
    double max_abs = 0.0;
    double l2 = 0.0;
};

/// Central-in-time continuity residual from snapshots at t-dt, t, t+dt.
ContinuityReport continuity_residual(const HydroFields& prev, const HydroFields& mid, const HydroFields& next,
                                     double dt);
/// Same, from densities and currents directly (used by the reduced and
/// Kohn-Sham pipelines).
ContinuityReport continuity_residual(const RealField& rho_prev, const RealField& rho_next,
                                     const std::vector<RealField>& current_mid, double dt);

/// Line integral of v around a grid-aligned rectangle with corner nodes
/// (i0, j0) and (i1, j1), traversed counter-clockwise (i0 < i1, j0 < j1)
/// or clockwise when `reverse` is set. Node values of v, trapezoid rule.
double circulation_rectangle(const HydroFields& hf, std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1,
                             bool reverse = false);

/// Line integral of v along a closed polygon (the last vertex joins the
/// first) using bilinear interpolation of v and Gauss-Legendre
/// quadrature on each edge.
double circulation(const HydroFields& hf, const std::vector<std::array<double, 2>>& loop,
                   std::size_t segments_per_edge = 4);

/// Vertices of a regular polygon approximating a circle.
std::vector<std::array<double, 2>> circle_loop(double cx, double cy, double radius, std::size_t vertices);

/// 1 where |grad V_eff| <= threshold (and the point and its stencil are
/// unmasked), 0 elsewhere.
MaskField free_motion_criterion(const HydroFields& hf, double threshold);

/// Writes rho, velocity_*, current_*, q_potential, v_eff and node_mask as
/// binary fields plus hydro_manifest.csv; returns the written paths.
std::vector<std::filesystem::path> write_bundle(const std::filesystem::path& dir, const HydroFields& hf,
                                                const std::string& prefix = "");
HydroFields read_bundle(const std::filesystem::path& dir, const std::string& prefix = "");

}  // namespace qfd::hydro
