#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qfd/field.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/potential.hpp"
#include "qfd/propagator.hpp"

// Time-dependent Kohn-Sham orbitals (spinless, unit occupations) on a 1D grid.
namespace qfd::ks {

struct OrbitalSet {
    std::vector<ComplexField> orbitals;
    double mass = 1.0;

    [[nodiscard]] std::size_t size() const { return orbitals.size(); }
    [[nodiscard]] const Grid& grid() const { return orbitals.front().grid(); }
    /// <phi_i|phi_j> with quadrature weights.
    [[nodiscard]] Eigen::MatrixXcd overlap() const;
    /// Frobenius norm of overlap - identity.
    [[nodiscard]] double orthonormality_drift() const;
    /// Throws InvalidArgument on an empty set, mixed grids, 2D orbitals or
    /// an orbital norm off by more than 1e-6.
    void validate() const;
};

/// Modified Gram-Schmidt with quadrature weights.
void orthonormalize(OrbitalSet& os);

/// Exchange-correlation plug-in: density and time to a potential.
using XcFunctional = std::function<RealField(const RealField& rho, double t)>;

/// Shipped plug-ins: "none" and "lda_x" (1D exchange -scale (3 rho / pi)^(1/3)).
XcFunctional xc_by_name(std::string_view name, double scale = 1.0);
std::vector<std::string> xc_names();

struct FunctionalConfig {
    PotentialSpec external{};
    bool hartree = false;
    double hartree_strength = 1.0;  ///< soft-Coulomb kernel strength / sqrt(r^2 + a^2)
    double softening = 1.0;
    std::string xc = "none";
    double xc_scale = 1.0;

    /// Enabled terms in evaluation order, e.g. {"external", "hartree", "xc:lda_x"}.
    [[nodiscard]] std::vector<std::string> terms() const;
    void validate() const;
};

/// v_ext(t) + Hartree convolution + v_xc[rho](t).
RealField effective_potential(const RealField& rho, const FunctionalConfig& fc, double t);
/// Only the Hartree term, sum_j rho_j K(x_i - x_j) w_j.
RealField hartree_potential(const RealField& rho, double strength = 1.0, double softening = 1.0);

RealField density(const OrbitalSet& os);
/// sum_k (hbar/m) Im(conj(phi_k) d phi_k / dx).
RealField current(const OrbitalSet& os);

struct KsRow {
    double t;
    double particle_number;     ///< integral of the density
    double kinetic_running;     ///< window-averaged T_s from the start to t
    std::vector<double> eps_std;  ///< spatial std of eps_k per orbital
    double orthonormality_drift;
};

struct KsRun {
    std::vector<double> times;
    std::vector<OrbitalSet> snapshots;
    std::vector<KsRow> rows;

    void write_diagnostics_csv(const std::filesystem::path& path) const;
    /// t, x, rho, j per stored time.
    void write_density_csv(const std::filesystem::path& path) const;
};

/// Advances every orbital under effective_potential(density, t), the
/// density being recomputed at the start of every step. The initial set is
/// orthonormalized once; later drift is only monitored.
KsRun propagate_ks(OrbitalSet os, const FunctionalConfig& fc, const PropagatorConfig& cfg, std::size_t stride = 1,
                   bool predictor_corrector = false);

struct KineticReport {
    double gradient_form = 0.0;      ///< (1/2m) sum_k <int |grad phi_k|^2>
    double hydrodynamic_form = 0.0;  ///< (1/2m) sum_k <int [-R_k lap R_k + R_k^2 (grad S_k)^2]>
    std::size_t window = 0;          ///< snapshots averaged
    [[nodiscard]] double difference() const { return std::abs(gradient_form - hydrodynamic_form); }
};

/// Both kinetic forms for one set (periodic grids: spectral derivatives;
/// Dirichlet grids: finite differences).
KineticReport kinetic_functional(const OrbitalSet& os);
/// Trapezoid time average over snapshots [first, last] (inclusive).
KineticReport kinetic_functional(const std::vector<OrbitalSet>& series, const std::vector<double>& times,
                                 std::size_t first, std::size_t last);

struct OrbitalDiagnostic {
    RealField q;    ///< quantum potential of the orbital (NaN at its nodes)
    RealField eps;  ///< q + v_eff
    double eps_mean = 0.0;
    double eps_std = 0.0;
    double eps_max_deviation = 0.0;  ///< max |eps - eps_mean| over unmasked points
};

/// Q_k is evaluated as -(1/2m)[Re(lap phi/phi) + (Im(grad phi/phi))^2], which
/// equals -(1/2m) lap R/R for R = |phi| but stays smooth through sign changes
/// of real orbitals.
std::vector<OrbitalDiagnostic> orbital_diagnostics(const OrbitalSet& os, const FunctionalConfig& fc, double t,
                                                   double eps_node = hydro::default_eps_node);

struct StationaryOptions {
    double mixing = 0.3;
    double tolerance = 1e-8;  ///< max |rho_out - rho_in|
    std::size_t max_iterations = 500;
};

struct StationaryResult {
    OrbitalSet orbitals;
    std::vector<double> energies;
    std::vector<double> residual_history;
    bool converged = false;
};

/// Self-consistent ground state: diagonalize the discrete Hamiltonian with
/// v_eff[rho_in], occupy the lowest n, mix rho_in <- (1 - a) rho_in + a rho_out.
StationaryResult stationary_limit(const Grid1D& grid, std::size_t n_orbitals, const FunctionalConfig& fc,
                                  double mass = 1.0, const StationaryOptions& opt = {});
/// Density change of one further iteration with mixing `alpha` started from rho.
double fixed_point_defect(const OrbitalSet& os, const FunctionalConfig& fc, double alpha);

}  // namespace qfd::ks
