#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "qfd/field.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/trajectories.hpp"

// Reduced description of particle 1 (or 2) of a two-particle state.
namespace qfd::red {

/// rho(x, x') on grid x grid; row index x, column index x'.
struct ReducedDensityMatrix {
    Grid1D grid;
    Eigen::MatrixXcd values;
    double time = 0.0;

    [[nodiscard]] std::size_t size() const { return grid.n_points; }
    /// Re rho(x, x) as a field.
    [[nodiscard]] RealField diagonal() const;
    /// sum_x rho(x, x) w_x (real part).
    [[nodiscard]] double trace() const;
    /// max |rho(x, x') - conj(rho(x', x))|.
    [[nodiscard]] double hermiticity_defect() const;
    /// Smallest eigenvalue of the quadrature-weighted operator W^1/2 rho W^1/2.
    [[nodiscard]] double min_eigenvalue() const;
    /// Throws NumericalError when Hermiticity (1e-12), trace (1e-8) or
    /// positivity (-1e-8) fail.
    void validate() const;

    void write(const std::filesystem::path& path) const;
    static ReducedDensityMatrix read(const std::filesystem::path& path);
};

struct PurityReport {
    double purity = 0.0;  ///< Tr(rho^2)
    double time = 0.0;
};

/// Traces out `traced` (0 or 1) of a configuration-space wavefunction:
/// rho(x, x') = sum_y psi(x, y) conj(psi(x', y)) w_y.
ReducedDensityMatrix reduce(const ComplexField& psi, std::size_t traced = 1, double time = 0.0);

PurityReport purity(const ReducedDensityMatrix& rdm);

/// d rho(x, x') / dx on the full matrix: central differences along the
/// first index (periodic wrap, or second-order one-sided at Dirichlet ends).
Eigen::MatrixXcd first_argument_derivative(const ReducedDensityMatrix& rdm);

/// (hbar/m) Im[d_x rho(x, x')] at x' = x.
RealField reduced_current(const ReducedDensityMatrix& rdm, double mass = 1.0);

/// Velocity j / Re rho(x, x) with the node mask where Re rho(x, x) < eps_node * max.
struct ReducedVelocity {
    RealField velocity;  ///< NaN where masked
    MaskField mask;
};
ReducedVelocity reduced_velocity(const ReducedDensityMatrix& rdm, double mass = 1.0,
                                 double eps_node = hydro::default_eps_node);

/// Reduced trajectories through a series of matrices (increasing time).
traj::TrajectorySet reduced_trajectories(const std::vector<ReducedDensityMatrix>& series,
                                         const std::vector<traj::Point>& initial, const traj::IntegrateOptions& opt,
                                         double mass = 1.0, double eps_node = hydro::default_eps_node);
/// Same, sampling n starting points from the diagonal of the first matrix.
traj::TrajectorySet reduced_trajectories(const std::vector<ReducedDensityMatrix>& series, std::size_t n,
                                         std::uint64_t seed, const traj::IntegrateOptions& opt, double mass = 1.0,
                                         double eps_node = hydro::default_eps_node);

/// d rho_diag/dt + d j/dx at series[k] from its neighbours (central in time).
hydro::ContinuityReport continuity_audit(const std::vector<ReducedDensityMatrix>& series, std::size_t k,
                                         double mass = 1.0);

struct ReducedRow {
    double t;
    double purity;
    double trace;
    double hermiticity_defect;
    double min_eigenvalue;
};
ReducedRow summarize(const ReducedDensityMatrix& rdm);
void write_report_csv(const std::filesystem::path& path, const std::vector<ReducedRow>& rows);

}  // namespace qfd::red
