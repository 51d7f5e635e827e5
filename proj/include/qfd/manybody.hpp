#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "qfd/field.hpp"
#include "qfd/potential.hpp"
#include "qfd/propagator.hpp"
#include "qfd/trajectories.hpp"

// Two particles in 1D each. The configuration grid's first axis is
// particle 1 and the second axis particle 2; both axes must be identical.
namespace qfd::mb {

enum class Symmetry { none, symmetric, antisymmetric };
std::string_view to_string(Symmetry s);
Symmetry symmetry_from_string(std::string_view name);

/// Soft-Coulomb pair potential strength / sqrt((r1 - r2)^2 + softening^2).
struct Interaction {
    double strength = 0.0;
    double softening = 1.0;

    [[nodiscard]] bool active() const { return strength != 0.0; }
    [[nodiscard]] double operator()(double r1, double r2) const;
    /// V_int(r1, r2) on the configuration grid.
    [[nodiscard]] RealField on(const Grid& config) const;
    /// Mean field  sum_j rho(r_j) V_int(r_i, r_j) w_j  seen by the other particle.
    [[nodiscard]] RealField mean_field(const RealField& partner_density) const;
};

struct TwoBodyState {
    ComplexField psi;  ///< on the configuration grid
    Interaction interaction{};
    PotentialSpec external{};  ///< per-particle; acts additively on both axes
    Symmetry symmetry = Symmetry::none;
    double mass = 1.0;

    /// Throws InvalidArgument unless psi is normalized (1e-6), the grid is
    /// square and the symmetry tag holds within 1e-10.
    void validate() const;
};

struct HartreeState {
    std::array<ComplexField, 2> orbitals;
    Interaction interaction{};
    PotentialSpec external{};
    double mass = 1.0;

    void validate() const;
};

/// Configuration grid for two particles on the same axis.
Grid configuration_grid(const Grid1D& axis);

/// psi1(r1) psi2(r2).
ComplexField product(const ComplexField& psi1, const ComplexField& psi2);
/// max |psi(r1, r2) -/+ psi(r2, r1)| for the symmetric/antisymmetric tag; 0 for none.
double symmetry_defect(const ComplexField& psi, Symmetry s);
/// Projects onto the (anti)symmetric subspace and renormalizes. Throws if
/// the projection vanishes (e.g. antisymmetrizing identical orbitals).
ComplexField symmetrize(const ComplexField& psi, Symmetry s);
inline ComplexField antisymmetrize(const ComplexField& psi) { return symmetrize(psi, Symmetry::antisymmetric); }

/// Position density of one particle, integrating out the other.
RealField marginal_density(const ComplexField& psi, std::size_t particle);

/// Nonseparable quantum potential -(hbar^2/2m)(lap_1 R + lap_2 R)/R; NaN at nodes.
RealField q_full(const ComplexField& psi, double mass = 1.0, double eps_node = 1e-12);

struct CorrelationWitness {
    RealField defect;  ///< Q_full - Q(marginal 1) - Q(marginal 2); NaN where excluded
    double max_abs = 0.0;
};

/// Q_full minus the sum of the quantum potentials of the two marginal
/// densities, evaluated where rho >= support * max(rho). Vanishes on
/// products; a nonzero value marks correlation that a factorized state
/// cannot carry.
CorrelationWitness correlation_witness(const ComplexField& psi, double mass = 1.0, double support = 1e-6);

struct FullRun {
    std::vector<double> times;
    std::vector<ComplexField> snapshots;
    std::vector<double> norms;
    std::vector<double> energies;
};

/// Propagates the two-body state on the configuration grid under
/// V_ext(r1) + V_ext(r2) + V_int(r1, r2), storing every `stride` steps
/// (and the initial and final states).
FullRun propagate_full(const TwoBodyState& s, const PropagatorConfig& cfg, std::size_t stride = 1);

struct HartreeRun {
    std::vector<double> times;
    std::array<std::vector<ComplexField>, 2> snapshots;
};

/// Each orbital evolves under V_ext plus the mean field of the partner's
/// density, recomputed every step from the densities at the start of the
/// step. With `predictor_corrector` the second half of every step uses the
/// mean field of a predicted end-of-step density instead.
HartreeRun propagate_hartree(const HartreeState& h, const PropagatorConfig& cfg, std::size_t stride = 1,
                             bool predictor_corrector = false);

/// Full case: integrates (r1, r2) in the configuration-space velocity field
/// and splits the result into one 1D set per particle.
std::array<traj::TrajectorySet, 2> full_trajectories(const FullRun& run, const std::vector<traj::Point>& initial,
                                                     const traj::IntegrateOptions& opt, double mass = 1.0);
/// Hartree case: independent 1D integrations per orbital.
std::array<traj::TrajectorySet, 2> hartree_trajectories(const HartreeRun& run,
                                                        const std::array<std::vector<traj::Point>, 2>& initial,
                                                        const traj::IntegrateOptions& opt, double mass = 1.0);
/// Samples n configuration points from |psi(t0)|^2 and integrates them.
std::array<traj::TrajectorySet, 2> full_trajectories(const FullRun& run, std::size_t n, std::uint64_t seed,
                                                     const traj::IntegrateOptions& opt, double mass = 1.0);

struct ComparisonRow {
    double t;
    double density_l2;  ///< || rho_full - |psi1|^2 (x) |psi2|^2 ||_2 on the configuration grid
    double witness_max;
    double symmetry_defect;
};

/// Rows at the time stamps shared by both runs (they must match).
std::vector<ComparisonRow> compare(const FullRun& full, const HartreeRun& hartree, Symmetry tag, double mass = 1.0);
void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);

}  // namespace qfd::mb
