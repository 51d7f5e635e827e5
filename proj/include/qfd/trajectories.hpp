#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "qfd/field.hpp"
#include "qfd/hydrodynamics.hpp"

namespace qfd::traj {

using Point = std::array<double, 2>;  ///< second coordinate unused in 1D

enum class Sampling { inverse_cdf, uniform_grid, explicit_list };
std::string_view to_string(Sampling s);
Sampling sampling_from_string(std::string_view name);

/// Per-trajectory status bits.
enum Flag : std::uint8_t {
    flag_none = 0,
    flag_exited = 1,  ///< left a Dirichlet grid; frozen at the last inside position
    flag_node = 2,    ///< step halving near a node failed; frozen
};

/// Positions of every trajectory at shared time stamps. Periodic axes are
/// stored unwrapped (continuous), so ordering and displacement are well
/// defined; wrap with the grid when comparing against a density.
struct TrajectorySet {
    std::size_t dims = 1;
    std::vector<double> times;
    std::vector<std::vector<Point>> positions;  ///< [trajectory][time index]
    std::vector<std::uint8_t> flags;
    std::uint64_t seed = 0;
    Sampling sampling = Sampling::inverse_cdf;

    [[nodiscard]] std::size_t n_traj() const { return positions.size(); }
    /// Positions of all trajectories at one stored time.
    [[nodiscard]] std::vector<Point> at(std::size_t time_index) const;

    void write_csv(const std::filesystem::path& path) const;
    void write_manifest(const std::filesystem::path& path) const;
    static TrajectorySet read_csv(const std::filesystem::path& path);
};

/// Draws n positions distributed as rho0 (1D, or 2D via the x marginal and
/// then the conditional in y). rho0 is read as piecewise constant on the
/// node-centred cells (half cells at Dirichlet ends), consistent with the
/// trapezoid quadrature. Throws if rho0 is not normalized within 1e-6.
std::vector<Point> sample_initial(const RealField& rho0, std::size_t n, std::uint64_t seed);

/// n positions at the CDF quantiles (k + 1/2)/n; 1D only, no randomness.
std::vector<Point> quantile_positions(const RealField& rho0, std::size_t n);

TrajectorySet make_set(std::vector<Point> initial, std::size_t dims, double t0, std::uint64_t seed, Sampling s);

/// Velocity snapshots on a fixed grid, interpolated linearly in time and
/// with Catmull-Rom cubics in space (bicubic in 2D).
class VelocityField {
public:
    explicit VelocityField(Grid grid) : grid_(std::move(grid)) {}

    /// Snapshots must be added in increasing time order.
    void add_snapshot(double t, std::vector<RealField> velocity, MaskField mask);
    void add_snapshot(const hydro::HydroFields& hf) { add_snapshot(hf.time, hf.velocity, hf.node_mask); }
    /// Convenience: decompose each wavefunction snapshot.
    static VelocityField from_wavefunctions(const std::vector<ComplexField>& psi, const std::vector<double>& times,
                                            double mass = 1.0, double eps_node = hydro::default_eps_node);

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] double t_begin() const { return times_.front(); }
    [[nodiscard]] double t_end() const { return times_.back(); }
    [[nodiscard]] std::size_t snapshot_count() const { return times_.size(); }

    /// Velocity at p and t; std::nullopt when the interpolation stencil
    /// touches a masked node. p must lie inside the grid (periodic axes are
    /// wrapped here).
    [[nodiscard]] std::optional<Point> at(const Point& p, double t) const;
    /// Whether p lies inside the grid extent (always true on periodic axes).
    [[nodiscard]] bool inside(const Point& p) const;

private:
    [[nodiscard]] std::optional<Point> spatial(std::size_t snapshot, const Point& p) const;

    Grid grid_;
    std::vector<double> times_;
    std::vector<std::vector<RealField>> velocity_;
    std::vector<MaskField> masks_;
};

struct IntegrateOptions {
    double dt = 0.01;
    std::size_t record_stride = 1;  ///< store positions every this many steps (and at t1)
    unsigned max_halvings = 8;
};

/// Advances every unflagged trajectory from t0 = ts.times.back() to t1 with
/// classical RK4, appending positions at each record stride. Parallel
/// over trajectories; the result does not depend on the thread count.
void integrate(TrajectorySet& ts, const VelocityField& v, double t1, const IntegrateOptions& opt);

struct EquivarianceReport {
    std::size_t n = 0;
    double ks = 0.0;        ///< max over axes of the marginal KS distance
    double ks_bound = 0.0;  ///< 1.63 / sqrt(n), the 99% critical value
    double chi2 = 0.0;
    std::size_t bins = 0;
    double chi2_critical = 0.0;  ///< 99% quantile of chi^2 with bins - 1 dof
    [[nodiscard]] bool ks_pass(double slack = 1.0) const { return ks <= slack * ks_bound; }
};

/// Compares positions against the density (marginal per axis in 2D):
/// Kolmogorov-Smirnov distance and a chi-square statistic over `bins`
/// equal-probability bins. Requires n >= 1000.
EquivarianceReport equivariance_check(const std::vector<Point>& positions, const RealField& rho,
                                      std::size_t bins = 20);
EquivarianceReport equivariance_check(const TrajectorySet& ts, std::size_t time_index, const RealField& rho,
                                      std::size_t bins = 20);

struct CrossingReport {
    bool ok = true;
    std::size_t time_index = 0;
    std::size_t first = 0, second = 0;  ///< trajectory ids whose order inverted
};

/// 1D only: the ordering of trajectories by initial position must be kept
/// at every stored time.
CrossingReport non_crossing_check(const TrajectorySet& ts);

}  // namespace qfd::traj
