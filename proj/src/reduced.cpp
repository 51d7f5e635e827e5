#include "qfd/reduced.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"

namespace qfd::red {
namespace {

Eigen::VectorXd weights(const Grid1D& g) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(g.n_points));
    for (std::size_t i = 0; i < g.n_points; ++i) w[static_cast<Eigen::Index>(i)] = g.weight(i);
    return w;
}

}  // namespace

RealField ReducedDensityMatrix::diagonal() const {
    RealField d{Grid(grid)};
    for (std::size_t i = 0; i < size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        d[i] = values(k, k).real();
    }
    return d;
}

double ReducedDensityMatrix::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        s += values(k, k).real() * grid.weight(i);
    }
    return s;
}

double ReducedDensityMatrix::hermiticity_defect() const {
    return (values - values.adjoint()).cwiseAbs().maxCoeff();
}

double ReducedDensityMatrix::min_eigenvalue() const {
    const Eigen::VectorXd sw = weights(grid).cwiseSqrt();
    Eigen::MatrixXcd a = sw.asDiagonal() * values * sw.asDiagonal();
    a = 0.5 * (a + a.adjoint()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void ReducedDensityMatrix::validate() const {
    const double h = hermiticity_defect();
    if (!(h <= 1e-12)) throw NumericalError("reduced density matrix not Hermitian (defect " + io::format_double(h) + ")");
    const double tr = trace();
    if (!(std::abs(tr - 1.0) <= 1e-8)) throw NumericalError("reduced density matrix trace " + io::format_double(tr));
    const double lo = min_eigenvalue();
    if (!(lo >= -1e-8))
        throw NumericalError("reduced density matrix not positive (smallest eigenvalue " + io::format_double(lo) + ")");
}

void ReducedDensityMatrix::write(const std::filesystem::path& path) const {
    io::MatrixRecord m{grid, time, {}};
    m.values.resize(size() * size());
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = 0; j < size(); ++j)
            m.values[i * size() + j] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    io::write_matrix_binary(path, m);
}

ReducedDensityMatrix ReducedDensityMatrix::read(const std::filesystem::path& path) {
    const io::MatrixRecord m = io::read_matrix_binary(path);
    ReducedDensityMatrix r{m.grid, Eigen::MatrixXcd(m.grid.n_points, m.grid.n_points), m.time};
    const std::size_t n = m.grid.n_points;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            r.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.values[i * n + j];
    return r;
}

ReducedDensityMatrix reduce(const ComplexField& psi, std::size_t traced, double time) {
    const Grid& g = psi.grid();
    if (g.dims() != 2) throw InvalidArgument("reduce needs a configuration-space wavefunction");
    if (traced > 1) throw InvalidArgument("traced particle must be 0 or 1");
    const Grid1D& gx = g.axis(0);
    const Grid1D& gy = g.axis(1);
    // psi as a matrix with rows over particle 1, columns over particle 2.
    const Eigen::Map<const Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        psi.values().data(), static_cast<Eigen::Index>(gx.n_points), static_cast<Eigen::Index>(gy.n_points));
    ReducedDensityMatrix r;
    r.time = time;
    if (traced == 1) {
        r.grid = gx;
        r.values = m * weights(gy).asDiagonal() * m.adjoint();
    } else {
        r.grid = gy;
        r.values = m.transpose() * weights(gx).asDiagonal() * m.conjugate();
    }
    return r;
}

PurityReport purity(const ReducedDensityMatrix& rdm) {
    const Eigen::VectorXd w = weights(rdm.grid);
    const Eigen::MatrixXcd a = rdm.values * w.asDiagonal();
    // Tr((rho W)^2)
    return {(a.cwiseProduct(a.transpose())).sum().real(), rdm.time};
}

Eigen::MatrixXcd first_argument_derivative(const ReducedDensityMatrix& rdm) {
    const auto n = static_cast<Eigen::Index>(rdm.size());
    if (n < 3) throw InvalidArgument("reduced density matrix needs at least 3 points");
    const double dx = rdm.grid.dx;
    const auto& v = rdm.values;
    Eigen::MatrixXcd d(n, n);
    if (rdm.grid.boundary == Boundary::periodic) {
        for (Eigen::Index i = 0; i < n; ++i)
            d.row(i) = (v.row((i + 1) % n) - v.row((i + n - 1) % n)) / (2.0 * dx);
    } else {
        for (Eigen::Index i = 1; i + 1 < n; ++i) d.row(i) = (v.row(i + 1) - v.row(i - 1)) / (2.0 * dx);
        d.row(0) = (-3.0 * v.row(0) + 4.0 * v.row(1) - v.row(2)) / (2.0 * dx);
        d.row(n - 1) = (3.0 * v.row(n - 1) - 4.0 * v.row(n - 2) + v.row(n - 3)) / (2.0 * dx);
    }
    return d;
}

RealField reduced_current(const ReducedDensityMatrix& rdm, double mass) {
    const Eigen::MatrixXcd d = first_argument_derivative(rdm);
    RealField j{Grid(rdm.grid)};
    for (std::size_t i = 0; i < rdm.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        j[i] = d(k, k).imag() / mass;
    }
    return j;
}

ReducedVelocity reduced_velocity(const ReducedDensityMatrix& rdm, double mass, double eps_node) {
    const RealField rho = rdm.diagonal();
    const RealField j = reduced_current(rdm, mass);
    ReducedVelocity out{RealField(rho.grid()), hydro::node_mask(rho, eps_node)};
    for (std::size_t i = 0; i < rho.size(); ++i)
        out.velocity[i] = out.mask[i] ? std::numeric_limits<double>::quiet_NaN() : j[i] / rho[i];
    return out;
}

traj::TrajectorySet reduced_trajectories(const std::vector<ReducedDensityMatrix>& series,
                                         const std::vector<traj::Point>& initial, const traj::IntegrateOptions& opt,
                                         double mass, double eps_node) {
    if (series.empty()) throw InvalidArgument("reduced trajectories need at least one matrix");
    traj::VelocityField vf{Grid(series.front().grid)};
    for (const auto& r : series) {
        if (!(r.grid == series.front().grid)) throw GridMismatch("reduced density matrices on different grids");
        auto rv = reduced_velocity(r, mass, eps_node);
        vf.add_snapshot(r.time, {std::move(rv.velocity)}, std::move(rv.mask));
    }
    auto ts = traj::make_set(initial, 1, series.front().time, 0, traj::Sampling::explicit_list);
    if (series.size() > 1) traj::integrate(ts, vf, series.back().time, opt);
    return ts;
}

traj::TrajectorySet reduced_trajectories(const std::vector<ReducedDensityMatrix>& series, std::size_t n,
                                         std::uint64_t seed, const traj::IntegrateOptions& opt, double mass,
                                         double eps_node) {
    if (series.empty()) throw InvalidArgument("reduced trajectories need at least one matrix");
    RealField rho0 = series.front().diagonal();
    auto ts = reduced_trajectories(series, traj::sample_initial(rho0, n, seed), opt, mass, eps_node);
    ts.seed = seed;
    ts.sampling = traj::Sampling::inverse_cdf;
    return ts;
}

hydro::ContinuityReport continuity_audit(const std::vector<ReducedDensityMatrix>& series, std::size_t k, double mass) {
    if (k == 0 || k + 1 >= series.size()) throw InvalidArgument("continuity audit needs neighbours on both sides");
    const double dt_back = series[k].time - series[k - 1].time;
    const double dt_fwd = series[k + 1].time - series[k].time;
    if (std::abs(dt_back - dt_fwd) > 1e-9 * std::max(1.0, std::abs(dt_fwd)))
        throw InvalidArgument("continuity audit needs a uniform time stride");
    return hydro::continuity_residual(series[k - 1].diagonal(), series[k + 1].diagonal(),
                                      {reduced_current(series[k], mass)}, dt_fwd);
}

ReducedRow summarize(const ReducedDensityMatrix& rdm) {
    return {rdm.time, purity(rdm).purity, rdm.trace(), rdm.hermiticity_defect(), rdm.min_eigenvalue()};
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReducedRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "t,purity,trace,hermiticity_defect,min_eigenvalue\n";
    for (const auto& r : rows)
        out << io::format_double(r.t) << ',' << io::format_double(r.purity) << ',' << io::format_double(r.trace) << ','
            << io::format_double(r.hermiticity_defect) << ',' << io::format_double(r.min_eigenvalue) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qfd::red
