#include "qfd/eigensolver.hpp"

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>

#include "qfd/operators.hpp"

namespace qfd {
namespace {

void fix_sign(ComplexField& psi) {
    double peak = 0.0;
    for (const auto& z : psi) peak = std::max(peak, std::abs(z.real()));
    for (const auto& z : psi) {
        if (std::abs(z.real()) > 1e-3 * peak) {
            if (z.real() < 0.0) psi *= -1.0;
            return;
        }
    }
}

}  // namespace

Eigenstates lowest_eigenstates(const Grid1D& g, const RealField& v, std::size_t count, double mass) {
    require_same_grid(Grid(g), v.grid(), "lowest_eigenstates");
    const bool periodic = g.boundary == Boundary::periodic;
    const std::size_t n = g.n_points;
    const std::size_t m = periodic ? n : n - 2;
    if (count == 0 || count > m) throw InvalidArgument("eigenstate count out of range");
    const double kap = 1.0 / (2.0 * mass * g.dx * g.dx);
    const std::size_t lo = periodic ? 0 : 1;

    Eigenstates out;
    std::vector<std::vector<double>> vecs;
    if (!periodic) {
        std::vector<double> d(m), e(m, -kap);
        for (std::size_t r = 0; r < m; ++r) d[r] = 2.0 * kap + v[lo + r];
        std::vector<double> w(m), z(m * count);
        std::vector<lapack_int> support(2 * count);
        lapack_int found = 0;
        lapack_logical tryrac = 1;
        const lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(m), d.data(),
                                               e.data(), 0.0, 0.0, 1, static_cast<lapack_int>(count), &found,
                                               w.data(), z.data(), static_cast<lapack_int>(m),
                                               static_cast<lapack_int>(count), support.data(), &tryrac);
        if (info != 0 || found != static_cast<lapack_int>(count))
            throw NumericalError("dstemr failed (info = " + std::to_string(info) + ")");
        for (std::size_t c = 0; c < count; ++c) {
            out.energies.push_back(w[c]);
            vecs.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(c * m),
                              z.begin() + static_cast<std::ptrdiff_t>((c + 1) * m));
        }
    } else {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>((i + 1) % n);
            h(ii, ii) = 2.0 * kap + v[i];
            h(ii, jj) -= kap;
            h(jj, ii) -= kap;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        for (std::size_t c = 0; c < count; ++c) {
            const auto col = static_cast<Eigen::Index>(c);
            out.energies.push_back(es.eigenvalues()(col));
            vecs.emplace_back(es.eigenvectors().col(col).data(), es.eigenvectors().col(col).data() + n);
        }
    }
    for (const auto& vec : vecs) {
        ComplexField psi{Grid(g)};
        for (std::size_t r = 0; r < vec.size(); ++r) psi[lo + r] = vec[r];
        normalize(psi);
        fix_sign(psi);
        out.states.push_back(std::move(psi));
    }
    return out;
}

}  // namespace qfd
