#include "qfd/states.hpp"

#include <cmath>
#include <numbers>

#include "qfd/operators.hpp"

namespace qfd::states {

ComplexField gaussian(const Grid1D& g, double center, double sigma, double k0) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian width must be positive");
    ComplexField psi{Grid(g)};
    const double amp = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double u = g.x(i) - center;
        psi[i] = amp * std::exp(-u * u / (4.0 * sigma * sigma)) * std::polar(1.0, k0 * g.x(i));
    }
    return psi;
}

ComplexField plane_wave(const Grid1D& g, double k, bool normalize_on_grid) {
    ComplexField psi{Grid(g)};
    for (std::size_t i = 0; i < g.n_points; ++i) psi[i] = std::polar(1.0, k * g.x(i));
    if (normalize_on_grid) normalize(psi);
    return psi;
}

ComplexField harmonic_eigenstate(const Grid1D& g, unsigned level, double omega, double mass) {
    ComplexField psi{Grid(g)};
    const double scale = std::sqrt(mass * omega);
    const double norm = std::pow(mass * omega / std::numbers::pi, 0.25) /
                        std::sqrt(std::pow(2.0, level) * std::tgamma(static_cast<double>(level) + 1.0));
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double xi = scale * g.x(i);
        psi[i] = norm * std::hermite(level, xi) * std::exp(-0.5 * xi * xi);
    }
    return psi;
}

ComplexField product(const ComplexField& psi1, const ComplexField& psi2) {
    const Grid1D g1 = psi1.grid().as_1d();
    const Grid1D g2 = psi2.grid().as_1d();
    ComplexField out{Grid(g1, g2)};
    for (std::size_t i = 0; i < g1.n_points; ++i)
        for (std::size_t j = 0; j < g2.n_points; ++j) out(i, j) = psi1[i] * psi2[j];
    return out;
}

ComplexField single_vortex(const Grid2D& g) {
    ComplexField psi{Grid(g)};
    for (std::size_t i = 0; i < g.gx.n_points; ++i) {
        for (std::size_t j = 0; j < g.gy.n_points; ++j) {
            const double x = g.gx.x(i);
            const double y = g.gy.x(j);
            psi(i, j) = complex(x, y) * std::exp(-0.5 * (x * x + y * y));
        }
    }
    return psi;
}

double free_gaussian_width(double sigma0, double t, double mass) {
    const double tau = t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + tau * tau);
}

}  // namespace qfd::states
