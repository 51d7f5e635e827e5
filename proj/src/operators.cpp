#include "qfd/operators.hpp"

#include <algorithm>
#include <cmath>

namespace qfd {
namespace {

// Calls fn(offset, stride, length) once per grid line running along `axis`.
template <typename Fn>
void for_each_line(const Grid& g, std::size_t axis, Fn&& fn) {
    const Grid1D& ax = g.axis(axis);
    const std::size_t stride = g.stride(axis);
    if (g.dims() == 1) {
        fn(std::size_t{0}, stride, ax.n_points);
        return;
    }
    const Grid1D& other = g.axis(1 - axis);
    for (std::size_t l = 0; l < other.n_points; ++l) {
        const std::size_t offset = axis == 0 ? l : l * ax.n_points;
        fn(offset, stride, ax.n_points);
    }
}

template <typename T>
Field<T> gradient_impl(const Field<T>& f, std::size_t axis) {
    const Grid1D& ax = f.grid().axis(axis);
    const bool periodic = ax.boundary == Boundary::periodic;
    const double inv2h = 0.5 / ax.dx;
    Field<T> out(f.grid());
    for_each_line(f.grid(), axis, [&](std::size_t off, std::size_t s, std::size_t n) {
        auto at = [&](std::size_t i) -> const T& { return f[off + i * s]; };
        for (std::size_t i = 1; i + 1 < n; ++i) out[off + i * s] = (at(i + 1) - at(i - 1)) * inv2h;
        if (periodic) {
            out[off] = (at(1) - at(n - 1)) * inv2h;
            out[off + (n - 1) * s] = (at(0) - at(n - 2)) * inv2h;
        } else {
            out[off] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
            out[off + (n - 1) * s] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
        }
    });
    return out;
}

template <typename T>
void add_second_derivative(const Field<T>& f, std::size_t axis, Field<T>& out) {
    const Grid1D& ax = f.grid().axis(axis);
    const bool periodic = ax.boundary == Boundary::periodic;
    const double invh2 = 1.0 / (ax.dx * ax.dx);
    for_each_line(f.grid(), axis, [&](std::size_t off, std::size_t s, std::size_t n) {
        auto at = [&](std::size_t i) -> const T& { return f[off + i * s]; };
        for (std::size_t i = 1; i + 1 < n; ++i)
            out[off + i * s] += (at(i + 1) - 2.0 * at(i) + at(i - 1)) * invh2;
        if (periodic) {
            out[off] += (at(1) - 2.0 * at(0) + at(n - 1)) * invh2;
            out[off + (n - 1) * s] += (at(0) - 2.0 * at(n - 1) + at(n - 2)) * invh2;
        } else {
            out[off] += (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * invh2;
            out[off + (n - 1) * s] +=
                (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * invh2;
        }
    });
}

template <typename T>
Field<T> laplacian_impl(const Field<T>& f) {
    Field<T> out(f.grid());
    for (std::size_t a = 0; a < f.grid().dims(); ++a) add_second_derivative(f, a, out);
    return out;
}

template <typename T>
double max_abs_diff_impl(const Field<T>& a, const Field<T>& b) {
    require_same_grid(a.grid(), b.grid(), "max_abs_difference");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

RealField gradient(const RealField& f, std::size_t axis) { return gradient_impl(f, axis); }
ComplexField gradient(const ComplexField& f, std::size_t axis) { return gradient_impl(f, axis); }
RealField laplacian(const RealField& f) { return laplacian_impl(f); }
ComplexField laplacian(const ComplexField& f) { return laplacian_impl(f); }

RealField second_derivative(const RealField& f, std::size_t axis) {
    RealField out(f.grid());
    add_second_derivative(f, axis, out);
    return out;
}

double quadrature_weight(const Grid& g, std::size_t k) {
    if (g.dims() == 1) return g.axis(0).weight(k);
    const std::size_t ny = g.axis(1).n_points;
    return g.axis(0).weight(k / ny) * g.axis(1).weight(k % ny);
}

double integrate(const RealField& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    if (g.dims() == 1) {
        for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * g.axis(0).weight(i);
        return sum;
    }
    const std::size_t nx = g.axis(0).n_points;
    const std::size_t ny = g.axis(1).n_points;
    for (std::size_t i = 0; i < nx; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < ny; ++j) row += f[i * ny + j] * g.axis(1).weight(j);
        sum += row * g.axis(0).weight(i);
    }
    return sum;
}

RealField density(const ComplexField& psi) {
    RealField rho(psi.grid());
    for (std::size_t k = 0; k < psi.size(); ++k) rho[k] = std::norm(psi[k]);
    return rho;
}

double norm_squared(const ComplexField& psi) { return integrate(density(psi)); }

complex inner_product(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid(), b.grid(), "inner_product");
    complex sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += std::conj(a[k]) * b[k] * quadrature_weight(a.grid(), k);
    return sum;
}

double normalize(ComplexField& psi) {
    const double n2 = norm_squared(psi);
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("cannot normalize a field with zero or non-finite norm");
    psi *= complex(1.0 / std::sqrt(n2), 0.0);
    return n2;
}

double max_abs_difference(const RealField& a, const RealField& b) { return max_abs_diff_impl(a, b); }
double max_abs_difference(const ComplexField& a, const ComplexField& b) { return max_abs_diff_impl(a, b); }

void pin_dirichlet_edges(ComplexField& psi) {
    const Grid& g = psi.grid();
    for (std::size_t a = 0; a < g.dims(); ++a) {
        if (g.axis(a).boundary != Boundary::dirichlet) continue;
        for_each_line(g, a, [&](std::size_t off, std::size_t s, std::size_t n) {
            psi[off] = 0.0;
            psi[off + (n - 1) * s] = 0.0;
        });
    }
}

}  // namespace qfd
