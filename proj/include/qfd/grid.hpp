#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qfd {

enum class Boundary { periodic, dirichlet };

std::string_view to_string(Boundary b);
Boundary boundary_from_string(std::string_view name);

/// Uniform axis: x(i) = x_min + i*dx for i in [0, n_points).
///
/// Periodic axes wrap after n_points cells (box length n_points*dx).
/// Dirichlet axes pin the wavefunction to zero on the first and last
/// node, so trapezoid quadrature and the plain node sum agree.
struct Grid1D {
    std::size_t n_points = 0;
    double x_min = 0.0;
    double dx = 0.0;
    Boundary boundary = Boundary::periodic;

    Grid1D() = default;
    Grid1D(std::size_t n, double x_min, double dx, Boundary b);

    /// Grid spanning [x_min, x_max] with both endpoints as nodes.
    static Grid1D spanning(double x_min, double x_max, std::size_t n, Boundary b);

    [[nodiscard]] double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
    [[nodiscard]] double x_max() const { return x(n_points - 1); }
    [[nodiscard]] double length() const { return static_cast<double>(n_points) * dx; }
    [[nodiscard]] std::vector<double> coordinates() const;

    /// Quadrature weight of node i: dx, or dx/2 at Dirichlet end nodes.
    [[nodiscard]] double weight(std::size_t i) const;

    friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// Tensor product of two axes; values are stored row-major with the
/// first axis slowest: index = i*gy.n_points + j.
struct Grid2D {
    Grid1D gx;
    Grid1D gy;

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// A one- or two-dimensional uniform grid.
class Grid {
public:
    Grid() = default;
    Grid(const Grid1D& g);  // NOLINT(google-explicit-constructor)
    Grid(const Grid2D& g);  // NOLINT(google-explicit-constructor)
    Grid(const Grid1D& gx, const Grid1D& gy);

    [[nodiscard]] std::size_t dims() const { return dims_; }
    [[nodiscard]] const Grid1D& axis(std::size_t a) const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] double cell_volume() const;
    /// Distance in the flat array between neighbours along an axis.
    [[nodiscard]] std::size_t stride(std::size_t a) const;
    [[nodiscard]] Grid1D as_1d() const;
    [[nodiscard]] Grid2D as_2d() const;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    std::size_t dims_ = 0;
    std::array<Grid1D, 2> axes_{};
};

void require_same_grid(const Grid& a, const Grid& b, std::string_view what);

}  // namespace qfd
