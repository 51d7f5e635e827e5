#include "qfd/grid.hpp"

#include <cmath>
#include <string>

#include "qfd/error.hpp"

namespace qfd {

std::string_view to_string(Boundary b) {
    return b == Boundary::periodic ? "periodic" : "dirichlet";
}

Boundary boundary_from_string(std::string_view name) {
    if (name == "periodic") return Boundary::periodic;
    if (name == "dirichlet") return Boundary::dirichlet;
    throw InvalidArgument("unknown boundary '" + std::string(name) + "'");
}

Grid1D::Grid1D(std::size_t n, double x_min_, double dx_, Boundary b)
    : n_points(n), x_min(x_min_), dx(dx_), boundary(b) {
    if (n < 8) throw InvalidArgument("Grid1D needs at least 8 points, got " + std::to_string(n));
    if (!(dx > 0.0) || !std::isfinite(dx)) throw InvalidArgument("Grid1D spacing must be positive");
    if (!std::isfinite(x_min)) throw InvalidArgument("Grid1D origin must be finite");
}

Grid1D Grid1D::spanning(double lo, double hi, std::size_t n, Boundary b) {
    if (n < 2 || !(hi > lo)) throw InvalidArgument("Grid1D::spanning needs hi > lo and n >= 2");
    return Grid1D(n, lo, (hi - lo) / static_cast<double>(n - 1), b);
}

std::vector<double> Grid1D::coordinates() const {
    std::vector<double> xs(n_points);
    for (std::size_t i = 0; i < n_points; ++i) xs[i] = x(i);
    return xs;
}

double Grid1D::weight(std::size_t i) const {
    if (boundary == Boundary::dirichlet && (i == 0 || i + 1 == n_points)) return 0.5 * dx;
    return dx;
}

Grid::Grid(const Grid1D& g) : dims_(1), axes_{g, Grid1D{}} {}
Grid::Grid(const Grid2D& g) : dims_(2), axes_{g.gx, g.gy} {}
Grid::Grid(const Grid1D& gx, const Grid1D& gy) : dims_(2), axes_{gx, gy} {}

const Grid1D& Grid::axis(std::size_t a) const {
    if (a >= dims_) {
        throw InvalidArgument("axis " + std::to_string(a) + " out of range for a " +
                              std::to_string(dims_) + "D grid");
    }
    return axes_[a];
}

std::size_t Grid::size() const {
    if (dims_ == 0) return 0;
    return dims_ == 1 ? axes_[0].n_points : axes_[0].n_points * axes_[1].n_points;
}

double Grid::cell_volume() const {
    return dims_ == 1 ? axes_[0].dx : axes_[0].dx * axes_[1].dx;
}

std::size_t Grid::stride(std::size_t a) const {
    (void)axis(a);
    return (dims_ == 2 && a == 0) ? axes_[1].n_points : 1;
}

Grid1D Grid::as_1d() const {
    if (dims_ != 1) throw InvalidArgument("expected a 1D grid");
    return axes_[0];
}

Grid2D Grid::as_2d() const {
    if (dims_ != 2) throw InvalidArgument("expected a 2D grid");
    return Grid2D{axes_[0], axes_[1]};
}

bool operator==(const Grid& a, const Grid& b) {
    if (a.dims_ != b.dims_) return false;
    for (std::size_t k = 0; k < a.dims_; ++k)
        if (!(a.axes_[k] == b.axes_[k])) return false;
    return true;
}

void require_same_grid(const Grid& a, const Grid& b, std::string_view what) {
    if (!(a == b)) throw GridMismatch(std::string(what) + ": fields live on different grids");
}

}  // namespace qfd
