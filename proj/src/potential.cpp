#include "qfd/potential.hpp"

#include <cmath>
#include <sstream>

namespace qfd {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Adds a per-coordinate profile on every axis of the grid.
template <typename Fn>
RealField per_axis(const Grid& g, Fn&& v1) {
    RealField out(g);
    if (g.dims() == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = v1(g.axis(0).x(i));
        return out;
    }
    const Grid1D& gx = g.axis(0);
    const Grid1D& gy = g.axis(1);
    for (std::size_t i = 0; i < gx.n_points; ++i)
        for (std::size_t j = 0; j < gy.n_points; ++j) out(i, j) = v1(gx.x(i)) + v1(gy.x(j));
    return out;
}

}  // namespace

double Envelope::operator()(double t) const {
    return kind == Kind::constant ? 1.0 : 1.0 + amplitude * std::sin(omega * t);
}

RealField PotentialSpec::profile_on(const Grid& g) const {
    return std::visit(
        overloaded{
            [&](const potentials::Free&) { return RealField(g, 0.0); },
            [&](const potentials::Harmonic& h) {
                return per_axis(g, [&](double x) { return 0.5 * h.mass * h.omega * h.omega * (x - h.center) * (x - h.center); });
            },
            [&](const potentials::GaussianBarrier& b) {
                return per_axis(g, [&](double x) {
                    const double u = (x - b.center) / b.width;
                    return b.height * std::exp(-0.5 * u * u);
                });
            },
            [&](const potentials::DoubleSlit2D& s) {
                if (g.dims() != 2) throw InvalidArgument("double_slit_2d needs a 2D grid");
                RealField out(g, 0.0);
                const Grid1D& gx = g.axis(0);
                const Grid1D& gy = g.axis(1);
                for (std::size_t i = 0; i < gx.n_points; ++i) {
                    if (std::abs(gx.x(i) - s.wall_x) > 0.5 * s.wall_thickness) continue;
                    for (std::size_t j = 0; j < gy.n_points; ++j) {
                        const double y = gy.x(j);
                        const bool open = std::abs(std::abs(y) - 0.5 * s.slit_separation) < 0.5 * s.slit_width;
                        if (!open) out(i, j) = s.height;
                    }
                }
                return out;
            },
            [&](const potentials::CustomTable& t) {
                require_same_grid(t.table.grid(), g, "custom potential table");
                return t.table;
            },
        },
        profile_);
}

RealField PotentialSpec::evaluate(const Grid& g, double t) const {
    RealField v = profile_on(g);
    const double f = envelope_(t);
    if (f != 1.0)
        for (auto& x : v) x *= f;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!std::isfinite(v[k])) throw NumericalError("potential is not finite at node " + std::to_string(k));
    return v;
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const potentials::Free&) { os << "free"; },
                   [&](const potentials::Harmonic& h) { os << "harmonic(omega=" << h.omega << ")"; },
                   [&](const potentials::GaussianBarrier& b) {
                       os << "gaussian_barrier(height=" << b.height << ", width=" << b.width << ", center=" << b.center
                          << ")";
                   },
                   [&](const potentials::DoubleSlit2D&) { os << "double_slit_2d"; },
                   [&](const potentials::CustomTable&) { os << "custom_table"; },
               },
               profile_);
    if (time_dependent()) os << " x (1 + " << envelope_.amplitude << " sin(" << envelope_.omega << " t))";
    return os.str();
}

}  // namespace qfd
