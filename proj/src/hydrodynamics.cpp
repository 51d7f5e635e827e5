#include "qfd/hydrodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"

namespace qfd::hydro {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

RealField sqrt_field(const RealField& rho) {
    RealField r(rho.grid());
    for (std::size_t k = 0; k < rho.size(); ++k) r[k] = std::sqrt(std::max(rho[k], 0.0));
    return r;
}

std::string point_name(const Grid& g, std::size_t k) {
    std::ostringstream os;
    if (g.dims() == 1) {
        os << "node " << k << " (x = " << io::format_double(g.axis(0).x(k)) << ")";
    } else {
        const std::size_t ny = g.axis(1).n_points;
        os << "node (" << k / ny << ", " << k % ny << ") at (x, y) = (" << io::format_double(g.axis(0).x(k / ny))
           << ", " << io::format_double(g.axis(1).x(k % ny)) << ")";
    }
    return os.str();
}

double norm_l2(const RealField& f) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * f[k] * quadrature_weight(f.grid(), k);
    return std::sqrt(s);
}

// 5-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 5> gl_nodes = {0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842,
                                            0.953089922969332};
constexpr std::array<double, 5> gl_weights = {0.118463442528095, 0.239314335249683, 0.284444444444444,
                                              0.239314335249683, 0.118463442528095};

}  // namespace

std::size_t HydroFields::mask_count() const {
    return static_cast<std::size_t>(std::count(node_mask.begin(), node_mask.end(), std::uint8_t{1}));
}

MaskField node_mask(const RealField& rho, double eps_node) {
    const double peak = rho.size() ? *std::max_element(rho.begin(), rho.end()) : 0.0;
    const double cut = eps_node * peak;
    MaskField m(rho.grid());
    for (std::size_t k = 0; k < rho.size(); ++k) m[k] = (rho[k] < cut || !(peak > 0.0)) ? 1 : 0;
    return m;
}

RealField quantum_potential(const RealField& rho, double mass, double eps_node) {
    const MaskField mask = node_mask(rho, eps_node);
    const RealField r = sqrt_field(rho);
    const RealField lap = laplacian(r);
    RealField q(rho.grid());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = mask[k] ? nan : -lap[k] / (2.0 * mass * r[k]);
    return q;
}

RealField quantum_potential_density_form(const RealField& rho, double mass, double eps_node) {
    const MaskField mask = node_mask(rho, eps_node);
    const RealField lap = laplacian(rho);
    std::vector<RealField> grads;
    for (std::size_t a = 0; a < rho.grid().dims(); ++a) grads.push_back(gradient(rho, a));
    RealField q(rho.grid());
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (mask[k]) {
            q[k] = nan;
            continue;
        }
        double g2 = 0.0;
        for (const auto& g : grads) g2 += g[k] * g[k];
        q[k] = -(lap[k] / rho[k] - 0.5 * g2 / (rho[k] * rho[k])) / (4.0 * mass);
    }
    return q;
}

RealField probability_current(const ComplexField& psi, std::size_t axis, double mass) {
    const ComplexField d = gradient(psi, axis);
    RealField j(psi.grid());
    for (std::size_t k = 0; k < j.size(); ++k) j[k] = std::imag(std::conj(psi[k]) * d[k]) / mass;
    return j;
}

HydroFields decompose(const ComplexField& psi, const PotentialSpec& v, double t, double mass, double eps_node) {
    return decompose(psi, v.evaluate(psi.grid(), t), t, mass, eps_node);
}

HydroFields decompose(const ComplexField& psi, const RealField& v, double t, double mass, double eps_node) {
    require_same_grid(psi.grid(), v.grid(), "decompose");
    if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
    const Grid& g = psi.grid();
    HydroFields hf;
    hf.eps_node = eps_node;
    hf.mass = mass;
    hf.time = t;
    hf.rho = density(psi);
    hf.node_mask = node_mask(hf.rho, eps_node);
    hf.q_potential = quantum_potential(hf.rho, mass, eps_node);
    hf.v_eff = RealField(g);
    for (std::size_t k = 0; k < g.size(); ++k) hf.v_eff[k] = hf.node_mask[k] ? nan : v[k] + hf.q_potential[k];
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const ComplexField d = gradient(psi, a);
        RealField vel(g), cur(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            cur[k] = std::imag(std::conj(psi[k]) * d[k]) / mass;
            vel[k] = hf.node_mask[k] ? nan : std::imag(d[k] / psi[k]) / mass;
        }
        hf.velocity.push_back(std::move(vel));
        hf.current.push_back(std::move(cur));
    }
    return hf;
}

ContinuityReport continuity_residual(const RealField& rho_prev, const RealField& rho_next,
                                     const std::vector<RealField>& current_mid, double dt) {
    require_same_grid(rho_prev.grid(), rho_next.grid(), "continuity_residual");
    if (current_mid.size() != rho_prev.grid().dims())
        throw InvalidArgument("continuity_residual needs one current component per axis");
    if (!(dt > 0.0)) throw InvalidArgument("continuity_residual needs dt > 0");
    ContinuityReport rep;
    rep.residual = RealField(rho_prev.grid());
    for (std::size_t k = 0; k < rho_prev.size(); ++k) rep.residual[k] = (rho_next[k] - rho_prev[k]) / (2.0 * dt);
    for (std::size_t a = 0; a < current_mid.size(); ++a) {
        require_same_grid(current_mid[a].grid(), rho_prev.grid(), "continuity_residual");
        const RealField div = gradient(current_mid[a], a);
        for (std::size_t k = 0; k < div.size(); ++k) rep.residual[k] += div[k];
    }
    for (double r : rep.residual) rep.max_abs = std::max(rep.max_abs, std::abs(r));
    rep.l2 = norm_l2(rep.residual);
    return rep;
}

ContinuityReport continuity_residual(const HydroFields& prev, const HydroFields& mid, const HydroFields& next,
                                     double dt) {
    require_same_grid(prev.grid(), mid.grid(), "continuity_residual");
    require_same_grid(mid.grid(), next.grid(), "continuity_residual");
    return continuity_residual(prev.rho, next.rho, mid.current, dt);
}

double circulation_rectangle(const HydroFields& hf, std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1,
                             bool reverse) {
    const Grid& g = hf.grid();
    if (g.dims() != 2) throw InvalidArgument("circulation needs a 2D grid");
    const std::size_t nx = g.axis(0).n_points, ny = g.axis(1).n_points;
    if (!(i0 < i1 && j0 < j1 && i1 < nx && j1 < ny)) throw InvalidArgument("circulation rectangle out of range");
    const double hx = g.axis(0).dx, hy = g.axis(1).dx;
    auto at = [&](std::size_t a, std::size_t i, std::size_t j) {
        const std::size_t k = i * ny + j;
        if (hf.node_mask[k]) throw InvalidArgument("circulation loop touches masked " + point_name(g, k));
        return hf.velocity[a][k];
    };
    // Counter-clockwise: bottom edge (+x), right edge (+y), top (-x), left (-y).
    double sum = 0.0;
    for (std::size_t i = i0; i < i1; ++i) sum += 0.5 * hx * (at(0, i, j0) + at(0, i + 1, j0));
    for (std::size_t j = j0; j < j1; ++j) sum += 0.5 * hy * (at(1, i1, j) + at(1, i1, j + 1));
    for (std::size_t i = i0; i < i1; ++i) sum -= 0.5 * hx * (at(0, i, j1) + at(0, i + 1, j1));
    for (std::size_t j = j0; j < j1; ++j) sum -= 0.5 * hy * (at(1, i0, j) + at(1, i0, j + 1));
    return reverse ? -sum : sum;
}

double circulation(const HydroFields& hf, const std::vector<std::array<double, 2>>& loop,
                   std::size_t segments_per_edge) {
    const Grid& g = hf.grid();
    if (g.dims() != 2) throw InvalidArgument("circulation needs a 2D grid");
    if (loop.size() < 3) throw InvalidArgument("circulation loop needs at least 3 vertices");
    if (segments_per_edge == 0) throw InvalidArgument("segments_per_edge must be positive");
    const Grid1D& ax = g.axis(0);
    const Grid1D& ay = g.axis(1);
    const std::size_t ny = ay.n_points;

    auto interp = [&](double x, double y) {
        const double u = (x - ax.x_min) / ax.dx;
        const double w = (y - ay.x_min) / ay.dx;
        if (u < 0.0 || w < 0.0 || u > static_cast<double>(ax.n_points - 1) || w > static_cast<double>(ny - 1))
            throw InvalidArgument("circulation loop leaves the grid at (" + io::format_double(x) + ", " +
                                  io::format_double(y) + ")");
        const auto i = std::min(static_cast<std::size_t>(u), ax.n_points - 2);
        const auto j = std::min(static_cast<std::size_t>(w), ny - 2);
        const double fu = u - static_cast<double>(i), fw = w - static_cast<double>(j);
        std::array<double, 2> v{};
        const std::size_t corners[4] = {i * ny + j, (i + 1) * ny + j, i * ny + j + 1, (i + 1) * ny + j + 1};
        const double wts[4] = {(1 - fu) * (1 - fw), fu * (1 - fw), (1 - fu) * fw, fu * fw};
        for (int c = 0; c < 4; ++c) {
            if (hf.node_mask[corners[c]])
                throw InvalidArgument("circulation loop touches masked " + point_name(g, corners[c]));
            v[0] += wts[c] * hf.velocity[0][corners[c]];
            v[1] += wts[c] * hf.velocity[1][corners[c]];
        }
        return v;
    };

    double sum = 0.0;
    for (std::size_t e = 0; e < loop.size(); ++e) {
        const auto& p = loop[e];
        const auto& q = loop[(e + 1) % loop.size()];
        const double dx = (q[0] - p[0]) / static_cast<double>(segments_per_edge);
        const double dy = (q[1] - p[1]) / static_cast<double>(segments_per_edge);
        for (std::size_t s = 0; s < segments_per_edge; ++s) {
            for (std::size_t n = 0; n < gl_nodes.size(); ++n) {
                const double f = static_cast<double>(s) + gl_nodes[n];
                const auto v = interp(p[0] + f * dx, p[1] + f * dy);
                sum += gl_weights[n] * (v[0] * dx + v[1] * dy);
            }
        }
    }
    return sum;
}

std::vector<std::array<double, 2>> circle_loop(double cx, double cy, double radius, std::size_t vertices) {
    std::vector<std::array<double, 2>> pts(vertices);
    for (std::size_t k = 0; k < vertices; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(vertices);
        pts[k] = {cx + radius * std::cos(th), cy + radius * std::sin(th)};
    }
    return pts;
}

MaskField free_motion_criterion(const HydroFields& hf, double threshold) {
    const Grid& g = hf.grid();
    std::vector<RealField> grads;
    for (std::size_t a = 0; a < g.dims(); ++a) grads.push_back(gradient(hf.v_eff, a));
    MaskField out(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        double g2 = 0.0;
        for (const auto& d : grads) g2 += d[k] * d[k];
        // NaN from a masked neighbour makes the comparison false.
        out[k] = (!hf.node_mask[k] && std::sqrt(g2) <= threshold) ? 1 : 0;
    }
    return out;
}

std::vector<std::filesystem::path> write_bundle(const std::filesystem::path& dir, const HydroFields& hf,
                                                const std::string& prefix) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, const RealField*>> fields{{"rho", &hf.rho}};
    for (std::size_t a = 0; a < hf.velocity.size(); ++a)
        fields.emplace_back("velocity_" + std::to_string(a), &hf.velocity[a]);
    for (std::size_t a = 0; a < hf.current.size(); ++a)
        fields.emplace_back("current_" + std::to_string(a), &hf.current[a]);
    fields.emplace_back("q_potential", &hf.q_potential);
    fields.emplace_back("v_eff", &hf.v_eff);
    RealField mask(hf.grid());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = hf.node_mask[k];
    fields.emplace_back("node_mask", &mask);

    std::vector<std::filesystem::path> written;
    const auto manifest = dir / (prefix + "hydro_manifest.csv");
    std::ofstream out(manifest);
    if (!out) throw IoError("cannot open " + manifest.string() + " for writing");
    out << "field,file,eps_node,mask_count,mass,time\n";
    for (const auto& [name, f] : fields) {
        const std::string file = prefix + name + ".qfdf";
        io::write_binary(dir / file, *f);
        written.push_back(dir / file);
        out << name << ',' << file << ',' << io::format_double(hf.eps_node) << ',' << hf.mask_count() << ','
            << io::format_double(hf.mass) << ',' << io::format_double(hf.time) << '\n';
    }
    if (!out) throw IoError("write failed: " + manifest.string());
    written.push_back(manifest);
    return written;
}

HydroFields read_bundle(const std::filesystem::path& dir, const std::string& prefix) {
    const auto manifest = dir / (prefix + "hydro_manifest.csv");
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open " + manifest.string());
    std::string line;
    std::getline(in, line);
    if (line != "field,file,eps_node,mask_count,mass,time") throw IoError(manifest.string() + ": unexpected header");
    HydroFields hf;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        if (cols.size() != 6) throw IoError(manifest.string() + ": malformed row '" + line + "'");
        hf.eps_node = io::parse_double(cols[2]);
        hf.mass = io::parse_double(cols[4]);
        hf.time = io::parse_double(cols[5]);
        RealField f = io::read_real_binary(dir / cols[1]);
        const std::string& name = cols[0];
        if (name == "rho") hf.rho = std::move(f);
        else if (name.starts_with("velocity_")) hf.velocity.push_back(std::move(f));
        else if (name.starts_with("current_")) hf.current.push_back(std::move(f));
        else if (name == "q_potential") hf.q_potential = std::move(f);
        else if (name == "v_eff") hf.v_eff = std::move(f);
        else if (name == "node_mask") {
            hf.node_mask = MaskField(f.grid());
            for (std::size_t k = 0; k < f.size(); ++k) hf.node_mask[k] = f[k] != 0.0 ? 1 : 0;
        } else {
            throw IoError(manifest.string() + ": unknown field '" + name + "'");
        }
    }
    return hf;
}

}  // namespace qfd::hydro
