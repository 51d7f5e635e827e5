#include "qfd/manybody.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "qfd/field_io.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/operators.hpp"

namespace qfd::mb {
namespace {

void require_square(const Grid& g, std::string_view what) {
    if (g.dims() != 2 || !(g.axis(0) == g.axis(1)))
        throw InvalidArgument(std::string(what) + ": configuration grid must be 2D with identical particle axes");
}

void require_normalized(const ComplexField& psi, std::string_view what) {
    const double n2 = norm_squared(psi);
    if (!(std::abs(n2 - 1.0) <= 1e-6))
        throw InvalidArgument(std::string(what) + " is not normalized (norm^2 = " + io::format_double(n2) + ")");
}

void require_finite(const ComplexField& psi, std::size_t step, double t) {
    if (!std::isfinite(norm_squared(psi)))
        throw NumericalError("non-finite wavefunction after step " + std::to_string(step) + " (t = " +
                             io::format_double(t) + "); dt too large or potential singular");
}

RealField add(const RealField& a, const RealField& b) {
    RealField out = a;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += b[k];
    return out;
}

std::vector<traj::Point> component(const std::vector<traj::Point>& pts, std::size_t c) {
    std::vector<traj::Point> out(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) out[k] = {pts[k][c], 0.0};
    return out;
}

}  // namespace

std::string_view to_string(Symmetry s) {
    switch (s) {
        case Symmetry::none: return "none";
        case Symmetry::symmetric: return "symmetric";
        case Symmetry::antisymmetric: return "antisymmetric";
    }
    return "?";
}

Symmetry symmetry_from_string(std::string_view name) {
    if (name == "none") return Symmetry::none;
    if (name == "symmetric") return Symmetry::symmetric;
    if (name == "antisymmetric") return Symmetry::antisymmetric;
    throw InvalidArgument("unknown symmetry '" + std::string(name) + "'");
}

double Interaction::operator()(double r1, double r2) const {
    const double d = r1 - r2;
    return strength / std::sqrt(d * d + softening * softening);
}

RealField Interaction::on(const Grid& config) const {
    require_square(config, "Interaction::on");
    const Grid1D& ax = config.axis(0);
    RealField v(config, 0.0);
    if (!active()) return v;
    for (std::size_t i = 0; i < ax.n_points; ++i)
        for (std::size_t j = 0; j < ax.n_points; ++j) v(i, j) = (*this)(ax.x(i), ax.x(j));
    return v;
}

RealField Interaction::mean_field(const RealField& partner_density) const {
    const Grid& g = partner_density.grid();
    if (g.dims() != 1) throw InvalidArgument("mean field needs a 1D partner density");
    const Grid1D& ax = g.axis(0);
    RealField out(g, 0.0);
    if (!active()) return out;
    std::vector<double> w(ax.n_points);
    for (std::size_t j = 0; j < ax.n_points; ++j) w[j] = partner_density[j] * ax.weight(j);
    for (std::size_t i = 0; i < ax.n_points; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < ax.n_points; ++j) s += w[j] * (*this)(ax.x(i), ax.x(j));
        out[i] = s;
    }
    return out;
}

void TwoBodyState::validate() const {
    require_square(psi.grid(), "two-body state");
    require_normalized(psi, "two-body state");
    if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
    const double defect = symmetry_defect(psi, symmetry);
    if (!(defect <= 1e-10))
        throw InvalidArgument("two-body state violates its " + std::string(to_string(symmetry)) +
                              " tag (defect " + io::format_double(defect) + ")");
}

void HartreeState::validate() const {
    for (std::size_t k = 0; k < 2; ++k) {
        if (orbitals[k].grid().dims() != 1) throw InvalidArgument("Hartree orbitals must be 1D");
        require_normalized(orbitals[k], "Hartree orbital " + std::to_string(k + 1));
    }
    require_same_grid(orbitals[0].grid(), orbitals[1].grid(), "Hartree orbitals");
    if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
}

Grid configuration_grid(const Grid1D& axis) { return Grid(axis, axis); }

ComplexField product(const ComplexField& psi1, const ComplexField& psi2) {
    if (psi1.grid().dims() != 1 || psi2.grid().dims() != 1) throw InvalidArgument("product needs 1D factors");
    const Grid g(psi1.grid().axis(0), psi2.grid().axis(0));
    ComplexField out(g);
    const std::size_t n2 = psi2.size();
    for (std::size_t i = 0; i < psi1.size(); ++i)
        for (std::size_t j = 0; j < n2; ++j) out[i * n2 + j] = psi1[i] * psi2[j];
    return out;
}

double symmetry_defect(const ComplexField& psi, Symmetry s) {
    if (s == Symmetry::none) return 0.0;
    require_square(psi.grid(), "symmetry_defect");
    const double sign = s == Symmetry::symmetric ? 1.0 : -1.0;
    const std::size_t n = psi.grid().axis(0).n_points;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) worst = std::max(worst, std::abs(psi(i, j) - sign * psi(j, i)));
    return worst;
}

ComplexField symmetrize(const ComplexField& psi, Symmetry s) {
    if (s == Symmetry::none) return psi;
    require_square(psi.grid(), "symmetrize");
    const double sign = s == Symmetry::symmetric ? 1.0 : -1.0;
    const std::size_t n = psi.grid().axis(0).n_points;
    ComplexField out(psi.grid());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = 0.5 * (psi(i, j) + sign * psi(j, i));
    const double n2 = norm_squared(out);
    if (!(n2 > 1e-20))
        throw InvalidArgument("projection onto the " + std::string(to_string(s)) + " subspace vanishes");
    normalize(out);
    return out;
}

RealField marginal_density(const ComplexField& psi, std::size_t particle) {
    const Grid& g = psi.grid();
    if (g.dims() != 2 || particle > 1) throw InvalidArgument("marginal_density needs a configuration grid");
    const Grid1D& keep = g.axis(particle);
    const Grid1D& other = g.axis(1 - particle);
    RealField out(Grid(keep), 0.0);
    for (std::size_t i = 0; i < g.axis(0).n_points; ++i)
        for (std::size_t j = 0; j < g.axis(1).n_points; ++j) {
            const double r = std::norm(psi(i, j));
            if (particle == 0) out[i] += r * other.weight(j);
            else out[j] += r * other.weight(i);
        }
    return out;
}

RealField q_full(const ComplexField& psi, double mass, double eps_node) {
    if (psi.grid().dims() != 2) throw InvalidArgument("q_full needs a configuration-space wavefunction");
    return hydro::quantum_potential(density(psi), mass, eps_node);
}

CorrelationWitness correlation_witness(const ComplexField& psi, double mass, double support) {
    const Grid& g = psi.grid();
    const RealField rho = density(psi);
    const RealField q = hydro::quantum_potential(rho, mass, 0.0);
    const RealField q1 = hydro::quantum_potential(marginal_density(psi, 0), mass, 0.0);
    const RealField q2 = hydro::quantum_potential(marginal_density(psi, 1), mass, 0.0);
    double rho_max = 0.0;
    for (double r : rho.values()) rho_max = std::max(rho_max, r);
    CorrelationWitness w{RealField(g, std::numeric_limits<double>::quiet_NaN()), 0.0};
    for (std::size_t i = 0; i < g.axis(0).n_points; ++i)
        for (std::size_t j = 0; j < g.axis(1).n_points; ++j) {
            if (rho(i, j) < support * rho_max) continue;
            const double d = q(i, j) - q1[i] - q2[j];
            w.defect(i, j) = d;
            if (std::isfinite(d)) w.max_abs = std::max(w.max_abs, std::abs(d));
        }
    return w;
}

FullRun propagate_full(const TwoBodyState& s, const PropagatorConfig& cfg, std::size_t stride) {
    s.validate();
    if (stride == 0) throw InvalidArgument("snapshot stride must be positive");
    const Grid& g = s.psi.grid();
    Propagator prop(g, cfg);
    const RealField v_int = s.interaction.on(g);
    const bool td = s.external.time_dependent();
    RealField v_now = add(s.external.evaluate(g, 0.0), v_int);
    RealField v_next = v_now;

    FullRun run;
    ComplexField psi = s.psi;
    auto record = [&](double t) {
        run.times.push_back(t);
        run.snapshots.push_back(psi);
        run.norms.push_back(norm_squared(psi));
        run.energies.push_back(prop.energy(psi, v_now));
    };
    record(0.0);
    const std::size_t steps = cfg.step_count();
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t1 = static_cast<double>(k) * cfg.dt;
        if (td) v_next = add(s.external.evaluate(g, t1), v_int);
        prop.advance(psi, v_now.values(), v_next.values(), cfg.dt);
        if (td) std::swap(v_now, v_next);
        require_finite(psi, k, t1);
        if (k % stride == 0 || k == steps) record(t1);
    }
    return run;
}

HartreeRun propagate_hartree(const HartreeState& h, const PropagatorConfig& cfg, std::size_t stride,
                             bool predictor_corrector) {
    h.validate();
    if (stride == 0) throw InvalidArgument("snapshot stride must be positive");
    const Grid& g = h.orbitals[0].grid();
    Propagator prop(g, cfg);
    std::array<ComplexField, 2> psi = h.orbitals;
    HartreeRun run;
    auto record = [&](double t) {
        run.times.push_back(t);
        for (std::size_t k = 0; k < 2; ++k) run.snapshots[k].push_back(psi[k]);
    };
    record(0.0);

    const std::size_t steps = cfg.step_count();
    for (std::size_t n = 1; n <= steps; ++n) {
        const double t0 = static_cast<double>(n - 1) * cfg.dt;
        const double t1 = static_cast<double>(n) * cfg.dt;
        const RealField ext0 = h.external.evaluate(g, t0);
        const RealField ext1 = h.external.time_dependent() ? h.external.evaluate(g, t1) : ext0;
        // partner mean fields from the start-of-step densities
        const std::array<RealField, 2> mf0{h.interaction.mean_field(density(psi[1])),
                                           h.interaction.mean_field(density(psi[0]))};
        std::array<RealField, 2> mf1 = mf0;
        if (predictor_corrector && h.interaction.active()) {
            std::array<ComplexField, 2> pred = psi;
            for (std::size_t k = 0; k < 2; ++k) {
                const RealField a = add(ext0, mf0[k]), b = add(ext1, mf0[k]);
                prop.advance(pred[k], a.values(), b.values(), cfg.dt);
            }
            mf1 = {h.interaction.mean_field(density(pred[1])), h.interaction.mean_field(density(pred[0]))};
        }
        for (std::size_t k = 0; k < 2; ++k) {
            const RealField a = add(ext0, mf0[k]), b = add(ext1, mf1[k]);
            prop.advance(psi[k], a.values(), b.values(), cfg.dt);
            require_finite(psi[k], n, t1);
        }
        if (n % stride == 0 || n == steps) record(t1);
    }
    return run;
}

std::array<traj::TrajectorySet, 2> full_trajectories(const FullRun& run, const std::vector<traj::Point>& initial,
                                                     const traj::IntegrateOptions& opt, double mass) {
    if (run.snapshots.empty()) throw InvalidArgument("full run has no snapshots");
    const auto vf = traj::VelocityField::from_wavefunctions(run.snapshots, run.times, mass);
    auto joint = traj::make_set(initial, 2, run.times.front(), 0, traj::Sampling::explicit_list);
    traj::integrate(joint, vf, run.times.back(), opt);
    std::array<traj::TrajectorySet, 2> out;
    for (std::size_t c = 0; c < 2; ++c) {
        auto& ts = out[c];
        ts.dims = 1;
        ts.times = joint.times;
        ts.flags = joint.flags;
        ts.seed = joint.seed;
        ts.sampling = joint.sampling;
        ts.positions.reserve(joint.n_traj());
        for (const auto& path : joint.positions) ts.positions.push_back(component(path, c));
    }
    return out;
}

std::array<traj::TrajectorySet, 2> full_trajectories(const FullRun& run, std::size_t n, std::uint64_t seed,
                                                     const traj::IntegrateOptions& opt, double mass) {
    if (run.snapshots.empty()) throw InvalidArgument("full run has no snapshots");
    auto out = full_trajectories(run, traj::sample_initial(density(run.snapshots.front()), n, seed), opt, mass);
    for (auto& ts : out) {
        ts.seed = seed;
        ts.sampling = traj::Sampling::inverse_cdf;
    }
    return out;
}

std::array<traj::TrajectorySet, 2> hartree_trajectories(const HartreeRun& run,
                                                        const std::array<std::vector<traj::Point>, 2>& initial,
                                                        const traj::IntegrateOptions& opt, double mass) {
    std::array<traj::TrajectorySet, 2> out;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto vf = traj::VelocityField::from_wavefunctions(run.snapshots[k], run.times, mass);
        out[k] = traj::make_set(initial[k], 1, run.times.front(), 0, traj::Sampling::explicit_list);
        traj::integrate(out[k], vf, run.times.back(), opt);
    }
    return out;
}

std::vector<ComparisonRow> compare(const FullRun& full, const HartreeRun& hartree, Symmetry tag, double mass) {
    if (full.times.size() != hartree.times.size())
        throw InvalidArgument("full and Hartree runs have different snapshot counts");
    std::vector<ComparisonRow> rows;
    for (std::size_t s = 0; s < full.times.size(); ++s) {
        if (std::abs(full.times[s] - hartree.times[s]) > 1e-12 * std::max(1.0, std::abs(full.times[s])))
            throw InvalidArgument("full and Hartree snapshot times differ");
        const ComplexField& psi = full.snapshots[s];
        const ComplexField prod = product(hartree.snapshots[0][s], hartree.snapshots[1][s]);
        require_same_grid(psi.grid(), prod.grid(), "compare");
        RealField diff(psi.grid());
        for (std::size_t k = 0; k < psi.size(); ++k) {
            const double d = std::norm(psi[k]) - std::norm(prod[k]);
            diff[k] = d * d;
        }
        rows.push_back({full.times[s], std::sqrt(integrate(diff)), correlation_witness(psi, mass).max_abs,
                        symmetry_defect(psi, tag)});
    }
    return rows;
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "t,full_vs_hartree_density_L2,correlation_witness_max,symmetry_defect\n";
    for (const auto& r : rows)
        out << io::format_double(r.t) << ',' << io::format_double(r.density_l2) << ','
            << io::format_double(r.witness_max) << ',' << io::format_double(r.symmetry_defect) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qfd::mb
