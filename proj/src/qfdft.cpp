#include "qfd/qfdft.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "qfd/eigensolver.hpp"
#include "qfd/field_io.hpp"
#include "qfd/manybody.hpp"
#include "qfd/operators.hpp"

namespace qfd::ks {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Spectral derivative of order 1 or 2 on a periodic 1D grid.
ComplexField spectral_derivative(const ComplexField& f, int order) {
    const Grid1D& ax = f.grid().axis(0);
    const auto n = static_cast<int>(ax.n_points);
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ax.n_points));
    const fftw_plan fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    const fftw_plan bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (int i = 0; i < n; ++i) {
        buf[i][0] = f[i].real();
        buf[i][1] = f[i].imag();
    }
    fftw_execute(fwd);
    const double dk = 2.0 * std::numbers::pi / ax.length();
    for (int i = 0; i < n; ++i) {
        const int m = i <= n / 2 ? i : i - n;
        const double k = dk * m;
        complex c(buf[i][0], buf[i][1]);
        if (order == 1) c *= (2 * m == n) ? complex(0.0) : complex(0.0, k);
        else c *= -k * k;
        buf[i][0] = c.real() / n;
        buf[i][1] = c.imag() / n;
    }
    fftw_execute(bwd);
    ComplexField out(f.grid());
    for (int i = 0; i < n; ++i) out[i] = complex(buf[i][0], buf[i][1]);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    return out;
}

RealField real_part(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].real();
    return out;
}

ComplexField as_complex(const RealField& f) {
    ComplexField out(f.grid());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k];
    return out;
}

void accumulate(RealField& into, const RealField& term) {
    for (std::size_t k = 0; k < into.size(); ++k) into[k] += term[k];
}

double weighted_sum(const RealField& f) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * quadrature_weight(f.grid(), k);
    return s;
}

// Hartree + xc for a density; the Hartree part is time independent and may
// be passed in precomputed.
RealField density_terms(const RealField& rho, const FunctionalConfig& fc, double t,
                        const RealField* hartree = nullptr) {
    RealField v(rho.grid(), 0.0);
    if (fc.hartree) accumulate(v, hartree ? *hartree : hartree_potential(rho, fc.hartree_strength, fc.softening));
    if (fc.xc != "none") accumulate(v, xc_by_name(fc.xc, fc.xc_scale)(rho, t));
    return v;
}

bool density_dependent(const FunctionalConfig& fc) { return fc.hartree || fc.xc != "none"; }

}  // namespace

Eigen::MatrixXcd OrbitalSet::overlap() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) s(i, j) = inner_product(orbitals[i], orbitals[j]);
    return s;
}

double OrbitalSet::orthonormality_drift() const {
    const auto n = static_cast<Eigen::Index>(size());
    return (overlap() - Eigen::MatrixXcd::Identity(n, n)).norm();
}

void OrbitalSet::validate() const {
    if (orbitals.empty()) throw InvalidArgument("orbital set is empty");
    if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
    for (std::size_t k = 0; k < size(); ++k) {
        if (orbitals[k].grid().dims() != 1) throw InvalidArgument("Kohn-Sham orbitals must be 1D");
        require_same_grid(orbitals[k].grid(), grid(), "orbital set");
        const double n2 = norm_squared(orbitals[k]);
        if (!(std::abs(n2 - 1.0) <= 1e-6))
            throw InvalidArgument("orbital " + std::to_string(k) + " is not normalized (norm^2 = " +
                                  io::format_double(n2) + ")");
    }
}

void orthonormalize(OrbitalSet& os) {
    for (std::size_t k = 0; k < os.size(); ++k) {
        for (std::size_t j = 0; j < k; ++j) {
            const complex c = inner_product(os.orbitals[j], os.orbitals[k]);
            for (std::size_t i = 0; i < os.orbitals[k].size(); ++i) os.orbitals[k][i] -= c * os.orbitals[j][i];
        }
        normalize(os.orbitals[k]);
    }
}

XcFunctional xc_by_name(std::string_view name, double scale) {
    if (name == "none") return [](const RealField& rho, double) { return RealField(rho.grid(), 0.0); };
    if (name == "lda_x")
        return [scale](const RealField& rho, double) {
            RealField v(rho.grid());
            for (std::size_t k = 0; k < rho.size(); ++k)
                v[k] = -scale * std::cbrt(3.0 * std::max(rho[k], 0.0) / std::numbers::pi);
            return v;
        };
    throw InvalidArgument("unknown xc functional '" + std::string(name) + "' (known: none, lda_x)");
}

std::vector<std::string> xc_names() { return {"none", "lda_x"}; }

std::vector<std::string> FunctionalConfig::terms() const {
    std::vector<std::string> t{"external"};
    if (hartree) t.emplace_back("hartree");
    if (xc != "none") t.push_back("xc:" + xc);
    return t;
}

void FunctionalConfig::validate() const {
    (void)xc_by_name(xc, xc_scale);
    if (hartree && !(softening > 0.0)) throw InvalidArgument("functional.softening must be positive");
}

RealField hartree_potential(const RealField& rho, double strength, double softening) {
    return mb::Interaction{strength, softening}.mean_field(rho);
}

RealField effective_potential(const RealField& rho, const FunctionalConfig& fc, double t) {
    RealField v = fc.external.evaluate(rho.grid(), t);
    if (density_dependent(fc)) accumulate(v, density_terms(rho, fc, t));
    return v;
}

RealField density(const OrbitalSet& os) {
    RealField rho(os.grid(), 0.0);
    for (const auto& phi : os.orbitals)
        for (std::size_t k = 0; k < rho.size(); ++k) rho[k] += std::norm(phi[k]);
    return rho;
}

RealField current(const OrbitalSet& os) {
    RealField j(os.grid(), 0.0);
    for (const auto& phi : os.orbitals) accumulate(j, hydro::probability_current(phi, 0, os.mass));
    return j;
}

KineticReport kinetic_functional(const OrbitalSet& os) {
    os.validate();
    const Grid& g = os.grid();
    const Grid1D& ax = g.axis(0);
    const bool periodic = ax.boundary == Boundary::periodic;
    KineticReport rep;
    rep.window = 1;
    for (const auto& phi : os.orbitals) {
        RealField r(g), grad2(g), flow(g), r_lap_r(g);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::abs(phi[k]);
        const ComplexField dphi = periodic ? spectral_derivative(phi, 1) : gradient(phi, 0);
        const RealField lap_r = periodic ? real_part(spectral_derivative(as_complex(r), 2)) : laplacian(r);
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double rho = r[k] * r[k];
            const double jk = std::imag(std::conj(phi[k]) * dphi[k]);
            flow[k] = rho > 0.0 ? jk * jk / rho : 0.0;  // R^2 (grad S)^2
            r_lap_r[k] = r[k] * lap_r[k];
        }
        if (periodic) {
            for (std::size_t k = 0; k < r.size(); ++k) grad2[k] = std::norm(dphi[k]);
            rep.gradient_form += weighted_sum(grad2) / (2.0 * os.mass);
        } else {
            // forward differences: sum by parts against the 3-point Laplacian
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < r.size(); ++k) s += std::norm(phi[k + 1] - phi[k]);
            rep.gradient_form += s / ax.dx / (2.0 * os.mass);
        }
        rep.hydrodynamic_form += (weighted_sum(flow) - weighted_sum(r_lap_r)) / (2.0 * os.mass);
    }
    return rep;
}

KineticReport kinetic_functional(const std::vector<OrbitalSet>& series, const std::vector<double>& times,
                                 std::size_t first, std::size_t last) {
    if (series.size() != times.size()) throw InvalidArgument("kinetic functional needs one time per snapshot");
    if (last >= series.size() || last <= first)
        throw InvalidArgument("kinetic functional window needs at least 2 snapshots");
    KineticReport avg;
    const double span = times[last] - times[first];
    if (!(span > 0.0)) throw InvalidArgument("kinetic functional window has zero length");
    KineticReport prev = kinetic_functional(series[first]);
    for (std::size_t s = first + 1; s <= last; ++s) {
        const KineticReport cur = kinetic_functional(series[s]);
        const double w = 0.5 * (times[s] - times[s - 1]) / span;
        avg.gradient_form += w * (prev.gradient_form + cur.gradient_form);
        avg.hydrodynamic_form += w * (prev.hydrodynamic_form + cur.hydrodynamic_form);
        prev = cur;
    }
    avg.window = last - first + 1;
    return avg;
}

std::vector<OrbitalDiagnostic> orbital_diagnostics(const OrbitalSet& os, const FunctionalConfig& fc, double t,
                                                   double eps_node) {
    const RealField v_eff = effective_potential(density(os), fc, t);
    std::vector<OrbitalDiagnostic> out;
    for (const auto& phi : os.orbitals) {
        const ComplexField lap = laplacian(phi);
        const ComplexField d = gradient(phi, 0);
        const MaskField mask = hydro::node_mask(density(phi), eps_node);
        OrbitalDiagnostic diag{RealField(os.grid()), RealField(os.grid())};
        double sum = 0.0, sum2 = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            if (mask[k]) {
                diag.q[k] = diag.eps[k] = nan;
                continue;
            }
            const double s = std::imag(d[k] / phi[k]);
            diag.q[k] = -(std::real(lap[k] / phi[k]) + s * s) / (2.0 * os.mass);
            diag.eps[k] = diag.q[k] + v_eff[k];
            sum += diag.eps[k];
            sum2 += diag.eps[k] * diag.eps[k];
            ++count;
        }
        if (count > 0) {
            diag.eps_mean = sum / static_cast<double>(count);
            diag.eps_std = std::sqrt(std::max(0.0, sum2 / static_cast<double>(count) - diag.eps_mean * diag.eps_mean));
            for (std::size_t k = 0; k < phi.size(); ++k)
                if (!mask[k]) diag.eps_max_deviation = std::max(diag.eps_max_deviation, std::abs(diag.eps[k] - diag.eps_mean));
        }
        out.push_back(std::move(diag));
    }
    return out;
}

KsRun propagate_ks(OrbitalSet os, const FunctionalConfig& fc, const PropagatorConfig& cfg, std::size_t stride,
                   bool predictor_corrector) {
    os.validate();
    fc.validate();
    if (stride == 0) throw InvalidArgument("snapshot stride must be positive");
    orthonormalize(os);
    const Grid& g = os.grid();
    Propagator prop(g, cfg);
    KsRun run;
    double kinetic_integral = 0.0, last_kinetic = 0.0;

    auto record = [&](double t) {
        const double kin = kinetic_functional(os).gradient_form;
        if (!run.times.empty()) kinetic_integral += 0.5 * (t - run.times.back()) * (kin + last_kinetic);
        last_kinetic = kin;
        KsRow row{t, integrate(density(os)), run.times.empty() || t <= 0.0 ? kin : kinetic_integral / t, {},
                  os.orthonormality_drift()};
        for (const auto& d : orbital_diagnostics(os, fc, t)) row.eps_std.push_back(d.eps_std);
        run.times.push_back(t);
        run.snapshots.push_back(os);
        run.rows.push_back(std::move(row));
    };
    record(0.0);

    const std::size_t steps = cfg.step_count();
    for (std::size_t n = 1; n <= steps; ++n) {
        const double t0 = static_cast<double>(n - 1) * cfg.dt;
        const double t1 = static_cast<double>(n) * cfg.dt;
        RealField v0 = fc.external.evaluate(g, t0);
        RealField v1 = fc.external.time_dependent() ? fc.external.evaluate(g, t1) : v0;
        if (density_dependent(fc)) {
            const RealField rho = density(os);
            const RealField vh = fc.hartree ? hartree_potential(rho, fc.hartree_strength, fc.softening) : RealField();
            accumulate(v0, density_terms(rho, fc, t0, &vh));
            if (predictor_corrector) {
                OrbitalSet pred = os;
                RealField v1_pred = v1;
                accumulate(v1_pred, density_terms(rho, fc, t1, &vh));
                for (auto& phi : pred.orbitals) prop.advance(phi, v0.values(), v1_pred.values(), cfg.dt);
                accumulate(v1, density_terms(density(pred), fc, t1));
            } else {
                accumulate(v1, density_terms(rho, fc, t1, &vh));
            }
        }
        for (auto& phi : os.orbitals) {
            prop.advance(phi, v0.values(), v1.values(), cfg.dt);
            if (!std::isfinite(norm_squared(phi)))
                throw NumericalError("non-finite orbital after step " + std::to_string(n) + " (t = " +
                                     io::format_double(t1) + "); dt too large or potential singular");
        }
        if (n % stride == 0 || n == steps) record(t1);
    }
    return run;
}

void KsRun::write_diagnostics_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const std::size_t n_orb = rows.empty() ? 0 : rows.front().eps_std.size();
    out << "t,integral_rho,kinetic_running";
    for (std::size_t k = 0; k < n_orb; ++k) out << ",eps_std_" << k;
    out << ",orthonormality_drift\n";
    for (const auto& r : rows) {
        out << io::format_double(r.t) << ',' << io::format_double(r.particle_number) << ','
            << io::format_double(r.kinetic_running);
        for (double s : r.eps_std) out << ',' << io::format_double(s);
        out << ',' << io::format_double(r.orthonormality_drift) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void KsRun::write_density_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "t,x,rho,j\n";
    for (std::size_t s = 0; s < times.size(); ++s) {
        const RealField rho = density(snapshots[s]);
        const RealField j = current(snapshots[s]);
        const Grid1D& ax = rho.grid().axis(0);
        for (std::size_t i = 0; i < rho.size(); ++i)
            out << io::format_double(times[s]) << ',' << io::format_double(ax.x(i)) << ','
                << io::format_double(rho[i]) << ',' << io::format_double(j[i]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

RealField occupied_density(const Eigenstates& eig) {
    RealField rho(eig.states.front().grid(), 0.0);
    for (const auto& phi : eig.states)
        for (std::size_t k = 0; k < rho.size(); ++k) rho[k] += std::norm(phi[k]);
    return rho;
}

}  // namespace

StationaryResult stationary_limit(const Grid1D& grid, std::size_t n_orbitals, const FunctionalConfig& fc, double mass,
                                  const StationaryOptions& opt) {
    fc.validate();
    if (fc.external.time_dependent()) throw InvalidArgument("stationary limit needs a time-independent functional");
    if (n_orbitals == 0) throw InvalidArgument("stationary limit needs at least one orbital");
    if (!(opt.mixing > 0.0 && opt.mixing <= 1.0)) throw InvalidArgument("mixing must lie in (0, 1]");
    const Grid g(grid);
    const RealField v_ext = fc.external.evaluate(g, 0.0);
    StationaryResult res;
    RealField rho_in = occupied_density(lowest_eigenstates(grid, v_ext, n_orbitals, mass));
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        const Eigenstates eig = lowest_eigenstates(grid, effective_potential(rho_in, fc, 0.0), n_orbitals, mass);
        const RealField rho_out = occupied_density(eig);
        const double change = max_abs_difference(rho_out, rho_in);
        res.residual_history.push_back(change);
        res.orbitals = OrbitalSet{eig.states, mass};
        res.energies = eig.energies;
        if (change <= opt.tolerance) {
            res.converged = true;
            break;
        }
        for (std::size_t k = 0; k < rho_in.size(); ++k)
            rho_in[k] = (1.0 - opt.mixing) * rho_in[k] + opt.mixing * rho_out[k];
    }
    return res;
}

double fixed_point_defect(const OrbitalSet& os, const FunctionalConfig& fc, double alpha) {
    const RealField rho = density(os);
    const Eigenstates eig =
        lowest_eigenstates(os.grid().axis(0), effective_potential(rho, fc, 0.0), os.size(), os.mass);
    const RealField rho_out = occupied_density(eig);
    double worst = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) worst = std::max(worst, alpha * std::abs(rho_out[k] - rho[k]));
    return worst;
}

}  // namespace qfd::ks
