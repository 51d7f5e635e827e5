#include "qfd/propagator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"
#include "qfd/tridiagonal.hpp"

namespace qfd {

std::string_view to_string(Scheme s) { return s == Scheme::split_operator ? "split_operator" : "crank_nicolson"; }

Scheme scheme_from_string(std::string_view name) {
    if (name == "split_operator") return Scheme::split_operator;
    if (name == "crank_nicolson") return Scheme::crank_nicolson;
    throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

double PropagatorConfig::default_dt(const Grid& g, double mass) {
    double h = g.axis(0).dx;
    for (std::size_t a = 1; a < g.dims(); ++a) h = std::min(h, g.axis(a).dx);
    return 0.01 * mass * h * h;
}

void PropagatorConfig::validate(const Grid& g) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("propagator.dt must be positive");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("propagator.mass must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw InvalidArgument("propagator.t_final must be >= 0");
    if (scheme == Scheme::split_operator) {
        for (std::size_t a = 0; a < g.dims(); ++a)
            if (g.axis(a).boundary != Boundary::periodic)
                throw InvalidArgument("propagator.scheme split_operator requires periodic boundaries");
    }
    if (absorbing.enabled) {
        if (!(absorbing.fraction > 0.0 && absorbing.fraction < 0.5))
            throw InvalidArgument("propagator.absorbing_fraction must lie in (0, 0.5)");
        if (!(absorbing.strength > 0.0)) throw InvalidArgument("propagator.absorbing_strength must be positive");
    }
}

std::size_t PropagatorConfig::step_count() const {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

struct Propagator::Impl {
    Grid grid;
    PropagatorConfig cfg;
    std::vector<double> absorb;  // W(x) >= 0, empty when disabled
    double absorbed = 0.0;

    // split operator
    fftw_complex* buffer = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<double> k2;
    double phase_dt = std::numeric_limits<double>::quiet_NaN();
    std::vector<complex> kinetic_phase;

    // 2D Crank-Nicolson kinetic Cayley factors
    double adi_dt = std::numeric_limits<double>::quiet_NaN();
    std::array<linalg::ConstantTridiagonal, 2> adi_lhs;

    Impl(Grid g, PropagatorConfig c) : grid(std::move(g)), cfg(c) {
        cfg.validate(grid);
        if (cfg.absorbing.enabled) build_absorber();
        if (cfg.scheme == Scheme::split_operator) build_fft();
    }

    ~Impl() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (buffer) fftw_free(buffer);
    }

    [[nodiscard]] double kappa(std::size_t a) const {
        const double h = grid.axis(a).dx;
        return 1.0 / (2.0 * cfg.mass * h * h);
    }

    void build_absorber() {
        absorb.assign(grid.size(), 0.0);
        auto ramp = [&](const Grid1D& ax, std::size_t i) {
            const double width = cfg.absorbing.fraction * (ax.x_max() - ax.x_min);
            const double depth = std::max(ax.x_min + width - ax.x(i), ax.x(i) - (ax.x_max() - width));
            if (depth <= 0.0) return 0.0;
            const double u = depth / width;
            return cfg.absorbing.strength * u * u * u * u;
        };
        if (grid.dims() == 1) {
            for (std::size_t i = 0; i < grid.size(); ++i) absorb[i] = ramp(grid.axis(0), i);
        } else {
            const std::size_t ny = grid.axis(1).n_points;
            for (std::size_t k = 0; k < grid.size(); ++k)
                absorb[k] = ramp(grid.axis(0), k / ny) + ramp(grid.axis(1), k % ny);
        }
    }

    void build_fft() {
        const std::size_t n = grid.size();
        buffer = fftw_alloc_complex(n);
        // FFTW_ESTIMATE keeps the chosen algorithm, and hence round-off, identical across runs.
        if (grid.dims() == 1) {
            const int nx = static_cast<int>(grid.axis(0).n_points);
            forward = fftw_plan_dft_1d(nx, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
            backward = fftw_plan_dft_1d(nx, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            const int nx = static_cast<int>(grid.axis(0).n_points);
            const int ny = static_cast<int>(grid.axis(1).n_points);
            forward = fftw_plan_dft_2d(nx, ny, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
            backward = fftw_plan_dft_2d(nx, ny, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        auto wavenumbers = [](const Grid1D& ax) {
            std::vector<double> k(ax.n_points);
            const double dk = 2.0 * std::numbers::pi / ax.length();
            const auto n = static_cast<long>(ax.n_points);
            for (long j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = dk * static_cast<double>(j <= n / 2 ? j : j - n);
            return k;
        };
        k2.assign(n, 0.0);
        if (grid.dims() == 1) {
            const auto kx = wavenumbers(grid.axis(0));
            for (std::size_t i = 0; i < n; ++i) k2[i] = kx[i] * kx[i];
        } else {
            const auto kx = wavenumbers(grid.axis(0));
            const auto ky = wavenumbers(grid.axis(1));
            const std::size_t ny = ky.size();
            for (std::size_t k = 0; k < n; ++k) k2[k] = kx[k / ny] * kx[k / ny] + ky[k % ny] * ky[k % ny];
        }
    }

    void potential_half(ComplexField& psi, std::span<const double> v, double dt) const {
        const double h = 0.5 * dt;
        if (absorb.empty()) {
            for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= std::polar(1.0, -v[k] * h);
        } else {
            for (std::size_t k = 0; k < psi.size(); ++k)
                psi[k] *= std::polar(std::exp(-absorb[k] * std::abs(h)), -v[k] * h);
        }
    }

    void split_step(ComplexField& psi, std::span<const double> v0, std::span<const double> v1, double dt) {
        const std::size_t n = psi.size();
        if (phase_dt != dt) {
            kinetic_phase.resize(n);
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k)
                kinetic_phase[k] = std::polar(inv_n, -k2[k] * dt / (2.0 * cfg.mass));
            phase_dt = dt;
        }
        potential_half(psi, v0, dt);
        auto* buf = reinterpret_cast<complex*>(buffer);
        std::copy(psi.begin(), psi.end(), buf);
        fftw_execute(forward);
        for (std::size_t k = 0; k < n; ++k) buf[k] *= kinetic_phase[k];
        fftw_execute(backward);
        std::copy(buf, buf + n, psi.begin());
        potential_half(psi, v1, dt);
    }

    // Dirichlet axes pin psi to zero on the two end nodes and solve for the
    // interior only; periodic axes solve the full cyclic system.
    void cn_step_1d(ComplexField& psi, std::span<const double> v0, std::span<const double> v1, double dt) const {
        const std::size_t n = psi.size();
        const bool periodic = grid.axis(0).boundary == Boundary::periodic;
        const std::size_t lo = periodic ? 0 : 1;
        const std::size_t m = periodic ? n : n - 2;
        const double kap = kappa(0);
        const complex half_i_dt(0.0, 0.5 * dt);
        std::vector<complex> lower(m, -half_i_dt * kap), upper(m, -half_i_dt * kap), diag(m), rhs(m);
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t i = lo + r;
            const complex hdiag(2.0 * kap + 0.5 * (v0[i] + v1[i]), absorb.empty() ? 0.0 : -absorb[i]);
            diag[r] = 1.0 + half_i_dt * hdiag;
            const complex neighbours = psi[i == 0 ? n - 1 : i - 1] + psi[i + 1 == n ? 0 : i + 1];
            rhs[r] = psi[i] - half_i_dt * (hdiag * psi[i] - kap * neighbours);
        }
        if (periodic) linalg::solve_cyclic_tridiagonal(lower, diag, upper, rhs);
        else linalg::solve_tridiagonal(lower, diag, upper, rhs);
        std::copy(rhs.begin(), rhs.end(), psi.begin() + static_cast<std::ptrdiff_t>(lo));
        if (!periodic) psi[0] = psi[n - 1] = 0.0;
    }

    void cn_step_2d(ComplexField& psi, std::span<const double> v0, std::span<const double> v1, double dt) {
        if (adi_dt != dt) {
            for (std::size_t a = 0; a < 2; ++a) {
                const double kap = kappa(a);
                const complex half_i_dt(0.0, 0.5 * dt);
                const bool periodic = grid.axis(a).boundary == Boundary::periodic;
                adi_lhs[a] = linalg::ConstantTridiagonal(grid.axis(a).n_points - (periodic ? 0 : 2), -half_i_dt * kap,
                                                          1.0 + half_i_dt * (2.0 * kap), -half_i_dt * kap,
                                                          periodic);
            }
            adi_dt = dt;
        }
        potential_half(psi, v0, dt);
        for (std::size_t a = 0; a < 2; ++a) kinetic_cayley(psi, a, dt);
        potential_half(psi, v1, dt);
    }

    // psi <- (1 + i dt T_a / 2)^-1 (1 - i dt T_a / 2) psi along every line of axis a.
    void kinetic_cayley(ComplexField& psi, std::size_t a, double dt) const {
        const Grid1D& ax = grid.axis(a);
        const std::size_t n = ax.n_points;
        const std::size_t s = grid.stride(a);
        const std::size_t lines = grid.size() / n;
        const bool periodic = ax.boundary == Boundary::periodic;
        const std::size_t lo = periodic ? 0 : 1;
        const std::size_t m = periodic ? n : n - 2;
        const double kap = kappa(a);
        const complex half_i_dt(0.0, 0.5 * dt);
        std::vector<complex> line(m);
        for (std::size_t l = 0; l < lines; ++l) {
            complex* p = &psi[a == 0 ? l : l * n];
            for (std::size_t r = 0; r < m; ++r) {
                const std::size_t i = lo + r;
                const complex nb = p[(i == 0 ? n - 1 : i - 1) * s] + p[(i + 1 == n ? 0 : i + 1) * s];
                line[r] = p[i * s] - half_i_dt * kap * (2.0 * p[i * s] - nb);
            }
            for (std::size_t r = 0; r < m; ++r) p[(lo + r) * s] = line[r];
            adi_lhs[a].solve(p + lo * s, s);
            if (!periodic) p[0] = p[(n - 1) * s] = 0.0;
        }
    }

    [[nodiscard]] double finite_difference_kinetic(const ComplexField& psi) const {
        double total = 0.0;
        for (std::size_t a = 0; a < grid.dims(); ++a) {
            const Grid1D& ax = grid.axis(a);
            const std::size_t n = ax.n_points;
            const std::size_t s = grid.stride(a);
            const std::size_t lines = grid.size() / n;
            const bool periodic = ax.boundary == Boundary::periodic;
            double sum = 0.0;
            for (std::size_t l = 0; l < lines; ++l) {
                const std::size_t off = (grid.dims() == 2 && a == 1) ? l * n : l;
                const complex* p = &psi[off];
                for (std::size_t i = 0; i + 1 < n; ++i) sum += std::norm(p[(i + 1) * s] - p[i * s]);
                if (periodic) sum += std::norm(p[0] - p[(n - 1) * s]);
                else sum += std::norm(p[0]) + std::norm(p[(n - 1) * s]);
            }
            total += kappa(a) * sum;
        }
        return total * grid.cell_volume();
    }

    [[nodiscard]] double spectral_kinetic(const ComplexField& psi) const {
        const std::size_t n = psi.size();
        // New-array execution needs the planner's alignment, so use fftw_malloc storage.
        std::unique_ptr<fftw_complex, decltype(&fftw_free)> scratch(fftw_alloc_complex(n), &fftw_free);
        auto* tmp = reinterpret_cast<complex*>(scratch.get());
        std::copy(psi.begin(), psi.end(), tmp);
        fftw_execute_dft(forward, scratch.get(), scratch.get());
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += std::norm(tmp[k]) * k2[k];
        return sum / (2.0 * cfg.mass) * grid.cell_volume() / static_cast<double>(n);
    }
};

Propagator::Propagator(Grid grid, PropagatorConfig cfg) : impl_(std::make_unique<Impl>(std::move(grid), cfg)) {}
Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

const Grid& Propagator::grid() const { return impl_->grid; }
const PropagatorConfig& Propagator::config() const { return impl_->cfg; }
double Propagator::absorbed_norm() const { return impl_->absorbed; }

void Propagator::advance(ComplexField& psi, std::span<const double> v_start, std::span<const double> v_end,
                         double dt) {
    require_same_grid(psi.grid(), impl_->grid, "Propagator::advance");
    if (v_start.size() != psi.size() || v_end.size() != psi.size())
        throw InvalidArgument("potential size does not match the grid");
    const double before = impl_->absorb.empty() ? 0.0 : norm_squared(psi);
    if (impl_->cfg.scheme == Scheme::split_operator) impl_->split_step(psi, v_start, v_end, dt);
    else if (impl_->grid.dims() == 1) impl_->cn_step_1d(psi, v_start, v_end, dt);
    else impl_->cn_step_2d(psi, v_start, v_end, dt);
    if (!impl_->absorb.empty()) impl_->absorbed += before - norm_squared(psi);
}

void Propagator::step(ComplexField& psi, const PotentialSpec& v, double t) {
    const double dt = impl_->cfg.dt;
    const RealField v0 = v.evaluate(impl_->grid, t);
    if (!v.time_dependent()) {
        advance(psi, v0.values(), v0.values(), dt);
        return;
    }
    const RealField v1 = v.evaluate(impl_->grid, t + dt);
    advance(psi, v0.values(), v1.values(), dt);
}

double Propagator::kinetic_energy(const ComplexField& psi) const {
    require_same_grid(psi.grid(), impl_->grid, "Propagator::kinetic_energy");
    return impl_->cfg.scheme == Scheme::split_operator ? impl_->spectral_kinetic(psi)
                                                       : impl_->finite_difference_kinetic(psi);
}

double Propagator::energy(const ComplexField& psi, const RealField& v) const {
    double pot = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) pot += v[k] * std::norm(psi[k]);
    return kinetic_energy(psi) + pot * impl_->grid.cell_volume();
}

ComplexField step(const ComplexField& psi, const PotentialSpec& v, const PropagatorConfig& cfg, double t) {
    Propagator prop(psi.grid(), cfg);
    ComplexField out = psi;
    prop.step(out, v, t);
    return out;
}

double RunRecord::max_norm_deviation() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.norm - 1.0));
    return m;
}

void RunRecord::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "t,norm,energy,absorbed_flux\n";
    for (const auto& r : rows)
        out << io::format_double(r.t) << ',' << io::format_double(r.norm) << ',' << io::format_double(r.energy) << ','
            << io::format_double(r.absorbed_flux) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

RunRecord propagate(ComplexField psi, const PotentialSpec& v, const PropagatorConfig& cfg,
                    std::span<const Observer> observers, std::size_t stride) {
    if (stride == 0) throw InvalidArgument("observer stride must be positive");
    Propagator prop(psi.grid(), cfg);
    const Grid& g = psi.grid();
    const std::size_t steps = cfg.step_count();
    const bool td = v.time_dependent();
    RealField v_now = v.evaluate(g, 0.0);
    RealField v_next = v_now;

    RunRecord rec;
    rec.dt = cfg.dt;
    rec.steps = steps;
    double last_absorbed = 0.0;
    double last_t = 0.0;
    auto record = [&](std::size_t k, double t) {
        const double flux = t > last_t ? (prop.absorbed_norm() - last_absorbed) / (t - last_t) : 0.0;
        rec.rows.push_back({t, norm_squared(psi), prop.energy(psi, v_now), flux});
        last_absorbed = prop.absorbed_norm();
        last_t = t;
        const Snapshot snap{k, t, psi};
        for (const auto& obs : observers) obs(snap);
    };

    record(0, 0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t1 = static_cast<double>(k) * cfg.dt;
        if (td) v_next = v.evaluate(g, t1);
        prop.advance(psi, v_now.values(), v_next.values(), cfg.dt);
        if (td) std::swap(v_now, v_next);
        const double n2 = norm_squared(psi);
        if (!std::isfinite(n2)) {
            throw NumericalError("non-finite wavefunction after step " + std::to_string(k) + " (t = " +
                                 io::format_double(t1) + "); dt too large or potential singular");
        }
        if (k % stride == 0 || k == steps) record(k, t1);
    }
    rec.final_state = std::move(psi);
    return rec;
}

}  // namespace qfd
