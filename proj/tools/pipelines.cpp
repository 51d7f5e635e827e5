#include <algorithm>
#include <cstdio>
#include <fstream>

#include "qfd/checks.hpp"
#include "qfd/error.hpp"
#include "qfd/field_io.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/operators.hpp"
#include "qfd/reduced.hpp"
#include "scenario.hpp"

namespace qfd::app {
namespace fs = std::filesystem;

namespace {

std::string indexed(const std::string& stem, std::size_t k, const std::string& ext = ".qfdf") {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%05zu", k);
    return stem + buf + ext;
}

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << header << '\n';
    }
    template <typename... T>
    void row(const T&... v) {
        std::size_t i = 0;
        ((out_ << (i++ ? "," : "") << cell(v)), ...);
        out_ << '\n';
    }

private:
    static std::string cell(double v) { return io::format_double(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    std::ofstream out_;
};

void write_times(const fs::path& path, const std::vector<double>& times, std::size_t stride) {
    Csv csv(path, "index,step,t");
    for (std::size_t k = 0; k < times.size(); ++k) csv.row(k, k * stride, times[k]);
}

std::vector<traj::Point> initial_points(const RealField& rho0, const TrajectorySpec& spec, std::uint64_t seed) {
    return spec.sampling == traj::Sampling::uniform_grid ? traj::quantile_positions(rho0, spec.n)
                                                         : traj::sample_initial(rho0, spec.n, seed);
}

void write_trajectories(const fs::path& dir, const std::string& stem, const traj::TrajectorySet& ts) {
    ts.write_csv(dir / (stem + ".csv"));
    ts.write_manifest(dir / (stem + "_manifest.csv"));
}

void require_series(const std::vector<double>& times) {
    if (times.size() < 2) throw ValidationError("trajectories: need propagator.t_final > 0 to integrate");
}

// ---------------------------------------------------------------- single

void run_single(const Scenario& sc) {
    const fs::path& out = sc.output;
    const PropagatorConfig& cfg = sc.propagator;
    std::vector<ComplexField> snaps;
    std::vector<double> times;
    const Observer keep = [&](const Snapshot& s) {
        snaps.push_back(s.psi);
        times.push_back(s.t);
    };
    const auto record = propagate(sc.psi0, sc.potential, cfg, {&keep, 1}, sc.snapshot_stride);
    record.write_csv(out / "run_log.csv");

    fs::create_directories(out / "snapshots");
    for (std::size_t k = 0; k < snaps.size(); ++k) io::write_binary(out / "snapshots" / indexed("psi", k), snaps[k]);
    write_times(out / "snapshots" / "times.csv", times, sc.snapshot_stride);

    if (sc.write_hydro) {
        fs::create_directories(out / "hydro");
        for (std::size_t k = 0; k < snaps.size(); ++k)
            hydro::write_bundle(out / "hydro", hydro::decompose(snaps[k], sc.potential, times[k], cfg.mass),
                                indexed("s", k, "_"));
    }

    // Continuity at each snapshot from one step either side. An absorbing
    // layer removes norm on purpose, so the audit is skipped with it.
    if (!cfg.absorbing.enabled) {
        Propagator aux(sc.grid, cfg);
        Csv csv(out / "continuity.csv", "t,max_abs,l2");
        for (std::size_t k = 0; k < snaps.size(); ++k) {
            const double t = times[k], dt = cfg.dt;
            const auto v0 = sc.potential.evaluate(sc.grid, t);
            const auto vp = sc.potential.evaluate(sc.grid, t + dt);
            const auto vm = sc.potential.evaluate(sc.grid, t - dt);
            ComplexField plus = snaps[k], minus = snaps[k];
            aux.advance(plus, v0.values(), vp.values(), dt);
            aux.advance(minus, v0.values(), vm.values(), -dt);
            const auto rep = hydro::continuity_residual(hydro::decompose(minus, vm, t - dt, cfg.mass),
                                                        hydro::decompose(snaps[k], v0, t, cfg.mass),
                                                        hydro::decompose(plus, vp, t + dt, cfg.mass), dt);
            csv.row(t, rep.max_abs, rep.l2);
        }
    }

    if (sc.trajectories.enabled) {
        require_series(times);
        const auto vf = traj::VelocityField::from_wavefunctions(snaps, times, cfg.mass);
        auto ts = traj::make_set(initial_points(density(snaps.front()), sc.trajectories, *sc.seed),
                                 sc.grid.dims(), times.front(), *sc.seed, sc.trajectories.sampling);
        traj::integrate(ts, vf, times.back(), sc.trajectories.integrate);
        write_trajectories(out, "trajectories", ts);
    }
}

// -------------------------------------------------------------- two-body

ComplexField two_body_initial(const Scenario& sc) {
    ComplexField psi = mb::product(sc.particles[0], sc.particles[1]);
    if (sc.symmetry != mb::Symmetry::none) psi = mb::symmetrize(psi, sc.symmetry);
    return psi;
}

mb::FullRun run_full(const Scenario& sc) {
    mb::TwoBodyState st{two_body_initial(sc), sc.interaction, sc.potential, sc.symmetry, sc.propagator.mass};
    try {
        st.validate();
    } catch (const InvalidArgument& e) {
        throw ValidationError(std::string("initial: ") + e.what());
    }
    return mb::propagate_full(st, sc.propagator, sc.snapshot_stride);
}

mb::HartreeState hartree_state(const Scenario& sc) {
    return {{sc.particles[0], sc.particles[1]}, sc.interaction, sc.potential, sc.propagator.mass};
}

void write_full_log(const fs::path& path, const mb::FullRun& run) {
    Csv csv(path, "t,norm,energy");
    for (std::size_t k = 0; k < run.times.size(); ++k) csv.row(run.times[k], run.norms[k], run.energies[k]);
}

void run_twobody_full(const Scenario& sc) {
    const fs::path& out = sc.output;
    const double mass = sc.propagator.mass;
    const auto full = run_full(sc);
    write_full_log(out / "run_log.csv", full);

    fs::create_directories(out / "snapshots");
    for (std::size_t k = 0; k < full.snapshots.size(); ++k) {
        io::write_binary(out / "snapshots" / indexed("psi", k), full.snapshots[k]);
        io::write_binary(out / "snapshots" / indexed("rho1", k), mb::marginal_density(full.snapshots[k], 0));
        io::write_binary(out / "snapshots" / indexed("rho2", k), mb::marginal_density(full.snapshots[k], 1));
    }
    write_times(out / "snapshots" / "times.csv", full.times, sc.snapshot_stride);

    if (sc.write_hydro) {
        const Grid cg = full.snapshots.front().grid();
        const auto v_int = sc.interaction.on(cg);
        fs::create_directories(out / "hydro");
        for (std::size_t k = 0; k < full.snapshots.size(); ++k) {
            auto v = sc.potential.evaluate(cg, full.times[k]);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += v_int[i];
            hydro::write_bundle(out / "hydro", hydro::decompose(full.snapshots[k], v, full.times[k], mass),
                                indexed("s", k, "_"));
        }
    }

    // The factorized (Hartree) evolution of the same two orbitals, for contrast.
    const auto hart = mb::propagate_hartree(hartree_state(sc), sc.propagator, sc.snapshot_stride,
                                            sc.predictor_corrector);
    mb::write_comparison_csv(out / "comparison.csv", mb::compare(full, hart, sc.symmetry, mass));

    if (sc.trajectories.enabled) {
        require_series(full.times);
        const auto sets = mb::full_trajectories(full, sc.trajectories.n, *sc.seed, sc.trajectories.integrate, mass);
        write_trajectories(out, "particle1_trajectories", sets[0]);
        write_trajectories(out, "particle2_trajectories", sets[1]);
    }
}

void run_twobody_hartree(const Scenario& sc) {
    const fs::path& out = sc.output;
    const double mass = sc.propagator.mass;
    const auto h = hartree_state(sc);
    try {
        h.validate();
    } catch (const InvalidArgument& e) {
        throw ValidationError(std::string("initial: ") + e.what());
    }
    const auto run = mb::propagate_hartree(h, sc.propagator, sc.snapshot_stride, sc.predictor_corrector);

    fs::create_directories(out / "snapshots");
    {
        Csv csv(out / "run_log.csv", "t,norm1,norm2");
        for (std::size_t k = 0; k < run.times.size(); ++k)
            csv.row(run.times[k], norm_squared(run.snapshots[0][k]), norm_squared(run.snapshots[1][k]));
    }
    for (std::size_t k = 0; k < run.times.size(); ++k)
        for (std::size_t p = 0; p < 2; ++p)
            io::write_binary(out / "snapshots" / indexed("orbital" + std::to_string(p + 1), k), run.snapshots[p][k]);
    write_times(out / "snapshots" / "times.csv", run.times, sc.snapshot_stride);

    if (sc.write_hydro) {
        fs::create_directories(out / "hydro");
        for (std::size_t k = 0; k < run.times.size(); ++k)
            for (std::size_t p = 0; p < 2; ++p) {
                const auto& phi = run.snapshots[p][k];
                auto v = sc.potential.evaluate(phi.grid(), run.times[k]);
                const auto mf = sc.interaction.mean_field(density(run.snapshots[1 - p][k]));
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += mf[i];
                hydro::write_bundle(out / "hydro", hydro::decompose(phi, v, run.times[k], mass),
                                    indexed("p" + std::to_string(p + 1) + "_s", k, "_"));
            }
    }

    if (sc.trajectories.enabled) {
        require_series(run.times);
        // one seed per particle: seed and seed + 1
        const std::array<std::vector<traj::Point>, 2> start{
            initial_points(density(run.snapshots[0].front()), sc.trajectories, *sc.seed),
            initial_points(density(run.snapshots[1].front()), sc.trajectories, *sc.seed + 1)};
        auto sets = mb::hartree_trajectories(run, start, sc.trajectories.integrate, mass);
        for (std::size_t p = 0; p < 2; ++p) {
            sets[p].seed = *sc.seed + p;
            sets[p].sampling = sc.trajectories.sampling;
            write_trajectories(out, "particle" + std::to_string(p + 1) + "_trajectories", sets[p]);
        }
    }
}

// --------------------------------------------------------------- reduced

void run_reduced(const Scenario& sc) {
    const fs::path& out = sc.output;
    const double mass = sc.propagator.mass;
    const auto full = run_full(sc);
    write_full_log(out / "run_log.csv", full);

    std::vector<red::ReducedDensityMatrix> series;
    std::vector<red::ReducedRow> rows;
    fs::create_directories(out / "rdm");
    for (std::size_t k = 0; k < full.snapshots.size(); ++k) {
        series.push_back(red::reduce(full.snapshots[k], 1, full.times[k]));
        series.back().validate();
        rows.push_back(red::summarize(series.back()));
        series.back().write(out / "rdm" / indexed("rdm", k));
        if (sc.write_hydro) {
            const auto rv = red::reduced_velocity(series.back(), mass);
            io::write_binary(out / "rdm" / indexed("rho", k), series.back().diagonal());
            io::write_binary(out / "rdm" / indexed("current", k), red::reduced_current(series.back(), mass));
            io::write_binary(out / "rdm" / indexed("velocity", k), rv.velocity);
        }
    }
    write_times(out / "rdm" / "times.csv", full.times, sc.snapshot_stride);
    red::write_report_csv(out / "reduced_report.csv", rows);

    if (series.size() >= 3) {
        Csv csv(out / "reduced_continuity.csv", "t,max_abs,l2");
        for (std::size_t k = 1; k + 1 < series.size(); ++k) {
            const auto rep = red::continuity_audit(series, k, mass);
            csv.row(series[k].time, rep.max_abs, rep.l2);
        }
    }

    if (sc.trajectories.enabled) {
        require_series(full.times);
        auto ts = red::reduced_trajectories(series, sc.trajectories.n, *sc.seed, sc.trajectories.integrate, mass);
        write_trajectories(out, "reduced_trajectories", ts);
    }
}

// ----------------------------------------------------------------- qfdft

void run_qfdft(const Scenario& sc) {
    const fs::path& out = sc.output;
    const double mass = sc.propagator.mass;
    ks::OrbitalSet start = sc.orbitals;

    if (sc.stationary_orbitals > 0) {
        auto res = ks::stationary_limit(sc.grid.axis(0), sc.stationary_orbitals, sc.functional, mass, sc.stationary);
        {
            Csv csv(out / "stationary_history.csv", "iteration,residual");
            for (std::size_t i = 0; i < res.residual_history.size(); ++i) csv.row(i + 1, res.residual_history[i]);
        }
        {
            Csv csv(out / "stationary_energies.csv", "orbital,energy");
            for (std::size_t i = 0; i < res.energies.size(); ++i) csv.row(i, res.energies[i]);
        }
        if (!res.converged)
            throw NumericalError("stationary start did not converge within " +
                                 std::to_string(sc.stationary.max_iterations) + " iterations (last residual " +
                                 io::format_double(res.residual_history.back()) + ")");
        start = std::move(res.orbitals);
    }

    const auto run = ks::propagate_ks(start, sc.functional, sc.propagator, sc.snapshot_stride,
                                      sc.predictor_corrector);
    run.write_diagnostics_csv(out / "ks_diagnostics.csv");
    run.write_density_csv(out / "ks_density.csv");

    fs::create_directories(out / "orbitals");
    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
        for (std::size_t i = 0; i < run.snapshots[k].size(); ++i)
            io::write_binary(out / "orbitals" / indexed("phi" + std::to_string(i), k), run.snapshots[k].orbitals[i]);
    write_times(out / "orbitals" / "times.csv", run.times, sc.snapshot_stride);

    {
        Csv csv(out / "ks_kinetic.csv", "t,gradient_form,hydrodynamic_form,difference,window");
        for (std::size_t k = 1; k < run.snapshots.size(); ++k) {
            const auto rep = ks::kinetic_functional(run.snapshots, run.times, 0, k);
            csv.row(run.times[k], rep.gradient_form, rep.hydrodynamic_form, rep.difference(), rep.window);
        }
    }
    {
        Csv csv(out / "ks_eps.csv", "t,orbital,eps_mean,eps_std,eps_max_deviation");
        for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
            const auto diag = ks::orbital_diagnostics(run.snapshots[k], sc.functional, run.times[k]);
            for (std::size_t i = 0; i < diag.size(); ++i)
                csv.row(run.times[k], i, diag[i].eps_mean, diag[i].eps_std, diag[i].eps_max_deviation);
        }
    }
}

bool run_checks(const Scenario& sc) {
    const auto results = checks::run(sc.suite, sc.output / "artifacts");
    checks::write_verdicts_csv(sc.output / "verdicts.csv", results);
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed(); });
}

}  // namespace

RunResult run_scenario(const Scenario& sc) {
    fs::create_directories(sc.output);
    RunResult result;
    switch (sc.mode) {
        case Mode::single: run_single(sc); break;
        case Mode::twobody_full: run_twobody_full(sc); break;
        case Mode::twobody_hartree: run_twobody_hartree(sc); break;
        case Mode::reduced: run_reduced(sc); break;
        case Mode::qfdft: run_qfdft(sc); break;
        case Mode::check: result.checks_passed = run_checks(sc); break;
    }
    {
        std::ofstream echo(sc.output / "config.toml");
        echo << sc.normalized_toml << '\n';
    }
    for (const auto& e : fs::recursive_directory_iterator(sc.output))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            result.files.push_back(fs::relative(e.path(), sc.output));
    std::sort(result.files.begin(), result.files.end());
    return result;
}

}  // namespace qfd::app
