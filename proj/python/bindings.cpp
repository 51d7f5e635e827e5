#include <chrono>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "manifest.hpp"
#include "qfd/checks.hpp"
#include "qfd/error.hpp"
#include "qfd/field_io.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/manybody.hpp"
#include "qfd/operators.hpp"
#include "qfd/propagator.hpp"
#include "qfd/qfdft.hpp"
#include "qfd/reduced.hpp"
#include "qfd/states.hpp"
#include "qfd/trajectories.hpp"
#include "scenario.hpp"

namespace py = pybind11;
using namespace qfd;

using carray = py::array_t<complex, py::array::c_style | py::array::forcecast>;
using darray = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

std::vector<py::ssize_t> shape_of(const Grid& g) {
    if (g.dims() == 1) return {static_cast<py::ssize_t>(g.axis(0).n_points)};
    return {static_cast<py::ssize_t>(g.axis(0).n_points), static_cast<py::ssize_t>(g.axis(1).n_points)};
}

template <typename T>
py::array_t<T> to_numpy(const Field<T>& f) {
    py::array_t<T> a(shape_of(f.grid()));
    std::copy(f.begin(), f.end(), a.mutable_data());
    return a;
}

template <typename T, typename A>
Field<T> from_numpy(const Grid& g, const A& a) {
    if (static_cast<std::size_t>(a.size()) != g.size())
        throw InvalidArgument("array has " + std::to_string(a.size()) + " values, grid has " + std::to_string(g.size()));
    return Field<T>(g, std::vector<T>(a.data(), a.data() + a.size()));
}

ComplexField cfield(const Grid& g, const carray& a) { return from_numpy<complex>(g, a); }
RealField rfield(const Grid& g, const darray& a) { return from_numpy<double>(g, a); }

py::dict hydro_dict(const hydro::HydroFields& hf) {
    py::dict d;
    d["rho"] = to_numpy(hf.rho);
    py::list v, j;
    for (const auto& f : hf.velocity) v.append(to_numpy(f));
    for (const auto& f : hf.current) j.append(to_numpy(f));
    d["velocity"] = v;
    d["current"] = j;
    d["q_potential"] = to_numpy(hf.q_potential);
    d["v_eff"] = to_numpy(hf.v_eff);
    d["node_mask"] = to_numpy(hf.node_mask);
    d["time"] = hf.time;
    return d;
}

py::array_t<double> positions_array(const traj::TrajectorySet& ts) {
    const auto n = static_cast<py::ssize_t>(ts.n_traj()), m = static_cast<py::ssize_t>(ts.times.size()),
               d = static_cast<py::ssize_t>(ts.dims);
    py::array_t<double> a({n, m, d});
    auto r = a.mutable_unchecked<3>();
    for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t k = 0; k < m; ++k)
            for (py::ssize_t c = 0; c < d; ++c) r(i, k, c) = ts.positions[i][k][c];
    return a;
}

py::dict trajectory_dict(const traj::TrajectorySet& ts) {
    py::dict d;
    d["times"] = ts.times;
    d["positions"] = positions_array(ts);
    d["flags"] = ts.flags;
    return d;
}

PotentialSpec potential_from(const py::object& v) {
    if (v.is_none()) return PotentialSpec::free();
    return v.cast<PotentialSpec>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Grid-based quantum hydrodynamics";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<GridMismatch>(m, "GridMismatch", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<app::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<app::ValidationError>(m, "ValidationError", PyExc_ValueError);

    // ------------------------------------------------------------- grids
    py::class_<Grid1D>(m, "Axis")
        .def(py::init([](std::size_t n, double x_min, double dx, const std::string& boundary) {
                 return Grid1D(n, x_min, dx, boundary_from_string(boundary));
             }),
             py::arg("n_points"), py::arg("x_min"), py::arg("dx"), py::arg("boundary") = "periodic")
        .def_static(
            "spanning",
            [](double a, double b, std::size_t n, const std::string& boundary) {
                return Grid1D::spanning(a, b, n, boundary_from_string(boundary));
            },
            py::arg("x_min"), py::arg("x_max"), py::arg("n_points"), py::arg("boundary") = "dirichlet")
        .def_readonly("n_points", &Grid1D::n_points)
        .def_readonly("x_min", &Grid1D::x_min)
        .def_readonly("dx", &Grid1D::dx)
        .def_property_readonly("boundary", [](const Grid1D& g) { return std::string(to_string(g.boundary)); })
        .def("coordinates", [](const Grid1D& g) { return py::array_t<double>(py::cast(g.coordinates())); })
        .def("__repr__", [](const Grid1D& g) {
            return "Axis(n_points=" + std::to_string(g.n_points) + ", x_min=" + io::format_double(g.x_min) +
                   ", dx=" + io::format_double(g.dx) + ", boundary='" + std::string(to_string(g.boundary)) + "')";
        });

    py::class_<Grid>(m, "Grid")
        .def(py::init<const Grid1D&>(), py::arg("x"))
        .def(py::init<const Grid1D&, const Grid1D&>(), py::arg("x"), py::arg("y"))
        .def_property_readonly("dims", &Grid::dims)
        .def_property_readonly("shape", [](const Grid& g) { return py::tuple(py::cast(shape_of(g))); })
        .def("axis", &Grid::axis, py::arg("index"))
        .def_property_readonly("cell_volume", &Grid::cell_volume)
        .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; });
    py::implicitly_convertible<Grid1D, Grid>();

    // -------------------------------------------------------- potentials
    py::class_<PotentialSpec>(m, "Potential")
        .def_static("free", &PotentialSpec::free)
        .def_static("harmonic", &PotentialSpec::harmonic, py::arg("omega"), py::arg("mass") = 1.0,
                    py::arg("center") = 0.0)
        .def_static(
            "gaussian_barrier",
            [](double h, double w, double c) { return PotentialSpec(potentials::GaussianBarrier{h, w, c}); },
            py::arg("height"), py::arg("width"), py::arg("center") = 0.0)
        .def_static(
            "double_slit_2d",
            [](double wall_x, double thickness, double height, double sep, double width) {
                return PotentialSpec(potentials::DoubleSlit2D{wall_x, thickness, height, sep, width});
            },
            py::arg("wall_x"), py::arg("wall_thickness"), py::arg("height"), py::arg("slit_separation"),
            py::arg("slit_width"))
        .def_static(
            "table", [](const Grid& g, const darray& v) { return PotentialSpec(potentials::CustomTable{rfield(g, v)}); },
            py::arg("grid"), py::arg("values"))
        .def(
            "with_envelope",
            [](const PotentialSpec& p, double amplitude, double omega) {
                return PotentialSpec(p.profile(), Envelope{Envelope::Kind::sinusoidal, amplitude, omega});
            },
            py::arg("amplitude"), py::arg("omega"), "Scale by 1 + amplitude * sin(omega t).")
        .def(
            "evaluate", [](const PotentialSpec& p, const Grid& g, double t) { return to_numpy(p.evaluate(g, t)); },
            py::arg("grid"), py::arg("t") = 0.0)
        .def_property_readonly("time_dependent", &PotentialSpec::time_dependent)
        .def("__repr__", &PotentialSpec::describe);

    // ------------------------------------------------------------ states
    m.def(
        "gaussian", [](const Grid1D& g, double c, double s, double k) { return to_numpy(states::gaussian(g, c, s, k)); },
        py::arg("axis"), py::arg("center"), py::arg("sigma"), py::arg("k") = 0.0);
    m.def(
        "plane_wave", [](const Grid1D& g, double k) { return to_numpy(states::plane_wave(g, k, true)); },
        py::arg("axis"), py::arg("k"));
    m.def(
        "harmonic_eigenstate",
        [](const Grid1D& g, unsigned n, double w, double mass) {
            return to_numpy(states::harmonic_eigenstate(g, n, w, mass));
        },
        py::arg("axis"), py::arg("level"), py::arg("omega"), py::arg("mass") = 1.0);
    m.def(
        "single_vortex", [](const Grid& g) { return to_numpy(states::single_vortex(g.as_2d())); }, py::arg("grid"));
    m.def(
        "norm", [](const Grid& g, const carray& psi) { return norm_squared(cfield(g, psi)); }, py::arg("grid"),
        py::arg("psi"), "Squared norm with the grid's quadrature weights.");

    // -------------------------------------------------------- propagation
    m.def(
        "default_dt", [](const Grid& g, double mass) { return PropagatorConfig::default_dt(g, mass); },
        py::arg("grid"), py::arg("mass") = 1.0);
    m.def(
        "propagate",
        [](const Grid& g, const carray& psi0, const py::object& v, double dt, double t_final,
           const std::string& scheme, double mass, std::size_t stride) {
            PropagatorConfig cfg;
            cfg.dt = dt;
            cfg.t_final = t_final;
            cfg.scheme = scheme_from_string(scheme);
            cfg.mass = mass;
            cfg.validate(g);
            const auto pot = potential_from(v);
            std::vector<ComplexField> snaps;
            std::vector<double> times;
            const Observer keep = [&](const Snapshot& s) {
                snaps.push_back(s.psi);
                times.push_back(s.t);
            };
            RunRecord rec;
            {
                py::gil_scoped_release release;
                rec = propagate(cfield(g, psi0), pot, cfg, {&keep, 1}, stride);
            }
            auto shape = shape_of(g);
            shape.insert(shape.begin(), static_cast<py::ssize_t>(snaps.size()));
            py::array_t<complex> stack(shape);
            auto* out = stack.mutable_data();
            for (const auto& s : snaps) out = std::copy(s.begin(), s.end(), out);
            py::dict d;
            d["times"] = times;
            d["snapshots"] = stack;
            std::vector<double> t, norm, energy;
            for (const auto& r : rec.rows) {
                t.push_back(r.t);
                norm.push_back(r.norm);
                energy.push_back(r.energy);
            }
            d["log_times"] = t;
            d["norms"] = norm;
            d["energies"] = energy;
            return d;
        },
        py::arg("grid"), py::arg("psi0"), py::arg("potential") = py::none(), py::arg("dt"), py::arg("t_final"),
        py::arg("scheme") = "split_operator", py::arg("mass") = 1.0, py::arg("stride") = 1,
        "Propagates psi0; returns times, snapshots (every `stride` steps) and the norm/energy log.");

    // ------------------------------------------------------------- hydro
    m.def(
        "decompose",
        [](const Grid& g, const carray& psi, const py::object& v, double t, double mass, double eps) {
            return hydro_dict(hydro::decompose(cfield(g, psi), potential_from(v), t, mass, eps));
        },
        py::arg("grid"), py::arg("psi"), py::arg("potential") = py::none(), py::arg("t") = 0.0,
        py::arg("mass") = 1.0, py::arg("eps_node") = hydro::default_eps_node,
        "Madelung fields: rho, velocity, current, q_potential, v_eff, node_mask.");
    m.def(
        "quantum_potential",
        [](const Grid& g, const darray& rho, double mass, double eps) {
            return to_numpy(hydro::quantum_potential(rfield(g, rho), mass, eps));
        },
        py::arg("grid"), py::arg("rho"), py::arg("mass") = 1.0, py::arg("eps_node") = hydro::default_eps_node);
    m.def(
        "circulation",
        [](const Grid& g, const carray& psi, const std::vector<std::array<double, 2>>& loop, double mass) {
            return hydro::circulation(hydro::decompose(cfield(g, psi), PotentialSpec::free(), 0.0, mass), loop);
        },
        py::arg("grid"), py::arg("psi"), py::arg("loop"), py::arg("mass") = 1.0);
    m.def("circle_loop", &hydro::circle_loop, py::arg("cx"), py::arg("cy"), py::arg("radius"),
          py::arg("vertices") = 64);

    // ------------------------------------------------------- trajectories
    m.def(
        "trajectories",
        [](const Grid& g, const carray& snapshots, const std::vector<double>& times, std::size_t n,
           std::uint64_t seed, double dt, std::size_t record_stride, double mass) {
            const auto per = static_cast<py::ssize_t>(g.size());
            if (snapshots.size() != per * static_cast<py::ssize_t>(times.size()))
                throw InvalidArgument("snapshots must hold one grid-sized field per time");
            std::vector<ComplexField> psi;
            for (std::size_t k = 0; k < times.size(); ++k)
                psi.emplace_back(g, std::vector<complex>(snapshots.data() + k * per, snapshots.data() + (k + 1) * per));
            traj::TrajectorySet ts;
            {
                py::gil_scoped_release release;
                const auto vf = traj::VelocityField::from_wavefunctions(psi, times, mass);
                ts = traj::make_set(traj::sample_initial(density(psi.front()), n, seed), g.dims(), times.front(),
                                    seed, traj::Sampling::inverse_cdf);
                traj::integrate(ts, vf, times.back(), {dt, record_stride, 8});
            }
            return trajectory_dict(ts);
        },
        py::arg("grid"), py::arg("snapshots"), py::arg("times"), py::arg("n"), py::arg("seed"), py::arg("dt") = 0.01,
        py::arg("record_stride") = 1, py::arg("mass") = 1.0,
        "Samples n starting points from |psi(t0)|^2 and integrates them through the snapshot velocity field.");

    // ---------------------------------------------------- two-body, reduced
    m.def(
        "product_state",
        [](const Grid1D& g, const carray& a, const carray& b, const std::string& symmetry) {
            auto psi = mb::product(cfield(g, a), cfield(g, b));
            const auto s = mb::symmetry_from_string(symmetry);
            return to_numpy(s == mb::Symmetry::none ? psi : mb::symmetrize(psi, s));
        },
        py::arg("axis"), py::arg("psi1"), py::arg("psi2"), py::arg("symmetry") = "none");
    m.def(
        "q_full",
        [](const Grid1D& g, const carray& psi, double mass) {
            return to_numpy(mb::q_full(cfield(mb::configuration_grid(g), psi), mass));
        },
        py::arg("axis"), py::arg("psi"), py::arg("mass") = 1.0);
    m.def(
        "reduced_density_matrix",
        [](const Grid1D& g, const carray& psi, std::size_t traced) {
            const auto rdm = red::reduce(cfield(mb::configuration_grid(g), psi), traced);
            const auto n = static_cast<py::ssize_t>(rdm.size());
            py::array_t<complex> a({n, n});
            auto r = a.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < n; ++i)
                for (py::ssize_t j = 0; j < n; ++j) r(i, j) = rdm.values(i, j);
            py::dict d;
            d["matrix"] = a;
            d["purity"] = red::purity(rdm).purity;
            d["trace"] = rdm.trace();
            d["min_eigenvalue"] = rdm.min_eigenvalue();
            return d;
        },
        py::arg("axis"), py::arg("psi"), py::arg("traced") = 1);

    // -------------------------------------------------------------- qfdft
    m.def(
        "stationary_orbitals",
        [](const Grid1D& g, std::size_t n, const py::object& v, bool hartree, double strength, double softening,
           const std::string& xc, double mass) {
            ks::FunctionalConfig fc;
            fc.external = potential_from(v);
            fc.hartree = hartree;
            fc.hartree_strength = strength;
            fc.softening = softening;
            fc.xc = xc;
            fc.validate();
            const auto res = ks::stationary_limit(g, n, fc, mass);
            py::list orbitals;
            for (const auto& o : res.orbitals.orbitals) orbitals.append(to_numpy(o));
            py::dict d;
            d["orbitals"] = orbitals;
            d["energies"] = res.energies;
            d["residuals"] = res.residual_history;
            d["converged"] = res.converged;
            return d;
        },
        py::arg("axis"), py::arg("count"), py::arg("potential") = py::none(), py::arg("hartree") = false,
        py::arg("hartree_strength") = 1.0, py::arg("softening") = 1.0, py::arg("xc") = "none",
        py::arg("mass") = 1.0, "Self-consistent Kohn-Sham ground state.");

    // ---------------------------------------------------------------- io
    m.def(
        "read_field",
        [](const std::filesystem::path& p) -> py::tuple {
            try {
                const auto f = io::read_complex_binary(p);
                return py::make_tuple(to_numpy(f), f.grid());
            } catch (const IoError&) {
                const auto f = io::read_real_binary(p);
                return py::make_tuple(to_numpy(f), f.grid());
            }
        },
        py::arg("path"), "Reads a binary field file; returns (values, grid).");
    m.def(
        "write_field",
        [](const std::filesystem::path& p, const Grid& g, const py::array& a) {
            if (py::isinstance<py::array_t<complex>>(a))
                io::write_binary(p, cfield(g, a.cast<carray>()));
            else
                io::write_binary(p, rfield(g, a.cast<darray>()));
        },
        py::arg("path"), py::arg("grid"), py::arg("values"));

    // -------------------------------------------------- checks and configs
    m.def("suite_names", &checks::suite_names);
    m.def(
        "check",
        [](const std::string& suite, const std::filesystem::path& artifacts) {
            std::vector<checks::SuiteResult> res;
            {
                py::gil_scoped_release release;
                res = checks::run(suite, artifacts);
            }
            py::list out;
            for (const auto& s : res)
                for (const auto& v : s.verdicts) {
                    py::dict d;
                    d["suite"] = v.suite;
                    d["criterion"] = v.criterion;
                    d["measured"] = v.measured;
                    d["relation"] = std::string(checks::to_string(v.relation));
                    d["threshold"] = v.threshold;
                    d["pass"] = v.pass;
                    out.append(d);
                }
            return out;
        },
        py::arg("suite"), py::arg("artifacts") = std::filesystem::path{},
        "Runs a verification suite; returns one dict per verdict.");
    m.def(
        "run_config",
        [](const std::filesystem::path& config, const std::optional<std::filesystem::path>& output) {
            const auto sc = app::load_scenario(config, output);
            const auto t0 = std::chrono::steady_clock::now();
            app::RunResult r;
            {
                py::gil_scoped_release release;
                r = app::run_scenario(sc);
            }
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            app::write_manifest(sc, r, "python: run_config(" + config.string() + ")", wall);
            std::vector<std::string> files;
            for (const auto& f : r.files) files.push_back(f.generic_string());
            return py::make_tuple(sc.output, files);
        },
        py::arg("config"), py::arg("output") = py::none(),
        "Runs a TOML scenario; returns (output directory, files written).");
}
