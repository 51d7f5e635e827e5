#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "qfd/checks.hpp"
#include "qfd/error.hpp"
#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"
#include "qfd/states.hpp"

namespace qfd::app {
namespace fs = std::filesystem;

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::single: return "single";
        case Mode::twobody_full: return "twobody_full";
        case Mode::twobody_hartree: return "twobody_hartree";
        case Mode::reduced: return "reduced";
        case Mode::qfdft: return "qfdft";
        case Mode::check: return "check";
    }
    return "?";
}

namespace {

// Schema-checked view of one TOML table. Every key read is marked; finish()
// rejects the rest. Applied defaults are written back into the table so the
// normalized echo is a complete, re-runnable config.
class Section {
public:
    Section(toml::table& t, std::string path, std::vector<std::string>& defaults)
        : t_(&t), path_(std::move(path)), defaults_(&defaults) {
        for (const auto& [k, v] : t) original_.insert(std::string(k.str()));
    }

    [[nodiscard]] bool has(const std::string& key) const { return t_->contains(key); }

    double number(const std::string& key) {
        const auto* n = node(key);
        if (auto v = n->value<double>(); v && std::isfinite(*v)) return *v;
        fail(key, "expected a finite number");
    }
    double number_or(const std::string& key, double fallback) {
        if (has(key)) return number(key);
        note_default(key, fallback);
        return fallback;
    }
    double positive(const std::string& key) {
        const double v = number(key);
        if (!(v > 0.0)) fail(key, "must be > 0 (got " + io::format_double(v) + ")");
        return v;
    }
    double positive_or(const std::string& key, double fallback) {
        if (has(key)) return positive(key);
        note_default(key, fallback);
        return fallback;
    }
    std::int64_t integer(const std::string& key) {
        const auto* n = node(key);
        if (!n->is_integer()) fail(key, "expected an integer");
        return n->as_integer()->get();
    }
    std::size_t count(const std::string& key, std::size_t minimum = 1) {
        const auto v = integer(key);
        if (v < static_cast<std::int64_t>(minimum)) fail(key, "must be >= " + std::to_string(minimum));
        return static_cast<std::size_t>(v);
    }
    std::size_t count_or(const std::string& key, std::size_t fallback, std::size_t minimum = 1) {
        if (has(key)) return count(key, minimum);
        note_default(key, static_cast<std::int64_t>(fallback));
        return fallback;
    }
    std::string text(const std::string& key) {
        const auto* n = node(key);
        if (!n->is_string()) fail(key, "expected a string");
        return n->as_string()->get();
    }
    std::string text_or(const std::string& key, const std::string& fallback) {
        if (has(key)) return text(key);
        note_default(key, fallback);
        return fallback;
    }
    bool flag(const std::string& key) {
        const auto* n = node(key);
        if (!n->is_boolean()) fail(key, "expected true or false");
        return n->as_boolean()->get();
    }
    bool flag_or(const std::string& key, bool fallback) {
        if (has(key)) return flag(key);
        note_default(key, fallback);
        return fallback;
    }
    std::vector<double> numbers(const std::string& key, std::size_t size) {
        const auto* n = node(key);
        const auto* arr = n->as_array();
        if (!arr || arr->size() != size) fail(key, "expected an array of " + std::to_string(size) + " numbers");
        std::vector<double> out;
        for (const auto& e : *arr) {
            auto v = e.value<double>();
            if (!v || !std::isfinite(*v)) fail(key, "expected an array of finite numbers");
            out.push_back(*v);
        }
        return out;
    }
    /// Existing file, resolved against `base` and echoed as an absolute path.
    fs::path file(const std::string& key, const fs::path& base) {
        fs::path p = text(key);
        if (p.is_relative()) p = base / p;
        p = p.lexically_normal();
        if (!fs::is_regular_file(p)) fail(key, "file not found: " + p.string());
        t_->insert_or_assign(key, p.string());
        return p;
    }

    Section sub(const std::string& key) {
        auto* n = node(key);
        if (!n->is_table()) fail(key, "expected a table");
        return {*n->as_table(), qualified(key), *defaults_};
    }
    std::optional<Section> sub_if(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return sub(key);
    }
    std::vector<Section> tables(const std::string& key) {
        auto* n = node(key);
        auto* arr = n->as_array();
        if (!arr || !arr->is_array_of_tables()) fail(key, "expected an array of tables ([[" + qualified(key) + "]])");
        std::vector<Section> out;
        for (std::size_t i = 0; i < arr->size(); ++i)
            out.emplace_back(*(*arr)[i].as_table(), qualified(key) + "[" + std::to_string(i) + "]", *defaults_);
        return out;
    }

    void set(const std::string& key, const std::string& value) { t_->insert_or_assign(key, value); }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& k : original_)
            if (!used_.count(k)) throw ValidationError("unknown key '" + qualified(k) + "'");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ValidationError(qualified(key) + ": " + what);
    }
    [[nodiscard]] std::string qualified(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    toml::node* node(const std::string& key) {
        auto* n = t_->get(key);
        if (!n) throw ValidationError("missing required key '" + qualified(key) + "'");
        used_.insert(key);
        return n;
    }
    template <typename T>
    void note_default(const std::string& key, T value) {
        t_->insert_or_assign(key, value);
        used_.insert(key);
        std::ostringstream os;
        os << qualified(key) << " = ";
        if constexpr (std::is_same_v<T, double>)
            os << io::format_double(value);
        else if constexpr (std::is_same_v<T, bool>)
            os << (value ? "true" : "false");
        else if constexpr (std::is_same_v<T, std::string>)
            os << '"' << value << '"';
        else
            os << value;
        defaults_->push_back(os.str());
    }

    toml::table* t_;
    std::string path_;
    std::vector<std::string>* defaults_;
    std::set<std::string> original_;
    std::set<std::string> used_;
};

Mode mode_from(const Section& s, const std::string& name) {
    for (Mode m : {Mode::single, Mode::twobody_full, Mode::twobody_hartree, Mode::reduced, Mode::qfdft, Mode::check})
        if (to_string(m) == name) return m;
    s.fail("mode", "unknown mode '" + name + "' (single, twobody_full, twobody_hartree, reduced, qfdft, check)");
}

Grid1D parse_axis(Section& s) {
    const auto n = s.count("n_points", 8);
    const double x_min = s.number("x_min");
    const std::string b = s.text("boundary");
    Boundary boundary;
    try {
        boundary = boundary_from_string(b);
    } catch (const InvalidArgument&) {
        s.fail("boundary", "expected \"periodic\" or \"dirichlet\"");
    }
    if (s.has("dx") == s.has("x_max")) s.fail("dx", "give exactly one of dx and x_max");
    if (s.has("dx")) return Grid1D(n, x_min, s.positive("dx"), boundary);
    const double x_max = s.number("x_max");
    if (!(x_max > x_min)) s.fail("x_max", "must exceed x_min");
    // periodic: [x_min, x_max) holds n cells; dirichlet: both ends are nodes
    if (boundary == Boundary::periodic) return Grid1D(n, x_min, (x_max - x_min) / static_cast<double>(n), boundary);
    return Grid1D::spanning(x_min, x_max, n, boundary);
}

Grid parse_grid(Section& root) {
    Section s = root.sub("grid");
    const Grid1D gx = parse_axis(s);
    Grid g = gx;
    if (auto y = s.sub_if("y")) {
        g = Grid(gx, parse_axis(*y));
        y->finish();
    }
    s.finish();
    return g;
}

RealField read_real_table(const fs::path& p) {
    return p.extension() == ".csv" ? io::read_real_csv(p) : io::read_real_binary(p);
}

ComplexField read_complex(const fs::path& p) {
    return p.extension() == ".csv" ? io::read_complex_csv(p) : io::read_complex_binary(p);
}

PotentialSpec parse_potential(Section& root, const Grid& g, const fs::path& base, double mass) {
    Section s = root.sub("potential");
    const std::string kind = s.text("kind");
    PotentialSpec::Profile profile;
    if (kind == "free") {
        profile = potentials::Free{};
    } else if (kind == "harmonic") {
        profile = potentials::Harmonic{s.positive("omega"), mass, s.number_or("center", 0.0)};
    } else if (kind == "gaussian_barrier") {
        profile = potentials::GaussianBarrier{s.number("height"), s.positive("width"), s.number_or("center", 0.0)};
    } else if (kind == "double_slit_2d") {
        if (g.dims() != 2) s.fail("kind", "double_slit_2d needs a 2D grid ([grid.y])");
        profile = potentials::DoubleSlit2D{s.number("wall_x"), s.positive("wall_thickness"), s.number("height"),
                                           s.positive("slit_separation"), s.positive("slit_width")};
    } else if (kind == "custom_table") {
        const fs::path p = s.file("file", base);
        RealField table;
        try {
            table = read_real_table(p);
        } catch (const IoError& e) {
            s.fail("file", e.what());
        }
        if (!(table.grid() == g)) s.fail("file", "table grid does not match [grid]");
        profile = potentials::CustomTable{std::move(table)};
    } else {
        s.fail("kind", "unknown potential '" + kind +
                           "' (free, harmonic, gaussian_barrier, double_slit_2d, custom_table)");
    }
    Envelope env;
    if (auto e = s.sub_if("envelope")) {
        const std::string ek = e->text("kind");
        if (ek == "constant") {
            env.kind = Envelope::Kind::constant;
        } else if (ek == "sinusoidal") {
            env.kind = Envelope::Kind::sinusoidal;
            env.amplitude = e->number("amplitude");
            env.omega = e->number("omega");
        } else {
            e->fail("kind", "expected \"constant\" or \"sinusoidal\"");
        }
        e->finish();
    }
    s.finish();
    return PotentialSpec(std::move(profile), env);
}

// One analytic family (or a file) on grid g.
ComplexField parse_state(Section& s, const Grid& g, const fs::path& base, double mass) {
    const std::string kind = s.text("kind");
    ComplexField psi;
    if (kind == "gaussian") {
        if (g.dims() == 1) {
            psi = states::gaussian(g.axis(0), s.number("center"), s.positive("sigma"), s.number_or("k", 0.0));
        } else {
            const auto c = s.numbers("center", 2), sig = s.numbers("sigma", 2);
            const auto k = s.has("k") ? s.numbers("k", 2) : std::vector<double>{0.0, 0.0};
            if (!(sig[0] > 0 && sig[1] > 0)) s.fail("sigma", "must be > 0");
            psi = states::product(states::gaussian(g.axis(0), c[0], sig[0], k[0]),
                                  states::gaussian(g.axis(1), c[1], sig[1], k[1]));
        }
    } else if (kind == "plane_wave") {
        if (g.dims() != 1) s.fail("kind", "plane_wave is 1D only");
        psi = states::plane_wave(g.axis(0), s.number("k"));
    } else if (kind == "harmonic_eigenstate") {
        if (g.dims() != 1) s.fail("kind", "harmonic_eigenstate is 1D only");
        const auto level = s.integer("level");
        if (level < 0) s.fail("level", "must be >= 0");
        psi = states::harmonic_eigenstate(g.axis(0), static_cast<unsigned>(level), s.positive("omega"), mass);
    } else if (kind == "vortex") {
        if (g.dims() != 2) s.fail("kind", "vortex needs a 2D grid");
        psi = states::single_vortex(g.as_2d());
    } else if (kind == "file") {
        const fs::path p = s.file("file", base);
        try {
            psi = read_complex(p);
        } catch (const IoError& e) {
            s.fail("file", e.what());
        }
        if (!(psi.grid() == g)) s.fail("file", "wavefunction grid does not match [grid]");
    } else {
        s.fail("kind", "unknown initial state '" + kind +
                           "' (gaussian, plane_wave, harmonic_eigenstate, vortex, file)");
    }
    s.finish();
    pin_dirichlet_edges(psi);
    if (!(norm_squared(psi) > 0.0)) throw ValidationError(s.qualified("kind") + ": initial state vanishes on the grid");
    normalize(psi);
    return psi;
}

traj::Sampling sampling_from(Section& s) {
    const std::string name = s.text_or("sampling", "inverse_cdf");
    if (name == "inverse_cdf") return traj::Sampling::inverse_cdf;
    if (name == "uniform_grid") return traj::Sampling::uniform_grid;
    s.fail("sampling", "expected \"inverse_cdf\" or \"uniform_grid\"");
}

}  // namespace

Scenario parse_scenario(const std::string& toml_text, const fs::path& base_dir,
                        const std::optional<fs::path>& output_override) {
    toml::table doc;
    try {
        doc = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
        throw ParseError(os.str());
    }

    Scenario sc;
    Section root(doc, "", sc.defaults);
    sc.mode = mode_from(root, root.text("mode"));
    {
        // the configured directory is still read (and type-checked) when overridden
        const fs::path configured = output_override && !root.has("output") ? fs::path() : fs::path(root.text("output"));
        fs::path out = output_override ? *output_override : configured;
        if (out.empty()) root.fail("output", "must not be empty");
        if (out.is_relative()) out = (output_override ? fs::current_path() : base_dir) / out;
        sc.output = out.lexically_normal();
        root.set("output", sc.output.string());
    }
    if (root.has("seed")) {
        const auto seed = root.integer("seed");
        if (seed < 0) root.fail("seed", "must be >= 0");
        sc.seed = static_cast<std::uint64_t>(seed);
    }

    if (sc.mode == Mode::check) {
        sc.suite = root.text("suite");
        if (!checks::is_suite(sc.suite)) root.fail("suite", "unknown check suite '" + sc.suite + "'");
        root.finish();
    } else {
        sc.grid = parse_grid(root);
        const bool many = sc.mode == Mode::twobody_full || sc.mode == Mode::twobody_hartree || sc.mode == Mode::reduced;
        if ((many || sc.mode == Mode::qfdft) && sc.grid.dims() != 1)
            throw ValidationError("grid.y: " + std::string(to_string(sc.mode)) + " mode uses a 1D per-particle grid");
        Section p = root.sub("propagator");
        try {
            sc.propagator.scheme = scheme_from_string(p.text("scheme"));
        } catch (const InvalidArgument&) {
            p.fail("scheme", "expected \"split_operator\" or \"crank_nicolson\"");
        }
        sc.propagator.mass = p.positive_or("mass", 1.0);
        sc.propagator.t_final = p.number("t_final");
        if (!(sc.propagator.t_final >= 0.0)) p.fail("t_final", "must be >= 0");
        sc.propagator.dt = p.has("dt") ? p.number("dt")
                                       : p.positive_or("dt", PropagatorConfig::default_dt(sc.grid, sc.propagator.mass));
        if (!(sc.propagator.dt > 0.0)) p.fail("dt", "must be > 0 (got " + io::format_double(sc.propagator.dt) + ")");
        if (auto a = p.sub_if("absorbing")) {
            sc.propagator.absorbing.enabled = a->flag("enabled");
            if (sc.propagator.absorbing.enabled) {
                sc.propagator.absorbing.strength = a->positive("strength");
                sc.propagator.absorbing.fraction = a->positive_or("fraction", 0.1);
                if (!(sc.propagator.absorbing.fraction < 0.5)) a->fail("fraction", "must be < 0.5");
            }
            a->finish();
        }
        const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                                sc.propagator.t_final / sc.propagator.dt)));
        sc.snapshot_stride = p.count_or("snapshot_stride", std::max<std::size_t>(1, steps / 20));
        const Grid run_grid = many ? mb::configuration_grid(sc.grid.axis(0)) : sc.grid;
        try {
            sc.propagator.validate(run_grid);
        } catch (const InvalidArgument& e) {
            throw ValidationError(e.what());
        }
        p.finish();
        sc.potential = parse_potential(root, sc.grid, base_dir, sc.propagator.mass);
        sc.write_hydro = root.flag_or("write_hydro", true);

        Section init = root.sub("initial");
        const double mass = sc.propagator.mass;
        if (sc.mode == Mode::single) {
            sc.psi0 = parse_state(init, sc.grid, base_dir, mass);
        } else if (many) {
            const std::string sym = init.text_or("symmetry", "none");
            try {
                sc.symmetry = mb::symmetry_from_string(sym);
            } catch (const InvalidArgument&) {
                init.fail("symmetry", "expected none, symmetric or antisymmetric");
            }
            if (sc.mode == Mode::twobody_hartree && sc.symmetry != mb::Symmetry::none)
                init.fail("symmetry", "a Hartree product carries no exchange symmetry; use \"none\"");
            auto parts = init.tables("particle");
            if (parts.size() != 2) init.fail("particle", "exactly two [[initial.particle]] tables are required");
            for (std::size_t k = 0; k < 2; ++k) sc.particles[k] = parse_state(parts[k], sc.grid, base_dir, mass);
            init.finish();
            if (auto i = root.sub_if("interaction")) {
                sc.interaction = {i->number("strength"), i->positive("softening")};
                sc.predictor_corrector = i->flag_or("predictor_corrector", false);
                i->finish();
            }
            if (sc.symmetry != mb::Symmetry::none) {
                try {
                    (void)mb::symmetrize(mb::product(sc.particles[0], sc.particles[1]), sc.symmetry);
                } catch (const InvalidArgument& e) {
                    throw ValidationError(std::string("initial.symmetry: ") + e.what());
                }
            }
        } else {  // qfdft
            Section f = root.sub("functional");
            sc.functional.external = sc.potential;
            sc.functional.hartree = f.flag("hartree");
            if (sc.functional.hartree) {
                sc.functional.hartree_strength = f.number("hartree_strength");
                sc.functional.softening = f.positive("softening");
            }
            sc.functional.xc = f.text_or("xc", "none");
            sc.functional.xc_scale = f.number_or("xc_scale", 1.0);
            sc.predictor_corrector = f.flag_or("predictor_corrector", false);
            try {
                sc.functional.validate();
            } catch (const InvalidArgument& e) {
                f.fail("xc", e.what());
            }
            f.finish();

            const std::string start = init.text_or("kind", "orbitals");
            if (start == "orbitals") {
                for (auto& o : init.tables("orbital")) sc.orbitals.orbitals.push_back(parse_state(o, sc.grid, base_dir, mass));
                sc.orbitals.mass = mass;
                try {
                    sc.orbitals.validate();
                } catch (const InvalidArgument& e) {
                    init.fail("orbital", e.what());
                }
            } else if (start == "stationary") {
                sc.stationary_orbitals = init.count("count");
                if (sc.potential.time_dependent())
                    init.fail("kind", "the stationary start needs a time-independent external potential");
                if (auto st = root.sub_if("stationary")) {
                    sc.stationary.mixing = st->positive_or("mixing", sc.stationary.mixing);
                    if (!(sc.stationary.mixing <= 1.0)) st->fail("mixing", "must be in (0, 1]");
                    sc.stationary.tolerance = st->positive_or("tolerance", sc.stationary.tolerance);
                    sc.stationary.max_iterations = st->count_or("max_iterations", sc.stationary.max_iterations);
                    st->finish();
                }
            } else {
                init.fail("kind", "expected \"orbitals\" or \"stationary\"");
            }
            init.finish();
        }

        if (auto t = root.sub_if("trajectories")) {
            if (sc.mode == Mode::qfdft) t->fail("n", "trajectories are not integrated in qfdft mode");
            if (!sc.seed) throw ValidationError("seed: required when [trajectories] is present");
            sc.trajectories.enabled = true;
            sc.trajectories.n = t->count("n");
            sc.trajectories.sampling = sampling_from(*t);
            if (sc.trajectories.sampling == traj::Sampling::uniform_grid && (sc.grid.dims() != 1 || many))
                t->fail("sampling", "uniform_grid sampling is 1D single-particle only");
            const double snap_dt = sc.propagator.dt * static_cast<double>(sc.snapshot_stride);
            sc.trajectories.integrate.dt = t->positive_or("dt", std::min(0.01, snap_dt));
            sc.trajectories.integrate.record_stride = t->count_or("record_stride", 10);
            sc.trajectories.integrate.max_halvings =
                static_cast<unsigned>(t->count_or("max_halvings", 8, 0));
            t->finish();
        }
        root.finish();
    }

    std::ostringstream t, j;
    t << toml::toml_formatter(doc);
    j << toml::json_formatter(doc);
    sc.normalized_toml = t.str();
    sc.normalized_json = j.str();
    return sc;
}

Scenario load_scenario(const fs::path& config, const std::optional<fs::path>& output_override) {
    std::ifstream in(config);
    if (!in) throw ParseError("cannot read config file " + config.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const fs::path abs = fs::absolute(config).lexically_normal();
    Scenario sc = parse_scenario(buf.str(), abs.parent_path(), output_override);
    sc.config_path = abs;
    return sc;
}

}  // namespace qfd::app
