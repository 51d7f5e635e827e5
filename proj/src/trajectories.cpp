#include "qfd/trajectories.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"
#include "qfd/parallel.hpp"

namespace qfd::traj {
namespace {

// Node-centred cell of node i: [lower, lower + width).
struct Cell {
    double lower;
    double width;
};

Cell cell_of(const Grid1D& ax, std::size_t i) {
    if (ax.boundary == Boundary::dirichlet) {
        if (i == 0) return {ax.x(0), 0.5 * ax.dx};
        if (i + 1 == ax.n_points) return {ax.x(i) - 0.5 * ax.dx, 0.5 * ax.dx};
    }
    return {ax.x(i) - 0.5 * ax.dx, ax.dx};
}

// Inverse CDF over cells with probabilities p (summing to ~1).
class CellDistribution {
public:
    CellDistribution(const Grid1D& ax, std::vector<double> p) : ax_(ax), cum_(p.size() + 1, 0.0) {
        for (std::size_t i = 0; i < p.size(); ++i) cum_[i + 1] = cum_[i] + std::max(p[i], 0.0);
        total_ = cum_.back();
    }

    [[nodiscard]] double total() const { return total_; }

    [[nodiscard]] double sample(double u) const {
        const double target = u * total_;
        auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), target);
        if (it == cum_.end()) --it;
        // skip empty cells so the sample lands where the density is
        auto i = static_cast<std::size_t>(it - cum_.begin()) - 1;
        while (cum_[i + 1] - cum_[i] <= 0.0 && i + 1 < cum_.size() - 1) ++i;
        const double p = cum_[i + 1] - cum_[i];
        const double frac = p > 0.0 ? std::clamp((target - cum_[i]) / p, 0.0, 1.0) : 0.5;
        const Cell c = cell_of(ax_, i);
        return c.lower + frac * c.width;
    }

    /// Model CDF at x (x already mapped into the axis extent).
    [[nodiscard]] double cdf(double x) const {
        const double u = (x - ax_.x_min) / ax_.dx + (ax_.boundary == Boundary::periodic ? 0.5 : 0.0);
        // Locate the cell containing x.
        std::size_t i;
        if (ax_.boundary == Boundary::periodic) {
            if (u <= 0.0) return 0.0;
            i = std::min(static_cast<std::size_t>(u), ax_.n_points - 1);
        } else {
            if (x <= ax_.x(0)) return 0.0;
            if (x >= ax_.x_max()) return 1.0;
            i = std::min(static_cast<std::size_t>(std::floor(u + 0.5)), ax_.n_points - 1);
        }
        const Cell c = cell_of(ax_, i);
        const double frac = std::clamp((x - c.lower) / c.width, 0.0, 1.0);
        return (cum_[i] + frac * (cum_[i + 1] - cum_[i])) / total_;
    }

    [[nodiscard]] double quantile(double q) const { return sample(std::clamp(q, 0.0, 1.0)); }

private:
    Grid1D ax_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

// Map a coordinate into the axis' cell range [first cell lower, last cell upper).
double into_axis(const Grid1D& ax, double x) {
    if (ax.boundary == Boundary::periodic) {
        const double lo = ax.x_min - 0.5 * ax.dx;
        double r = std::fmod(x - lo, ax.length());
        if (r < 0.0) r += ax.length();
        return lo + r;
    }
    return std::clamp(x, ax.x_min, ax.x_max());
}

std::vector<double> marginal(const RealField& rho, std::size_t axis) {
    const Grid& g = rho.grid();
    const Grid1D& ax = g.axis(axis);
    std::vector<double> p(ax.n_points, 0.0);
    if (g.dims() == 1) {
        for (std::size_t i = 0; i < ax.n_points; ++i) p[i] = rho[i] * ax.weight(i);
        return p;
    }
    const Grid1D& gx = g.axis(0);
    const Grid1D& gy = g.axis(1);
    for (std::size_t i = 0; i < gx.n_points; ++i)
        for (std::size_t j = 0; j < gy.n_points; ++j)
            p[axis == 0 ? i : j] += rho(i, j) * gx.weight(i) * gy.weight(j);
    return p;
}

void check_normalized(const RealField& rho) {
    const double total = integrate(rho);
    if (!(std::abs(total - 1.0) <= 1e-6))
        throw InvalidArgument("initial density is not normalized (integral = " + io::format_double(total) + ")");
}

// Catmull-Rom weights for fractional offset f in [0, 1).
std::array<double, 4> catmull_rom(double f) {
    const double f2 = f * f, f3 = f2 * f;
    return {0.5 * (-f3 + 2.0 * f2 - f), 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0), 0.5 * (-3.0 * f3 + 4.0 * f2 + f),
            0.5 * (f3 - f2)};
}

// Stencil indices and weights along one axis for coordinate x.
struct AxisStencil {
    std::array<std::size_t, 4> idx;
    std::array<double, 4> w;
};

AxisStencil stencil(const Grid1D& ax, double x) {
    const auto n = static_cast<long>(ax.n_points);
    double u = (x - ax.x_min) / ax.dx;
    if (ax.boundary == Boundary::periodic) {
        u = std::fmod(u, static_cast<double>(n));
        if (u < 0.0) u += static_cast<double>(n);
    } else {
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    }
    long i = static_cast<long>(std::floor(u));
    if (i >= n) i = n - 1;
    const double f = u - static_cast<double>(i);
    AxisStencil s{};
    s.w = catmull_rom(f);
    for (long o = -1; o <= 2; ++o) {
        long k = i + o;
        if (ax.boundary == Boundary::periodic) k = ((k % n) + n) % n;
        else k = std::clamp(k, 0L, n - 1);
        s.idx[static_cast<std::size_t>(o + 1)] = static_cast<std::size_t>(k);
    }
    return s;
}

}  // namespace

std::string_view to_string(Sampling s) {
    switch (s) {
        case Sampling::inverse_cdf: return "inverse_cdf";
        case Sampling::uniform_grid: return "uniform_grid";
        case Sampling::explicit_list: return "explicit_list";
    }
    return "?";
}

Sampling sampling_from_string(std::string_view name) {
    if (name == "inverse_cdf") return Sampling::inverse_cdf;
    if (name == "uniform_grid") return Sampling::uniform_grid;
    if (name == "explicit_list") return Sampling::explicit_list;
    throw InvalidArgument("unknown sampling '" + std::string(name) + "'");
}

std::vector<Point> TrajectorySet::at(std::size_t time_index) const {
    std::vector<Point> out(n_traj());
    for (std::size_t k = 0; k < n_traj(); ++k) out[k] = positions[k].at(time_index);
    return out;
}

void TrajectorySet::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (dims == 1 ? "traj_id,t,x\n" : "traj_id,t,x,y\n");
    for (std::size_t k = 0; k < n_traj(); ++k) {
        for (std::size_t s = 0; s < times.size(); ++s) {
            out << k << ',' << io::format_double(times[s]) << ',' << io::format_double(positions[k][s][0]);
            if (dims == 2) out << ',' << io::format_double(positions[k][s][1]);
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void TrajectorySet::write_manifest(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "# seed=" << seed << " sampling=" << to_string(sampling) << " dims=" << dims << " n_traj=" << n_traj()
        << " n_times=" << times.size() << '\n';
    out << "traj_id,flags,exited,node_flagged\n";
    for (std::size_t k = 0; k < n_traj(); ++k)
        out << k << ',' << int(flags[k]) << ',' << ((flags[k] & flag_exited) ? 1 : 0) << ','
            << ((flags[k] & flag_node) ? 1 : 0) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

TrajectorySet TrajectorySet::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    TrajectorySet ts;
    if (line == "traj_id,t,x") ts.dims = 1;
    else if (line == "traj_id,t,x,y") ts.dims = 2;
    else throw IoError(path.string() + ": unexpected trajectory header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        if (cols.size() != ts.dims + 2) throw IoError(path.string() + ": malformed row '" + line + "'");
        const auto id = static_cast<std::size_t>(std::stoull(cols[0]));
        const double t = io::parse_double(cols[1]);
        if (id == ts.positions.size()) ts.positions.emplace_back();
        if (id + 1 != ts.positions.size()) throw IoError(path.string() + ": rows not grouped by trajectory");
        if (id == 0) ts.times.push_back(t);
        ts.positions[id].push_back({io::parse_double(cols[2]), ts.dims == 2 ? io::parse_double(cols[3]) : 0.0});
    }
    ts.flags.assign(ts.positions.size(), flag_none);
    ts.sampling = Sampling::explicit_list;
    return ts;
}

std::vector<Point> sample_initial(const RealField& rho0, std::size_t n, std::uint64_t seed) {
    check_normalized(rho0);
    const Grid& g = rho0.grid();
    const CounterRng rng(seed);
    std::vector<Point> out(n, Point{0.0, 0.0});
    const CellDistribution mx(g.axis(0), marginal(rho0, 0));
    if (g.dims() == 1) {
        for (std::size_t k = 0; k < n; ++k) out[k][0] = mx.sample(rng.uniform(k, 0));
        return out;
    }
    const Grid1D& gx = g.axis(0);
    const Grid1D& gy = g.axis(1);
    // Conditional distributions in y, one per x node, built lazily.
    std::vector<std::optional<CellDistribution>> cond(gx.n_points);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = mx.sample(rng.uniform(k, 0));
        // node whose cell holds x
        double u = (x - gx.x_min) / gx.dx;
        auto i = static_cast<std::size_t>(std::clamp(std::floor(u + 0.5), 0.0, double(gx.n_points - 1)));
        if (!cond[i]) {
            std::vector<double> p(gy.n_points);
            for (std::size_t j = 0; j < gy.n_points; ++j) p[j] = rho0(i, j) * gy.weight(j);
            cond[i].emplace(gy, std::move(p));
        }
        out[k] = {x, cond[i]->sample(rng.uniform(k, 1))};
    }
    return out;
}

std::vector<Point> quantile_positions(const RealField& rho0, std::size_t n) {
    check_normalized(rho0);
    if (rho0.grid().dims() != 1) throw InvalidArgument("quantile sampling is 1D only");
    const CellDistribution d(rho0.grid().axis(0), marginal(rho0, 0));
    std::vector<Point> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = {d.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n)), 0.0};
    return out;
}

TrajectorySet make_set(std::vector<Point> initial, std::size_t dims, double t0, std::uint64_t seed, Sampling s) {
    TrajectorySet ts;
    ts.dims = dims;
    ts.times = {t0};
    ts.seed = seed;
    ts.sampling = s;
    ts.positions.reserve(initial.size());
    for (const auto& p : initial) ts.positions.push_back({p});
    ts.flags.assign(initial.size(), flag_none);
    return ts;
}

void VelocityField::add_snapshot(double t, std::vector<RealField> velocity, MaskField mask) {
    if (velocity.size() != grid_.dims()) throw InvalidArgument("velocity snapshot needs one field per axis");
    for (const auto& v : velocity) require_same_grid(v.grid(), grid_, "VelocityField::add_snapshot");
    require_same_grid(mask.grid(), grid_, "VelocityField::add_snapshot");
    if (!times_.empty() && !(t > times_.back())) throw InvalidArgument("velocity snapshots must increase in time");
    times_.push_back(t);
    velocity_.push_back(std::move(velocity));
    masks_.push_back(std::move(mask));
}

VelocityField VelocityField::from_wavefunctions(const std::vector<ComplexField>& psi, const std::vector<double>& times,
                                                double mass, double eps_node) {
    if (psi.empty() || psi.size() != times.size()) throw InvalidArgument("need one time per wavefunction snapshot");
    VelocityField vf(psi.front().grid());
    const RealField zero(psi.front().grid(), 0.0);
    for (std::size_t s = 0; s < psi.size(); ++s) vf.add_snapshot(hydro::decompose(psi[s], zero, times[s], mass, eps_node));
    return vf;
}

bool VelocityField::inside(const Point& p) const {
    for (std::size_t a = 0; a < grid_.dims(); ++a) {
        const Grid1D& ax = grid_.axis(a);
        if (ax.boundary == Boundary::dirichlet && (p[a] < ax.x_min || p[a] > ax.x_max())) return false;
    }
    return true;
}

std::optional<Point> VelocityField::spatial(std::size_t s, const Point& p) const {
    const auto& vel = velocity_[s];
    const auto& mask = masks_[s];
    if (grid_.dims() == 1) {
        const AxisStencil sx = stencil(grid_.axis(0), p[0]);
        double v = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            if (mask[sx.idx[a]]) return std::nullopt;
            v += sx.w[a] * vel[0][sx.idx[a]];
        }
        return Point{v, 0.0};
    }
    const AxisStencil sx = stencil(grid_.axis(0), p[0]);
    const AxisStencil sy = stencil(grid_.axis(1), p[1]);
    const std::size_t ny = grid_.axis(1).n_points;
    Point v{0.0, 0.0};
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t k = sx.idx[a] * ny + sy.idx[b];
            if (mask[k]) return std::nullopt;
            const double w = sx.w[a] * sy.w[b];
            v[0] += w * vel[0][k];
            v[1] += w * vel[1][k];
        }
    }
    return v;
}

std::optional<Point> VelocityField::at(const Point& p, double t) const {
    if (times_.empty()) throw InvalidArgument("velocity field has no snapshots");
    const double slack = 1e-9 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - slack || t > times_.back() + slack)
        throw InvalidArgument("time " + io::format_double(t) + " outside the velocity snapshots");
    if (times_.size() == 1) return spatial(0, p);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t s = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    s = std::min(s, times_.size() - 2);
    const double w = std::clamp((t - times_[s]) / (times_[s + 1] - times_[s]), 0.0, 1.0);
    if (w == 0.0) return spatial(s, p);
    if (w == 1.0) return spatial(s + 1, p);
    const auto a = spatial(s, p);
    const auto b = spatial(s + 1, p);
    if (!a || !b) return std::nullopt;
    return Point{(1.0 - w) * (*a)[0] + w * (*b)[0], (1.0 - w) * (*a)[1] + w * (*b)[1]};
}

namespace {

enum class StepResult { ok, node, exited };

StepResult rk4(const VelocityField& vf, Point& p, double t, double h) {
    auto eval = [&](const Point& q, double tq, Point& out) {
        if (!vf.inside(q)) return StepResult::exited;
        const auto v = vf.at(q, tq);
        if (!v) return StepResult::node;
        out = *v;
        return StepResult::ok;
    };
    Point k1, k2, k3, k4;
    StepResult r;
    if ((r = eval(p, t, k1)) != StepResult::ok) return r;
    if ((r = eval({p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]}, t + 0.5 * h, k2)) != StepResult::ok) return r;
    if ((r = eval({p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]}, t + 0.5 * h, k3)) != StepResult::ok) return r;
    if ((r = eval({p[0] + h * k3[0], p[1] + h * k3[1]}, t + h, k4)) != StepResult::ok) return r;
    const Point next{p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                     p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    if (!vf.inside(next)) return StepResult::exited;
    p = next;
    return StepResult::ok;
}

// Step of size h, halving near nodes up to `depth_left` more times.
StepResult advance(const VelocityField& vf, Point& p, double t, double h, unsigned depth_left) {
    Point trial = p;
    const StepResult r = rk4(vf, trial, t, h);
    if (r == StepResult::ok) {
        p = trial;
        return r;
    }
    if (r == StepResult::exited || depth_left == 0) return r;
    Point half = p;
    StepResult r1 = advance(vf, half, t, 0.5 * h, depth_left - 1);
    if (r1 != StepResult::ok) return r1;
    r1 = advance(vf, half, t + 0.5 * h, 0.5 * h, depth_left - 1);
    if (r1 == StepResult::ok) p = half;
    return r1;
}

}  // namespace

void integrate(TrajectorySet& ts, const VelocityField& vf, double t1, const IntegrateOptions& opt) {
    if (ts.times.empty()) throw InvalidArgument("trajectory set has no initial time");
    if (!(opt.dt > 0.0)) throw InvalidArgument("trajectories.dt must be positive");
    if (opt.record_stride == 0) throw InvalidArgument("trajectories.stride must be positive");
    if (ts.dims != vf.grid().dims()) throw InvalidArgument("trajectory and velocity dimensions differ");
    const double t0 = ts.times.back();
    const auto steps = static_cast<std::size_t>(std::llround((t1 - t0) / opt.dt));
    if (steps == 0) return;
    const double h = (t1 - t0) / static_cast<double>(steps);

    std::vector<double> new_times;
    for (std::size_t k = 1; k <= steps; ++k)
        if (k % opt.record_stride == 0 || k == steps) new_times.push_back(t0 + static_cast<double>(k) * h);

    const auto n = static_cast<long>(ts.n_traj());
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (long idx = 0; idx < n; ++idx) {
        const auto tr = static_cast<std::size_t>(idx);
        auto& path = ts.positions[tr];
        Point p = path.back();
        path.reserve(path.size() + new_times.size());
        for (std::size_t k = 1; k <= steps; ++k) {
            if (ts.flags[tr] == flag_none) {
                const double t = t0 + static_cast<double>(k - 1) * h;
                const StepResult r = advance(vf, p, t, h, opt.max_halvings);
                if (r == StepResult::exited) ts.flags[tr] |= flag_exited;
                else if (r == StepResult::node) ts.flags[tr] |= flag_node;
            }
            if (k % opt.record_stride == 0 || k == steps) path.push_back(p);
        }
    }
    ts.times.insert(ts.times.end(), new_times.begin(), new_times.end());
}

EquivarianceReport equivariance_check(const std::vector<Point>& positions, const RealField& rho, std::size_t bins) {
    const std::size_t n = positions.size();
    if (n < 1000) throw InvalidArgument("equivariance check needs at least 1000 trajectories (got " + std::to_string(n) + ")");
    if (bins < 2) throw InvalidArgument("equivariance check needs at least 2 bins");
    const Grid& g = rho.grid();
    EquivarianceReport rep;
    rep.n = n;
    rep.bins = bins;
    rep.ks_bound = 1.63 / std::sqrt(static_cast<double>(n));
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const Grid1D& ax = g.axis(a);
        const CellDistribution d(ax, marginal(rho, a));
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = into_axis(ax, positions[k][a]);
        std::sort(x.begin(), x.end());
        double ks = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double f = d.cdf(x[k]);
            ks = std::max({ks, static_cast<double>(k + 1) / static_cast<double>(n) - f,
                           f - static_cast<double>(k) / static_cast<double>(n)});
        }
        rep.ks = std::max(rep.ks, ks);
        // Equal-probability bins from the model CDF.
        std::vector<double> counts(bins, 0.0);
        for (double xi : x) {
            const auto b = static_cast<std::size_t>(d.cdf(xi) * static_cast<double>(bins));
            counts[std::min(b, bins - 1)] += 1.0;
        }
        const double expected = static_cast<double>(n) / static_cast<double>(bins);
        double chi2 = 0.0;
        for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
        rep.chi2 = std::max(rep.chi2, chi2);
    }
    rep.chi2_critical = boost::math::quantile(boost::math::chi_squared(static_cast<double>(bins - 1)), 0.99);
    return rep;
}

EquivarianceReport equivariance_check(const TrajectorySet& ts, std::size_t time_index, const RealField& rho,
                                      std::size_t bins) {
    if (ts.dims != rho.grid().dims()) throw InvalidArgument("trajectory and density dimensions differ");
    return equivariance_check(ts.at(time_index), rho, bins);
}

CrossingReport non_crossing_check(const TrajectorySet& ts) {
    if (ts.dims != 1) throw InvalidArgument("non-crossing check is defined for 1D trajectories");
    CrossingReport rep;
    if (ts.n_traj() < 2) return rep;
    std::vector<std::size_t> order(ts.n_traj());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ts.positions[a][0][0] < ts.positions[b][0][0]; });
    for (std::size_t s = 0; s < ts.times.size(); ++s) {
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const std::size_t a = order[k], b = order[k + 1];
            if (ts.positions[a][s][0] > ts.positions[b][s][0]) {
                rep.ok = false;
                rep.time_index = s;
                rep.first = a;
                rep.second = b;
                return rep;
            }
        }
    }
    return rep;
}

}  // namespace qfd::traj
