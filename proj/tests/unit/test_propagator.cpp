#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfd/operators.hpp"
#include "qfd/propagator.hpp"
#include "qfd/states.hpp"

using namespace qfd;

namespace {

constexpr double pi = std::numbers::pi;

// Position moments from the grid density.
std::pair<double, double> mean_and_width(const ComplexField& psi) {
    const Grid1D g = psi.grid().as_1d();
    double n = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double w = std::norm(psi[i]) * g.weight(i);
        n += w;
        m1 += w * g.x(i);
        m2 += w * g.x(i) * g.x(i);
    }
    m1 /= n;
    return {m1, std::sqrt(m2 / n - m1 * m1)};
}

PropagatorConfig config(Scheme s, double dt, double t_final) {
    PropagatorConfig cfg;
    cfg.scheme = s;
    cfg.dt = dt;
    cfg.t_final = t_final;
    return cfg;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
    const Grid g(Grid1D(64, -5.0, 0.2, Boundary::dirichlet));
    auto cfg = config(Scheme::crank_nicolson, -0.1, 1.0);
    try {
        cfg.validate(g);
        FAIL("expected validation failure");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("dt") != std::string::npos);
    }
    cfg.dt = 0.01;
    cfg.scheme = Scheme::split_operator;
    CHECK_THROWS_AS(cfg.validate(g), InvalidArgument);
    CHECK(PropagatorConfig::default_dt(g, 2.0) == doctest::Approx(0.01 * 2.0 * 0.04));
}

TEST_CASE("free gaussian width follows the closed-form spreading law") {
    const Grid1D g(2048, -51.2, 0.05, Boundary::periodic);
    const double sigma0 = 1.0;
    const auto cfg = config(Scheme::split_operator, 0.005, 5.0);
    ComplexField psi = states::gaussian(g, 0.0, sigma0, 0.0);
    normalize(psi);
    Propagator prop(Grid(g), cfg);
    const auto v = PotentialSpec::free();
    for (int k = 0; k < 1000; ++k) prop.step(psi, v, k * cfg.dt);
    const double expected = states::free_gaussian_width(sigma0, 5.0);
    const auto [mean, width] = mean_and_width(psi);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(width - expected) / expected < 1e-4);
}

TEST_CASE("plane wave phase advances by -k^2 dt / 2m per step") {
    const double L = 20.0;
    const Grid1D g(128, 0.0, L / 128, Boundary::periodic);
    const double k = 2.0 * pi * 3.0 / L;
    for (double mass : {1.0, 2.5}) {
        auto cfg = config(Scheme::split_operator, 0.01, 0.0);
        cfg.mass = mass;
        ComplexField psi = states::plane_wave(g, k, true);
        const ComplexField psi0 = psi;
        Propagator prop(Grid(g), cfg);
        const int steps = 50;
        for (int s = 0; s < steps; ++s) prop.step(psi, PotentialSpec::free(), s * cfg.dt);
        const complex expected = std::polar(1.0, -k * k * cfg.dt * steps / (2.0 * mass));
        double err = 0.0;
        for (std::size_t i = 0; i < g.n_points; ++i) err = std::max(err, std::abs(psi[i] - psi0[i] * expected));
        CHECK(err < 1e-12);
    }
}

TEST_CASE("harmonic ground state modulus is unchanged after one period") {
    const Grid1D g(256, -12.8, 0.1, Boundary::periodic);
    const ComplexField psi0 = states::harmonic_eigenstate(g, 0, 1.0);
    const double period = 2.0 * pi;
    const auto cfg = config(Scheme::split_operator, period / 20000.0, period);
    const auto rec = propagate(psi0, PotentialSpec::harmonic(1.0), cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < g.n_points; ++i) err = std::max(err, std::abs(std::abs(rec.final_state[i]) - std::abs(psi0[i])));
    CHECK(err < 1e-8);
    CHECK(rec.max_norm_deviation() <= 1e-10);
}

TEST_CASE("observers: snapshot count and read-only purity") {
    const Grid1D g(128, -10.0, 20.0 / 128, Boundary::periodic);
    ComplexField psi = states::gaussian(g, -1.0, 1.0, 1.5);
    normalize(psi);
    const auto cfg = config(Scheme::split_operator, 0.01, 1.0);
    std::vector<double> times;
    std::vector<Observer> obs{[&](const Snapshot& s) { times.push_back(s.t); }};
    const auto with = propagate(psi, PotentialSpec::harmonic(0.5), cfg, obs, 10);
    const auto without = propagate(psi, PotentialSpec::harmonic(0.5), cfg);
    CHECK(times.size() == 11);
    CHECK(times.front() == 0.0);
    CHECK(times.back() == doctest::Approx(1.0));
    CHECK(with.rows.size() == 11);
    CHECK(with.final_state.data() == without.final_state.data());
}

TEST_CASE("norm is conserved over 1e4 steps with both schemes") {
    SUBCASE("split operator") {
        const Grid1D g(256, -12.8, 0.1, Boundary::periodic);
        ComplexField psi = states::gaussian(g, 1.0, 0.8, 2.0);
        normalize(psi);
        const auto rec = propagate(psi, PotentialSpec::harmonic(1.0), config(Scheme::split_operator, 1e-3, 10.0), {}, 100);
        CHECK(rec.steps == 10000);
        CHECK(rec.max_norm_deviation() <= 1e-8);
    }
    SUBCASE("crank-nicolson, dirichlet") {
        const Grid1D g = Grid1D::spanning(-12.0, 12.0, 241, Boundary::dirichlet);
        ComplexField psi = states::gaussian(g, 1.0, 0.8, 2.0);
        normalize(psi);
        const auto rec =
            propagate(psi, PotentialSpec::harmonic(1.0), config(Scheme::crank_nicolson, 1e-3, 10.0), {}, 100);
        CHECK(rec.max_norm_deviation() <= 1e-8);
    }
    SUBCASE("crank-nicolson, 2D") {
        const Grid g(Grid1D::spanning(-6.0, 6.0, 49, Boundary::dirichlet), Grid1D(48, -6.0, 0.25, Boundary::periodic));
        ComplexField psi = states::product(states::gaussian(g.axis(0), 0.5, 1.0, 1.0), states::gaussian(g.axis(1), 0.0, 1.0, -1.0));
        pin_dirichlet_edges(psi);
        normalize(psi);
        const auto rec = propagate(psi, PotentialSpec::harmonic(1.0), config(Scheme::crank_nicolson, 1e-3, 10.0), {}, 500);
        CHECK(rec.max_norm_deviation() <= 1e-8);
    }
}

TEST_CASE("crank-nicolson is time reversible") {
    for (auto b : {Boundary::dirichlet, Boundary::periodic}) {
        const Grid1D g(200, -10.0, 0.1, b);
        ComplexField psi = states::gaussian(g, -2.0, 1.0, 3.0);
        pin_dirichlet_edges(psi);
        normalize(psi);
        const ComplexField psi0 = psi;
        Propagator prop(Grid(g), config(Scheme::crank_nicolson, 0.02, 0.0));
        const RealField v = PotentialSpec(potentials::GaussianBarrier{3.0, 0.7, 0.5}).evaluate(Grid(g), 0.0);
        for (int k = 0; k < 100; ++k) prop.advance(psi, v.values(), v.values(), 0.02);
        for (int k = 0; k < 100; ++k) prop.advance(psi, v.values(), v.values(), -0.02);
        CHECK(max_abs_difference(psi, psi0) <= 1e-10);
    }
}

TEST_CASE("energy drift for a time-independent potential") {
    const auto v = PotentialSpec::harmonic(1.0);
    SUBCASE("crank-nicolson") {
        const Grid1D g = Grid1D::spanning(-10.0, 10.0, 401, Boundary::dirichlet);
        ComplexField psi = states::gaussian(g, 1.5, 0.7, 1.0);
        normalize(psi);
        const auto rec = propagate(psi, v, config(Scheme::crank_nicolson, 0.005, 5.0), {}, 10);
        const double e0 = rec.rows.front().energy;
        for (const auto& r : rec.rows) CHECK(std::abs(r.energy - e0) / e0 <= 1e-6);
    }
    SUBCASE("split operator") {
        const Grid1D g(256, -12.8, 0.1, Boundary::periodic);
        ComplexField psi = states::gaussian(g, 1.5, 0.7, 1.0);
        normalize(psi);
        const auto rec = propagate(psi, v, config(Scheme::split_operator, 0.001, 1.0), {}, 10);
        const double e0 = rec.rows.front().energy;
        for (const auto& r : rec.rows) CHECK(std::abs(r.energy - e0) / e0 <= 1e-6);
    }
}

TEST_CASE("split operator and crank-nicolson agree on a free gaussian") {
    const Grid1D g(1024, -25.6, 0.05, Boundary::periodic);
    ComplexField psi = states::gaussian(g, 0.0, 1.0, 0.5);
    normalize(psi);
    const auto so = propagate(psi, PotentialSpec::free(), config(Scheme::split_operator, 0.005, 2.0));
    const auto cn = propagate(psi, PotentialSpec::free(), config(Scheme::crank_nicolson, 0.005, 2.0));
    CHECK(max_abs_difference(density(so.final_state), density(cn.final_state)) <= 1e-4);
}

TEST_CASE("2D crank-nicolson commutes with particle exchange") {
    const Grid1D ax = Grid1D::spanning(-8.0, 8.0, 65, Boundary::dirichlet);
    const Grid g(ax, ax);
    ComplexField psi = states::product(states::gaussian(ax, -1.0, 0.8, 1.0), states::gaussian(ax, 2.0, 1.2, -0.5));
    normalize(psi);
    auto swap = [&](const ComplexField& f) {
        ComplexField s(f.grid());
        for (std::size_t i = 0; i < ax.n_points; ++i)
            for (std::size_t j = 0; j < ax.n_points; ++j) s(i, j) = f(j, i);
        return s;
    };
    const auto cfg = config(Scheme::crank_nicolson, 0.01, 1.0);
    const auto a = propagate(swap(psi), PotentialSpec::harmonic(0.7), cfg).final_state;
    const auto b = swap(propagate(psi, PotentialSpec::harmonic(0.7), cfg).final_state);
    CHECK(max_abs_difference(a, b) <= 1e-10);
}

TEST_CASE("absorbing layer removes outgoing norm and reports it") {
    const Grid1D g = Grid1D::spanning(-20.0, 20.0, 801, Boundary::dirichlet);
    ComplexField psi = states::gaussian(g, 0.0, 1.0, 4.0);
    normalize(psi);
    auto cfg = config(Scheme::crank_nicolson, 0.005, 8.0);
    cfg.absorbing = {true, 0.1, 5.0};
    const auto rec = propagate(psi, PotentialSpec::free(), cfg, {}, 100);
    const double remaining = rec.rows.back().norm;
    CHECK(remaining < 0.05);
    double absorbed = 0.0;
    for (std::size_t k = 1; k < rec.rows.size(); ++k)
        absorbed += rec.rows[k].absorbed_flux * (rec.rows[k].t - rec.rows[k - 1].t);
    CHECK(absorbed + remaining == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("non-finite potential aborts with a diagnostic") {
    const Grid1D g(64, -5.0, 10.0 / 64, Boundary::periodic);
    RealField bad{Grid(g), 0.0};
    bad[5] = std::numeric_limits<double>::infinity();
    ComplexField psi = states::gaussian(g, 0.0, 1.0);
    CHECK_THROWS_AS(propagate(psi, PotentialSpec(potentials::CustomTable{bad}), config(Scheme::split_operator, 0.01, 0.1)),
                    NumericalError);
}
