#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "qfd/eigensolver.hpp"
#include "qfd/hydrodynamics.hpp"
#include "qfd/operators.hpp"
#include "qfd/propagator.hpp"
#include "qfd/states.hpp"

using namespace qfd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

ComplexField gaussian_2d(const Grid& g, double x0, double y0, double sigma, double kx, double ky) {
    ComplexField psi(g);
    const std::size_t ny = g.axis(1).n_points;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.axis(0).x(k / ny) - x0, y = g.axis(1).x(k % ny) - y0;
        psi[k] = std::exp(-(x * x + y * y) / (4 * sigma * sigma)) * std::polar(1.0, kx * x + ky * y);
    }
    normalize(psi);
    return psi;
}

bool bit_equal(const RealField& a, const RealField& b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

// psi at t - dt, t, t + dt from an accurate split-operator run.
std::array<ComplexField, 3> triple(const ComplexField& psi0, double t, double dt) {
    PropagatorConfig cfg;
    cfg.scheme = Scheme::split_operator;
    cfg.dt = dt;
    Propagator prop(psi0.grid(), cfg);
    ComplexField psi = psi0;
    const RealField v(psi0.grid(), 0.0);
    const auto steps = static_cast<long>(std::llround((t - dt) / dt));
    for (long k = 0; k < steps; ++k) prop.advance(psi, v.values(), v.values(), dt);
    std::array<ComplexField, 3> out{psi, psi, psi};
    prop.advance(psi, v.values(), v.values(), dt);
    out[1] = psi;
    prop.advance(psi, v.values(), v.values(), dt);
    out[2] = psi;
    return out;
}

}  // namespace

TEST_CASE("plane wave: uniform velocity and vanishing quantum potential") {
    const double L = 20.0;
    const Grid1D g(20000, 0.0, L / 20000, Boundary::periodic);
    const double k = two_pi / L;
    for (double mass : {1.0, 3.0}) {
        const auto hf = hydro::decompose(states::plane_wave(g, k, true), PotentialSpec::free(), 0.0, mass);
        CHECK(hf.mask_count() == 0);
        for (std::size_t i = 0; i < g.n_points; ++i) {
            CHECK(std::abs(hf.velocity[0][i] - k / mass) <= 1e-8);
            CHECK(std::abs(hf.q_potential[i]) <= 1e-8);
        }
    }
}

TEST_CASE("gaussian quantum potential matches the closed form") {
    const double sigma = 0.8;
    const Grid1D g = Grid1D::spanning(-8.0, 8.0, 1601, Boundary::dirichlet);
    ComplexField psi = states::gaussian(g, 0.0, sigma);
    const auto hf = hydro::decompose(psi, PotentialSpec::free(), 0.0);
    for (std::size_t i = 1; i + 1 < g.n_points; ++i) {
        const double x = g.x(i);
        if (std::abs(x) > 4.0 * sigma) continue;
        const double exact = 1.0 / (4 * sigma * sigma) - x * x / (8 * std::pow(sigma, 4));
        // -R''/2R of a Gaussian carries a dx^2 R''''/(24 R) truncation error.
        CHECK(std::abs(hf.q_potential[i] - exact) <= 2e-4);
    }
    const std::size_t mid = g.n_points / 2;
    CHECK(hf.q_potential[mid] == doctest::Approx(1.0 / (4 * sigma * sigma)).epsilon(1e-4));
}

TEST_CASE("harmonic ground state: zero velocity and constant effective potential") {
    const Grid1D g = Grid1D::spanning(-10.0, 10.0, 4001, Boundary::dirichlet);
    const PotentialSpec v = PotentialSpec::harmonic(1.0);
    const auto eig = lowest_eigenstates(g, v.profile_on(Grid(g)), 2);
    CHECK(std::abs(eig.energies[0] - 0.5) <= 1e-6);
    const auto hf = hydro::decompose(eig.states[0], v, 0.0);
    std::size_t unmasked = 0;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (hf.node_mask[i]) continue;
        ++unmasked;
        CHECK(hf.velocity[0][i] == 0.0);
        CHECK(std::abs(hf.v_eff[i] - 0.5) <= 1e-6);
    }
    CHECK(unmasked > g.n_points / 2);
    const auto free = hydro::free_motion_criterion(hf, 1e-6);
    for (std::size_t i = 1; i + 1 < g.n_points; ++i)
        if (!hf.node_mask[i - 1] && !hf.node_mask[i] && !hf.node_mask[i + 1]) CHECK(free[i] == 1);
}

TEST_CASE("current equals rho times velocity and the algebraic identity") {
    const Grid1D g(512, -12.8, 0.05, Boundary::periodic);
    ComplexField psi = states::gaussian(g, -1.0, 1.0, 1.3);
    const ComplexField other = states::gaussian(g, 2.0, 0.7, -0.4);
    for (std::size_t i = 0; i < g.n_points; ++i) psi[i] += 0.6 * other[i];
    normalize(psi);
    const auto hf = hydro::decompose(psi, PotentialSpec::free(), 0.0, 1.7);
    const RealField j = hydro::probability_current(psi, 0, 1.7);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        CHECK(std::abs(hf.current[0][i] - j[i]) <= 1e-10);
        if (!hf.node_mask[i]) CHECK(std::abs(hf.current[0][i] - hf.rho[i] * hf.velocity[0][i]) <= 1e-10);
    }
    CHECK(std::abs(integrate(hf.rho) - 1.0) <= 1e-8);
}

TEST_CASE("scale invariance and gauge consistency") {
    const Grid1D g(400, -10.0, 0.05, Boundary::periodic);
    ComplexField psi = states::gaussian(g, 0.3, 1.2, 0.8);
    const ComplexField b = states::gaussian(g, -1.5, 0.6, -2.0);
    for (std::size_t i = 0; i < g.n_points; ++i) psi[i] += 0.4 * b[i];
    normalize(psi);
    const RealField rho = density(psi);
    RealField scaled = rho;
    scaled *= 3.7;
    const RealField q = hydro::quantum_potential(rho);
    const RealField qs = hydro::quantum_potential(scaled);
    for (std::size_t i = 0; i < g.n_points; ++i)
        if (!std::isnan(q[i])) CHECK(std::abs(q[i] - qs[i]) <= 1e-12);

    ComplexField rotated = psi;
    rotated *= std::polar(1.0, 0.7);
    const auto h1 = hydro::decompose(psi, PotentialSpec::free(), 0.0);
    const auto h2 = hydro::decompose(rotated, PotentialSpec::free(), 0.0);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        CHECK(std::abs(h1.rho[i] - h2.rho[i]) <= 1e-15);
        CHECK(h1.node_mask[i] == h2.node_mask[i]);
        if (h1.node_mask[i]) continue;
        CHECK(std::abs(h1.velocity[0][i] - h2.velocity[0][i]) <= 1e-12);
        CHECK(std::abs(h1.q_potential[i] - h2.q_potential[i]) <= 1e-12);
    }
}

TEST_CASE("the two forms of the quantum potential agree") {
    // The forms are equal in the continuum; on the grid they differ by
    // O(dx^2) truncation, which grows with (x/sigma)^4 in the tails.
    const double sigma = 4.0;
    std::vector<double> everywhere;
    for (double dx : {2e-3, 1e-3}) {
        const auto n = static_cast<std::size_t>(std::llround(16 * sigma / dx)) + 1;
        const Grid1D g = Grid1D::spanning(-8 * sigma, 8 * sigma, n, Boundary::dirichlet);
        ComplexField psi = states::gaussian(g, 0.0, sigma, 0.5);
        normalize(psi);
        const RealField rho = density(psi);
        const RealField qr = hydro::quantum_potential(rho);
        const RealField qd = hydro::quantum_potential_density_form(rho);
        double core = 0.0, all = 0.0;
        for (std::size_t i = 0; i < g.n_points; ++i) {
            CHECK(std::isnan(qr[i]) == std::isnan(qd[i]));
            if (std::isnan(qr[i])) continue;
            all = std::max(all, std::abs(qr[i] - qd[i]));
            if (std::abs(g.x(i)) <= 3 * sigma) core = std::max(core, std::abs(qr[i] - qd[i]));
        }
        if (dx == 1e-3) CHECK(core <= 1e-8);
        everywhere.push_back(all);
    }
    CHECK(everywhere[0] / everywhere[1] >= 3.5);
}

TEST_CASE("continuity residual") {
    SUBCASE("stationary state") {
        const Grid1D g = Grid1D::spanning(-8.0, 8.0, 801, Boundary::dirichlet);
        const auto eig = lowest_eigenstates(g, PotentialSpec::harmonic(1.0).profile_on(Grid(g)), 1);
        PropagatorConfig cfg;
        cfg.scheme = Scheme::crank_nicolson;
        cfg.dt = 1e-3;
        Propagator prop(Grid(g), cfg);
        const RealField v = PotentialSpec::harmonic(1.0).profile_on(Grid(g));
        std::vector<hydro::HydroFields> hf;
        ComplexField psi = eig.states[0];
        for (int k = 0; k < 3; ++k) {
            hf.push_back(hydro::decompose(psi, v, k * cfg.dt));
            prop.advance(psi, v.values(), v.values(), cfg.dt);
        }
        const auto rep = hydro::continuity_residual(hf[0], hf[1], hf[2], cfg.dt);
        for (std::size_t i = 0; i < g.n_points; ++i)
            if (!hf[1].node_mask[i]) CHECK(std::abs(rep.residual[i]) <= 1e-8);
    }
    SUBCASE("free gaussian: bounded and second-order") {
        std::vector<double> maxima;
        for (double dx : {0.05, 0.025}) {
            const auto n = static_cast<std::size_t>(std::llround(40.0 / dx));
            const Grid1D g(n, -20.0, dx, Boundary::periodic);
            ComplexField psi = states::gaussian(g, 0.0, 1.0, 1.0);
            normalize(psi);
            const double dt = PropagatorConfig::default_dt(Grid(g), 1.0);
            const auto s = triple(psi, 0.2, dt);
            const auto rep = hydro::continuity_residual(density(s[0]), density(s[2]),
                                                        {hydro::probability_current(s[1], 0)}, dt);
            maxima.push_back(rep.max_abs);
            CHECK(std::abs(integrate(rep.residual)) <= 1e-10);
        }
        CHECK(maxima[0] <= 1e-3);
        CHECK(maxima[0] / maxima[1] >= 3.5);
    }
    SUBCASE("grid mismatch") {
        const RealField a{Grid(Grid1D(16, 0.0, 0.1, Boundary::periodic))};
        const RealField b{Grid(Grid1D(16, 0.0, 0.2, Boundary::periodic))};
        CHECK_THROWS_AS(hydro::continuity_residual(a, b, {a}, 0.1), GridMismatch);
    }
}

TEST_CASE("circulation is quantized around a vortex") {
    const Grid1D ax = Grid1D::spanning(-4.0, 4.0, 161, Boundary::dirichlet);
    const Grid g(ax, ax);
    const auto hf = hydro::decompose(states::single_vortex(g.as_2d()), PotentialSpec::free(), 0.0);
    const auto circle = hydro::circle_loop(0.0, 0.0, 1.0, 256);
    const double gamma = hydro::circulation(hf, circle);
    CHECK(std::abs(gamma - two_pi) <= 0.01 * two_pi);
    const std::vector<std::array<double, 2>> reversed(circle.rbegin(), circle.rend());
    CHECK(hydro::circulation(hf, reversed) == doctest::Approx(-gamma).epsilon(1e-12));
    // Grid-aligned square around the core, and one beside it.
    const double square = hydro::circulation_rectangle(hf, 60, 60, 100, 100);
    CHECK(std::abs(square - two_pi) <= 0.01 * two_pi);
    CHECK(hydro::circulation_rectangle(hf, 60, 60, 100, 100, true) == -square);
    // Off the core the discrete field is curl free only up to O(dx^2).
    CHECK(std::abs(hydro::circulation_rectangle(hf, 90, 90, 120, 120)) <= 1e-3 * two_pi);
    // The core node (80, 80) is a zero of psi.
    try {
        (void)hydro::circulation_rectangle(hf, 80, 80, 90, 90);
        FAIL("expected masked-point error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("(80, 80)") != std::string::npos);
    }
}

TEST_CASE("vortex-free loop in a moving gaussian") {
    const Grid1D ax(128, -6.4, 0.1, Boundary::periodic);
    const Grid g(ax, ax);
    const auto hf = hydro::decompose(gaussian_2d(g, 0.3, -0.2, 1.0, 1.5, -0.7), PotentialSpec::free(), 0.0);
    CHECK(std::abs(hydro::circulation(hf, hydro::circle_loop(0.5, 0.0, 1.5, 64))) <= 1e-6 * two_pi);
    CHECK(std::abs(hydro::circulation_rectangle(hf, 40, 40, 90, 80)) <= 1e-6 * two_pi);
}

TEST_CASE("free-motion criterion") {
    const Grid1D g(400, 0.0, 0.05, Boundary::periodic);
    const auto plane = hydro::decompose(states::plane_wave(g, two_pi / 20.0, true), PotentialSpec::free(), 0.0);
    const auto f1 = hydro::free_motion_criterion(plane, 1e-8);
    for (auto b : f1) CHECK(b == 1);

    // Two separated packets: V = 0, but the region between the lobes is
    // far from force free.
    const Grid1D h(600, -15.0, 0.05, Boundary::periodic);
    ComplexField psi = states::gaussian(h, -3.0, 1.0);
    const ComplexField right = states::gaussian(h, 3.0, 1.0);
    for (std::size_t i = 0; i < h.n_points; ++i) psi[i] += right[i];
    normalize(psi);
    const auto two = hydro::decompose(psi, PotentialSpec::free(), 0.0);
    const auto f2 = hydro::free_motion_criterion(two, 0.1);
    std::size_t forced_between = 0;
    for (std::size_t i = 0; i < h.n_points; ++i)
        if (std::abs(h.x(i)) > 0.5 && std::abs(h.x(i)) < 2.0 && f2[i] == 0) ++forced_between;
    CHECK(forced_between > 0);
}

TEST_CASE("hydro bundle round trip") {
    const Grid1D ax(32, -3.2, 0.2, Boundary::periodic);
    const Grid g(ax, ax);
    const auto hf = hydro::decompose(gaussian_2d(g, 0.0, 0.0, 0.8, 1.0, 0.5), PotentialSpec::harmonic(1.0), 0.25, 2.0);
    const auto dir = std::filesystem::temp_directory_path() / "qfd_hydro_bundle_test";
    std::filesystem::remove_all(dir);
    const auto files = hydro::write_bundle(dir, hf, "s0_");
    CHECK(files.size() == 9);
    const auto back = hydro::read_bundle(dir, "s0_");
    CHECK(bit_equal(back.rho, hf.rho));
    CHECK(bit_equal(back.q_potential, hf.q_potential));
    CHECK(bit_equal(back.velocity[1], hf.velocity[1]));
    CHECK(back.node_mask.data() == hf.node_mask.data());
    CHECK(back.mass == 2.0);
    CHECK(back.time == 0.25);
}
