#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qfd/field_io.hpp"
#include "qfd/operators.hpp"
#include "qfd/states.hpp"

using namespace qfd;
namespace fs = std::filesystem;

namespace {

RealField sample(const Grid1D& g, auto fn) {
    RealField f{Grid(g)};
    for (std::size_t i = 0; i < g.n_points; ++i) f[i] = fn(g.x(i));
    return f;
}

// Periodic grid covering exactly one box of length L starting at 0.
Grid1D periodic_box(std::size_t n, double L) { return Grid1D(n, 0.0, L / static_cast<double>(n), Boundary::periodic); }

double max_error(const RealField& f, const Grid1D& g, auto exact) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.n_points; ++i) m = std::max(m, std::abs(f[i] - exact(g.x(i))));
    return m;
}

fs::path temp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "qfd_core_fields_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid1D(7, 0.0, 0.1, Boundary::periodic), InvalidArgument);
    CHECK_THROWS_AS(Grid1D(16, 0.0, 0.0, Boundary::periodic), InvalidArgument);
    CHECK_THROWS_AS(Grid1D(16, 0.0, -1.0, Boundary::dirichlet), InvalidArgument);
    const Grid1D g(16, -2.0, 0.25, Boundary::dirichlet);
    CHECK(g.x(0) == -2.0);
    CHECK(g.x(4) == -1.0);
    const Grid g2(g, Grid1D(8, 0.0, 0.5, Boundary::periodic));
    CHECK(g2.size() == 128);
    CHECK(g2.stride(0) == 8);
    CHECK(g2.stride(1) == 1);
    CHECK(g2.cell_volume() == doctest::Approx(0.125));
}

TEST_CASE("gradient of a linear function is exact on a dirichlet grid") {
    const Grid1D g(50, -1.0, 0.04, Boundary::dirichlet);
    const RealField d = gradient(sample(g, [](double x) { return x; }), 0);
    for (double v : d) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient and laplacian of a constant vanish") {
    for (auto b : {Boundary::periodic, Boundary::dirichlet}) {
        const Grid1D g(32, 0.0, 0.1, b);
        const RealField c(Grid(g), 3.25);
        for (double v : gradient(c, 0)) CHECK(v == 0.0);
        for (double v : laplacian(c)) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("laplacian of x^2 is 2 including the one-sided edges") {
    const Grid1D g(40, -1.0, 0.05, Boundary::dirichlet);
    const RealField l = laplacian(sample(g, [](double x) { return x * x; }));
    for (double v : l) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("periodic derivatives of sin(kx) match the closed form at second order") {
    const double L = 2.0 * std::numbers::pi;
    const double k = 3.0;
    double prev_grad = 0.0, prev_lap = 0.0;
    for (std::size_t n : {64u, 128u, 256u, 512u}) {
        const Grid1D g = periodic_box(n, L);
        const RealField f = sample(g, [&](double x) { return std::sin(k * x); });
        const double eg = max_error(gradient(f, 0), g, [&](double x) { return k * std::cos(k * x); });
        const double el = max_error(laplacian(f), g, [&](double x) { return -k * k * std::sin(k * x); });
        // leading truncation terms of the central stencils
        CHECK(eg <= 1.01 * k * k * k * g.dx * g.dx / 6.0);
        CHECK(el <= 1.01 * k * k * k * k * g.dx * g.dx / 12.0);
        if (prev_grad > 0.0) {
            const double rg = prev_grad / eg;
            const double rl = prev_lap / el;
            CHECK(rg >= 3.5);
            CHECK(rg <= 4.5);
            CHECK(rl >= 3.5);
            CHECK(rl <= 4.5);
        }
        prev_grad = eg;
        prev_lap = el;
    }
}

TEST_CASE("second-order convergence on a dirichlet grid including edges") {
    double prev = 0.0;
    for (std::size_t n : {101u, 201u, 401u}) {
        const Grid1D g = Grid1D::spanning(-1.0, 1.0, n, Boundary::dirichlet);
        const RealField f = sample(g, [](double x) { return std::exp(x) * std::sin(2 * x); });
        const double e = max_error(gradient(f, 0), g, [](double x) {
            return std::exp(x) * (std::sin(2 * x) + 2 * std::cos(2 * x));
        });
        if (prev > 0.0) {
            CHECK(prev / e >= 3.5);
            CHECK(prev / e <= 4.5);
        }
        prev = e;
    }
}

TEST_CASE("operators are linear") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (auto b : {Boundary::periodic, Boundary::dirichlet}) {
        const Grid g(Grid1D(24, 0.0, 0.3, b), Grid1D(20, -1.0, 0.2, b));
        RealField f(g), h(g), comb(g);
        const double a = 1.7, c = -0.4;
        for (std::size_t k = 0; k < g.size(); ++k) {
            f[k] = nd(rng);
            h[k] = nd(rng);
            comb[k] = a * f[k] + c * h[k];
        }
        for (std::size_t axis = 0; axis < 2; ++axis) {
            const RealField lhs = gradient(comb, axis);
            const RealField gf = gradient(f, axis), gh = gradient(h, axis);
            for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(lhs[k] - (a * gf[k] + c * gh[k])) < 1e-12);
        }
        const RealField lhs = laplacian(comb);
        const RealField lf = laplacian(f), lh = laplacian(h);
        for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(lhs[k] - (a * lf[k] + c * lh[k])) < 1e-11);
    }
}

TEST_CASE("integral of a gradient vanishes on periodic grids") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    const Grid g(Grid1D(30, 0.0, 0.1, Boundary::periodic), Grid1D(26, 0.0, 0.15, Boundary::periodic));
    for (int trial = 0; trial < 5; ++trial) {
        RealField f(g);
        for (auto& v : f) v = ud(rng);
        CHECK(std::abs(integrate(gradient(f, 0))) < 1e-13);
        CHECK(std::abs(integrate(gradient(f, 1))) < 1e-13);
    }
}

TEST_CASE("gradient rejects an axis beyond the grid dimension") {
    const RealField f{Grid(Grid1D(16, 0.0, 0.1, Boundary::periodic))};
    CHECK_THROWS_AS(gradient(f, 1), InvalidArgument);
}

TEST_CASE("integrate") {
    SUBCASE("normalized density integrates to one") {
        const Grid1D g(300, -15.0, 0.1, Boundary::periodic);
        ComplexField psi = states::gaussian(g, 0.3, 1.1, 0.7);
        psi *= complex(3.0, 1.0);
        normalize(psi);
        CHECK(std::abs(integrate(density(psi)) - 1.0) < 1e-12);
    }
    SUBCASE("standard normal on [-10, 10] with trapezoid edges") {
        const Grid1D g = Grid1D::spanning(-10.0, 10.0, 2001, Boundary::dirichlet);
        const RealField f = sample(g, [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); });
        CHECK(std::abs(integrate(f) - 1.0) < 1e-8);
    }
    SUBCASE("zero field") {
        CHECK(integrate(RealField{Grid(Grid1D(10, 0.0, 1.0, Boundary::dirichlet))}) == 0.0);
    }
}

TEST_CASE("binary and csv serialization round-trip bit-exactly") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(-1e3, 1e3);
    const std::vector<double> specials = {0.0, -0.0, 1e-310, -5e-324, 1.0 / 3.0, 6.02214076e23, std::nextafter(1.0, 2.0)};
    const Grid grids[] = {Grid(Grid1D(17, -0.1, 0.0123456789, Boundary::dirichlet)),
                          Grid(Grid1D(9, 1.0 / 7.0, 0.3, Boundary::periodic), Grid1D(11, -2.5, 1e-3, Boundary::dirichlet))};
    for (const auto& g : grids) {
        ComplexField c(g);
        RealField r(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            c[k] = k < specials.size() ? complex(specials[k], -specials[k]) : complex(ud(rng), ud(rng));
            r[k] = k < specials.size() ? specials[k] : ud(rng) * 1e-9;
        }
        io::write_binary(temp_path("c.qfdf"), c);
        io::write_binary(temp_path("r.qfdf"), r);
        io::write_csv(temp_path("c.csv"), c);
        io::write_csv(temp_path("r.csv"), r);
        const ComplexField cb = io::read_complex_binary(temp_path("c.qfdf"));
        const ComplexField cc = io::read_complex_csv(temp_path("c.csv"));
        const RealField rb = io::read_real_binary(temp_path("r.qfdf"));
        const RealField rc = io::read_real_csv(temp_path("r.csv"));
        CHECK(cb.grid() == g);
        CHECK(cc.grid() == g);
        CHECK(rb.grid() == g);
        CHECK(rc.grid() == g);
        CHECK(std::memcmp(cb.values().data(), c.values().data(), c.size() * sizeof(complex)) == 0);
        CHECK(std::memcmp(cc.values().data(), c.values().data(), c.size() * sizeof(complex)) == 0);
        CHECK(std::memcmp(rb.values().data(), r.values().data(), r.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(rc.values().data(), r.values().data(), r.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("binary header layout") {
    const Grid1D g(8, -1.5, 0.25, Boundary::dirichlet);
    io::write_binary(temp_path("h.qfdf"), RealField(Grid(g), 2.0));
    std::ifstream in(temp_path("h.qfdf"), std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == io::header_bytes + 8 * sizeof(double));
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QFDF");
    CHECK(bytes[12] == 1);  // dims
    CHECK(bytes[16] == 8);  // n0, little-endian
    double dx = 0.0;
    std::memcpy(&dx, bytes.data() + 32, 8);
    CHECK(dx == 0.25);

    std::ofstream bad(temp_path("bad.qfdf"), std::ios::binary);
    bad << "NOPE" << std::string(80, '\0');
    bad.close();
    CHECK_THROWS_AS(io::read_real_binary(temp_path("bad.qfdf")), IoError);
    CHECK_THROWS_AS(io::read_complex_binary(temp_path("h.qfdf")), IoError);
}

TEST_CASE("two-argument matrix variant") {
    io::MatrixRecord m;
    m.grid = Grid1D(8, 0.0, 0.5, Boundary::periodic);
    m.time = 1.25;
    for (std::size_t k = 0; k < 64; ++k) m.values.emplace_back(static_cast<double>(k), -0.5 * static_cast<double>(k));
    io::write_matrix_binary(temp_path("m.qfdf"), m);
    const auto back = io::read_matrix_binary(temp_path("m.qfdf"));
    CHECK(back.grid == m.grid);
    CHECK(back.time == 1.25);
    CHECK(back.values == m.values);
    CHECK_THROWS_AS(io::read_complex_binary(temp_path("m.qfdf")), IoError);
}
