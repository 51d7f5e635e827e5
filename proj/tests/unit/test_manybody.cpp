#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qfd/eigensolver.hpp"
#include "qfd/manybody.hpp"
#include "qfd/operators.hpp"
#include "qfd/states.hpp"

using namespace qfd;

namespace {

const Grid1D axis128(128, -10.0, 20.0 / 128, Boundary::periodic);

ComplexField gauss(const Grid1D& g, double c, double s, double k = 0.0) {
    ComplexField psi = states::gaussian(g, c, s, k);
    normalize(psi);
    return psi;
}

PropagatorConfig split(double dt, double t_final) {
    PropagatorConfig cfg;
    cfg.dt = dt;
    cfg.t_final = t_final;
    return cfg;
}

double centre(const RealField& rho) {
    RealField xr = rho;
    for (std::size_t i = 0; i < rho.size(); ++i) xr[i] *= rho.grid().axis(0).x(i);
    return integrate(xr) / integrate(rho);
}

ComplexField swap_particles(const ComplexField& psi) {
    ComplexField out(psi.grid());
    const std::size_t n = psi.grid().axis(0).n_points;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = psi(j, i);
    return out;
}

// Symmetric two-Gaussian state, far from a product.
ComplexField entangled(const Grid1D& g) {
    const auto a = gauss(g, -1.5, 0.7, 0.8), b = gauss(g, 1.5, 0.7, -0.8);
    ComplexField psi = mb::product(a, b);
    const ComplexField ba = mb::product(b, a);
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] += ba[k];
    normalize(psi);
    return psi;
}

}  // namespace

TEST_CASE("free product stays a product of the two 1D evolutions") {
    const auto a = gauss(axis128, -1.0, 1.0, 0.5), b = gauss(axis128, 1.5, 0.8, -0.3);
    mb::TwoBodyState s{mb::product(a, b), {}, PotentialSpec::harmonic(0.5)};
    const auto cfg = split(0.005, 1.0);
    const auto full = mb::propagate_full(s, cfg, 200);
    const auto ra = propagate(a, s.external, cfg), rb = propagate(b, s.external, cfg);
    const auto expected = mb::product(ra.final_state, rb.final_state);
    CHECK(max_abs_difference(full.snapshots.back(), expected) <= 1e-6);
    CHECK(full.times.size() == 2);
}

TEST_CASE("exchange symmetry is kept by the interacting propagation") {
    const auto a = gauss(axis128, -2.0, 0.8, 0.6), b = gauss(axis128, 1.0, 1.0);
    mb::TwoBodyState s{mb::symmetrize(mb::product(a, b), mb::Symmetry::symmetric), {1.0, 1.0},
                       PotentialSpec::harmonic(0.4), mb::Symmetry::symmetric};
    s.validate();
    const auto run = mb::propagate_full(s, split(0.005, 5.0), 1000);
    CHECK(mb::symmetry_defect(run.snapshots.back(), mb::Symmetry::symmetric) <= 1e-8);
    // swap then propagate == propagate then swap
    mb::TwoBodyState swapped = s;
    swapped.psi = swap_particles(s.psi);
    const auto run2 = mb::propagate_full(swapped, split(0.005, 0.5), 100);
    const auto run1 = mb::propagate_full(s, split(0.005, 0.5), 100);
    CHECK(max_abs_difference(swap_particles(run1.snapshots.back()), run2.snapshots.back()) <= 1e-10);
    // norm and energy on the configuration grid
    CHECK(std::abs(run.norms.back() - 1.0) <= 1e-8);
    CHECK(std::abs(run.energies.back() - run.energies.front()) <= 1e-6 * std::abs(run.energies.front()));
}

TEST_CASE("product of harmonic ground states is stationary") {
    const auto g = Grid1D::spanning(-8.0, 8.0, 129, Boundary::dirichlet);
    const auto ext = PotentialSpec::harmonic(1.0);
    const auto ground = lowest_eigenstates(g, ext.profile_on(g), 1).states[0];
    PropagatorConfig cfg;
    cfg.scheme = Scheme::crank_nicolson;
    cfg.dt = 0.002;
    cfg.t_final = 2.0;
    const mb::TwoBodyState s{mb::product(ground, ground), {}, ext, mb::Symmetry::symmetric};
    const auto run = mb::propagate_full(s, cfg, 1000);
    CHECK(max_abs_difference(density(run.snapshots.back()), density(run.snapshots.front())) <= 1e-6);
    const auto tr = mb::full_trajectories(run, {{-1.0, 0.3}, {0.2, 0.9}, {1.4, -0.5}}, {.dt = 0.01, .record_stride = 50});
    for (std::size_t p = 0; p < 2; ++p)
        for (const auto& path : tr[p].positions)
            for (const auto& x : path) CHECK(std::abs(x[0] - path.front()[0]) <= 1e-6);
}

TEST_CASE("quantum potential is additive on products and not on entangled states") {
    const auto a = gauss(axis128, -1.0, 1.0, 0.5), b = gauss(axis128, 1.5, 0.8);
    const ComplexField psi = mb::product(a, b);
    const RealField q = mb::q_full(psi);
    const RealField qa = hydro::quantum_potential(density(a)), qb = hydro::quantum_potential(density(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < 128; ++i)
        for (std::size_t j = 0; j < 128; ++j)
            if (std::isfinite(q(i, j))) worst = std::max(worst, std::abs(q(i, j) - qa[i] - qb[j]));
    CHECK(worst <= 1e-6);
    CHECK(mb::correlation_witness(psi).max_abs <= 1e-6);

    // closed form of each factor on the core: 1/(4 s^2) - (x - c)^2 / (8 s^4)
    for (std::size_t i = 45; i < 71; ++i) {  // |x + 1| <= 2
        const double x = axis128.x(i) + 1.0;
        CHECK(std::abs(qa[i] - (0.25 - x * x / 8.0)) <= 5e-3);
    }

    const auto w = mb::correlation_witness(entangled(axis128));
    MESSAGE("entangled correlation witness max = " << w.max_abs);
    CHECK(w.max_abs > 0.1);

    ComplexField scaled = psi;
    for (auto& z : scaled.values()) z *= 3.7;
    const RealField qs = mb::q_full(scaled);
    for (std::size_t k = 0; k < q.size(); ++k)
        if (std::isfinite(q[k])) REQUIRE(std::abs(qs[k] - q[k]) <= 1e-10 * std::max(1.0, std::abs(q[k])));
}

TEST_CASE("Hartree without interaction equals independent runs") {
    const auto a = gauss(axis128, -1.0, 1.0, 0.5), b = gauss(axis128, 1.5, 0.8, -0.3);
    const mb::HartreeState h{{a, b}, {}, PotentialSpec::harmonic(0.5)};
    const auto cfg = split(0.005, 1.0);
    const auto run = mb::propagate_hartree(h, cfg, 50);
    const auto ra = propagate(a, h.external, cfg), rb = propagate(b, h.external, cfg);
    CHECK(max_abs_difference(run.snapshots[0].back(), ra.final_state) <= 1e-12);
    CHECK(max_abs_difference(run.snapshots[1].back(), rb.final_state) <= 1e-12);
}

TEST_CASE("mean field is bounded by the interaction strength") {
    const mb::Interaction v{1.0, 1.0};
    for (double s : {0.1, 1.0, 3.0}) {
        const RealField mf = v.mean_field(density(gauss(axis128, 0.3, s)));
        for (double x : mf.values()) REQUIRE(x <= 1.0 + 1e-12);
    }
    CHECK(v(0.0, 0.0) == 1.0);
    const RealField none = mb::Interaction{}.mean_field(density(gauss(axis128, 0.0, 1.0)));
    for (double x : none.values()) REQUIRE(x == 0.0);
}

TEST_CASE("Hartree repulsion tracks the full marginal centres at short times") {
    const Grid1D g(256, -16.0, 0.125, Boundary::periodic);
    const auto a = gauss(g, -2.0, 0.8), b = gauss(g, 2.0, 0.8);
    const mb::Interaction vint{1.0, 1.0};
    const auto cfg = split(0.005, 1.0);
    const auto full = mb::propagate_full({mb::product(a, b), vint, PotentialSpec::free()}, cfg, 50);
    for (bool pc : {false, true}) {
        const auto hart = mb::propagate_hartree({{a, b}, vint, PotentialSpec::free()}, cfg, 50, pc);
        REQUIRE(hart.times.size() == full.times.size());
        for (std::size_t s = 1; s < full.times.size(); ++s) {
            for (std::size_t p = 0; p < 2; ++p) {
                const double d_full = centre(mb::marginal_density(full.snapshots[s], p)) - (p == 0 ? -2.0 : 2.0);
                const double d_hart = centre(density(hart.snapshots[p][s])) - (p == 0 ? -2.0 : 2.0);
                CHECK((p == 0 ? d_full < 0.0 : d_full > 0.0));  // repulsion
                CHECK(std::abs(d_hart - d_full) <= 0.05 * std::abs(d_full));
            }
        }
        for (std::size_t p = 0; p < 2; ++p) CHECK(std::abs(norm_squared(hart.snapshots[p].back()) - 1.0) <= 1e-8);
    }
}

TEST_CASE("Hartree orbital norms over a thousand interacting steps") {
    const auto a = gauss(axis128, -2.0, 0.8, 0.4), b = gauss(axis128, 2.0, 0.8);
    const auto run = mb::propagate_hartree({{a, b}, {1.0, 1.0}, PotentialSpec::harmonic(0.3)}, split(0.005, 5.0), 1000);
    for (std::size_t p = 0; p < 2; ++p) CHECK(std::abs(norm_squared(run.snapshots[p].back()) - 1.0) <= 1e-8);
}

TEST_CASE("per-particle trajectories: products agree, entanglement separates them") {
    const auto cfg = split(0.005, 1.0);
    const std::vector<traj::Point> start{{-1.5, 1.2}, {-1.0, 1.8}, {-2.1, 1.5}, {-1.3, 0.9}};
    const std::array<std::vector<traj::Point>, 2> split_start{
        std::vector<traj::Point>{{-1.5, 0}, {-1.0, 0}, {-2.1, 0}, {-1.3, 0}},
        std::vector<traj::Point>{{1.2, 0}, {1.8, 0}, {1.5, 0}, {0.9, 0}}};
    const auto a = gauss(axis128, -1.5, 0.7, 0.8), b = gauss(axis128, 1.5, 0.7, -0.8);
    const traj::IntegrateOptions opt{.dt = 0.005, .record_stride = 20};
    const auto hart = mb::hartree_trajectories(mb::propagate_hartree({{a, b}}, cfg, 20), split_start, opt);

    auto max_dev = [&](const std::array<traj::TrajectorySet, 2>& full) {
        double worst = 0.0;
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t k = 0; k < start.size(); ++k)
                for (std::size_t s = 0; s < full[p].times.size(); ++s)
                    worst = std::max(worst, std::abs(full[p].positions[k][s][0] - hart[p].positions[k][s][0]));
        return worst;
    };
    const auto prod = mb::full_trajectories(mb::propagate_full({mb::product(a, b)}, cfg, 20), start, opt);
    const double product_dev = max_dev(prod);
    CHECK(product_dev <= 1e-4);

    const auto ent = mb::full_trajectories(
        mb::propagate_full({entangled(axis128), {}, {}, mb::Symmetry::symmetric}, cfg, 20), start, opt);
    const double entangled_dev = max_dev(ent);
    MESSAGE("trajectory deviation: product " << product_dev << ", entangled " << entangled_dev);
    CHECK(entangled_dev > 10.0 * 1e-4);
}

TEST_CASE("state preparation and validation") {
    const auto a = gauss(axis128, -1.0, 1.0), b = gauss(axis128, 1.5, 0.8);
    CHECK_THROWS_AS(mb::antisymmetrize(mb::product(a, a)), InvalidArgument);
    const ComplexField anti = mb::antisymmetrize(mb::product(a, b));
    CHECK(mb::symmetry_defect(anti, mb::Symmetry::antisymmetric) <= 1e-15);
    CHECK(std::abs(norm_squared(anti) - 1.0) <= 1e-12);
    CHECK(mb::correlation_witness(anti).max_abs > 0.1);

    mb::TwoBodyState bad{mb::product(a, b), {}, {}, mb::Symmetry::symmetric};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad.symmetry = mb::Symmetry::none;
    for (auto& z : bad.psi.values()) z *= 2.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK(mb::symmetry_from_string("antisymmetric") == mb::Symmetry::antisymmetric);
    CHECK_THROWS_AS(mb::symmetry_from_string("bosonic"), InvalidArgument);
}

TEST_CASE("comparison report") {
    const auto a = gauss(axis128, -2.0, 0.8), b = gauss(axis128, 2.0, 0.8);
    const auto cfg = split(0.01, 0.5);
    const mb::Interaction vint{1.0, 1.0};
    const auto full = mb::propagate_full({mb::product(a, b), vint}, cfg, 10);
    const auto hart = mb::propagate_hartree({{a, b}, vint}, cfg, 10);
    const auto rows = mb::compare(full, hart, mb::Symmetry::none);
    REQUIRE(rows.size() == 6);
    CHECK(rows.front().density_l2 <= 1e-14);
    CHECK(rows.back().density_l2 > rows.front().density_l2);
    const auto path = std::filesystem::temp_directory_path() / "qfd_comparison.csv";
    mb::write_comparison_csv(path, rows);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,full_vs_hartree_density_L2,correlation_witness_max,symmetry_defect");
    std::filesystem::remove(path);
}
