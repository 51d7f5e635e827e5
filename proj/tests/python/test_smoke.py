import math

import numpy as np
import pytest

import qfd


@pytest.fixture
def axis():
    return qfd.Axis(256, -20.0, 40.0 / 256, "periodic")


def test_gaussian_is_normalized(axis):
    psi = qfd.gaussian(axis, center=-2.0, sigma=1.0, k=1.0)
    assert psi.shape == (256,)
    assert psi.dtype == np.complex128
    assert qfd.norm(axis, psi) == pytest.approx(1.0, abs=1e-12)


def test_free_width_follows_closed_form(axis):
    psi = qfd.gaussian(axis, 0.0, 1.0)
    run = qfd.propagate(axis, psi, dt=0.005, t_final=1.0, stride=100)
    x = axis.coordinates()
    rho = np.abs(run["snapshots"][-1]) ** 2
    width = math.sqrt(np.sum(rho * x**2) * axis.dx)
    assert run["times"][-1] == pytest.approx(1.0)
    assert width == pytest.approx(math.sqrt(1.0 + 1.0 / 4.0), rel=1e-6)
    assert max(abs(n - 1.0) for n in run["norms"]) < 1e-10


def test_plane_wave_hydro(axis):
    k = 2 * math.pi * 3 / (axis.n_points * axis.dx)
    fields = qfd.decompose(axis, qfd.plane_wave(axis, k))
    assert np.max(np.abs(fields["q_potential"])) < 1e-8
    assert np.max(np.abs(fields["velocity"][0] - k)) < 1e-2


def test_quantum_potential_is_scale_invariant(axis):
    rho = np.abs(qfd.gaussian(axis, 0.0, 1.0)) ** 2
    q1 = qfd.quantum_potential(axis, rho)
    q2 = qfd.quantum_potential(axis, 7.0 * rho)
    assert np.nanmax(np.abs(q1 - q2)) < 1e-12


def test_trajectories_are_seeded(axis):
    psi = qfd.gaussian(axis, 0.0, 1.0, k=0.5)
    run = qfd.propagate(axis, psi, dt=0.005, t_final=0.5, stride=20)
    a = qfd.trajectories(axis, run["snapshots"], run["times"], n=50, seed=9, dt=0.01)
    b = qfd.trajectories(axis, run["snapshots"], run["times"], n=50, seed=9, dt=0.01)
    assert a["positions"].shape[0] == 50
    assert np.array_equal(a["positions"], b["positions"])


def test_product_state_purity():
    ax = qfd.Axis(48, -8.0, 16.0 / 48)
    psi = qfd.product_state(ax, qfd.gaussian(ax, -1.0, 1.0), qfd.gaussian(ax, 1.0, 1.0))
    rdm = qfd.reduced_density_matrix(ax, psi)
    assert rdm["purity"] == pytest.approx(1.0, abs=1e-8)
    assert rdm["trace"] == pytest.approx(1.0, abs=1e-8)


def test_stationary_harmonic_energy():
    ax = qfd.Axis.spanning(-8.0, 8.0, 401)
    res = qfd.stationary_orbitals(ax, 1, qfd.Potential.harmonic(1.0))
    assert res["converged"]
    assert res["energies"][0] == pytest.approx(0.5, abs=1e-3)


def test_field_round_trip(tmp_path, axis):
    psi = qfd.gaussian(axis, 1.0, 2.0, k=0.3)
    qfd.write_field(tmp_path / "psi.qfdf", axis, psi)
    values, grid = qfd.read_field(tmp_path / "psi.qfdf")
    assert np.array_equal(values, psi)
    assert grid == qfd.Grid(axis)


def test_errors_are_python_exceptions(axis):
    with pytest.raises(ValueError):
        qfd.propagate(axis, np.zeros(10, complex), dt=0.01, t_final=0.1)
    with pytest.raises(ValueError):
        qfd.check("no_such_suite")


def test_vortex_suite_passes():
    verdicts = qfd.check("vortex")
    assert verdicts and all(v["pass"] for v in verdicts)


def test_run_config(tmp_path):
    cfg = tmp_path / "free.toml"
    cfg.write_text(
        """mode = "single"
output = "out"
[grid]
n_points = 128
x_min = -10.0
x_max = 10.0
boundary = "periodic"
[potential]
kind = "free"
[propagator]
scheme = "split_operator"
dt = 0.01
t_final = 0.1
[initial]
kind = "gaussian"
center = 0.0
sigma = 1.0
"""
    )
    out, files = qfd.run_config(cfg)
    assert "run_log.csv" in files
    assert (tmp_path / "out" / "manifest.json").exists()

    bad = tmp_path / "bad.toml"
    bad.write_text(cfg.read_text().replace("dt = 0.01", "dt = -1.0"))
    with pytest.raises(qfd.ValidationError, match="propagator.dt"):
        qfd.run_config(bad)
