import numpy as np
import pytest

from magnetoelast import acceptance
from magnetoelast import constitutive as cst
from magnetoelast import diagnostics as dg
from magnetoelast import fields as fd
from magnetoelast import runner


def fake_report(i, rng):
    vals = {c: float(rng.standard_normal()) for c in dg.COLUMNS}
    vals["step"] = i
    vals["cutoff_active"] = i % 2
    vals["time"] = 0.1 * i
    return dg.EnergyReport(**vals)


def test_empty_series_writes_header_only(tmp_path):
    p = tmp_path / "r.csv"
    dg.emit_csv(p, [])
    assert p.read_text().splitlines() == [",".join(dg.COLUMNS)]


def test_three_steps_four_lines_and_exact_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    reps = [fake_report(i, rng) for i in range(1, 4)]
    p = tmp_path / "r.csv"
    dg.emit_csv(p, reps)
    assert len(p.read_text().splitlines()) == 4
    assert dg.read_csv(p) == reps


def test_energy_terms():
    g = fd.Grid.unit_square(8, "periodic")
    mat = cst.Material(mu0=2.0)
    rho = np.full(g.shape, 2.0)
    v = np.stack([np.full(g.shape, 0.5), np.zeros(g.shape)])
    F = np.broadcast_to(np.eye(2)[..., None, None], (2, 2) + g.shape)
    m = np.stack([np.full(g.shape, 0.3), np.zeros(g.shape)])
    E = dg.energies(g, mat, rho, v, F, m, np.full(g.shape, 0.4), np.array([1.0, 0.0]))
    assert E.kinetic == pytest.approx(0.25)
    assert E.zeeman == pytest.approx(-0.6)
    assert E.exchange == 0.0
    assert E.heat == pytest.approx(0.4)


def test_static_equilibrium_audit():
    sc = runner.parse_scenario(acceptance.shipped_path("equilibrium.ini"))
    sim = runner.Simulation(sc)
    m0, th0 = sim.state.m.copy(), sim.state.theta.copy()
    reps = sim.run()
    assert len(reps) == 100
    for r in reps:
        assert r.residual_mech <= 1e-14 * r.scale
        assert r.residual_total <= 1e-14 * r.scale
        for name in ("power_gravity", "power_external_field", "power_traction",
                     "power_boundary_heat"):
            assert abs(getattr(r, name)) <= 1e-14 * r.scale
        assert r.min_theta >= 0 and r.entropy_production >= 0
    assert np.max(np.abs(sim.state.m - m0)) <= 1e-13
    assert np.max(np.abs(sim.state.theta - th0)) <= 1e-13


def test_shear_run_audit():
    sc = runner.default_scenario(
        grid={"nx": 16, "ny": 16, "mode": "periodic"},
        initial={"v0": "shear, 0.05", "m0": "perturbed, 0.5, 0.8"},
        stepping={"t_end": 0.2, "n_steps": 20})
    reps = runner.Simulation(sc).run()
    for r in reps:
        assert r.residual_total / r.scale <= 1e-3
        assert r.min_theta >= 0 and r.entropy_production >= 0
