import numpy as np
import pytest

from magnetoelast import constitutive as cst
from magnetoelast import fields as fd
from magnetoelast import llg


def test_stick_set():
    assert llg.dir_set_test(np.zeros(2), 0.5)
    assert llg.dir_set_test(np.array([0.3, 0.4]), 0.5)
    assert not llg.dir_set_test(np.array([0.3, 0.4]) * 1.0001, 0.5)


def test_collinear_closed_form():
    r = llg.solve_rate(1.0, 1.0, 0.0, np.zeros(2), np.array([2.0, 0.0]))
    assert np.allclose(r, [1.0, 0.0])
    assert np.all(llg.solve_rate(1.0, 1.0, 0.0, np.zeros(2), np.array([0.6, 0.8])) == 0)


def test_viscous_limit():
    b = np.array([0.3, -1.2, 0.5])
    r = llg.solve_rate(1.0, 0.0, 0.0, np.array([0.0, 0.0, 1.0]), b)
    assert np.allclose(r, b)


def test_gyro_inclusion_residual():
    rng = np.random.default_rng(0)
    b = rng.standard_normal((3, 200))
    b *= 2.0 / np.linalg.norm(b, axis=0)
    m = np.zeros((3, 200))
    m[2] = 1.0
    r = llg.solve_rate(1.0, 0.5, 0.3, m, b)
    assert np.max(llg.inclusion_residual(1.0, 0.5, 0.3, m, b, r)) <= 1e-10
    # gyroscopic term does no work
    assert np.max(np.abs(np.sum(llg.cross(m, r) * r, axis=0))) <= 1e-14


def test_gyro_solution_matches_damped_fixed_point():
    m = np.array([0.2, -0.5, 0.8])
    b = np.array([1.5, 0.4, -0.9])
    tau, hc, g = 1.0, 0.5, 0.3
    r = llg.solve_rate(tau, hc, g, m, b)
    # fixed point r = (b + g m x r - hc r/|r|)/tau, damped
    q = b / tau
    for _ in range(2000):
        q = 0.5 * q + 0.5 * (b + g * llg.cross(m, q) - hc * q / np.linalg.norm(q)) / tau
    assert np.allclose(r, q, atol=1e-10)


def test_exchange_force_symbol():
    errs = []
    for n in (32, 64):
        g = fd.Grid.unit_square(n, "periodic")
        x, _ = g.coords()
        mat = cst.Material(kappa0=0.1)
        m = np.stack([np.sin(2 * np.pi * x), np.zeros(g.shape)])
        F = np.broadcast_to(np.eye(2)[..., None, None], (2, 2) + g.shape)
        f = llg.exchange_force(g, mat, F, m)
        errs.append(np.max(np.abs(f[0] + 0.1 * (2 * np.pi) ** 2 * m[0])))
    assert errs[1] <= 0.01 and errs[0] / errs[1] >= 3.5


def test_exchange_force_uniform_and_adjoint():
    g = fd.Grid.unit_square(12, "box")
    rng = np.random.default_rng(1)
    mat = cst.Material(kappa0=0.2, kappa_exp=1.0)
    F = np.eye(2)[..., None, None] + 0.1 * rng.standard_normal((2, 2) + g.shape)
    assert np.allclose(llg.exchange_force(g, mat, F, np.ones((2,) + g.shape)), 0, atol=1e-12)
    m, mt = rng.standard_normal((2, 2) + g.shape)
    E = lambda q: llg.exchange_energy(g, mat, F, q)
    lhs = g.integrate(np.sum(llg.exchange_force(g, mat, F, m) * mt, axis=0))
    assert lhs == pytest.approx(-(E(m + mt) - E(m) - E(mt)), abs=1e-10)


def test_equilibrium_rate_vanishes():
    g = fd.Grid.unit_square(16, "periodic")
    mat = cst.rigid_material(h0=0.0)
    theta = np.full(g.shape, 0.5)
    ms = cst.saturation_magnetization(mat.a0, mat.b0, mat.theta_c, 0.5)
    m = np.stack([np.full(g.shape, ms * 0.6), np.full(g.shape, ms * 0.8)])
    F = np.broadcast_to(np.eye(2)[..., None, None], (2, 2) + g.shape)
    res = llg.llg_step(g, mat, F, m, theta, np.zeros((2,) + g.shape), 0.01)
    assert np.max(np.abs(res.r)) <= 1e-12
    assert np.all(res.heat >= 0)


def test_llg_step_dissipation_nonnegative():
    g = fd.Grid.unit_square(12, "box")
    rng = np.random.default_rng(2)
    mat = cst.Material(kappa0=0.01)
    F = np.broadcast_to(np.eye(2)[..., None, None], (2, 2) + g.shape)
    m = rng.standard_normal((3,) + g.shape)
    theta = rng.uniform(0.1, 1.2, g.shape)
    h = rng.standard_normal((3,) + g.shape)
    res = llg.llg_step(g, mat, F, m, theta, h, 0.05)
    assert np.all(res.heat >= 0)
    gyro = np.abs(np.sum(llg.cross(m, res.r) * res.r, axis=0))
    scale = np.linalg.norm(m, axis=0) * np.sum(res.r ** 2, axis=0)
    assert np.all(gyro <= 1e-14 * scale)


def test_switching_field_oracle_matches_sweep():
    mat = cst.rigid_material(tau=0.01)
    theta, hc = 0.5, cst.coercive_force(mat, 0.5)
    ts, hs, ms = llg.hysteresis_sweep(mat, np.array(theta), 0.6, 200.0, 100000)
    down, up = llg.loop_switching_fields(hs, ms)
    oracle = llg.switching_field_oracle(mat.a0, mat.b0, mat.theta_c, theta, hc)
    # the zero crossing lags the spinodal point slightly; within a few percent
    assert abs(-down[0] - oracle) / oracle <= 0.05
    assert abs(up[0] - oracle) / oracle <= 0.05
