"""Acceptance checks shared by ``magnetoelast check`` and the test-suite.

Each check returns a Result with the measured metrics and the verdict
against the fixed thresholds below.  ``quick=True`` shrinks grids and step
counts for a fast smoke run; the thresholds are the same.
"""
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import constitutive as cst
from . import demag as dm
from . import fields as fd
from . import llg
from . import runner
from . import statics
from . import transport as tr


@dataclass
class Result:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        m = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {m} ({self.seconds:.1f}s)"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _timed(fn):
    def wrap(*a, **kw):
        t = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t
        return res
    wrap.__name__ = fn.__name__
    wrap.__doc__ = fn.__doc__
    return wrap


def order(e_coarse, e_fine):
    return float(np.log2(e_coarse / e_fine))


# ---------------------------------------------------------------- 1

@_timed
def transition_curve(quick=False):
    mat = cst.rigid_material()
    n = 32 if quick else 64
    thetas = np.linspace(0.0, 1.5, 20)
    rows = statics.transition_curve(mat, thetas, grid=fd.Grid.unit_square(n, "periodic"))
    err = 0.0
    above = 0.0
    for th, mn, _, _ in rows:
        ms = float(cst.saturation_magnetization(mat.a0, mat.b0, mat.theta_c, th))
        if th >= mat.theta_c:
            above = max(above, mn)
        else:
            err = max(err, abs(mn - ms) / ms)
    ok = err <= 1e-6 and above == 0.0
    return Result(1, "Landau transition curve", ok,
                  {"max_rel_err": err, "max_m_above_tc": above, "samples": len(rows)})


# ---------------------------------------------------------------- 2

@_timed
def demag_factor(quick=False):
    n = 64 if quick else 128
    g = fd.Grid.unit_square(n, "box")
    R = 0.25
    mvec = np.array([0.6, 0.8])
    m, inside = dm.disk_magnetization(g, R, tuple(mvec))
    res = dm.solve_demag(g, m, pad=4)
    x, y = g.coords()
    core = (x - 0.5) ** 2 + (y - 0.5) ** 2 <= (0.5 * R) ** 2
    err = max(float(np.max(np.abs(res.h_dem[c][core] + 0.5 * mvec[c]))) / (0.5 * abs(mvec[c]))
              for c in range(2))
    field_e, inter = dm.demag_energy(g, res, m)
    ident = abs(2 * field_e - inter) / abs(inter)
    ok = err <= 0.02 and ident <= 0.01
    return Result(2, "Demag factor of a disk", ok,
                  {"max_rel_err_core": err, "energy_identity": ident, "grid": n})


# ---------------------------------------------------------------- 3

def rotation_drift(dt, omega=1.0, n=16, scheme="central2-RK2"):
    """Max | |m(T)| - |m0| | after a quarter turn of v = omega (-y, x), r = 0."""
    g = fd.Grid.unit_square(n, "box")
    x, y = g.coords()
    v = omega * np.stack([-(y - 0.5), x - 0.5])
    L = fd.grad(g, v, "extrap")
    m = np.zeros((2,) + g.shape)
    m[0], m[1] = 0.6, 0.3
    n0 = np.sqrt(np.sum(m * m, axis=0))
    steps = int(round(0.5 * np.pi / omega / dt))
    for _ in range(steps):
        m = tr.advance_magnetization(g, m, v, None, dt, scheme, grad_v=L)
    return float(np.max(np.abs(np.sqrt(np.sum(m * m, axis=0)) - n0)))


@_timed
def objectivity(quick=False):
    dt = 1e-3
    d1 = rotation_drift(dt)
    d2 = rotation_drift(dt / 2)
    p = order(d1, d2)
    ok = d1 <= 1e-4 and p >= 1.9
    return Result(3, "Objectivity (rigid rotation)", ok, {"drift": d1, "drift_half": d2, "order": p})


# ---------------------------------------------------------------- 4

def defgrad_error(dt, T=1.0, scheme="central2-RK2"):
    from scipy.linalg import expm
    A = np.array([[0.3, 0.5], [-0.2, -0.1]])
    g = fd.Grid.unit_square(8, "periodic")
    L = np.broadcast_to(A.reshape(2, 2, 1, 1), (2, 2) + g.shape).copy()
    v = np.zeros((2,) + g.shape)    # uniform F: convection vanishes, only grad v matters
    F = np.zeros((2, 2) + g.shape)
    F[0, 0] = F[1, 1] = 1.0
    steps = int(round(T / dt))
    for _ in range(steps):
        F, _ = tr.advance_defgrad(g, F, v, dt, scheme, grad_v=L)
    E = expm(T * A)
    ef = float(np.max(np.sqrt(np.sum((F - E.reshape(2, 2, 1, 1)) ** 2, axis=(0, 1)))))
    ed = float(np.max(np.abs(cst.det(F) - np.exp(T * np.trace(A)))))
    return ef, ed


@_timed
def defgrad_transport(quick=False):
    dt = 1e-2
    f1, d1 = defgrad_error(dt)
    f2, d2 = defgrad_error(dt / 2)
    pf, pd = order(f1, f2), order(d1, d2)
    ok = pf >= 1.9 and pd >= 1.9 and f1 <= 10 * dt ** 2 and d1 <= 10 * dt ** 2
    return Result(4, "F-transport oracle", ok, {"err_F": f1, "err_det": d1, "order_F": pf,
                                                 "order_det": pd})


# ---------------------------------------------------------------- 5

def audit_scenario(n, steps, t_end=1.0):
    return runner.default_scenario(
        grid={"nx": n, "ny": n, "mode": "periodic"},
        initial={"v0": "shear, 0.05", "m0": "perturbed, 0.5, 0.8", "theta0": "0.5"},
        stepping={"t_end": t_end, "n_steps": steps, "scheme": "central2-RK2"})


def run_audit(n, steps, t_end=1.0):
    sim = runner.Simulation(audit_scenario(n, steps, t_end))
    return sim.run()


@_timed
def energy_audit(quick=False):
    n, steps = (32, 100) if quick else (64, 500)
    t_end = 0.2 if quick else 1.0
    fine = run_audit(n, steps, t_end)
    coarse = run_audit(n // 2, steps // 2, t_end)
    rel_m = max(r.residual_mech / r.scale for r in fine)
    rel_t = max(r.residual_total / r.scale for r in fine)
    ratio = max(r.residual_total for r in coarse) / max(r.residual_total for r in fine)
    cum = sum(r.residual_total for r in coarse) / sum(r.residual_total for r in fine)
    ok = rel_m <= 1e-3 and rel_t <= 1e-3 and ratio >= 2.0
    return Result(5, "Energy audits", ok, {"max_rel_mech": rel_m, "max_rel_total": rel_t,
                                           "refinement_ratio": ratio, "cumulative_ratio": cum,
                                           "grid": n, "steps": steps})


# ---------------------------------------------------------------- 6

SHIPPED = ("equilibrium.ini", "shear_relax.ini", "box_coupled.ini", "heated_box.ini")


def shipped_path(name):
    return str(resources.files("magnetoelast") / "scenarios" / name)


def positivity_metrics(sc, max_steps=None):
    sim = runner.Simulation(sc)
    lam = sim.mat.lambda_cut
    worst = {"min_theta": np.inf, "min_xi": np.inf, "min_entropy_prod": np.inf,
             "max_mass_drift": 0.0, "min_detF": np.inf}
    mass = sim.grid.integrate(sim.state.rho)
    k = 0
    while not sim.done() and (max_steps is None or k < max_steps):
        r = sim.step()
        k += 1
        worst["min_theta"] = min(worst["min_theta"], r.min_theta)
        worst["min_xi"] = min(worst["min_xi"], r.min_xi)
        worst["min_entropy_prod"] = min(worst["min_entropy_prod"], r.entropy_production)
        worst["max_mass_drift"] = max(worst["max_mass_drift"], abs(r.total_mass - mass) / mass)
        worst["min_detF"] = min(worst["min_detF"], r.min_detF)
        mass = r.total_mass
    ok = (worst["min_theta"] >= 0 and worst["min_xi"] >= 0 and worst["min_entropy_prod"] >= 0
          and worst["max_mass_drift"] <= 1e-12 and worst["min_detF"] > lam / 2
          and not sim.cutoff_ever)
    worst["cutoff_active"] = sim.cutoff_ever
    worst["steps"] = k
    return ok, worst


@_timed
def positivity(quick=False):
    ok_all = True
    merged = {}
    for name in SHIPPED:
        sc = runner.parse_scenario(str(shipped_path(name)))
        ok, w = positivity_metrics(sc, 20 if quick else None)
        ok_all &= ok
        merged[name.split(".")[0]] = "ok" if ok else "violated"
        for k in ("min_theta", "min_xi", "min_entropy_prod", "min_detF"):
            merged[k] = min(merged.get(k, np.inf), w[k])
        merged["max_mass_drift"] = max(merged.get("max_mass_drift", 0.0), w["max_mass_drift"])
    return Result(6, "Sign/positivity suite", ok_all, merged)


# ---------------------------------------------------------------- 7

@_timed
def llg_inclusion(quick=False, n=10000, seed=7):
    rng = np.random.default_rng(seed)
    # magnetizations in the unit ball, driving forces up to |b| = 2
    m = rng.standard_normal((3, n))
    m *= rng.uniform(0.0, 1.0, n) ** (1 / 3) / np.sqrt(np.sum(m * m, axis=0))
    b = rng.standard_normal((3, n))
    b *= rng.uniform(0.0, 2.0, n) / np.sqrt(np.sum(b * b, axis=0))
    tau = rng.uniform(0.5, 2.0, n)
    hc = rng.uniform(0.0, 1.0, n)
    g = rng.uniform(0.0, 2.0, n)
    r = llg.solve_rate(tau, hc, g, m, b)
    res = float(np.max(llg.inclusion_residual(tau, hc, g, m, b, r)))
    stick = np.all(r == 0, axis=0)
    exact = bool(np.array_equal(stick, llg.dir_set_test(b, hc)))
    gyro = float(np.max(np.abs(np.sum(llg.cross(m, r) * r, axis=0))))
    ok = res <= 1e-10 and exact and gyro <= 1e-14
    return Result(7, "LLG inclusion", ok, {"max_residual": res, "stick_set_exact": exact,
                                           "stick_cells": int(np.sum(stick)),
                                           "max_gyro_power": gyro, "cells": n})


# ---------------------------------------------------------------- 8

def hysteresis_loops(theta=0.5, hc=0.025, tau=0.01, period=200.0, n_steps=100000, amp=0.6):
    """Sweep three cells at once: (theta, hc), (theta, 0) and (above tc, 0)."""
    mat = cst.rigid_material(tau=tau)
    th = np.array([theta, theta, mat.theta_c + 0.2])
    hcs = np.array([hc, 0.0, 0.0])
    ts, hs, ms = llg.hysteresis_sweep(mat, th, amp, period, n_steps, hc=hcs)
    return mat, ts, hs, ms


def switching_field(mat, theta, ts, hs, mx, period):
    """Descending-branch field where m_x first drops below the spinodal magnetization."""
    A = 2.0 * mat.a0 * (mat.theta_c - theta)
    mstar = np.sqrt(A / (12.0 * mat.b0))
    sel = (ts <= 0.5 * period) & (mx < mstar)
    return float(-hs[np.argmax(sel)])


def branch_gap(ts, hs, mx, period):
    # triangle wave: descending on [0, P/2], ascending on [P/2, P].  The
    # negative half (h <= 0) is compared; the first quarter still carries
    # the start-up transient from m0.
    d = (ts >= 0.25 * period) & (ts <= 0.5 * period)
    u = (ts >= 0.5 * period) & (ts <= 0.75 * period)
    hd, md = hs[d], mx[d]
    hu, mu = hs[u], mx[u]
    o = np.argsort(hu)
    return float(np.max(np.abs(np.interp(hd, hu[o], mu[o]) - md)))


@_timed
def hysteresis(quick=False):
    period = 200.0
    n_steps = 60000 if quick else 100000
    theta, hc = 0.5, 0.025
    mat, ts, hs, ms = hysteresis_loops(theta, hc, period=period, n_steps=n_steps)
    errs = []
    sw = []
    for k, h in enumerate((hc, 0.0)):
        meas = switching_field(mat, theta, ts, hs, ms[:, k], period)
        orc = llg.switching_field_oracle(mat.a0, mat.b0, mat.theta_c, theta, h, mat.mu0)
        errs.append(abs(meas - orc) / orc)
        sw.append(meas)
    width_shift = abs((sw[0] - sw[1]) - hc) / hc
    gap = branch_gap(ts, hs, ms[:, 2], period) / float(np.max(np.abs(ms[:, 2])))
    ok = max(errs) <= 0.02 and gap <= 0.02 and width_shift <= 0.02
    return Result(8, "Hysteresis loop", ok, {"switch_err": max(errs), "h_switch": sw[0],
                                             "coercive_shift_err": width_shift,
                                             "hc0_branch_gap": gap})


# ---------------------------------------------------------------- 9

def random_points(rng, n):
    F = np.eye(2)[:, :, None] + 0.3 * rng.standard_normal((2, 2, n))
    F[:, :, cst.det(F) < 0.2] = np.eye(2)[:, :, None]
    m = 0.8 * rng.standard_normal((2, n))
    gm = 0.5 * rng.standard_normal((2, 2, n))
    theta = rng.uniform(0.05, 2.0, n)
    return F, m, gm, theta


def _fd(fun, x, eps):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape[:-1]):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        g[idx] = (fun(xp) - fun(xm)) / (2 * eps)
    return g


def gradient_errors(mat, n=20, seed=3):
    rng = np.random.default_rng(seed)
    F, m, gm, th = random_points(rng, n)
    eps = 1e-6
    errs = {}

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))

    errs["phi_F"] = rel(cst.phi_F(mat, F, m), _fd(lambda X: cst.phi(mat, X, m), F, eps))
    errs["phi_m"] = rel(cst.phi_m(mat, F, m), _fd(lambda X: cst.phi(mat, F, X), m, eps))
    errs["zeta_F"] = rel(cst.zeta_F(mat, F, m, th), _fd(lambda X: cst.zeta(mat, X, m, th), F, eps))
    errs["zeta_m"] = rel(cst.zeta_m(mat, F, m, th), _fd(lambda X: cst.zeta(mat, F, X, th), m, eps))
    zt = (cst.zeta(mat, F, m, th + eps) - cst.zeta(mat, F, m, th - eps)) / (2 * eps)
    errs["zeta_theta"] = rel(cst.zeta_theta(mat, F, m, th), zt)
    ct = (cst.enthalpy(mat, F, m, th + eps) - cst.enthalpy(mat, F, m, th - eps)) / (2 * eps)
    errs["heat_capacity"] = rel(cst.heat_capacity(mat, F, m, th), ct)
    kf = _fd(lambda X: cst.kappa(mat, X), F, eps)
    errs["kappa_F"] = rel(cst.kappa_F(mat, F), kf) if np.any(kf) else 0.0
    # T = (phi_F + zeta_F + kappa_F |grad m|^2/2) F^T / det F
    gm2 = np.sum(gm * gm, axis=(0, 1))
    P = cst.phi_F(mat, F, m) + cst.zeta_F(mat, F, m, th) + 0.5 * gm2 * cst.kappa_F(mat, F)
    Tref = np.einsum("ik...,jk...->ij...", P, F) / cst.det(F)
    errs["cauchy_stress"] = rel(cst.cauchy_stress(mat, F, m, gm, th), Tref)
    return errs


def structure_errors(mat, n=20, seed=5):
    rng = np.random.default_rng(seed)
    F, m, gm, th = random_points(rng, n)
    T = cst.cauchy_stress(mat, F, m, gm, th)
    sym = float(np.max(np.abs(T - np.swapaxes(T, 0, 1))))
    a = rng.uniform(0, 2 * np.pi, n)
    Q = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    QF = np.einsum("ik...,kj...->ij...", Q, F)
    Qm = np.einsum("ik...,k...->i...", Q, m)
    # spatial gradient of a spatial vector transforms as Q grad m Q^T
    Qgm = np.einsum("ik...,kl...,jl...->ij...", Q, gm, Q)
    psi = cst.free_energy(mat, F, m, gm, th)
    psiQ = cst.free_energy(mat, QF, Qm, Qgm, th)
    TQ = cst.cauchy_stress(mat, QF, Qm, Qgm, th)
    QTQ = np.einsum("ik...,kl...,jl...->ij...", Q, T, Q)
    frame = max(float(np.max(np.abs(psiQ - psi) / np.maximum(np.abs(psi), 1.0))),
                float(np.max(np.abs(TQ - QTQ))))
    return sym, frame


@_timed
def constitutive_gradients(quick=False):
    errs = {}
    for mat in (cst.Material(), cst.Material(kappa_exp=1.0, eps1=0.3, eps2=0.2)):
        for k, v in gradient_errors(mat).items():
            errs[k] = max(errs.get(k, 0.0), v)
    sym, frame = structure_errors(cst.Material(kappa_exp=1.0))
    worst = max(errs.values())
    ok = worst <= 1e-5 and sym <= 1e-12 and frame <= 1e-12
    return Result(9, "Constitutive gradients", ok, {"max_fd_rel_err": worst, "worst": max(errs, key=errs.get),
                                                    "symmetry": sym, "frame_indifference": frame})


CHECKS = (transition_curve, demag_factor, objectivity, defgrad_transport, energy_audit,
          positivity, llg_inclusion, hysteresis, constitutive_gradients)


def run_all(quick=False, out=print):
    results = []
    for chk in CHECKS:
        res = chk(quick=quick)
        out(res.line())
        results.append(res)
    return results
