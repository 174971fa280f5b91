"""Gilbert inclusion with dry friction for the corotational rate r = ZJ m.

Per cell:   tau r + h_c Dir(r) - (m x r)/gamma  contains  b.

For two-component m the gyroscopic term is out of plane and drops, which
leaves the collinear closed form r = (|b| - h_c)_+ b / (tau |b|).  With
three components ("2.5-D") the slip branch is solved exactly: for fixed
s = |r| the equation is linear in r, and s is the root of a scalar
monotone equation found by bracketed bisection.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constitutive as cst
from . import fields as fd
from .errors import SolverError


@dataclass
class LLGCellProblem:
    tau: float
    hc: float
    inv_gamma: float
    m: np.ndarray
    b: np.ndarray
    tol: float = 1e-12


def dir_set_test(b, hc):
    """True where r = 0 solves the inclusion, i.e. |b| <= h_c."""
    return np.sqrt(np.sum(np.asarray(b) ** 2, axis=0)) <= hc


def cross(a, b):
    return np.stack([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _linear_solve(alpha, g, m, b):
    """Solve alpha r - g m x r = b for r (closed form, any alpha > 0)."""
    mb = cross(m, b)
    mdotb = np.sum(m * b, axis=0)
    m2 = np.sum(m * m, axis=0)
    return (alpha ** 2 * b + alpha * g * mb + g ** 2 * mdotb * m) / (alpha * (alpha ** 2 + g ** 2 * m2))


def solve_rate(tau, hc, inv_gamma, m, b, tol=1e-12, maxiter=200):
    """Vectorized solution of the cell inclusion; arrays carry components on axis 0."""
    b = np.asarray(b, dtype=float)
    m = np.asarray(m, dtype=float)
    nb = np.sqrt(np.sum(b * b, axis=0))
    hc = np.broadcast_to(np.asarray(hc, dtype=float), nb.shape)
    g = np.broadcast_to(np.asarray(inv_gamma, dtype=float), nb.shape)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), nb.shape)
    slip = nb > hc
    scale = np.where(slip, (nb - hc) / (tau * np.where(nb > 0, nb, 1.0)), 0.0)
    if b.shape[0] == 2 or not np.any(slip & (g != 0)):
        return scale * b
    # 2.5-D slip cells: find s = |r| with |r(tau + hc/s)| = s
    lo = np.zeros_like(nb)
    hi = np.where(slip, nb / tau, 0.0)
    for _ in range(maxiter):
        s = 0.5 * (lo + hi)
        alpha = tau + hc / np.where(s > 0, s, 1.0)
        r = _linear_solve(alpha, g, m, b)
        f = np.sqrt(np.sum(r * r, axis=0)) - s
        lo = np.where(f > 0, s, lo)
        hi = np.where(f > 0, hi, s)
        if np.all(hi - lo <= 1e-17 * np.maximum(hi, 1e-300)):
            break
    s = 0.5 * (lo + hi)
    alpha = tau + hc / np.where(s > 0, s, 1.0)
    r = _linear_solve(alpha, g, m, b)
    r = np.where(slip, r, 0.0)
    res = inclusion_residual(tau, hc, g, m, b, r)
    bad = res > tol * np.maximum(1.0, nb)
    if np.any(bad):
        raise SolverError("LLG cell solve did not converge",
                          {"cells": int(np.sum(bad)), "max_residual": float(np.max(res))})
    return r


def inclusion_residual(tau, hc, inv_gamma, m, b, r):
    """dist(b - tau r + (m x r)/gamma, h_c Dir(r)) per cell."""
    r = np.asarray(r, dtype=float)
    nr = np.sqrt(np.sum(r * r, axis=0))
    rest = b - tau * r
    if r.shape[0] == 3:
        rest = rest + inv_gamma * cross(m, r)
    nrest = np.sqrt(np.sum(rest * rest, axis=0))
    unit = r / np.where(nr > 0, nr, 1.0)
    slipres = np.sqrt(np.sum((rest - hc * unit) ** 2, axis=0))
    return np.where(nr > 0, slipres, np.maximum(0.0, nrest - hc))


# ---------------------------------------------------------------- exchange

def exchange_coefficient(mat, F, J=None):
    """kappa(F)/det F, or its cut-off version when J is det_lambda."""
    if J is None:
        return cst.kappa(mat, F) / cst.det(F)
    return cst.kappa_reg(mat, F) / J


def exchange_force(grid, mat, F, m, coef=None):
    """div(kappa(F) grad m / det F) in flux form with zero normal flux on walls."""
    k = exchange_coefficient(mat, F) if coef is None else coef
    return np.stack([fd.diffusion_flux_div(grid, k, m[c]) for c in range(m.shape[0])])


def exchange_energy(grid, mat, F, m, coef=None):
    """Discrete int kappa |grad m|^2 / (2 det F), the exact potential of exchange_force."""
    k = exchange_coefficient(mat, F) if coef is None else coef
    return sum(fd.gradient_energy(grid, k, m[c]) for c in range(m.shape[0]))


# ---------------------------------------------------------------- time step

@dataclass
class LLGResult:
    m: np.ndarray
    r: np.ndarray
    heat: np.ndarray        # mu0 tau |r|^2 + mu0 h_c |r|
    iterations: int


def effective_rhs(grid, mat, F, m, theta, h_total, J=None, coef=None):
    """b = mu0 h - psi_m'/det F + div(kappa grad m / det F), all explicit."""
    b = mat.mu0 * _pad_field(h_total, m.shape[0]) - cst.local_driving_force(mat, F, m, theta, J)
    return b + exchange_force(grid, mat, F, m, coef)


def _pad_field(h, nc):
    if h.shape[0] == nc:
        return h
    out = np.zeros((nc,) + h.shape[1:])
    out[:h.shape[0]] = h
    return out


def llg_step(grid, mat, F, m, theta, h_total, dt, J=None, coef=None, tol=1e-12, maxiter=500,
             implicit=True):
    """Advance m by dt r where r solves the inclusion with semi-implicit exchange.

    The exchange operator L (frozen kappa/det F) enters as L(m + dt r).  The
    diagonal of L is moved to the left-hand side of the cell problems and the
    off-diagonal part is iterated (Jacobi); the contraction factor is
    dt c / (tau + dt c) < 1 for every dt.  A linear solve with h_c = 0 and no
    gyro term provides the starting guess.
    """
    nc = m.shape[0]
    k = exchange_coefficient(mat, F, J) if coef is None else coef
    hc = cst.coercive_force(mat, theta)
    g = cst.inv_gamma(mat, theta)
    b0 = effective_rhs(grid, mat, F, m, theta, h_total, J, k)
    if not implicit or dt == 0:
        r = solve_rate(mat.tau, hc, g, m, b0, tol)
        return _finish(mat, m, r, hc, dt, 0)
    Lmat = fd.neumann_laplacian_matrix(grid, k)
    diag = -Lmat.diagonal().reshape(grid.shape)
    A = sp.identity(grid.size) * mat.tau - dt * Lmat
    solve = spla.factorized(A.tocsc())
    r = np.stack([solve(b0[c].ravel()).reshape(grid.shape) for c in range(nc)])
    linear = not np.any(hc > 0) and (nc == 2 or not np.any(g > 0))
    if linear:
        return _finish(mat, m, r, hc, dt, 1)
    tau_eff = mat.tau + dt * diag
    scale = np.max(np.abs(b0)) + 1e-300
    for it in range(1, maxiter + 1):
        Lr = np.stack([(Lmat @ r[c].ravel()).reshape(grid.shape) for c in range(nc)])
        off = Lr + diag * r
        rn = solve_rate(tau_eff, hc, g, m, b0 + dt * off, tol)
        change = np.max(np.abs(rn - r))
        r = rn
        if change <= tol * scale:
            return _finish(mat, m, r, hc, dt, it)
    raise SolverError("implicit exchange iteration did not converge",
                      {"iterations": maxiter, "last_change": float(change)})


def _finish(mat, m, r, hc, dt, it):
    r2 = np.sum(r * r, axis=0)
    heat = mat.mu0 * mat.tau * r2 + mat.mu0 * hc * np.sqrt(r2)
    return LLGResult(m + dt * r, r, heat, it)


# ---------------------------------------------------------------- single-cell hysteresis

def landau_force(a0, b0, theta_c, theta, m):
    """d/dm of a0 (theta - tc) m^2 + b0 m^4 (scalar rigid-magnet energy)."""
    return 2.0 * a0 * (theta - theta_c) * m + 4.0 * b0 * m ** 3


def switching_field_oracle(a0, b0, theta_c, theta, hc, mu0=1.0):
    """Quasi-static field at which the branch m > 0 loses its last equilibrium.

    On the descending branch the cell sticks while |mu0 h - psi'(m)| <= h_c and
    slides along mu0 h + h_c = psi'(m) otherwise; the slide ends at the local
    minimum of psi' (spinodal) where m jumps to the other well.
    """
    A = 2.0 * a0 * max(theta_c - theta, 0.0)
    mstar = np.sqrt(A / (12.0 * b0)) if A > 0 else 0.0
    return (hc + 2.0 * A * mstar / 3.0) / mu0


def hysteresis_sweep(mat, theta, h_amp, period, n_steps, cycles=1, hc=None, m0=None):
    """Single-cell rigid sweep under h_ext(t) = h_amp * triangle(t/period) along x.

    ``theta`` (and optionally ``hc``, overriding the coercive-force closure)
    may be arrays: every entry is an independent cell swept simultaneously.
    Each step solves the cell inclusion with b = mu0 h - psi'(m) and sets
    m <- m + dt r (explicit: dt psi''/tau must stay below 2).  Returns (t, h, m_x) with m_x of shape (n_steps+1, ...).
    """
    a0, b0, tc = mat.a0, mat.b0, mat.theta_c
    theta = np.asarray(theta, dtype=float)
    hc = cst.coercive_force(mat, theta) if hc is None else np.broadcast_to(hc, theta.shape)
    dt = cycles * period / n_steps
    if m0 is None:
        m0 = cst.saturation_magnetization(a0, b0, tc, theta)
    ts = np.arange(n_steps + 1) * dt
    hs = h_amp * triangle(ts / period)
    m = np.zeros((2,) + theta.shape)
    m[0] = m0
    ms = np.empty((n_steps + 1,) + theta.shape)
    ms[0] = m[0]
    lin = 2.0 * a0 * (theta - tc)
    for n in range(1, n_steps + 1):
        b = -(lin + 4.0 * b0 * np.sum(m * m, axis=0)) * m
        b[0] += mat.mu0 * hs[n - 1]
        m = m + dt * solve_rate(mat.tau, hc, 0.0, m, b)
        ms[n] = m[0]
        if not np.all(np.isfinite(m[0])):
            raise SolverError("hysteresis sweep went unstable; increase n_steps",
                              {"step": n, "dt": dt})
    return ts, hs, ms


def loop_switching_fields(hs, ms):
    """Fields at which m_x changes sign on the descending and ascending branches."""
    down, up = [], []
    for n in range(1, len(ms)):
        if ms[n - 1] > 0 >= ms[n]:
            down.append(hs[n])
        elif ms[n - 1] < 0 <= ms[n]:
            up.append(hs[n])
    return down, up


def triangle(x):
    """Triangle wave starting at +1: +1 -> -1 -> +1 over one unit of x."""
    f = np.mod(x, 1.0)
    return np.where(f < 0.5, 1.0 - 4.0 * f, -3.0 + 4.0 * f)
