"""Rigid-magnet statics: minimize the reduced magnetostatic functional

    E(m) = int psi(I, m, theta) + kappa |grad m|^2/2 - mu0 h_ext . m dx + mu0/2 int |grad u_m|^2

(demag in its reduced, positive form) by Barzilai-Borwein gradient descent,
and trace the saturation curve |m*|(theta).
"""
import csv
from dataclasses import dataclass

import numpy as np

from . import constitutive as cst
from . import demag as dm
from . import fields as fd
from . import llg
from .errors import SolverError


@dataclass
class StaticsResult:
    m: np.ndarray
    energy: float
    residual: float
    iterations: int
    energies: list


def _identity(grid):
    F = np.zeros((2, 2) + grid.shape)
    F[0, 0] = F[1, 1] = 1.0
    return F


class ReducedFunctional:
    def __init__(self, mat, grid, theta, h_ext, demag=True, pad=4):
        self.mat = mat
        self.grid = grid
        self.theta = np.broadcast_to(np.asarray(theta, dtype=float), grid.shape)
        self.F = _identity(grid)
        self.h_ext = np.asarray(h_ext, dtype=float)
        self.demag = demag and not grid.periodic
        self.pad = pad
        self.coef = cst.kappa(mat, self.F)

    def _h(self, nc):
        h = np.zeros((nc,) + self.grid.shape)
        he = self.h_ext.reshape((-1,) + (1,) * 2) if self.h_ext.ndim == 1 else self.h_ext
        h[:he.shape[0]] = he
        return h

    def local_density(self, m):
        # the purely thermal part of zeta is constant in m and left out
        return cst.phi(self.mat, self.F, m) + cst.zeta(self.mat, self.F, m, self.theta) \
            - cst._thermal(self.mat, self.theta)

    def value_and_gradient(self, m):
        """(E, dE/dm per unit area); the gradient is the negative driving force."""
        g = self.grid
        mat = self.mat
        h = self._h(m.shape[0])
        E = g.integrate(self.local_density(m) - mat.mu0 * np.sum(h * m, axis=0))
        E += llg.exchange_energy(g, mat, self.F, m, self.coef)
        grad = cst.local_driving_force(mat, self.F, m, self.theta) - mat.mu0 * h \
            - llg.exchange_force(g, mat, self.F, m, self.coef)
        if self.demag:
            res = dm.solve_demag(g, m[:2], self.pad)
            field, _ = dm.demag_energy(g, res, m[:2], mat.mu0)
            E += field
            grad[:2] += mat.mu0 * res.grad_u
        return float(E), grad


def minimize_magnetostatic(mat, grid, theta, h_ext, m0, demag=True, pad=4, tol=1e-10,
                           maxiter=20000, memory=10):
    """BB descent with a nonmonotone Armijo safeguard; returns a StaticsResult.

    Convergence is declared when the max-norm first-order residual is <= tol.
    For h_ext = 0 the trivial critical point m = 0 is also evaluated and
    returned if its energy is lower (this covers theta >= theta_c, where the
    iterates approach 0 only sublinearly at theta = theta_c).
    """
    fun = ReducedFunctional(mat, grid, theta, h_ext, demag, pad)
    m = np.array(m0, dtype=float, copy=True)
    E, g = fun.value_and_gradient(m)
    hist = [E]
    alpha = 1.0 / max(1.0, np.max(np.abs(g)))
    it = 0
    res = float(np.max(np.abs(g)))
    while res > tol:
        if it >= maxiter:
            break
        it += 1
        ref = max(hist[-memory:])
        gg = float(np.sum(g * g)) * grid.area
        step = alpha
        while True:
            mn = m - step * g
            En, gn = fun.value_and_gradient(mn)
            if En <= ref - 1e-4 * step * gg or step < 1e-14:
                break
            step *= 0.5
        s = mn - m
        y = gn - g
        sy = float(np.sum(s * y))
        alpha = float(np.sum(s * s)) / sy if sy > 0 else 10 * step
        alpha = min(max(alpha, 1e-10), 1e10)
        m, g, E = mn, gn, En
        hist.append(E)
        res = float(np.max(np.abs(g)))
    if not np.any(np.asarray(h_ext)):
        z = np.zeros_like(m)
        Ez, gz = fun.value_and_gradient(z)
        if Ez <= E:
            m, E, res = z, Ez, float(np.max(np.abs(gz)))
    if res > tol:
        raise SolverError("magnetostatic minimization did not converge",
                          {"residual": res, "iterations": it, "energy": E})
    return StaticsResult(m, E, res, it, hist)


def transition_curve(mat, thetas, h_ext=(0.0, 0.0), grid=None, m0=None, demag=False, tol=1e-10,
                     maxiter=20000):
    """Rows (theta, mean |m*|, energy, residual) for ascending thetas, warm-started."""
    thetas = [float(t) for t in thetas]
    if any(b < a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("thetas must be ascending")
    grid = grid or fd.Grid.unit_square(64, "periodic")
    h_ext = np.asarray(h_ext, dtype=float)
    if m0 is None:
        d = h_ext / np.linalg.norm(h_ext) if np.any(h_ext) else np.array([1.0, 0.0])
        ms = max(float(cst.saturation_magnetization(mat.a0, mat.b0, mat.theta_c, thetas[0])), 0.1)
        m0 = ms * d.reshape(2, 1, 1) * np.ones((2,) + grid.shape)
    m = m0
    rows = []
    for th in thetas:
        # a collapsed state cannot re-magnetize under zero field; restart from a seed
        if not np.any(m) and np.any(m0):
            m = m0
        out = minimize_magnetostatic(mat, grid, th, h_ext, m, demag=demag, tol=tol,
                                     maxiter=maxiter)
        m = out.m
        norm = float(np.mean(np.sqrt(np.sum(m * m, axis=0))))
        rows.append((th, norm, out.energy, out.residual))
    return rows


def write_curve(path, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["theta", "m_norm", "energy", "residual"])
        for r in rows:
            wr.writerow([format(x, ".17g") for x in r])


def scalar_oracle(mat, theta, h):
    """Global minimizer of a0(theta - tc) m^2 + b0 m^4 - mu0 h m over m >= 0 (rigid Landau cell)."""
    a = 2.0 * mat.a0 * (theta - mat.theta_c)
    roots = np.roots([4.0 * mat.b0, 0.0, a, -mat.mu0 * h])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and r.real >= 0]
    f = lambda x: mat.a0 * (theta - mat.theta_c) * x * x + mat.b0 * x ** 4 - mat.mu0 * h * x
    return min(real, key=f)
