"""Transport of rho, F and m (continuity, F-evolution, corotational magnetization).

Two schemes: ``upwind1`` (first-order donor cell, forward Euler) and
``central2-RK2`` (central fluxes, Heun's method).  The velocity is frozen
during a transport step.
"""
from dataclasses import dataclass

import numpy as np

from . import fields as fd
from .constitutive import det
from .errors import DomainError

SCHEMES = ("upwind1", "central2-RK2")


@dataclass(frozen=True)
class TransportStep:
    dt: float
    scheme: str = "upwind1"
    cfl: float = 0.4

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


def cfl_dt(grid, v, cfl=0.4, wave_speed=0.0, dt_max=np.inf):
    """dt <= cfl * min(h) / (max|v| + c); c is an optional signal speed."""
    vmax = float(np.max(np.sqrt(np.sum(v * v, axis=0)))) + wave_speed
    if vmax == 0:
        return dt_max
    return min(dt_max, cfl * min(grid.hx, grid.hy) / vmax)


def _face_velocity(grid, v, axis):
    # zero normal velocity on box walls is implied by face_div's zero wall flux
    return fd.face_avg(grid, v[axis], axis)


def flux_divergence(grid, q, v, scheme="upwind1"):
    """-div(q v) in conservative face-flux form; q may carry leading component axes."""
    out = np.zeros_like(q)
    for a in range(2):
        vf = _face_velocity(grid, v, a)
        if scheme == "upwind1":
            ax = q.ndim - 2 + a
            if grid.periodic:
                qr = np.roll(q, -1, ax)
                ql = q
            else:
                sl0 = [slice(None)] * q.ndim
                sl1 = [slice(None)] * q.ndim
                sl0[ax] = slice(None, -1)
                sl1[ax] = slice(1, None)
                ql = q[tuple(sl0)]
                qr = q[tuple(sl1)]
            qf = np.where(vf > 0, ql, qr)
        else:
            qf = fd.face_avg(grid, q, a)
        out -= fd.face_div(grid, qf * vf, a)
    return out


def convect(grid, q, v, scheme="upwind1"):
    """(v . grad) q for q (..., nx, ny); box walls use mirror ghosts."""
    out = np.zeros_like(q)
    for a in range(2):
        va = v[a]
        if scheme == "upwind1":
            ax = q.ndim - 2 + a
            h = grid.h[a]
            if grid.periodic:
                qm = np.roll(q, 1, ax)
                qp = np.roll(q, -1, ax)
            else:
                pad = [(0, 0)] * q.ndim
                pad[ax] = (1, 1)
                g = np.pad(q, pad, mode="edge")
                s0 = [slice(None)] * q.ndim
                s2 = [slice(None)] * q.ndim
                s0[ax] = slice(None, -2)
                s2[ax] = slice(2, None)
                qm = g[tuple(s0)]
                qp = g[tuple(s2)]
            out += np.maximum(va, 0) * (q - qm) / h + np.minimum(va, 0) * (qp - q) / h
        else:
            out += va * fd.partial(grid, q, a, bc="even")
    return out


def _integrate(rate, y, dt, scheme):
    k1 = rate(y)
    if scheme == "upwind1":
        return y + dt * k1
    y1 = y + dt * k1
    return y + 0.5 * dt * (k1 + rate(y1))


def advance_density(grid, rho, v, dt, scheme="upwind1", check=True):
    """Conservative step of d rho/dt = -div(rho v); total mass is preserved exactly."""
    out = _integrate(lambda r: flux_divergence(grid, r, v, scheme), rho, dt, scheme)
    if check and np.any(out < 0):
        raise DomainError(f"density lost positivity (min {np.min(out):.3e}); dt too large")
    return out


def velocity_gradient(grid, v, bc=None):
    if bc is None:
        bc = "extrap" if grid.periodic else "velocity"
    return fd.grad(grid, v, bc)


def advance_defgrad(grid, F, v, dt, scheme="upwind1", grad_v=None, bc=None, min_det=None):
    """dF/dt = (grad v) F - (v . grad) F.  Returns (F', min det F')."""
    L = velocity_gradient(grid, v, bc) if grad_v is None else grad_v

    def rate(G):
        return np.einsum("ik...,kj...->ij...", L, G) - convect(grid, G, v, scheme)

    out = _integrate(rate, F, dt, scheme)
    md = float(np.min(det(out)))
    if min_det is not None and md <= min_det:
        raise DomainError(f"det F degenerated to {md:.3e}")
    return out, md


def _skw_apply(W, m):
    """skw(grad v) acting on the in-plane part of m (third component untouched)."""
    out = np.zeros_like(m)
    out[0] = W[0, 0] * m[0] + W[0, 1] * m[1]
    out[1] = W[1, 0] * m[0] + W[1, 1] * m[1]
    return out


def spin(grad_v):
    return 0.5 * (grad_v - np.swapaxes(grad_v, 0, 1))


def advance_magnetization(grid, m, v, r, dt, scheme="upwind1", grad_v=None, bc=None):
    """dm/dt = skw(grad v) m - (v . grad) m + r with r frozen over the step."""
    L = velocity_gradient(grid, v, bc) if grad_v is None else grad_v
    W = spin(L)
    r = 0.0 if r is None else r

    def rate(q):
        return _skw_apply(W, q) - convect(grid, q, v, scheme) + r

    return _integrate(rate, m, dt, scheme)


def corotational_rate(grid, m, v, dm_dt, scheme="upwind1", grad_v=None, bc=None):
    """Zaremba-Jaumann rate r = dm/dt + (v . grad) m - skw(grad v) m."""
    L = velocity_gradient(grid, v, bc) if grad_v is None else grad_v
    return dm_dt + convect(grid, m, v, scheme) - _skw_apply(spin(L), m)


def material_rate(m, grad_v, r, sign=1.0):
    """DTm = r + sign * skw(grad v) m (sign = -1 gives the alternative heat-source form)."""
    return r + sign * _skw_apply(spin(grad_v), m)
