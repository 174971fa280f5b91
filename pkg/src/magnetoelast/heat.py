"""Enthalpy form of the heat equation.

    d_t w + div(v w) = xi + adiabatic - div j,    j = -K grad theta,
    j . n = h(theta) + nu_flat/2 |v|^p  on walls,  h(theta) = kappa_b (theta_ext - theta).

One step: conservative advection of w with the transport velocity, the
dissipative and adiabatic sources, then an implicit diffusion/Robin solve
written in theta with the heat capacity frozen at the intermediate state.
The enthalpy is updated as w* + C (theta_new - theta*), so the discrete heat
budget is exact, and theta is recovered by inverting w.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constitutive as cst
from . import fields as fd
from . import transport as tr
from .errors import DomainError


@dataclass
class HeatResult:
    w: np.ndarray
    theta: np.ndarray
    boundary_heat_power: float   # int kappa_b (theta_ext - theta) over the walls
    navier_heat_power: float     # half the Navier dissipation, deposited as heat


def adiabatic_sources(mat, F, m, theta, grad_v, r, J=None, skw_sign=1.0):
    """(zeta_F' F^T/det F : e(v),  zeta_m'/det F . DTm) with DTm = r + skw(grad v) m.

    ``skw_sign = -1`` selects the alternative r - skw(grad v) m.
    """
    Jt = cst.det(F)
    J = Jt if J is None else J
    zs = cst.zeta_stress(mat, F, m, theta)[0, 0] * Jt / J
    aF = zs * (grad_v[0, 0] + grad_v[1, 1])
    dtm = tr.material_rate(m, grad_v, r, skw_sign)
    zm = cst.zeta_m(mat, F, m, theta) / J
    am = np.sum(zm * dtm, axis=0)
    return aF, am


def conductivity_field(mat, F, theta):
    return cst.cond_reg(mat, F, theta) if mat.cutoff else cst.conductivity(mat, F, theta)


def heat_step(grid, mat, F, m, w, v_adv, dt, xi, adia_F, adia_m, scheme="upwind1",
              kappa_b=0.0, theta_ext=0.0, navier=None, cond=None):
    """Advance (w, theta) by one step.

    ``navier`` is a BoundaryField of nu_flat |v_t|^p on the wall faces (half
    of it becomes heat).  F and m are the already-updated fields.
    """
    w1 = w + dt * tr.flux_divergence(grid, w, v_adv, scheme)
    w1 = w1 + dt * (xi + adia_F + adia_m)
    nav_power = 0.0
    if not grid.periodic and navier is not None:
        half = fd.BoundaryField(*[0.5 * x for x in navier])
        nav_power = float(fd.boundary_integral(grid, half))
        src = np.zeros(grid.shape)
        fd.add_boundary_source(grid, src, half)
        w1 = w1 + dt * src
    if mat.eps_reg <= 0 and np.any(w1 < 0):
        raise DomainError(f"enthalpy became negative ({np.min(w1):.3e}) before diffusion")
    th1 = cst.invert_enthalpy(mat, F, m, w1)
    C = cst.heat_capacity(mat, F, m, th1)
    K = conductivity_field(mat, F, th1) if cond is None else cond
    L = fd.neumann_laplacian_matrix(grid, K)
    diag_r = np.zeros(grid.shape)
    rhs_r = np.zeros(grid.shape)
    robin = (not grid.periodic) and kappa_b > 0
    if robin:
        lens = fd.BoundaryField(np.full(grid.ny, kappa_b), np.full(grid.ny, kappa_b),
                                np.full(grid.nx, kappa_b), np.full(grid.nx, kappa_b))
        fd.add_boundary_source(grid, diag_r, lens)
        rhs_r = diag_r * theta_ext
    A = sp.diags(C.ravel() + dt * diag_r.ravel()) - dt * L
    b = C.ravel() * th1.ravel() + dt * rhs_r.ravel()
    th = spla.spsolve(A.tocsc(), b).reshape(grid.shape)
    bheat = 0.0
    if robin:
        bheat = float(fd.boundary_integral(grid, fd.BoundaryField(
            kappa_b * (theta_ext - th[0, :]), kappa_b * (theta_ext - th[-1, :]),
            kappa_b * (theta_ext - th[:, 0]), kappa_b * (theta_ext - th[:, -1]))))
    wn = w1 + C * (th - th1)
    if mat.eps_reg <= 0 and np.any(wn < 0):
        raise DomainError(f"enthalpy became negative ({np.min(wn):.3e}) after diffusion")
    theta = cst.invert_enthalpy(mat, F, m, wn)
    return HeatResult(wn, theta, bheat, nav_power)


def entropy_production(grid, mat, F, theta, xi, cond=None, theta_floor=0.0):
    """int xi/theta + K |grad theta|^2/theta^2 over cells (faces) with theta > theta_floor."""
    ok = theta > theta_floor
    tsafe = np.where(ok, theta, 1.0)
    tot = np.sum(np.where(ok, xi / tsafe, 0.0))
    K = conductivity_field(mat, F, theta) if cond is None else cond
    for a in range(2):
        d = fd.face_diff(grid, theta, a)
        tf = fd.face_avg(grid, theta, a)
        kf = fd.face_avg(grid, K, a)
        okf = tf > theta_floor
        tot += np.sum(np.where(okf, kf * d * d / np.where(okf, tf, 1.0) ** 2, 0.0))
    return float(tot * grid.area)
