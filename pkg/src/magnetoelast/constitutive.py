"""Free energy, derived thermodynamic fields and the lambda cut-off.

Array conventions (used by every module):
    F       (2, 2, ...)   F[i, j]
    m       (nc, ...)     nc = 2, or 3 in the 2.5-D mode
    grad_m  (nc, 2, ...)  grad_m[k, i] = d m_k / d x_i
    theta   (...)
Trailing dimensions are arbitrary (a single point or a whole grid).

Material model (neo-Hookean, d = 2)::

    psi = G/2 (|F|^2/J - 2) + v(J) + kappa(F)|grad m|^2/2
          + a0(J) (theta/(1+e1 theta) - tc/(1+e1 tc)) q(m) + b0(J)|m|^4
          + c0 theta (1 - ln theta)

with J = det F, q(m) = |m|^2/(1 + e2|m|^2), v(J) = bulk (J-1)^2/2,
a0(J) = a0 J, b0(J) = b0 J and kappa(F) = kappa0 J^kappa_exp.
"""
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DomainError

D = 2


@dataclass(frozen=True)
class Material:
    G: float = 1.0
    bulk: float = 1.0
    a0: float = 1.0
    b0: float = 1.0
    c0: float = 1.0
    eps1: float = 0.1
    eps2: float = 0.1
    theta_c: float = 1.0
    kappa0: float = 1e-3
    kappa_exp: float = 0.0
    nu1: float = 1e-2
    nu2: float = 1e-6
    nu_flat: float = 1e-2
    tau: float = 1.0
    h0: float = 0.05
    g0: float = 0.5
    mu0: float = 1.0
    cond: float = 1e-2
    p: float = 4.0
    s: float = 4.0
    lambda_cut: float = 0.05
    cutoff: bool = True
    eps_reg: float = 0.0

    def replace(self, **kw):
        return replace(self, **kw)

    def violations(self):
        """Return a list of broken hypotheses (empty when the material is admissible)."""
        out = []
        if not self.p > D:
            out.append(f"p = {self.p} violates p > d = {D}")
        elif self.s < 2 * self.p / (self.p - 2) - 1e-12:
            out.append(f"s = {self.s} violates s >= 2p/(p-2) = {2 * self.p / (self.p - 2)}")
        for name in ("G", "c0", "theta_c", "kappa0", "nu1", "nu2", "nu_flat", "tau",
                     "mu0", "cond", "lambda_cut", "a0", "b0"):
            if not getattr(self, name) > 0:
                out.append(f"{name} = {getattr(self, name)} must be > 0")
        for name in ("bulk", "eps1", "eps2", "h0", "g0", "eps_reg"):
            if getattr(self, name) < 0:
                out.append(f"{name} = {getattr(self, name)} must be >= 0")
        return out

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def rigid_material(**kw):
    """Default material with the saturation parameters switched off.

    At F = I this reduces the magnetic part of psi to the Landau form
    a0 (theta - tc)|m|^2 + b0 |m|^4 used by the statics and hysteresis runs.
    """
    kw.setdefault("eps1", 0.0)
    kw.setdefault("eps2", 0.0)
    return Material(**kw)


# ---------------------------------------------------------------- small algebra

def det(F):
    return F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]


def inv_T(F):
    """F^{-T}."""
    J = det(F)
    return np.stack([np.stack([F[1, 1], -F[1, 0]]), np.stack([-F[0, 1], F[0, 0]])]) / J


def frob2(A, ncomp_axes=2):
    axes = tuple(range(ncomp_axes))
    return np.sum(A * A, axis=axes)


def _check_F(F, J=None):
    J = det(F) if J is None else J
    if not np.all(np.isfinite(F)):
        raise DomainError("non-finite deformation gradient")
    if np.any(J <= 0):
        raise DomainError(f"det F <= 0 (min {np.min(J):.3e})")
    return J


def _eye_like(s):
    s = np.asarray(s, dtype=float)
    Id = np.zeros((2, 2) + s.shape)
    Id[0, 0] = 1.0
    Id[1, 1] = 1.0
    return Id


# ---------------------------------------------------------------- closures

def vol(mat, J):
    return 0.5 * mat.bulk * (J - 1.0) ** 2


def dvol(mat, J):
    return mat.bulk * (J - 1.0)


def kappa(mat, F):
    return mat.kappa0 * det(F) ** mat.kappa_exp


def kappa_F(mat, F):
    """d kappa / d F = kappa_exp kappa F^{-T} (kappa depends on F through det F only)."""
    return mat.kappa_exp * kappa(mat, F) * inv_T(F)


def coercive_force(mat, theta):
    return mat.h0 * np.maximum(0.0, 1.0 - np.asarray(theta) / mat.theta_c)


def inv_gamma(mat, theta):
    return mat.g0 * np.maximum(0.0, 1.0 - np.asarray(theta) / mat.theta_c)


def conductivity(mat, F, theta):
    # even in theta, so the negative-temperature extension is automatic
    return mat.cond * np.ones_like(np.asarray(theta, dtype=float))


def _q(mat, m):
    m2 = np.sum(m * m, axis=0)
    return m2 / (1.0 + mat.eps2 * m2), m2


def _dq(mat, m):
    m2 = np.sum(m * m, axis=0)
    return 2.0 * m / (1.0 + mat.eps2 * m2) ** 2


def _a_crit(mat):
    return mat.theta_c / (1.0 + mat.eps1 * mat.theta_c)


def _theta_sat(mat, theta):
    return theta / (1.0 + mat.eps1 * theta)


def _check_theta(mat, theta):
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise DomainError("non-finite temperature")
    if mat.eps_reg <= 0 and np.any(theta < 0):
        raise DomainError(f"negative temperature {np.min(theta):.3e} with eps_reg = 0")
    return theta


def _thermal(mat, theta):
    """c0 theta (1 - ln theta), extended by c0 theta (ln(-theta) - 1) below zero."""
    at = np.abs(theta)
    lg = np.log(np.where(at > 0, at, 1.0))
    return np.where(theta >= 0, mat.c0 * theta * (1.0 - lg), mat.c0 * theta * (lg - 1.0))


def _thermal_dtheta(mat, theta):
    at = np.abs(theta)
    lg = np.log(np.where(at > 0, at, 1.0))
    return np.where(theta >= 0, -mat.c0 * lg, mat.c0 * lg)


# ---------------------------------------------------------------- potentials

def phi(mat, F, m):
    """Temperature-independent stored energy phi(F, m) (referential)."""
    J = _check_F(F)
    q, m2 = _q(mat, m)
    el = 0.5 * mat.G * (frob2(F) / J - D)
    return el + vol(mat, J) + mat.b0 * J * m2 ** 2 - mat.a0 * J * _a_crit(mat) * q


def zeta(mat, F, m, theta):
    """Heat part zeta(F, m, theta); zeta(F, m, 0) = 0."""
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    mag = np.where(theta >= 0, mat.a0 * J * _theta_sat(mat, np.maximum(theta, 0.0)) * q, 0.0)
    return mag + _thermal(mat, theta)


def free_energy(mat, F, m, grad_m, theta):
    """psi(F, m, grad m, theta)."""
    F = np.asarray(F, dtype=float)
    m = np.asarray(m, dtype=float)
    grad_m = np.asarray(grad_m, dtype=float)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(grad_m))):
        raise DomainError("non-finite magnetization input")
    gm2 = np.sum(grad_m * grad_m, axis=(0, 1))
    return phi(mat, F, m) + zeta(mat, F, m, theta) + 0.5 * kappa(mat, F) * gm2


def phi_F(mat, F, m):
    J = _check_F(F)
    q, m2 = _q(mat, m)
    FiT = inv_T(F)
    el = 0.5 * mat.G * (2.0 * F / J - frob2(F) / J * FiT)
    scal = dvol(mat, J) + mat.b0 * m2 ** 2 - mat.a0 * _a_crit(mat) * q
    return el + scal * J * FiT


def phi_m(mat, F, m):
    J = _check_F(F)
    _, m2 = _q(mat, m)
    return 4.0 * mat.b0 * J * m2 * m - mat.a0 * J * _a_crit(mat) * _dq(mat, m)


def zeta_F(mat, F, m, theta):
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    c = np.where(theta >= 0, mat.a0 * _theta_sat(mat, np.maximum(theta, 0.0)) * q, 0.0)
    return c * J * inv_T(F)


def zeta_m(mat, F, m, theta):
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    c = np.where(theta >= 0, mat.a0 * J * _theta_sat(mat, np.maximum(theta, 0.0)), 0.0)
    return c * _dq(mat, m)


def zeta_theta(mat, F, m, theta):
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    tp = np.maximum(theta, 0.0)
    mag = np.where(theta >= 0, mat.a0 * J * q / (1.0 + mat.eps1 * tp) ** 2, 0.0)
    return mag + _thermal_dtheta(mat, theta)


def zeta_stress(mat, F, m, theta):
    """zeta_F' F^T / det F, which reduces to a0 theta q/(1 + e1 theta) * I."""
    _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    c = np.where(theta >= 0, mat.a0 * _theta_sat(mat, np.maximum(theta, 0.0)) * q, 0.0)
    return c * _eye_like(c)


def cauchy_stress(mat, F, m, grad_m, theta, J=None):
    """Conservative Cauchy stress T = (phi_F' + zeta_F' + |grad m|^2 kappa'/2) F^T / det F.

    Written in closed form so that T is symmetric to the last bit.
    ``J`` may carry the cut-off determinant det_lambda(F) used for the
    division; the constitutive derivatives always use the true det F.
    """
    F = np.asarray(F, dtype=float)
    Jt = _check_F(F)
    J = Jt if J is None else J
    theta = _check_theta(mat, theta)
    q, m2 = _q(mat, m)
    gm2 = np.sum(grad_m * grad_m, axis=(0, 1))
    FFt = np.einsum("ik...,jk...->ij...", F, F)
    iso = (dvol(mat, Jt) + mat.b0 * m2 ** 2 - mat.a0 * _a_crit(mat) * q) * Jt / J
    iso = iso - 0.5 * mat.G * frob2(F) / (Jt * J)
    tp = np.maximum(theta, 0.0)
    iso = iso + np.where(theta >= 0, mat.a0 * _theta_sat(mat, tp) * q, 0.0) * Jt / J
    iso = iso + 0.5 * gm2 * mat.kappa_exp * kappa(mat, F) / J
    return mat.G * FFt / (Jt * J) + iso * _eye_like(iso)


def local_driving_force(mat, F, m, theta, J=None):
    """(phi_m' + zeta_m') / det F, the local part of the magnetic driving force."""
    J = det(F) if J is None else J
    return (phi_m(mat, F, m) + zeta_m(mat, F, m, theta)) / J


def enthalpy(mat, F, m, theta):
    """w = (zeta - theta zeta_theta') / det F."""
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    tp = np.maximum(theta, 0.0)
    extra = mat.eps1 * mat.a0 * J * tp ** 2 * q / (1.0 + mat.eps1 * tp) ** 2
    # below zero: sign-preserving branch w = c0 theta / J (see notes on the extension)
    return (mat.c0 * theta + extra) / J


def heat_capacity(mat, F, m, theta):
    """dw/dtheta (actual heat capacity)."""
    J = _check_F(F)
    theta = _check_theta(mat, theta)
    q, _ = _q(mat, m)
    tp = np.maximum(theta, 0.0)
    extra = 2.0 * mat.eps1 * mat.a0 * J * tp * q / (1.0 + mat.eps1 * tp) ** 3
    return (mat.c0 + extra) / J


def entropy(mat, F, m, theta):
    """Actual entropy eta = -zeta_theta' / det F."""
    return -zeta_theta(mat, F, m, theta) / det(F)


def invert_enthalpy(mat, F, m, w, tol=1e-14, maxiter=100):
    """Unique theta with enthalpy(theta) = w (vectorized safeguarded Newton)."""
    w = np.asarray(w, dtype=float)
    J = _check_F(F)
    if not np.all(np.isfinite(w)):
        raise DomainError("non-finite enthalpy")
    if np.any(w < 0) and mat.eps_reg <= 0:
        raise DomainError(f"negative enthalpy {np.min(w):.3e}: positivity broken upstream")
    q, _ = _q(mat, m)
    lin = w * J / mat.c0
    alpha = mat.eps1 * mat.a0 * J * q / mat.c0
    if mat.eps1 == 0 or not np.any((alpha > 0) & (w > 0)):
        return lin + 0.0 * alpha
    # solve g(t) = t + alpha t^2/(1+e1 t)^2 - lin = 0 on [0, lin]
    lo = np.zeros_like(lin + alpha)
    hi = np.maximum(lin + 0.0 * alpha, 0.0)
    t = hi.copy()
    e1 = mat.eps1
    for _ in range(maxiter):
        g = t + alpha * t * t / (1 + e1 * t) ** 2 - lin
        dg = 1.0 + 2.0 * alpha * t / (1 + e1 * t) ** 3
        lo = np.where(g < 0, t, lo)
        hi = np.where(g > 0, t, hi)
        tn = t - g / dg
        bad = (tn <= lo) | (tn >= hi)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        done = np.abs(tn - t) <= tol * np.maximum(np.abs(t), 1e-300)
        t = tn
        if np.all(done):
            break
    return np.where(lin <= 0, lin, t)


# ---------------------------------------------------------------- cut-off

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def cutoff_pi(mat, F):
    """C^1 cut-off: 1 for det F >= lam and |F| <= 1/lam, 0 for det F <= lam/2 or |F| >= 2/lam."""
    lam = mat.lambda_cut
    F = np.asarray(F, dtype=float)
    nF = np.sqrt(frob2(F))
    return _smoothstep((2.0 * det(F) - lam) / lam) * _smoothstep(2.0 - lam * nF)


def det_reg(mat, F):
    pi = cutoff_pi(mat, F)
    return pi * det(F) + 1.0 - pi


def kappa_reg(mat, F):
    pi = cutoff_pi(mat, F)
    return pi * kappa(mat, F) + (1.0 - pi) * det(F)


def cond_reg(mat, F, theta):
    pi = cutoff_pi(mat, F)
    return pi * conductivity(mat, F, theta) + 1.0 - pi


def saturation_magnetization(a0c, b0c, theta_c, theta):
    theta = np.asarray(theta, dtype=float)
    return np.sqrt(np.maximum(a0c * (theta_c - theta), 0.0) / (2.0 * b0c))


def dissipation_rate(mat, F, theta, e, G2, r, eps=0.0):
    """xi = nu1|e|^p + nu2|G2|^p + mu0 tau |r|^2 + mu0 h_c |r|, optionally eps-regularized."""
    p = mat.p
    e2 = frob2(np.asarray(e, dtype=float), 2)
    g2 = frob2(np.asarray(G2, dtype=float), 3)
    r2 = np.sum(np.asarray(r, dtype=float) ** 2, axis=0)
    ep = e2 ** (p / 2)
    gp = g2 ** (p / 2)
    xi = mat.nu1 * ep + mat.nu2 * gp + mat.mu0 * mat.tau * r2 \
        + mat.mu0 * coercive_force(mat, theta) * np.sqrt(r2)
    if eps > 0:
        xi = xi / (1.0 + eps * ep + eps * gp + eps * r2)
    return xi


@dataclass
class LocalThermoEval:
    psi: np.ndarray
    phi: np.ndarray
    zeta: np.ndarray
    T: np.ndarray
    t_drv_local: np.ndarray
    eta: np.ndarray
    c: np.ndarray
    w: np.ndarray


def evaluate(mat, F, m, grad_m, theta):
    """All local thermodynamic fields at once."""
    return LocalThermoEval(
        psi=free_energy(mat, F, m, grad_m, theta),
        phi=phi(mat, F, m),
        zeta=zeta(mat, F, m, theta),
        T=cauchy_stress(mat, F, m, grad_m, theta),
        t_drv_local=local_driving_force(mat, F, m, theta),
        eta=entropy(mat, F, m, theta),
        c=heat_capacity(mat, F, m, theta),
        w=enthalpy(mat, F, m, theta),
    )
