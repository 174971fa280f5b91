"""Momentum balance: stresses, magnetic forces and the implicit p-power viscosity.

The velocity update is written in weak (variational) form on the grid.
With G the discrete velocity-gradient matrix (v . n = 0 built into its
ghosts) and H the discrete second-gradient matrix, a stress sigma acts on
the velocity unknowns as -G^T sigma and a hyperstress as -H^T S, so the
power of every stress is exactly -<sigma, grad v>.  The viscous,
hyperviscous and Navier boundary terms are the gradient of the convex,
p-homogeneous potential

    Phi(v) = sum_cells A (nu1 |e(v)|^p + nu2 |grad^2 v|^p) / p
             + sum_wall_faces |face| nu_flat |v_t|^p / p,

which makes the natural boundary conditions automatic and gives
<grad Phi(v), v> = p Phi(v), the discrete dissipation rate.

Sign convention: the Korteweg stress K, the skew stress S and the exchange
hyperstress Ss enter with the signs that make the magneto-mechanical power
balance close (stress -K - S, hyperstress +Ss in the weak form).
``alt_signs=True`` flips them to the opposite convention for comparison.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constitutive as cst
from . import fields as fd
from . import transport as tr
from .errors import SolverError


@dataclass
class StressBundle:
    T: np.ndarray
    K: np.ndarray
    S: np.ndarray
    Hs: np.ndarray
    Ss: np.ndarray
    D: np.ndarray
    kelvin: np.ndarray
    zeeman_pressure: np.ndarray


def _par(grid, i, a):
    return 1 if grid.periodic else (-1 if i == a else 1)


class MomentumOperators:
    """Sparse gradient / symmetric-gradient / second-gradient matrices for v (2N unknowns)."""

    def __init__(self, grid):
        self.grid = grid
        N = grid.size
        Z = sp.csr_matrix((N, N))
        D1 = [[fd.derivative_matrix(grid, a, _par(grid, i, a)) for a in range(2)] for i in range(2)]
        D2 = [[fd.derivative_matrix(grid, a, _par(grid, i, a), order=2) for a in range(2)]
              for i in range(2)]
        rows = []
        for i in range(2):
            for j in range(2):
                rows.append(sp.hstack([D1[i][j] if k == i else Z for k in range(2)]))
        self.G = sp.vstack(rows, format="csr")            # rows (i, j): d_j v_i
        Gi = [[self.G[(2 * i + j) * N:(2 * i + j + 1) * N] for j in range(2)] for i in range(2)]
        self.E = sp.vstack([0.5 * (Gi[i][j] + Gi[j][i]) for i in range(2) for j in range(2)],
                           format="csr")
        hrows = []
        for i in range(2):
            px, py = _par(grid, i, 0), _par(grid, i, 1)
            mix = fd.derivative_matrix(grid, 1, py) @ fd.derivative_matrix(grid, 0, px)
            blocks = {(0, 0): D2[i][0], (1, 1): D2[i][1], (0, 1): mix, (1, 0): mix}
            for j in range(2):
                for k in range(2):
                    hrows.append(sp.hstack([blocks[(j, k)] if c == i else Z for c in range(2)]))
        self.H = sp.vstack(hrows, format="csr")           # rows (i, j, k): d_j d_k v_i
        self.N = N
        if not grid.periodic:
            self._wall_setup()

    def _wall_setup(self):
        g = self.grid
        idx = np.arange(g.size).reshape(g.shape)
        N = g.size
        # tangential unknowns on the four walls, with their face lengths
        sel = [N + idx[0, :], N + idx[-1, :], idx[:, 0], idx[:, -1]]
        lens = [np.full(g.ny, g.hy), np.full(g.ny, g.hy), np.full(g.nx, g.hx), np.full(g.nx, g.hx)]
        self.wall_idx = np.concatenate(sel)
        self.wall_len = np.concatenate(lens)

    def flat(self, v):
        return v.reshape(-1)

    def unflat(self, V):
        return V.reshape((2,) + self.grid.shape)


def _block_hessian(X, p, ncomp, weight):
    """blockdiag over cells of weight (|x|^{p-2} I + (p-2)|x|^{p-4} x x^T); X is (ncomp, N)."""
    N = X.shape[1]
    n2 = np.sum(X * X, axis=0)
    if p == 2:
        a = np.ones(N)
        c = np.zeros(N)
    else:
        reg = n2 + (1e-300 if p >= 4 else 1e-24)
        a = reg ** ((p - 2) / 2)
        c = (p - 2) * reg ** ((p - 4) / 2)
    rows, cols, vals = [], [], []
    ar = np.arange(N)
    for i in range(ncomp):
        for j in range(ncomp):
            v = c * X[i] * X[j] + (a if i == j else 0.0)
            rows.append(i * N + ar)
            cols.append(j * N + ar)
            vals.append(weight * v)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(ncomp * N, ncomp * N))


def _pnorm_terms(X, p):
    n2 = np.sum(X * X, axis=0)
    return n2 ** (p / 2), n2 ** ((p - 2) / 2) * X


class ViscousPotential:
    """Phi(v) with gradient and Hessian (see module docstring)."""

    def __init__(self, ops, mat):
        self.ops = ops
        self.mat = mat
        self.A = ops.grid.area

    def parts(self, V):
        N = self.ops.N
        e = (self.ops.E @ V).reshape(4, N)
        G = (self.ops.H @ V).reshape(8, N)
        return e, G

    def value(self, V):
        p = self.mat.p
        e, G = self.parts(V)
        ep, _ = _pnorm_terms(e, p)
        gp, _ = _pnorm_terms(G, p)
        val = self.A * np.sum(self.mat.nu1 * ep + self.mat.nu2 * gp) / p
        if not self.ops.grid.periodic:
            vt = V[self.ops.wall_idx]
            val += np.sum(self.ops.wall_len * self.mat.nu_flat * np.abs(vt) ** p) / p
        return val

    def gradient(self, V):
        p = self.mat.p
        e, G = self.parts(V)
        _, de = _pnorm_terms(e, p)
        _, dg = _pnorm_terms(G, p)
        out = self.A * (self.mat.nu1 * (self.ops.E.T @ de.ravel())
                        + self.mat.nu2 * (self.ops.H.T @ dg.ravel()))
        if not self.ops.grid.periodic:
            vt = V[self.ops.wall_idx]
            np.add.at(out, self.ops.wall_idx,
                      self.ops.wall_len * self.mat.nu_flat * np.abs(vt) ** (p - 2) * vt)
        return out

    def hessian(self, V):
        p = self.mat.p
        e, G = self.parts(V)
        Be = _block_hessian(e, p, 4, self.A * self.mat.nu1)
        Bg = _block_hessian(G, p, 8, self.A * self.mat.nu2)
        Hm = self.ops.E.T @ Be @ self.ops.E + self.ops.H.T @ Bg @ self.ops.H
        if not self.ops.grid.periodic:
            vt = V[self.ops.wall_idx]
            d = self.ops.wall_len * self.mat.nu_flat * (p - 1) * \
                (vt * vt + (1e-300 if p >= 3 else 1e-24)) ** ((p - 2) / 2)
            Hb = sp.csr_matrix((d, (self.ops.wall_idx, self.ops.wall_idx)), shape=Hm.shape)
            Hm = Hm + Hb
        return Hm

    def dissipation_fields(self, V):
        """Per-cell nu1|e|^p + nu2|G|^p, and the wall total sum |face| nu_flat |v_t|^p."""
        p = self.mat.p
        e, G = self.parts(V)
        ep, _ = _pnorm_terms(e, p)
        gp, _ = _pnorm_terms(G, p)
        cell = (self.mat.nu1 * ep + self.mat.nu2 * gp).reshape(self.ops.grid.shape)
        wall = 0.0
        if not self.ops.grid.periodic:
            wall = float(np.sum(self.ops.wall_len * self.mat.nu_flat *
                                np.abs(V[self.ops.wall_idx]) ** p))
        return cell, wall


# ---------------------------------------------------------------- stresses

def _skw_tensor(m, gm, coef):
    """coef * Skw(m (x) grad m)_{ijk} = coef/2 (m_i d_k m_j - m_j d_k m_i), in-plane i, j."""
    out = np.empty((2, 2, 2) + m.shape[1:])
    for i in range(2):
        for j in range(2):
            for k in range(2):
                out[i, j, k] = 0.5 * coef * (m[i] * gm[j, k] - m[j] * gm[i, k])
    return out


def effective_det(mat, F):
    return cst.det_reg(mat, F) if mat.cutoff else cst.det(F)


def assemble_stresses(grid, mat, F, m, theta, v, h_total):
    """Evaluate every stress and force density of the momentum balance."""
    J = effective_det(mat, F)
    bc_m = "extrap" if grid.periodic else "even"
    gm = fd.grad(grid, m, bc_m)                       # (nc, 2, nx, ny)
    T = cst.cauchy_stress(mat, F, m, gm, theta, J=J)
    kap = cst.kappa_reg(mat, F) if mat.cutoff else cst.kappa(mat, F)
    K = kap / J * fd.outer_grad(gm)
    h = np.zeros_like(m)
    h[:h_total.shape[0]] = h_total
    b = mat.mu0 * h - cst.local_driving_force(mat, F, m, theta, J)
    S = np.empty((2, 2) + grid.shape)
    for i in range(2):
        for j in range(2):
            S[i, j] = 0.5 * (b[i] * m[j] - b[j] * m[i])
    Ss = _skw_tensor(m, gm, kap / J)
    bcv = "extrap" if grid.periodic else "velocity"
    e = fd.sym_grad(grid, v, bcv)
    G2 = fd.second_grad(grid, v, bcv)
    p = mat.p
    ne = np.sqrt(cst.frob2(e, 2))
    ng = np.sqrt(cst.frob2(G2, 3))
    Dv = mat.nu1 * ne ** (p - 2) * e
    Hs = mat.nu2 * ng ** (p - 2) * G2
    gh = fd.grad(grid, h, bc_m)                       # gh[i, j] = d_j h_i
    kelvin = mat.mu0 * np.einsum("i...,ij...->j...", m, gh)
    zp = mat.mu0 * fd.grad(grid, np.sum(h * m, axis=0), bc_m)
    return StressBundle(T, K, S, Hs, Ss, Dv, kelvin, zp)


# ---------------------------------------------------------------- step

@dataclass
class MomentumResult:
    v: np.ndarray
    xi_visc: np.ndarray          # nu1|e|^p + nu2|G|^p per cell at the new velocity
    wall_dissipation: float      # sum over wall faces of |face| nu_flat |v_t|^p
    e: np.ndarray
    G2: np.ndarray
    newton_iterations: int
    residual_history: list


def explicit_force(grid, ops, mat, bundle, rho, v, g, k_traction, scheme="upwind1",
                   alt_signs=False):
    """Momentum-density rate from every explicit term (stresses, convection, forces)."""
    sgn = 1.0 if alt_signs else -1.0
    sigma = bundle.T + sgn * (bundle.K + bundle.S)
    f = -(ops.G.T @ sigma.reshape(-1))
    f = f - sgn * (ops.H.T @ bundle.Ss.reshape(-1))
    f = ops.unflat(f)
    f = f + tr.flux_divergence(grid, rho * v, v, scheme)
    f = f + bundle.kelvin - bundle.zeeman_pressure
    f = f + rho * np.asarray(g, dtype=float).reshape(2, 1, 1)
    if not grid.periodic and k_traction is not None:
        kt = np.asarray(k_traction, dtype=float)
        if np.any(kt):
            # k is a constant vector; only its tangential part acts on each wall
            fb = fd.BoundaryField(np.full(grid.ny, kt[1]), np.full(grid.ny, kt[1]),
                                  np.full(grid.nx, kt[0]), np.full(grid.nx, kt[0]))
            fd.add_boundary_source(grid, f, fb, comps=(1, 1, 0, 0))
    return f


def traction_power(grid, v, k_traction):
    if grid.periodic or k_traction is None:
        return 0.0
    kt = np.asarray(k_traction, dtype=float)
    vt = fd.tangential_velocity(grid, v)
    return float((np.sum(vt.left) + np.sum(vt.right)) * kt[1] * grid.hy +
                 (np.sum(vt.bottom) + np.sum(vt.top)) * kt[0] * grid.hx)


def _solve_spd(Jm, R):
    """Jacobi-preconditioned CG; sparse LU if CG stalls."""
    dinv = 1.0 / Jm.diagonal()
    P = spla.LinearOperator(Jm.shape, matvec=lambda x: dinv * x)
    x, info = spla.cg(Jm, -R, rtol=1e-12, atol=0.0, M=P, maxiter=4000)
    if info != 0:
        x = -spla.spsolve(Jm.tocsc(), R)
    return x


def momentum_step(grid, ops, mat, rho_old, rho_new, v, force, dt, tol=1e-10, maxiter=50,
                  floor=1e-6):
    """Solve rho_new v' + dt grad Phi(v')/A = rho_old v + dt force by damped Newton.

    The merit function is the convex potential
    Psi(V) = A/2 sum rho_new |V|^2 - A <rhs, V> + dt Phi(V);
    every Newton direction is a descent direction and an Armijo backtracking
    keeps Psi monotone whenever the full step does not already reduce the
    residual.  Iterations stop at relative residual ``tol``, or when they
    stagnate below ``floor`` (round-off level of the assembled operator).
    """
    pot = ViscousPotential(ops, mat)
    A = grid.area
    rhs = (rho_old * v + dt * force).reshape(-1)
    M = np.tile(rho_new.reshape(-1), 2) * A

    def merit(V):
        return 0.5 * np.sum(M * V * V) - A * rhs @ V + dt * pot.value(V)

    V = rhs * A / M
    scale = np.max(np.abs(A * rhs)) + 1e-300

    def resid(V):
        return M * V - A * rhs + dt * pot.gradient(V)

    R = resid(V)
    hist = [float(np.max(np.abs(R)))]
    it = 0
    while hist[-1] > tol * scale:
        # round-off floor: no progress although the residual is already tiny
        if it > 0 and hist[-1] > 0.5 * hist[-2] and hist[-1] <= floor * scale:
            break
        if it == maxiter:
            raise SolverError("momentum Newton did not converge", {"residual_history": hist})
        it += 1
        Jm = sp.diags(M) + dt * pot.hessian(V)
        dV = _solve_spd(Jm, R)
        Rn = resid(V + dV)
        if np.max(np.abs(Rn)) < hist[-1]:
            V = V + dV
            R = Rn
        else:
            psi0 = merit(V)
            slope = R @ dV
            step = 0.5
            while step > 1e-12 and merit(V + step * dV) > psi0 + 1e-4 * step * slope:
                step *= 0.5
            V = V + step * dV
            R = resid(V)
        hist.append(float(np.max(np.abs(R))))
    vn = ops.unflat(V).copy()
    cell, wall = pot.dissipation_fields(V)
    e, G = pot.parts(V)
    return MomentumResult(vn, cell, wall, e.reshape((2, 2) + grid.shape),
                          G.reshape((2, 2, 2) + grid.shape), it, hist)
