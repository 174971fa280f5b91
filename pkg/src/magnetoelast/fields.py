"""Cell-centered 2-D grid, discrete differential operators and field dumps.

Fields are numpy arrays whose last two axes are (x, y) = (nx, ny); cell
(i, j) has its center at ((i + 1/2) hx, (j + 1/2) hy).

Boundary handling in box mode follows the ``bc`` argument:

* ``"extrap"``  one-sided second-order closure (generic fields, no BC assumed)
* ``"even"``    mirror ghost, i.e. zero normal derivative (m, theta, rho)
* ``"velocity"``  normal component odd, tangential even (v . n = 0)

Periodic grids ignore ``bc``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Grid:
    nx: int = 64
    ny: int = 64
    hx: float = 1.0 / 64
    hy: float = 1.0 / 64
    mode: str = "box"

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs at least 4 cells per direction")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("grid spacing must be positive")
        if self.mode not in ("box", "periodic"):
            raise ValueError(f"unknown boundary mode {self.mode!r}")

    @classmethod
    def unit_square(cls, n=64, mode="box"):
        return cls(n, n, 1.0 / n, 1.0 / n, mode)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def area(self):
        return self.hx * self.hy

    @property
    def periodic(self):
        return self.mode == "periodic"

    @property
    def h(self):
        return (self.hx, self.hy)

    def coords(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def integrate(self, f):
        """Midpoint-rule integral over the cells (sums the last two axes)."""
        return np.sum(f, axis=(-2, -1)) * self.area


# ---------------------------------------------------------------- 1-D stencils

def _parity(bc, comp, axis):
    if bc == "even":
        return 1
    if bc == "velocity":
        return -1 if comp == axis else 1
    return None


def _d1(f, axis, h, periodic, parity):
    ax = f.ndim - 2 + axis
    if periodic:
        return (np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2 * h)
    if parity is None:
        return np.gradient(f, h, axis=ax, edge_order=2)
    g = np.pad(f, [(0, 0)] * ax + [(1, 1)] + [(0, 0)] * (f.ndim - ax - 1), mode="edge")
    if parity < 0:
        sl = [slice(None)] * f.ndim
        sl[ax] = 0
        g[tuple(sl)] *= -1
        sl[ax] = -1
        g[tuple(sl)] *= -1
    hi = [slice(None)] * f.ndim
    lo = [slice(None)] * f.ndim
    hi[ax] = slice(2, None)
    lo[ax] = slice(None, -2)
    return (g[tuple(hi)] - g[tuple(lo)]) / (2 * h)


def _d2(f, axis, h, periodic, parity):
    ax = f.ndim - 2 + axis
    if periodic:
        return (np.roll(f, -1, ax) - 2 * f + np.roll(f, 1, ax)) / h ** 2
    if parity is None:
        return _d1(_d1(f, axis, h, False, None), axis, h, False, None)
    g = np.pad(f, [(0, 0)] * ax + [(1, 1)] + [(0, 0)] * (f.ndim - ax - 1), mode="edge")
    if parity < 0:
        sl = [slice(None)] * f.ndim
        sl[ax] = 0
        g[tuple(sl)] *= -1
        sl[ax] = -1
        g[tuple(sl)] *= -1
    hi = [slice(None)] * f.ndim
    lo = [slice(None)] * f.ndim
    hi[ax] = slice(2, None)
    lo[ax] = slice(None, -2)
    return (g[tuple(hi)] - 2 * f + g[tuple(lo)]) / h ** 2


def partial(grid, f, axis, bc="extrap", comp=None):
    """d f / d x_axis for a single component field f (..., nx, ny)."""
    par = _parity(bc, comp, axis) if bc != "extrap" else None
    return _d1(f, axis, grid.h[axis], grid.periodic, par)


# ---------------------------------------------------------------- operators

def grad(grid, f, bc="extrap"):
    """Gradient of a scalar (nx, ny) -> (2, nx, ny), or of a vector v (2, nx, ny)
    -> (2, 2, nx, ny) with out[i, j] = d v_i / d x_j.  Stacked fields with more
    leading axes are handled component-wise with ``bc`` in {"extrap", "even"}."""
    f = np.asarray(f, dtype=float)
    if bc == "velocity":
        return np.stack([np.stack([_d1(f[i], a, grid.h[a], grid.periodic, _parity(bc, i, a))
                                   for a in range(2)]) for i in range(2)])
    par = _parity(bc, None, 0)
    return np.stack([_d1(f, a, grid.h[a], grid.periodic, par) for a in range(2)], axis=-3)


def div(grid, v, bc="extrap"):
    v = np.asarray(v, dtype=float)
    return sum(_d1(v[a], a, grid.h[a], grid.periodic, _parity(bc, a, a) if bc != "extrap" else None)
               for a in range(2))


def sym_grad(grid, v, bc="extrap"):
    g = grad(grid, v, bc)
    return 0.5 * (g + np.swapaxes(g, 0, 1))


def skw_grad(grid, v, bc="extrap"):
    g = grad(grid, v, bc)
    return 0.5 * (g - np.swapaxes(g, 0, 1))


def second_grad(grid, v, bc="extrap"):
    """out[i, j, k] = d^2 v_i / dx_j dx_k; compact stencils on the diagonal."""
    v = np.asarray(v, dtype=float)
    out = np.empty((2, 2, 2) + v.shape[1:])
    for i in range(2):
        px = _parity(bc, i, 0) if bc != "extrap" else None
        py = _parity(bc, i, 1) if bc != "extrap" else None
        out[i, 0, 0] = _d2(v[i], 0, grid.hx, grid.periodic, px)
        out[i, 1, 1] = _d2(v[i], 1, grid.hy, grid.periodic, py)
        dx = _d1(v[i], 0, grid.hx, grid.periodic, px)
        # d/dx of an odd-in-x field is even in x, the y parity is unchanged
        out[i, 0, 1] = out[i, 1, 0] = _d1(dx, 1, grid.hy, grid.periodic, py)
    return out


def laplacian(grid, f):
    """Five-point Laplacian; box mode uses the zero-normal-derivative ghost."""
    return _d2(f, 0, grid.hx, grid.periodic, 1) + _d2(f, 1, grid.hy, grid.periodic, 1)


def outer_grad(gm):
    """[grad m (x) grad m]_ij = sum_k d_i m_k d_j m_k for gm[k, i] = d_i m_k."""
    return np.einsum("ki...,kj...->ij...", gm, gm)


# ---------------------------------------------------------------- face quantities

def face_diff(grid, f, axis):
    """Differences across the interior faces normal to ``axis`` (periodic wraps)."""
    ax = f.ndim - 2 + axis
    if grid.periodic:
        return (np.roll(f, -1, ax) - f) / grid.h[axis]
    return np.diff(f, axis=ax) / grid.h[axis]


def face_avg(grid, f, axis):
    ax = f.ndim - 2 + axis
    if grid.periodic:
        return 0.5 * (np.roll(f, -1, ax) + f)
    sl0 = [slice(None)] * f.ndim
    sl1 = [slice(None)] * f.ndim
    sl0[ax] = slice(None, -1)
    sl1[ax] = slice(1, None)
    return 0.5 * (f[tuple(sl0)] + f[tuple(sl1)])


def face_div(grid, flux, axis):
    """Cell divergence contribution of a face flux (zero flux through box walls)."""
    ax = flux.ndim - 2 + axis
    h = grid.h[axis]
    if grid.periodic:
        return (flux - np.roll(flux, 1, ax)) / h
    pad = [(0, 0)] * flux.ndim
    pad[ax] = (1, 1)
    g = np.pad(flux, pad)
    return np.diff(g, axis=ax) / h


def diffusion_flux_div(grid, coef, f):
    """div(coef grad f) in flux form with face coefficients averaged from cells."""
    out = 0.0
    for a in range(2):
        out = out + face_div(grid, face_avg(grid, coef, a) * face_diff(grid, f, a), a)
    return out


def gradient_energy(grid, coef, f):
    """sum over faces of coef_f |df/dn|^2 / 2 times cell area (adjoint of diffusion_flux_div)."""
    tot = 0.0
    for a in range(2):
        d = face_diff(grid, f, a)
        tot = tot + np.sum(face_avg(grid, coef, a) * d * d)
    return 0.5 * tot * grid.area


# ---------------------------------------------------------------- boundary

class BoundaryField(NamedTuple):
    """Values at the boundary face centers: left/right (ny,), bottom/top (nx,)."""
    left: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray


def _require_box(grid):
    if grid.periodic:
        raise NotImplementedError("boundary operations are undefined on a periodic grid")


def boundary_trace(grid, f):
    """Second-order extrapolation of a cell field to the boundary face centers."""
    _require_box(grid)
    return BoundaryField(1.5 * f[..., 0, :] - 0.5 * f[..., 1, :],
                         1.5 * f[..., -1, :] - 0.5 * f[..., -2, :],
                         1.5 * f[..., :, 0] - 0.5 * f[..., :, 1],
                         1.5 * f[..., :, -1] - 0.5 * f[..., :, -2])


def boundary_cells(grid, f):
    """Boundary-cell values (first-order face values), same layout as boundary_trace."""
    _require_box(grid)
    return BoundaryField(f[..., 0, :], f[..., -1, :], f[..., :, 0], f[..., :, -1])


def boundary_integral(grid, fb):
    """Midpoint quadrature over the four faces of the box."""
    _require_box(grid)
    return (np.sum(fb.left) + np.sum(fb.right)) * grid.hy + \
        (np.sum(fb.bottom) + np.sum(fb.top)) * grid.hx


def surface_divergence(grid, tb):
    """Tangential derivative of tangential components along each face.

    Corners are not crossed: the two end cells of every face use one-sided
    differences within that face.
    """
    _require_box(grid)
    return BoundaryField(np.gradient(tb.left, grid.hy, axis=-1),
                         np.gradient(tb.right, grid.hy, axis=-1),
                         np.gradient(tb.bottom, grid.hx, axis=-1),
                         np.gradient(tb.top, grid.hx, axis=-1))


def tangential_velocity(grid, v):
    """Tangential velocity component on each face (boundary-cell values)."""
    _require_box(grid)
    return BoundaryField(v[1, 0, :], v[1, -1, :], v[0, :, 0], v[0, :, -1])


def add_boundary_source(grid, target, fb, comps=None):
    """Deposit a per-length boundary density into the adjacent cells as a per-area density.

    ``comps`` selects the component of ``target`` receiving each face
    (used for tangential tractions); None means a scalar field.
    """
    _require_box(grid)
    sel = (lambda c: target[c]) if comps is not None else (lambda c: target)
    c = comps or (None, None, None, None)
    sel(c[0])[0, :] += fb.left / grid.hx
    sel(c[1])[-1, :] += fb.right / grid.hx
    sel(c[2])[:, 0] += fb.bottom / grid.hy
    sel(c[3])[:, -1] += fb.top / grid.hy
    return target


# ---------------------------------------------------------------- sparse matrices

def _d1_matrix_1d(n, h, periodic, parity):
    main = np.zeros(n)
    if periodic:
        D = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n), format="lil")
        D[0, n - 1] = -1
        D[n - 1, 0] = 1
        return sp.csr_matrix(D) / (2 * h)
    main[0] = -parity
    main[-1] = parity
    D = sp.diags([-np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1], shape=(n, n))
    return sp.csr_matrix(D) / (2 * h)


def _d2_matrix_1d(n, h, periodic, parity):
    if periodic:
        D = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1],
                     shape=(n, n), format="lil")
        D[0, n - 1] = 1
        D[n - 1, 0] = 1
        return sp.csr_matrix(D) / h ** 2
    main = -2 * np.ones(n)
    main[0] += parity
    main[-1] += parity
    D = sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1], shape=(n, n))
    return sp.csr_matrix(D) / h ** 2


def derivative_matrix(grid, axis, parity=1, order=1):
    """Sparse matrix of the (parity-ghosted) first or compact second derivative
    acting on C-ordered flattened (nx, ny) fields."""
    n = grid.shape[axis]
    h = grid.h[axis]
    mk = _d1_matrix_1d if order == 1 else _d2_matrix_1d
    D = mk(n, h, grid.periodic, parity)
    if axis == 0:
        return sp.kron(D, sp.identity(grid.ny), format="csr")
    return sp.kron(sp.identity(grid.nx), D, format="csr")


def neumann_laplacian_matrix(grid, coef=None):
    """Sparse flux-form operator div(coef grad .) with zero flux through walls."""
    N = grid.size
    idx = np.arange(N).reshape(grid.shape)
    rows, cols, vals = [], [], []
    if coef is None:
        coef = np.ones(grid.shape)
    for a in range(2):
        kf = face_avg(grid, coef, a) / grid.h[a] ** 2
        if grid.periodic:
            i0 = idx
            i1 = np.roll(idx, -1, a)
        else:
            sl0 = [slice(None)] * 2
            sl1 = [slice(None)] * 2
            sl0[a] = slice(None, -1)
            sl1[a] = slice(1, None)
            i0 = idx[tuple(sl0)]
            i1 = idx[tuple(sl1)]
        i0 = i0.ravel()
        i1 = i1.ravel()
        k = kf.ravel()
        rows += [i0, i1, i0, i1]
        cols += [i1, i0, i0, i1]
        vals += [k, k, -k, -k]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(N, N))


# ---------------------------------------------------------------- dumps

def dump_field(path, name, grid, f):
    """3-line ASCII header (name; nx ny hx hy; ncomp) + little-endian float64 data."""
    f = np.asarray(f, dtype="<f8")
    ncomp = int(np.prod(f.shape[:-2])) if f.ndim > 2 else 1
    with open(path, "wb") as fh:
        fh.write(f"{name}\n{grid.nx} {grid.ny} {grid.hx!r} {grid.hy!r}\n{ncomp}\n".encode())
        fh.write(np.ascontiguousarray(f).tobytes())


def load_field(path):
    """Inverse of dump_field: returns (name, Grid, array (ncomp, nx, ny) or (nx, ny))."""
    with open(path, "rb") as fh:
        name = fh.readline().decode().strip()
        nx, ny, hx, hy = fh.readline().decode().split()
        ncomp = int(fh.readline().decode())
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = Grid(int(nx), int(ny), float(hx), float(hy))
    shape = (grid.nx, grid.ny) if ncomp == 1 else (ncomp, grid.nx, grid.ny)
    return name, grid, data.reshape(shape).copy()
