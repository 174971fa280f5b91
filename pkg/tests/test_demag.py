import numpy as np
import pytest

from magnetoelast import demag as dm
from magnetoelast import fields as fd


def test_zero_magnetization():
    g = fd.Grid.unit_square(16, "box")
    res = dm.solve_demag(g, np.zeros((2,) + g.shape))
    assert np.all(res.u == 0) and np.all(res.h_dem == 0)
    assert dm.demag_energy(g, res, np.zeros((2,) + g.shape)) == (0.0, 0.0)


def test_divergence_free_tangential_field_is_not_demagnetizing():
    g = fd.Grid.unit_square(32, "box")
    x, y = g.coords()
    # stream function sin^2(pi x) sin^2(pi y): m . n = 0 on the walls
    m = np.stack([np.sin(np.pi * x) ** 2 * 2 * np.pi * np.sin(np.pi * y) * np.cos(np.pi * y),
                  -np.sin(np.pi * y) ** 2 * 2 * np.pi * np.sin(np.pi * x) * np.cos(np.pi * x)])
    h = dm.solve_demag(g, m).h_dem
    assert np.max(np.abs(h)) <= 0.05 * np.max(np.abs(m))


def _disk_error(n, R, pad):
    g = fd.Grid.unit_square(n, "box")
    m, _ = dm.disk_magnetization(g, R)
    h = dm.solve_demag(g, m, pad=pad).h_dem
    x, y = g.coords()
    core = (x - 0.5) ** 2 + (y - 0.5) ** 2 <= (R / 2) ** 2
    return np.max(np.abs(h[0][core] + 0.5)) / 0.5, np.max(np.abs(h[1][core])) / 0.5


def test_disk_demag_factor():
    ex, ey = _disk_error(64, 0.25, 4)
    assert ex <= 0.02 and ey <= 0.02


def test_disk_error_is_dominated_by_padding():
    # a larger disk sees more of the Dirichlet box; enlarging the pad removes it
    e4 = _disk_error(64, 0.3, 4)[0]
    e8 = _disk_error(64, 0.3, 8)[0]
    assert e4 > 0.02 and e8 < e4 / 2


def test_energy_identity_and_sign():
    g = fd.Grid.unit_square(32, "box")
    m, _ = dm.disk_magnetization(g, 0.3, (0.6, 0.8))
    res = dm.solve_demag(g, m)
    field, inter = dm.demag_energy(g, res, m)
    assert field > 0
    assert abs(2 * field - inter) <= 1e-10 * field
    rng = np.random.default_rng(0)
    mr = rng.standard_normal((2,) + g.shape)
    assert g.integrate(np.sum(mr * dm.solve_demag(g, mr).h_dem, axis=0)) <= 0


def test_linearity():
    g = fd.Grid.unit_square(16, "box")
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 2) + g.shape)
    lhs = dm.solve_demag(g, 2 * a + 3 * b).h_dem
    rhs = 2 * dm.solve_demag(g, a).h_dem + 3 * dm.solve_demag(g, b).h_dem
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_pad_validation():
    g = fd.Grid.unit_square(8, "box")
    with pytest.raises(ValueError):
        dm.solve_demag(g, np.zeros((2,) + g.shape), pad=1)
