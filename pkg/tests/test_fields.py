import numpy as np
import pytest

from magnetoelast import fields as fd


def test_grad_exact_for_affine_fields():
    g = fd.Grid.unit_square(16, "box")
    x, y = g.coords()
    gr = fd.grad(g, 3.0 * x - 2.0 * y + 1.0)
    assert np.allclose(gr[0], 3.0, atol=1e-12)
    assert np.allclose(gr[1], -2.0, atol=1e-12)


def test_shear_split():
    g = fd.Grid.unit_square(16, "box")
    x, y = g.coords()
    v = np.stack([y, 0 * y])
    assert np.allclose(fd.sym_grad(g, v), np.array([[0, 0.5], [0.5, 0]])[..., None, None])
    assert np.allclose(fd.skw_grad(g, v), np.array([[0, 0.5], [-0.5, 0]])[..., None, None])
    assert np.allclose(fd.sym_grad(g, v) + fd.skw_grad(g, v), fd.grad(g, v))


def _operator_errors(n):
    g = fd.Grid.unit_square(n, "periodic")
    x, y = g.coords()
    k = 2 * np.pi
    f = np.sin(k * x) * np.cos(k * y)
    v = np.stack([f, np.cos(k * x + k * y)])
    e_grad = np.max(np.abs(fd.grad(g, f)[0] - k * np.cos(k * x) * np.cos(k * y)))
    e_lap = np.max(np.abs(fd.laplacian(g, f) + 2 * k * k * f))
    e_div = np.max(np.abs(fd.div(g, v) - (k * np.cos(k * x) * np.cos(k * y)
                                          - k * np.sin(k * x + k * y))))
    e_g2 = np.max(np.abs(fd.second_grad(g, v)[0, 0, 1] + k * k * np.cos(k * x) * np.sin(k * y)))
    return np.array([e_grad, e_lap, e_div, e_g2])


def test_second_order_convergence():
    ratio = _operator_errors(32) / _operator_errors(64)
    assert np.all(ratio >= 3.5)


def test_periodic_adjointness():
    g = fd.Grid.unit_square(16, "periodic")
    rng = np.random.default_rng(0)
    f = rng.standard_normal(g.shape)
    v = rng.standard_normal((2,) + g.shape)
    lhs = g.integrate(np.sum(fd.grad(g, f) * v, axis=0)) + g.integrate(f * fd.div(g, v))
    assert abs(lhs) <= 1e-10


def test_linearity():
    g = fd.Grid.unit_square(12, "box")
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 2) + g.shape)
    lhs = fd.second_grad(g, 2 * a - 3 * b, "velocity")
    rhs = 2 * fd.second_grad(g, a, "velocity") - 3 * fd.second_grad(g, b, "velocity")
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_boundary_integrals():
    g = fd.Grid.unit_square(20, "box")
    x, y = g.coords()
    one = fd.boundary_trace(g, np.ones(g.shape))
    assert abs(fd.boundary_integral(g, one) - 4.0) <= 1e-12
    assert fd.boundary_integral(g, fd.boundary_trace(g, x)) == pytest.approx(2.0, abs=1e-12)
    div_s = fd.surface_divergence(g, fd.boundary_trace(g, 0.7 * np.ones(g.shape)))
    assert all(np.all(d == 0) for d in div_s)


def test_boundary_ops_need_box():
    g = fd.Grid.unit_square(8, "periodic")
    with pytest.raises(NotImplementedError):
        fd.boundary_trace(g, np.ones(g.shape))


def test_grid_validation():
    with pytest.raises(ValueError):
        fd.Grid(3, 8, 0.1, 0.1)
    with pytest.raises(ValueError):
        fd.Grid(8, 8, 0.0, 0.1)


def test_diffusion_is_adjoint_of_gradient_energy():
    g = fd.Grid.unit_square(10, "box")
    rng = np.random.default_rng(2)
    k = rng.uniform(0.5, 2.0, g.shape)
    f, h = rng.standard_normal((2,) + g.shape)
    polar = fd.gradient_energy(g, k, f + h) - fd.gradient_energy(g, k, f) - fd.gradient_energy(g, k, h)
    assert g.integrate(fd.diffusion_flux_div(g, k, f) * h) == pytest.approx(-polar, abs=1e-10)


def test_dump_round_trip(tmp_path):
    g = fd.Grid(8, 6, 0.1, 0.2)
    a = np.random.default_rng(3).standard_normal((2,) + g.shape)
    p = tmp_path / "m.bin"
    fd.dump_field(p, "m", g, a)
    lines = p.read_bytes().split(b"\n", 3)
    assert lines[:3] == [b"m", b"8 6 0.1 0.2", b"2"]
    name, g2, b = fd.load_field(p)
    assert name == "m" and g2.shape == g.shape and np.array_equal(a, b)
