import numpy as np
import pytest

from magnetoelast import constitutive as cst
from magnetoelast.errors import DomainError

MAT = cst.Material()
I2 = np.eye(2)


def random_state(rng, n=20):
    F = I2[..., None] + 0.3 * rng.standard_normal((2, 2, n))
    bad = cst.det(F) < 0.3
    F[:, :, bad] = I2[..., None]
    m = rng.standard_normal((2, n))
    gm = rng.standard_normal((2, 2, n))
    theta = rng.uniform(0.1, 2.0, n)
    return F, m, gm, theta


def test_reference_state_values():
    assert cst.free_energy(MAT, I2, np.zeros(2), np.zeros((2, 2)), 1.0) == pytest.approx(MAT.c0)
    T = cst.cauchy_stress(MAT, I2, np.zeros(2), np.zeros((2, 2)), 0.5)
    assert np.all(T == 0)


def test_stress_symmetric():
    F, m, gm, theta = random_state(np.random.default_rng(0))
    T = cst.cauchy_stress(MAT, F, m, gm, theta)
    asym = np.abs(T[0, 1] - T[1, 0])
    assert np.all(asym <= 1e-12 * np.sqrt(cst.frob2(T)))


def test_stress_matches_finite_difference_of_energy():
    # T = psi_F F^T / det F for the gradient-free part (grad m = 0 keeps it exact)
    rng = np.random.default_rng(1)
    F, m, _, theta = random_state(rng, 5)
    gm = np.zeros((2, 2, 5))
    T = cst.cauchy_stress(MAT, F, m, gm, theta)
    eps = 1e-6
    dpsi = np.zeros_like(F)
    for i in range(2):
        for j in range(2):
            dF = np.zeros_like(F)
            dF[i, j] = eps
            dpsi[i, j] = (cst.free_energy(MAT, F + dF, m, gm, theta)
                          - cst.free_energy(MAT, F - dF, m, gm, theta)) / (2 * eps)
    ref = np.einsum("ik...,jk...->ij...", dpsi, F) / cst.det(F)
    err = np.sqrt(cst.frob2(T - ref)) / np.maximum(np.sqrt(cst.frob2(ref)), 1e-12)
    assert np.max(err) <= 1e-6


def test_det_nonpositive_is_domain_error():
    with pytest.raises(DomainError):
        cst.cauchy_stress(MAT, np.diag([1.0, -1.0]), np.zeros(2), np.zeros((2, 2)), 0.5)


def test_enthalpy_linear_case():
    mat = MAT.replace(eps1=0.0, c0=2.0)
    assert cst.invert_enthalpy(mat, I2, np.ones(2), 4.0) == pytest.approx(2.0)


def test_enthalpy_zero_temperature():
    assert cst.enthalpy(MAT, I2, np.ones(2), 0.0) == 0.0
    assert cst.invert_enthalpy(MAT, I2, np.ones(2), 0.0) == 0.0


def test_enthalpy_round_trip():
    m = np.array([1.0, 0.0])
    w = cst.enthalpy(MAT, I2, m, 3.0)
    assert abs(cst.invert_enthalpy(MAT, I2, m, w) - 3.0) <= 1e-10
    rng = np.random.default_rng(2)
    F, m, _, theta = random_state(rng, 50)
    w = cst.enthalpy(MAT, F, m, theta)
    back = cst.enthalpy(MAT, F, m, cst.invert_enthalpy(MAT, F, m, w))
    assert np.max(np.abs(back - w) / w) <= 1e-10


def test_enthalpy_monotone():
    th = np.linspace(1e-3, 5.0, 400)
    m = np.array([1.0, 0.5])[:, None] * np.ones_like(th)
    F = np.broadcast_to(I2[..., None], (2, 2, th.size))
    c = cst.heat_capacity(MAT, F, m, th)
    assert np.all(c >= MAT.c0 / 2)
    assert np.all(np.diff(cst.enthalpy(MAT, F, m, th)) > 0)


def test_negative_enthalpy_rejected():
    with pytest.raises(DomainError):
        cst.invert_enthalpy(MAT, I2, np.zeros(2), -1.0)


@pytest.mark.parametrize("F, expected", [
    (np.array([[1.2, 0.0], [0.0, 0.5]]), 1.0),       # det 0.6, |F| = 1.3 <= 2
    (np.array([[0.4, 0.0], [0.0, 0.5]]), 0.0),       # det 0.2 <= lam/2
    (np.array([[0.75, 0.0], [0.0, 0.5]]), 0.5),      # det 3 lam/4
])
def test_cutoff_values(F, expected):
    mat = MAT.replace(lambda_cut=0.5)
    assert cst.cutoff_pi(mat, F) == pytest.approx(expected, abs=1e-14)


def test_cutoff_plateau_with_large_norm():
    # det 0.6, |F| = 1.5 still inside the plateau |F| <= 1/lam = 2
    F = np.array([[1.2, 0.9], [0.0, 0.5]])
    assert cst.det(F) == pytest.approx(0.6)
    assert cst.cutoff_pi(MAT.replace(lambda_cut=0.5), F) == 1.0


def test_cutoff_sandwich():
    rng = np.random.default_rng(4)
    F = 2.0 * rng.standard_normal((2, 2, 500))
    mat = MAT.replace(lambda_cut=0.5)
    pi = cst.cutoff_pi(mat, F)
    assert np.all((pi >= 0) & (pi <= 1))
    good = cst.det(F) > 0
    assert np.all(cst.det_reg(mat, F[:, :, good]) >= np.minimum(0.25, cst.det(F[:, :, good])))


def test_saturation_magnetization():
    assert cst.saturation_magnetization(2.0, 1.0, 1.0, 1.0) == 0.0
    assert cst.saturation_magnetization(2.0, 1.0, 1.0, 0.5) == pytest.approx(0.70711, abs=1e-5)
    assert cst.saturation_magnetization(2.0, 1.0, 1.0, 1.5) == 0.0


def test_saturation_is_minimizer_of_landau_energy():
    mat = cst.rigid_material(a0=2.0, b0=1.0)
    s = np.linspace(0, 1.5, 150001)
    m = np.stack([s, 0 * s])
    F = np.broadcast_to(I2[..., None], (2, 2, s.size))
    for theta in (0.2, 0.5, 1.3):
        psi = cst.phi(mat, F, m) + cst.zeta(mat, F, m, theta)
        best = s[np.argmin(psi)]
        assert best == pytest.approx(cst.saturation_magnetization(2.0, 1.0, 1.0, theta), abs=2e-5)


def test_dissipation_rate_examples():
    z2 = np.zeros((2, 2))
    z3 = np.zeros((2, 2, 2))
    assert cst.dissipation_rate(MAT, I2, 0.5, z2, z3, np.zeros(2)) == 0.0
    mat = MAT.replace(nu1=1.0)
    e = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert cst.dissipation_rate(mat, I2, 2.0, e, z3, np.zeros(2)) == pytest.approx(0.25)


def test_regularized_dissipation_bounded():
    rng = np.random.default_rng(5)
    e = rng.standard_normal((2, 2, 100))
    e = 0.5 * (e + e.transpose(1, 0, 2))
    G2 = rng.standard_normal((2, 2, 2, 100))
    r = rng.standard_normal((2, 100))
    F = np.broadcast_to(I2[..., None], (2, 2, 100))
    xi = cst.dissipation_rate(MAT, F, 0.3, e, G2, r)
    xe = cst.dissipation_rate(MAT, F, 0.3, e, G2, r, eps=1e3)
    assert np.all(xe >= 0) and np.all(xe <= xi)


def test_frame_indifference():
    rng = np.random.default_rng(6)
    F, m, gm, theta = random_state(rng, 100)
    a = rng.uniform(0, 2 * np.pi, 100)
    Q = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    QF = np.einsum("ik...,kj...->ij...", Q, F)
    Qm = np.einsum("ik...,k...->i...", Q, m)
    Qgm = np.einsum("ik...,kj...->ij...", Q, gm)
    psi = cst.free_energy(MAT, F, m, gm, theta)
    psi_q = cst.free_energy(MAT, QF, Qm, Qgm, theta)
    assert np.max(np.abs(psi - psi_q) / np.abs(psi)) <= 1e-12
    assert np.max(np.abs(cst.cutoff_pi(MAT, F) - cst.cutoff_pi(MAT, QF))) <= 1e-12


def test_zeta_vanishes_at_zero_temperature():
    rng = np.random.default_rng(7)
    F, m, _, _ = random_state(rng)
    assert np.all(cst.zeta(MAT, F, m, 0.0) == 0)
    assert np.all(cst.enthalpy(MAT, F, m, 0.0) == 0)


def test_material_violations():
    assert MAT.violations() == []
    assert any("p > d" in v for v in MAT.replace(p=2.0).violations())
    assert any("s =" in v for v in MAT.replace(s=3.0).violations())
