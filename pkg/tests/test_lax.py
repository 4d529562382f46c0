import numpy as np
import pytest

from hesslab import dynamics as dy
from hesslab import lax
from hesslab.models import make_spec

HA4P = {"J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.3, "chi34": 0.4}
HA4 = make_spec("HA4", HA4P)
HA5 = make_spec("HAn", {"n": 5, "J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.0})
RKF = dy.IntegratorConfig("RKF45", dt=1e-3, t_end=10.0, tol=1e-10)


def test_c_matrix():
    L, (chi, _) = lax.build(HA4, dy.random_state(HA4, 1))
    np.testing.assert_allclose(L.C, HA4.chi / 1.0, atol=0)
    assert chi is HA4.chi


def test_c_matrix_classical():
    spec = make_spec("ClassicalHA", {"Jt1": 1, "Jt2": 2, "Jt3": 3, "x0": 1, "y0": 0, "z0": -1})
    L, _ = lax.build(spec, dy.random_state(spec, 1))
    np.testing.assert_allclose(L.C, spec.chi / 2.0)


def test_zero_state():
    L, _ = lax.build(HA4, (np.zeros((4, 4)), np.zeros((4, 4))))
    np.testing.assert_array_equal(L(2.0), 4.0 * L.C)


@pytest.mark.parametrize("spec", [HA4, HA5], ids=["ha4", "ha5"])
def test_lax_residual_on_manifold(spec, rng):
    worst = max(lax.lax_residual(spec, dy.random_state(spec, rng)) for _ in range(100))
    assert worst < 1e-12


def test_lax_residual_off_manifold(rng):
    s = dy.random_state(HA4, rng)
    M = s.M.copy()
    M[0, 1], M[1, 0] = 1.0, -1.0
    J13, J24 = HA4.J[0, 2], HA4.J[1, 3]
    x12, x34 = HA4.chi[0, 1], HA4.chi[2, 3]
    D13 = -x12 * (J13 * M[0, 1] + J24 * M[2, 3]) + x34 * (J13 * M[2, 3] + J24 * M[0, 1])
    res = lax.lax_residual(HA4, (M, s.Gamma))
    assert res > 1e-6
    assert res >= abs(D13) / (HA4.J[0, 0] + HA4.J[2, 2]) - 1e-12


def test_coefficients_match_determinant(rng):
    for _ in range(5):
        L, _ = lax.build(HA4, dy.random_state(HA4, rng, on_manifold=False))
        co = lax.spectral_coeffs(L)
        for lam, mu in rng.uniform(-1.5, 1.5, size=(20, 2)):
            want = lax.spectral_determinant(L, lam, mu)
            got = mu**4 + np.polyval(co.P, lam) * mu**2 + np.polyval(co.Q, lam) ** 2
            assert got == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_coefficients_basis_case():
    G = np.zeros((4, 4))
    G[0, 1] = G[2, 3] = 1.0
    G = G - G.T
    co = lax.spectral_coeffs(lax.LaxPolynomial(np.zeros((4, 4)), np.zeros((4, 4)), G)).as_dict()
    assert co.pop("e") == 2 and co.pop("j") == 1
    assert all(v == 0 for v in co.values())


def test_b_formula(rng):
    L, _ = lax.build(HA4, dy.random_state(HA4, rng, on_manifold=False))
    co = lax.spectral_coeffs(L)
    assert co.b == pytest.approx(2 * L.C[0, 1] * L.M[0, 1] + 2 * L.C[2, 3] * L.M[2, 3])


def test_spectral_coeffs_only_for_n4():
    L, _ = lax.build(HA5, dy.random_state(HA5, 1))
    with pytest.raises(ValueError):
        lax.spectral_coeffs(L)


def test_isospectral_compliant():
    traj = dy.integrate(HA4, dy.random_state(HA4, 42), RKF)
    rep = lax.isospectrality_report(HA4, traj)
    for k in ("c", "h", "d", "e", "i", "j"):
        assert rep["drifts"][k]["rel"] < 1e-7, k
    assert abs(np.asarray(traj.monitors["b"])).max() < 1e-9
    assert abs(np.asarray(traj.monitors["g"])).max() < 1e-9
    assert rep["residuals"]["eigenvalue_drift"] < 1e-7


def test_casimirs_conserved_off_manifold():
    s = dy.random_state(HA4, 42, on_manifold=False)
    traj = dy.integrate(HA4, s, RKF)
    rep = lax.isospectrality_report(HA4, traj)
    for k in ("d", "e", "i", "j"):
        assert rep["drifts"][k]["rel"] < 1e-7, k
    assert rep["drifts"]["b"]["abs"] > 1e-3


def test_c_h_off_manifold_reported():
    # c and h are integrals only on the invariant set; off it they drift
    traj = dy.integrate(HA4, dy.random_state(HA4, 42, on_manifold=False), RKF)
    rep = lax.isospectrality_report(HA4, traj)
    assert rep["drifts"]["c"]["rel"] > 1e-6 or rep["drifts"]["h"]["rel"] > 1e-6


def test_free_case_all_constant():
    spec = make_spec("HA4", {**HA4P, "chi12": 0, "chi34": 0})
    traj = dy.integrate(spec, dy.random_state(spec, 3, on_manifold=False), RKF)
    rep = lax.isospectrality_report(spec, traj)
    for k, d in rep["drifts"].items():
        assert d["rel"] < 1e-7, k


def test_han_trace_invariants():
    traj = dy.integrate(HA5, dy.random_state(HA5, 42), RKF)
    rep = lax.isospectrality_report(HA5, traj)
    assert rep["drifts"]["tr_L2"]["rel"] < 1e-7 and rep["drifts"]["tr_L4"]["rel"] < 1e-7


def test_coefficient_classes_cover_all():
    names = sorted(sum(lax.COEFF_CLASSES.values(), ()))
    assert names == list("abcdefghij")
