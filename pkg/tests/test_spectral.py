import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hesslab import dynamics as dy
from hesslab import spectral as sp
from hesslab.models import make_spec

HA4 = make_spec("HA4", {"J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.3, "chi34": 0.4})
BITOP = make_spec("LagrangeBitop", {"J1": 0.3, "J3": 0.7, "chi12": 1.3, "chi34": 0.4})
S = 1.0  # J1 + J3 for both specs


@pytest.fixture(scope="module")
def traj():
    return dy.integrate(HA4, dy.random_state(HA4, 42), dy.IntegratorConfig("RK4", dt=1e-3, t_end=5.0))


def test_generic_genus_and_double_points():
    cd = sp.curve_data(HA4, dy.random_state(HA4, 42))
    assert sp.curve_gamma1(cd, strict=True).genus == 3
    dp = sp.double_points(cd)
    assert len(dp["roots"]) == 4 and dp["simple"] and dp["normalization_genus"] == 5


def test_perfect_square_flagged():
    cd = sp.CurveData(np.array([1.0, 0.2, -1.0, 0.3, 0.5]), np.zeros(5))
    with pytest.warns(sp.DegenerateCurveWarning):
        rep = sp.curve_gamma1(cd)
    assert rep.degenerate and rep.distinct == 4
    with pytest.raises(sp.DegenerateCurve):
        sp.curve_gamma1(cd, strict=True)
    with pytest.raises(sp.QIdenticallyZero):
        sp.double_points(cd)


@given(arrays(float, 5, elements=st.floats(-1, 1)), arrays(float, 5, elements=st.floats(-1, 1)))
def test_genus_matches_independent_roots(P, Q):
    poly = np.polysub(np.polymul(P, P) / 4, np.polymul(Q, Q))
    if len(poly) < 9 or abs(poly[0]) < 1e-3:
        return
    roots = np.polynomial.Polynomial(poly[::-1]).roots()
    gaps = [abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]]
    if min(gaps) < 1e-3:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp.DegenerateCurveWarning)
        rep = sp.curve_gamma1(sp.CurveData(P, Q))
    assert rep.genus == (len(roots) - 1) // 2


def test_double_root_flag():
    Q = np.polymul(np.polymul([1, -1], [1, -1]), [1, 0, 1])
    dp = sp.double_points(sp.CurveData(np.ones(5), Q))
    assert not dp["simple"] and sorted(dp["multiplicities"]) == [1, 1, 2]


def test_known_double_points():
    dp = sp.double_points(sp.CurveData(np.ones(5), 2.0 * np.array([1, 0, 0, 0, -1])))
    got = sorted(dp["roots"], key=lambda z: (round(z.real, 6), round(z.imag, 6)))
    np.testing.assert_allclose(got, [-1, -1j, 1j, 1], atol=1e-12)


def test_c1c2():
    P, Q = np.arange(1.0, 6.0), np.array([0.5, -1, 0, 2, 1])
    c1, c2 = sp.curves_c1c2(sp.CurveData(P, Q))
    np.testing.assert_allclose(c1 + c2, P)
    d1, d2 = sp.curves_c1c2(sp.CurveData(P, np.zeros(5)))
    np.testing.assert_array_equal(d1, d2)


def test_j_invariant_known():
    assert sp.j_invariant([1, 0, -1, 0]) == pytest.approx(1728)
    assert sp.j_invariant([1, 0, 0, 1]) == pytest.approx(0)
    with pytest.raises(sp.DegenerateCurve):
        sp.j_invariant([1, -2, 1, 0])


def test_c_curves_j_constant(traj):
    js = []
    for k in range(0, len(traj), 250):
        c1, c2 = sp.curves_c1c2(sp.curve_data(HA4, traj.state(k)))
        js.append((sp.j_invariant(c1), sp.j_invariant(c2)))
    js = np.array(js)
    assert np.abs(js - js[0]).max() / np.abs(js[0]).max() < 1e-7


def test_curve_and_elliptic_j_agree():
    rep = sp.curve_report(HA4, dy.random_state(HA4, 42))
    for i in (1, 2):
        a, b = complex(*rep[f"C{i}_j"]), complex(*rep[f"E{i}"]["j"])
        assert abs(a - b) <= 1e-8 * max(1, abs(b))


def test_reduce_relations(rng):
    red = sp.reduce(HA4, dy.random_state(HA4, rng))
    rs = red["state"]
    assert rs.M1[2] == pytest.approx(0, abs=1e-15) and rs.M2[2] == pytest.approx(0, abs=1e-15)
    np.testing.assert_allclose(red["chi_dot_M"], 0, atol=1e-15)
    assert rs.M1[0] == pytest.approx(rs.K1 * np.sin(rs.l1)) and rs.M1[1] == pytest.approx(rs.K1 * np.cos(rs.l1))


def test_reduce_zero_m(rng):
    s = dy.random_state(HA4, rng)
    red = sp.reduce(HA4, (np.zeros((4, 4)), s.Gamma))
    for h, x, G in zip(red["h"], red["chi"], (red["state"].Gamma1, red["state"].Gamma2)):
        assert h == pytest.approx(2 / S * (x @ G))


def test_reduce_needs_4d():
    spec = make_spec("HAn", {"n": 5, "J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.0})
    with pytest.raises(ValueError):
        sp.reduce(spec, dy.random_state(spec, 1))


def test_elliptic_coefficients():
    ell = sp.reduce(HA4, dy.random_state(HA4, 3))["elliptic"]
    assert ell.A1 == pytest.approx(S * -(1.3 + 0.4) / 2) and ell.A2 == pytest.approx(S * -(1.3 - 0.4) / 2)
    np.testing.assert_array_equal(ell.cubic(1), [8 * ell.A1, -4 * ell.B1, -8 * ell.A1, -4 * ell.C1])
    unit = sp.EllipticReduction(ell.A1, ell.B1, ell.C1, ell.A2, ell.B2, ell.C2)
    np.testing.assert_allclose(unit.quadrature_cubic(2), unit.cubic(2), atol=1e-12)


def test_split_flow_matches_full(traj):
    M1, G1, M2, G2 = sp.split_state(traj.M[0], traj.Gamma[0])
    _, Y = dy._rk4(lambda t, y: sp.reduced_rhs(HA4, y), np.concatenate([M1, G1, M2, G2]), 1e-3, 5.0)
    full = np.array([np.concatenate(sp.split_state(m, g)) for m, g in zip(traj.M, traj.Gamma)])
    assert np.abs(full - Y).max() < 1e-8


def test_quadratures(traj):
    q = sp.quadrature_check(HA4, traj)
    assert q["quadrature"] < 1e-6 and q["K_squared"] < 1e-6 and q["l_dot"] < 1e-6
    assert q["elliptic_vs_quadrature"] < 1e-12


def test_quadratures_bitop():
    t = dy.integrate(BITOP, dy.random_state(BITOP, 9), dy.IntegratorConfig("RK4", dt=1e-3, t_end=3.0))
    q = sp.quadrature_check(BITOP, t)
    assert q["quadrature"] < 1e-6 and q["l_dot"] < 1e-6


def test_quadrature_polynomial_constant(traj):
    first = sp.reduce(HA4, traj.state(0))["elliptic"]
    last = sp.reduce(HA4, traj.state(len(traj) - 1))["elliptic"]
    for i in (1, 2):
        np.testing.assert_allclose(first.quadrature_cubic(i), last.quadrature_cubic(i), atol=1e-8)
