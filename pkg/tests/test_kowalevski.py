import numpy as np
import pytest

from hesslab import kowalevski as K
from hesslab.models import make_spec

HA3 = make_spec("ClassicalHA", {"J1": 1.0, "J3": 3.0, "J13": 1.0, "z0": 1.0})
CLASSICAL_PCH = [1, -9, 29, -35, -6, 44, -24]  # roots -1, 1, 3, 2, 2, 2
OTHER_PCH = [1, -9, 19, 33, -128, 12, 144]  # roots -1, -2, 2, 4, 3, 3


@pytest.fixture(scope="module")
def sys3():
    return K.euler_poisson_system(HA3)


@pytest.fixture(scope="module")
def balances3(sys3):
    return K.solve_balances(sys3, [2])


def test_qh_fields(sys3):
    assert K.check_qh(sys3).passed
    ha4 = make_spec("HA4", {"J1": 1, "J3": 3, "J13": 1, "J24": 0.3, "chi12": 1, "chi34": 2})
    s4 = K.euler_poisson_system(ha4)
    np.testing.assert_array_equal(s4.g, [1] * 6 + [2] * 6)
    assert K.check_qh(s4).passed


def test_qh_rejects_constant(sys3):
    bad = K.QHSystem(lambda z: sys3(z) + 1.0, sys3.g)
    rep = K.check_qh(bad)
    assert not rep.passed and rep.trials == 50


def test_jacobian_matches_fd(sys3, rng):
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    h = 1e-6
    fd = np.array([(sys3(z + h * e) - sys3(z - h * e)) / (2 * h) for e in np.eye(6)]).T
    np.testing.assert_allclose(sys3.jacobian(z), fd, atol=1e-7)


def test_3d_balances(balances3):
    pairs = {(round(s.C[0].imag, 6), round(s.C[1].real, 6)) for s in balances3 if abs(s.C[0]) > 0.5}
    assert {(1.0, -1.0), (-1.0, -1.0), (2.0, -2.0), (-2.0, -2.0)} <= pairs
    for s in balances3:
        assert s.residual < 1e-10
        assert any(abs(e + 1) < 1e-9 for e in s.exponents)
        c1, c2 = s.C[0], s.C[1]
        if abs(c1) > 0.5 and abs(c1.real) < 1e-9:
            assert s.C[3] == pytest.approx(-c1**2 + c2, abs=1e-9)
            assert s.C[4] == pytest.approx(-c1 * (1 + c2), abs=1e-9)
            assert s.C[5] == pytest.approx(-(c1**2 + c2**2) / 2, abs=1e-9)


def test_3d_exponents_by_family(sys3):
    one = K.refine_balance(sys3, [1j, -1, 0, 0, 0, 0], [2])
    two = K.refine_balance(sys3, [2j, -2, 0, 2, 2j, 0], [2])
    assert K.match_multiset(one.exponents, [-1, 1, 3, 2, 2, 2])[0]
    assert K.match_multiset(two.exponents, [-1, -2, 2, 4, 3, 3])[0]


@pytest.mark.parametrize("kappa", [1, 2, 10])
def test_exponents_scale_invariant(kappa):
    ex = K.example("3d", J13=kappa, family=1)
    sol = K.refine_balance(K.euler_poisson_system(ex.spec), ex.guess, ex.mask)
    assert K.match_multiset(sol.exponents, ex.expected)[0]


def test_exponents_sorted():
    ev = K.exponents(np.diag([3.0, -1.0, 2.0, 2.0 + 1j]))
    np.testing.assert_allclose(ev, [-1, 2, 2 + 1j, 3])


def test_match_multiset():
    assert K.match_multiset([1, 2, 3], [3, 1, 2])[0]
    ok, worst = K.match_multiset([1, 2, 3], [1, 2, 3.1])
    assert not ok and worst == pytest.approx(0.1)
    assert K.match_multiset([1, 2], [1, 2, 3]) == (False, float("inf"))


def test_is_rational():
    assert K.is_rational(0.5) and K.is_rational(7 / 24) and K.is_rational(-3)
    assert not K.is_rational(np.sqrt(2)) and not K.is_rational(1 + 1e-3j)


def test_no_convergence():
    # g z + f(z) = 1 has no root
    constant = K.QHSystem(lambda z: np.ones_like(z), np.zeros(1, int))
    with pytest.raises(K.NoConvergence):
        K.refine_balance(constant, [0.3])


@pytest.mark.parametrize("name,kw", [
    ("ex1", {"s": 0.0}), ("ex1", {"s": 1.0}),
    ("ex2", {"J13": 1.0, "J24": 0.3}), ("ex2", {"J13": 2.5, "J24": -1.0}), ("ex2", {"J13": 0.7, "J24": 1.9}),
    ("ex3", {}), ("ex4", {}),
])
def test_examples(name, kw):
    ex = K.example(name, **kw)
    sol = K.refine_balance(K.euler_poisson_system(ex.spec), ex.guess, ex.mask)
    ok, worst = K.match_multiset(sol.exponents, ex.expected)
    assert ok, worst


def test_ex1_family_sweep():
    ex = K.example("ex1", s=0.0)
    sys = K.euler_poisson_system(ex.spec)
    sol = K.refine_balance(sys, ex.guess, ex.mask)
    for s, out in zip((0.5, 1.0), K.sweep_family(sys, sol, 1, (0.5, 1.0))):
        assert K.match_multiset(out.exponents, K.example("ex1", s=s).expected)[0]


def test_ara_ex3_pairs():
    ex = K.example("ex3")
    sol = K.refine_balance(K.euler_poisson_system(ex.spec), ex.guess, ex.mask)
    rep = K.ara_check(sol, sys_kind="so5", p=ex.p)
    assert rep["checks"]["irrational_paired"] and rep["checks"]["transversal_rational"]
    # frozen: observed split 18 tangent / 2 transversal
    assert (rep["n_tangent"], rep["n_transversal"]) == (18, 2)


def test_ara_ex1_observed_split():
    ex = K.example("ex1", s=1.0)
    sol = K.refine_balance(K.euler_poisson_system(ex.spec), ex.guess, ex.mask)
    rep = K.ara_check(sol, sys_kind="so4", p=4)
    assert rep["casimir_rank"] == 2 and (rep["n_tangent"], rep["n_transversal"]) == (10, 2)
    assert rep["checks"]["irrational_paired"] and not rep["split_matches_p"]


def test_ara_lone_irrational_fails():
    Kmat = np.diag([np.sqrt(2), 1.0, 2.0]).astype(complex)
    sol = K.BalanceSolution(np.zeros(3, complex), {}, Kmat, K.exponents(Kmat), 0.0)
    rep = K.ara_check(sol, np.zeros((0, 3)))
    assert not rep["pass"] and rep["unpaired"]


def test_casimir_gradients_are_left_eigenvectors(sys3):
    sol = K.refine_balance(sys3, [2j, -2, 0, 2, 2j, 0], [2])
    G = K.standard_casimir_gradients("e3", sol.C)
    weights = (2 * 2, 1 + 2)  # |Gamma|^2 and M.Gamma
    for row, w in zip(G, weights):
        np.testing.assert_allclose(row @ sol.K, w * row, atol=1e-8)


@pytest.mark.parametrize("k", [0.5, 2.0, 5.0])
def test_theorem5_classical_pass(k):
    rep = K.theorem5_filter(f"z1 + {k}*z3")
    assert rep["pass"] and rep["QH"]["pass"]
    for br, e in rep["branches"].items():
        want = CLASSICAL_PCH if br in (1, 3) else OTHER_PCH
        np.testing.assert_allclose(e["charpoly"], want, atol=1e-8)
        assert e["checks"]["J_independent"] and abs(np.polyval(e["charpoly"], -1)) < 1e-9


def test_theorem5_rotated_b_frozen():
    rep = K.theorem5_filter("-3*z1 + i*z2")
    e = rep["branches"][1]
    assert e["X"] == pytest.approx(0.5j) and e["Y"] == pytest.approx(-1.5)
    np.testing.assert_allclose(e["charpoly"], CLASSICAL_PCH, atol=1e-8)
    assert e["eq46"]["A15"] == pytest.approx(-9)
    assert rep["pass"]


def test_theorem5_rejects_non_qh():
    assert not K.theorem5_filter("z1**2")["pass"]
    assert not K.theorem5_filter("z4")["pass"]


@pytest.mark.parametrize("b", ["z3", "0"])
def test_theorem5_classical_equivalent(b):
    rep = K.theorem5_filter(b)
    assert rep["pass"] and rep["classical_equivalent"]


def test_theorem5_rejects_foreign_symbols():
    with pytest.raises(ValueError):
        K.theorem5_filter("z1 + w")


def test_germ_charpoly_frozen():
    # germ X = i, Y = -3 imposed directly; frozen output of the branch-1 matrix
    p1 = K.germ_charpolys(1.0, K.GermData.from_XY(1j, -3, 1), 1)
    np.testing.assert_allclose(p1, [1, -9, 25, -3, -98, 156, -72], atol=1e-8)
    p3 = K.germ_charpolys(1.0, K.GermData.from_XY(1j, -3, 3), 3)
    np.testing.assert_allclose(p3, [1, -9, 11, 109, -420, 548, -240], atol=1e-8)


def test_germ_branch_inconsistent():
    g = K.GermData(0.7, (1, 0, 0, 0, 0, 0), 1.0)
    with pytest.raises(K.BranchInconsistent):
        K.germ_kowalevski(1.0, g, 1)


def test_relations_47_48():
    assert K.relation47(2, 0) == 0 and K.relation47(1, 1) != 0
    assert K.relation48(1j, 5) == 0 and K.relation48(0, 0) != 0


def test_balance_as_dict(sys3):
    d = K.refine_balance(sys3, [1j, -1, 0, 0, 0, 0], [2]).as_dict()
    assert set(d) == {"C", "mask", "exponents", "residual", "rank_deficiency"}
