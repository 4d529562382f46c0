import numpy as np
import pytest

from hesslab import dynamics as dy
from hesslab.models import make_spec
from hesslab.skewalg import DimensionError, from_coords, hat, to_coords

HA4 = make_spec("HA4", {"J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.3, "chi34": 0.4})
HA5 = make_spec("HAn", {"n": 5, "J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.0})
HA6 = make_spec("HAn", {"n": 6, "J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 1.0})
CLASSICAL = make_spec("ClassicalHA", {"Jt1": 1, "Jt2": 2, "Jt3": 3, "x0": 1, "y0": 0, "z0": -1})
RK4 = dy.IntegratorConfig("RK4", dt=1e-3, t_end=10.0)


def test_phase_state_validates():
    with pytest.raises(DimensionError):
        dy.PhaseState(np.zeros((3, 3)), np.zeros((4, 4)))
    with pytest.raises(ValueError):
        dy.PhaseState(np.eye(3), np.zeros((3, 3)))


def test_config_validates():
    with pytest.raises(ValueError):
        dy.IntegratorConfig("Euler")
    with pytest.raises(ValueError):
        dy.IntegratorConfig(dt=-1)


def test_equilibrium():
    dM, dG = dy.rhs(HA4, (np.zeros((4, 4)), HA4.chi.copy()))
    assert not dM.any() and not dG.any()


def test_relations_are_stationary(rng):
    s = dy.random_state(HA4, rng)
    dM, _ = dy.rhs(HA4, s)
    assert dM[0, 1] == pytest.approx(0, abs=1e-15) and dM[2, 3] == pytest.approx(0, abs=1e-15)


def test_m12_derivative_formula(rng):
    J13, J24 = HA4.J[0, 2], HA4.J[1, 3]
    for _ in range(10):
        s = dy.random_state(HA4, rng, on_manifold=False)
        M = s.M
        want = J13 * (M[0, 2] * M[0, 1] + M[1, 3] * M[2, 3]) + J24 * (M[0, 2] * M[2, 3] + M[0, 1] * M[1, 3])
        assert dy.rhs(HA4, s)[0][0, 1] == pytest.approx(want, abs=1e-12)


def test_high_block_stationary_for_han(rng):
    s = dy.random_state(HA6, rng)
    dM, _ = dy.rhs(HA6, s)
    assert dM[4, 5] == 0.0


def test_rhs_dimension_mismatch():
    with pytest.raises(DimensionError):
        dy.rhs(HA4, (np.zeros((3, 3)), np.zeros((3, 3))))


def test_free_top_energy():
    spec = make_spec("HA4", {"J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.25, "chi12": 0, "chi34": 0})
    s = dy.random_state(spec, 1, on_manifold=False)
    traj = dy.integrate(spec, s, RK4)
    E = traj.monitors["energy"]
    assert np.abs(E - E[0]).max() / abs(E[0]) < 1e-9


def test_ha4_relations_persist():
    traj = dy.integrate(HA4, dy.random_state(HA4, 42), RK4)
    assert max(traj.monitors["res_M12"].max(), traj.monitors["res_M34"].max()) < 1e-8
    assert np.abs(traj.monitors["b"]).max() < 1e-8 and np.abs(traj.monitors["g"]).max() < 1e-8


def test_han_relations_persist():
    traj = dy.integrate(HA5, dy.random_state(HA5, 42), RK4)
    res = [v.max() for k, v in traj.monitors.items() if k.startswith("res_")]
    assert len(res) == 4 and max(res) < 1e-8


@pytest.mark.parametrize("spec", [HA4, HA5, CLASSICAL], ids=["ha4", "ha5", "classical"])
def test_integrals_conserved(spec):
    traj = dy.integrate(spec, dy.random_state(spec, 7), RK4)
    summary = dy.drift_summary(traj)
    for name, d in summary["max_drifts"].items():
        assert d["rel"] < 1e-8, name


def test_classical_surface_is_invariant():
    traj = dy.integrate(CLASSICAL, dy.random_state(CLASSICAL, 3), RK4)
    assert traj.monitors["res_F4"].max() < 1e-8


def test_rk4_order():
    s = dy.random_state(HA4, 5)
    z = dy.integrate(HA4, s, dy.IntegratorConfig("RK4", dt=1e-3, t_end=1e-3))
    exact = dy.integrate(HA4, s, dy.IntegratorConfig("RKF45", dt=1e-5, t_end=1e-3, tol=1e-13))
    err = np.abs(z.M[-1] - exact.M[-1]).max()
    assert err < 1e-12


def test_rkf45_underflow():
    cfg = dy.IntegratorConfig("RKF45", dt=1e-3, t_end=1.0, tol=1e-13, dt_min=1e-2)
    with pytest.raises(dy.StepSizeUnderflow):
        dy.integrate(HA4, dy.random_state(HA4, 1), cfg)


def test_first_integrals_3d():
    state = (hat(np.array([1.0, 0, 0])), hat(np.array([1.0, 0, 0])))
    f = dy.first_integrals(CLASSICAL, state)
    assert f["F2"] == 1.0 and f["F3"] == 1.0


def test_first_integrals_j():
    G = np.zeros((4, 4))
    G[0, 1], G[2, 3] = 1.0, 1.0
    G = G - G.T
    assert dy.first_integrals(HA4, (np.zeros((4, 4)), G))["j"] == 1.0


def test_prop8c_compliant():
    traj = dy.integrate(HA4, dy.random_state(HA4, 42), RK4)
    assert dy.prop8c_check(HA4, traj)["residual"] < 1e-8


def test_prop8c_symmetric_zero_phase():
    s = dy.random_state(HA4, 11)
    M = s.M.copy()
    M[0, 3], M[3, 0] = M[1, 2], -M[1, 2]
    traj = dy.integrate(HA4, dy.PhaseState(M, s.Gamma), dy.IntegratorConfig(dt=1e-3, t_end=1e-3))
    W = HA4.omega(traj.M[0])
    assert W[2, 3] + W[0, 1] == pytest.approx(0, abs=1e-15)


def test_prop8c_equal_couplings():
    spec = make_spec("HA4", {"J1": 0.3, "J3": 0.7, "J13": 0.4, "J24": 0.4, "chi12": 1.3, "chi34": 0.4})
    traj = dy.integrate(spec, dy.random_state(spec, 4), dy.IntegratorConfig(dt=1e-2, t_end=1))
    assert np.abs(np.diff(dy.prop8c_check(spec, traj)["phi2"])).max() < 1e-12


def test_prop8c_requires_relations():
    traj = dy.integrate(HA4, dy.random_state(HA4, 4, on_manifold=False), dy.IntegratorConfig(dt=1e-2, t_end=1))
    with pytest.raises(dy.InvariantViolated):
        dy.prop8c_check(HA4, traj)


def test_csv_layout():
    traj = dy.integrate(HA4, dy.random_state(HA4, 1), dy.IntegratorConfig(dt=0.1, t_end=0.3))
    lines = dy.trajectory_csv(traj).splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["t", "M_12", "M_13"] and "Gamma_34" in header and "energy" in header
    assert len(lines) == len(traj) + 1


def test_pack_round_trip(rng):
    s = dy.random_state(HA5, rng, on_manifold=False)
    M, G = dy.unpack(dy.pack(s.M, s.Gamma), 5)
    np.testing.assert_array_equal(M, s.M)
    np.testing.assert_array_equal(G, s.Gamma)


def test_random_state_seeded():
    a, b = dy.random_state(HA4, 42), dy.random_state(HA4, 42)
    np.testing.assert_array_equal(a.M, b.M)
    assert a.M[0, 1] == 0 and a.M[2, 3] == 0
    np.testing.assert_array_equal(to_coords(a.M), to_coords(from_coords(to_coords(a.M), 4)))
