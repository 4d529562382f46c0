"""Euler-Poisson flows on so(n) × so(n) with conservation monitors.

    dM/dt = [M, Omega] + [Gamma, chi],    dGamma/dt = [Gamma, Omega]

Fixed-step RK4 is implemented here (a dozen lines); adaptive runs are handed
to :func:`scipy.integrate.solve_ivp`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .models import Kind, SystemSpec, hamiltonian, relation_pairs
from .skewalg import DimensionError, from_coords, hat, pair_labels, skew, to_coords, unhat

__all__ = [
    "PhaseState",
    "Trajectory",
    "IntegratorConfig",
    "StepSizeUnderflow",
    "InvariantViolated",
    "rhs",
    "integrate",
    "first_integrals",
    "invariant_residuals",
    "prop8c_check",
    "pack",
    "unpack",
    "trajectory_csv",
    "drift_summary",
    "random_state",
]


class StepSizeUnderflow(RuntimeError):
    pass


class InvariantViolated(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PhaseState:
    M: np.ndarray
    Gamma: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        M, G = skew(self.M), skew(self.Gamma)
        if M.shape != G.shape:
            raise DimensionError("M and Gamma must have the same dimension")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Gamma", G)

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray
    M: np.ndarray  # (T, n, n)
    Gamma: np.ndarray  # (T, n, n)
    monitors: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> list[PhaseState]:
        return [PhaseState(m, g, float(t)) for t, m, g in zip(self.t, self.M, self.Gamma)]

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.M[k], self.Gamma[k], float(self.t[k]))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK4"
    dt: float = 1e-3
    t_end: float = 10.0
    tol: float = 1e-10
    dt_min: float = 1e-12
    dt_max: float = np.inf

    def __post_init__(self):
        if self.method not in ("RK4", "RKF45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.t_end <= 0 or self.tol <= 0 or self.dt_min <= 0 or self.dt_max <= 0:
            raise ValueError("step sizes, t_end and tol must be positive")


def pack(M, G) -> np.ndarray:
    return np.concatenate([to_coords(M), to_coords(G)])


def unpack(z, n):
    N = n * (n - 1) // 2
    return from_coords(z[..., :N], n), from_coords(z[..., N:], n)


def rhs(spec: SystemSpec, state) -> tuple[np.ndarray, np.ndarray]:
    M, G = (state.M, state.Gamma) if isinstance(state, PhaseState) else state
    if M.shape != (spec.n, spec.n) or G.shape != M.shape:
        raise DimensionError(f"state is so({M.shape[0]}), spec is so({spec.n})")
    W = spec.omega(M)
    chi = spec.chi
    return M @ W - W @ M + G @ chi - chi @ G, G @ W - W @ G


def _flat_rhs(spec):
    n = spec.n

    def f(t, z):
        M, G = unpack(z, n)
        dM, dG = rhs(spec, (M, G))
        return pack(dM, dG)

    return f


def _rk4(f, z0, dt, t_end):
    steps = int(round(t_end / dt))
    if not np.isclose(steps * dt, t_end, rtol=0, atol=1e-9 * max(1.0, t_end)):
        steps = int(np.ceil(t_end / dt))
    h = t_end / steps
    out = np.empty((steps + 1, z0.size), dtype=z0.dtype)
    out[0] = z = z0
    for k in range(steps):
        t = k * h
        k1 = f(t, z)
        k2 = f(t + h / 2, z + h / 2 * k1)
        k3 = f(t + h / 2, z + h / 2 * k2)
        k4 = f(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = z
    return np.linspace(0.0, t_end, steps + 1), out


def integrate(
    spec: SystemSpec,
    state0: PhaseState,
    cfg: IntegratorConfig = IntegratorConfig(),
    monitors: Mapping[str, Callable] | None = None,
) -> Trajectory:
    """Integrate from ``state0`` and evaluate monitors at every accepted step.

    Default monitors are :func:`first_integrals` and
    :func:`invariant_residuals`; extra ``monitors`` map a name to
    ``fn(spec, state) -> float``.
    """
    f = _flat_rhs(spec)
    z0 = pack(state0.M, state0.Gamma)
    if cfg.method == "RK4":
        t, Z = _rk4(f, z0, cfg.dt, cfg.t_end)
    else:
        sol = solve_ivp(
            f,
            (0.0, cfg.t_end),
            z0,
            method="RK45",
            rtol=cfg.tol,
            atol=cfg.tol,
            max_step=cfg.dt_max,
            first_step=min(cfg.dt, cfg.t_end),
        )
        if sol.status != 0:
            raise StepSizeUnderflow(sol.message)
        steps = np.diff(sol.t)
        if steps.size and steps.min() < cfg.dt_min:
            raise StepSizeUnderflow(f"step {steps.min():.3e} below dt_min {cfg.dt_min:.3e}")
        t, Z = sol.t, sol.y.T
    t = t + state0.t
    M, G = unpack(Z, spec.n)
    traj = Trajectory(t, M, G)
    traj.monitors = monitor_series(spec, traj, monitors)
    return traj


def monitor_series(spec, traj, extra=None) -> dict[str, np.ndarray]:
    rows = []
    for k in range(len(traj)):
        s = traj.state(k)
        row = dict(first_integrals(spec, s))
        row.update(invariant_residuals(spec, s))
        for name, fn in (extra or {}).items():
            row[name] = fn(spec, s)
        rows.append(row)
    keys = list(rows[0]) if rows else []
    return {k: np.array([r[k] for r in rows]) for k in keys}


def _trace_integrals(M, G):
    """tr(Gamma^{2k}) and tr(M Gamma^{2k-1}) for k = 1 .. n//2."""
    out = {}
    G2 = G @ G
    odd = G.copy()
    for k in range(1, M.shape[0] // 2 + 1):
        out[f"tr_MG{2 * k - 1}"] = float(np.trace(M @ odd))
        out[f"tr_G{2 * k}"] = float(np.trace(odd @ G))
        odd = odd @ G2
    return out


def first_integrals(spec: SystemSpec, state) -> dict[str, float]:
    """Named conserved quantities for the system kind.

    n = 3: ``F1`` (energy), ``F2 = <M,Gamma>``, ``F3 = <Gamma,Gamma>``, ``F4``
    (the Hess surface function).  n >= 4: energy, trace invariants and, for
    n = 4, the spectral coefficients ``a``..``j``.
    """
    M, G = (state.M, state.Gamma) if isinstance(state, PhaseState) else state
    if spec.vector_inertia:
        m, g, x = unhat(M), unhat(G), spec.chi_vec
        out = {
            "F1": float(hamiltonian(spec, (M, G))),
            "F2": float(m @ g),
            "F3": float(g @ g),
        }
        out["F4"] = float(_hess_surface(spec, m))
        return out
    out = {"energy": float(hamiltonian(spec, (M, G)))}
    out.update(_trace_integrals(M, G))
    if spec.n == 4:
        from .lax import build, spectral_coeffs

        L, _ = build(spec, PhaseState(M, G))
        out.update({k: float(v) for k, v in spectral_coeffs(L).as_dict().items()})
    return out


def _hess_surface(spec, m):
    """M1 x0 + M3 z0 in principal axes; reduces to M3 * z0 in the tilted frame."""
    if "Jt1" in spec.params:
        x = spec.chi_vec
        return m[0] * x[0] + m[2] * x[2]
    return m[2] * spec.chi_vec[2]


def invariant_residuals(spec: SystemSpec, state) -> dict[str, float]:
    M = state.M if isinstance(state, PhaseState) else state[0]
    if spec.vector_inertia:
        if spec.kind is Kind.CLASSICAL_HA:
            return {"res_F4": abs(_hess_surface(spec, unhat(M)))}
        return {}
    return {f"res_M{i + 1}{j + 1}": float(abs(M[i, j])) for i, j in relation_pairs(spec)}


def prop8c_check(spec: SystemSpec, traj: Trajectory, *, tol: float = 1e-6) -> dict:
    """Phase identities on the invariant manifold of the 4D system.

    phi1 = int(Omega34 + Omega12) dt and phi2 = int(Omega34 - Omega12) dt are
    accumulated with the trapezoid rule; their derivatives are the integrands
    at the samples, compared with N1 (J13 + J24) and -N4 (J24 - J13).
    """
    if spec.n != 4:
        raise DimensionError("prop8c_check needs n = 4")
    viol = np.abs(traj.M[:, [0, 2], [1, 3]]).max()
    if viol > tol:
        raise InvariantViolated(f"|M12|,|M34| reach {viol:.3e}")
    J13, J24 = spec.J[0, 2], spec.J[1, 3]
    W = np.array([spec.omega(m) for m in traj.M])
    dphi1 = W[:, 2, 3] + W[:, 0, 1]
    dphi2 = W[:, 2, 3] - W[:, 0, 1]
    N1 = traj.M[:, 0, 3] - traj.M[:, 1, 2]
    N4 = traj.M[:, 0, 3] + traj.M[:, 1, 2]
    r1 = np.abs(dphi1 - N1 * (J24 + J13))
    r2 = np.abs(dphi2 + N4 * (J24 - J13))
    return {
        "phi1": cumulative_trapezoid(dphi1, traj.t, initial=0.0),
        "phi2": cumulative_trapezoid(dphi2, traj.t, initial=0.0),
        "residual_phi1": float(r1.max()),
        "residual_phi2": float(r2.max()),
        "residual": float(max(r1.max(), r2.max())),
    }


def random_state(spec: SystemSpec, rng=None, *, on_manifold: bool = True, scale: float = 1.0) -> PhaseState:
    """Uniform [-scale, scale] entries, projected onto the invariant set if asked.

    For the 3D Hess case the projection solves the surface equation for M3;
    in block form it zeroes the relation entries of M.
    """
    rng = np.random.default_rng(rng)
    n = spec.n
    N = n * (n - 1) // 2
    m = rng.uniform(-scale, scale, N)
    g = rng.uniform(-scale, scale, N)
    M, G = from_coords(m, n), from_coords(g, n)
    if on_manifold:
        if spec.vector_inertia:
            if spec.kind is Kind.CLASSICAL_HA:
                v = unhat(M)
                x = spec.chi_vec
                v[2] = -v[0] * x[0] / x[2] if "Jt1" in spec.params else 0.0
                M = hat(v)
        else:
            for i, j in relation_pairs(spec):
                M[i, j] = M[j, i] = 0.0
    return PhaseState(M, G)


# ------------------------------------------------------------------- output


def trajectory_csv(traj: Trajectory) -> str:
    n = traj.M.shape[-1]
    names = list(traj.monitors)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + pair_labels(n, "M_") + pair_labels(n, "Gamma_") + names)
    Mc, Gc = to_coords(traj.M), to_coords(traj.Gamma)
    for k in range(len(traj)):
        w.writerow(
            [repr(float(traj.t[k]))]
            + [repr(float(x)) for x in Mc[k]]
            + [repr(float(x)) for x in Gc[k]]
            + [repr(float(traj.monitors[c][k])) for c in names]
        )
    return buf.getvalue()


def drift_summary(traj: Trajectory, conserved: Iterable[str] | None = None) -> dict:
    """Max absolute and relative drift of each conserved monitor channel."""
    drifts, residuals = {}, {}
    for name, series in traj.monitors.items():
        if name.startswith("res_"):
            residuals[name] = float(np.max(series))
            continue
        if conserved is not None and name not in conserved:
            continue
        d = float(np.max(np.abs(series - series[0])))
        scale = max(abs(float(series[0])), 1e-300)
        drifts[name] = {"abs": d, "rel": d / scale if abs(series[0]) > 1e-12 else d}
    last = traj.state(len(traj) - 1)
    return {
        "final_state": {
            "t": float(last.t),
            "M": to_coords(last.M).tolist(),
            "Gamma": to_coords(last.Gamma).tolist(),
        },
        "max_drifts": drifts,
        "invariant_residuals": residuals,
    }
