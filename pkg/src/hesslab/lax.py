"""Lax representation L(lam) = lam^2 C + lam M + Gamma, A(lam) = lam chi + Omega.

For n = 4 the spectral polynomial factors as

    det(L(lam) - mu) = mu^4 + P(lam) mu^2 + Q(lam)^2

with P = a lam^4 + ... + e and Q = f lam^4 + ... + j given in closed form by
:func:`spectral_coeffs`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import PhaseState, Trajectory, rhs
from .models import SystemSpec

__all__ = [
    "LaxPolynomial",
    "SpectralCoefficients",
    "build",
    "lax_coefficient",
    "lax_residual",
    "spectral_coeffs",
    "spectral_determinant",
    "isospectrality_report",
    "COEFF_CLASSES",
]

# How each coefficient behaves along the flow of the 4D system.
COEFF_CLASSES = {
    "casimir": ("d", "e", "i", "j"),
    "integral": ("c", "h"),
    "invariant_relation": ("b", "g"),
    "constant": ("a", "f"),
}


@dataclass(frozen=True, eq=False)
class LaxPolynomial:
    C: np.ndarray
    M: np.ndarray
    Gamma: np.ndarray

    def __call__(self, lam):
        return lam * lam * self.C + lam * self.M + self.Gamma


@dataclass(frozen=True)
class SpectralCoefficients:
    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    g: float
    h: float
    i: float
    j: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @property
    def P(self) -> np.ndarray:
        """Coefficients of P(lam), highest degree first."""
        return np.array([self.a, self.b, self.c, self.d, self.e])

    @property
    def Q(self) -> np.ndarray:
        return np.array([self.f, self.g, self.h, self.i, self.j])


def lax_coefficient(spec: SystemSpec) -> float:
    """Scalar k with C = chi / k."""
    if spec.vector_inertia:
        # middle principal value of the inverse inertia operator
        return float(np.linalg.eigvalsh(spec.J)[1])
    return float(spec.J[0, 0] + spec.J[2, 2])


def build(spec: SystemSpec, state) -> tuple[LaxPolynomial, tuple[np.ndarray, np.ndarray]]:
    M, G = (state.M, state.Gamma) if isinstance(state, PhaseState) else state
    C = spec.chi / lax_coefficient(spec)
    return LaxPolynomial(C, M, G), (spec.chi, spec.omega(M))


def lax_residual(spec: SystemSpec, state) -> float:
    """Largest entry of dL/dt - [L, A] over all powers of lam.

    dL/dt = lam dM/dt + dGamma/dt is taken from the equations of motion, so
    this is exact at the given state.
    """
    L, (chi, W) = build(spec, state)
    dM, dG = rhs(spec, (L.M, L.Gamma))
    comm = lambda x, y: x @ y - y @ x  # noqa: E731
    # [L, A] = lam^3 [C,chi] + lam^2([C,W] + [M,chi]) + lam([M,W] + [G,chi]) + [G,W]
    parts = [
        -comm(L.C, chi),
        -(comm(L.C, W) + comm(L.M, chi)),
        dM - comm(L.M, W) - comm(L.Gamma, chi),
        dG - comm(L.Gamma, W),
    ]
    return float(max(np.abs(p).max() for p in parts))


def spectral_coeffs(L: LaxPolynomial) -> SpectralCoefficients:
    if L.M.shape != (4, 4):
        raise ValueError("closed-form spectral coefficients exist for n = 4 only")
    C, M, G = L.C, L.M, L.Gamma
    c12, c34 = C[0, 1], C[2, 3]
    m = {f"{i + 1}{j + 1}": M[i, j] for i in range(4) for j in range(i + 1, 4)}
    g = {f"{i + 1}{j + 1}": G[i, j] for i in range(4) for j in range(i + 1, 4)}
    return SpectralCoefficients(
        a=c12**2 + c34**2,
        b=2 * c12 * m["12"] + 2 * c34 * m["34"],
        c=sum(v**2 for v in m.values()) + 2 * c12 * g["12"] + 2 * c34 * g["34"],
        d=2 * sum(g[k] * m[k] for k in m),
        e=sum(v**2 for v in g.values()),
        f=c12 * c34,
        g=c12 * m["34"] + c34 * m["12"],
        h=g["34"] * c12 + g["12"] * c34 + m["12"] * m["34"] + m["23"] * m["14"] - m["13"] * m["24"],
        i=m["34"] * g["12"] + m["12"] * g["34"] + m["14"] * g["23"] + m["23"] * g["14"]
        - g["13"] * m["24"] - g["24"] * m["13"],
        j=g["34"] * g["12"] + g["23"] * g["14"] - g["13"] * g["24"],
    )


def spectral_determinant(L: LaxPolynomial, lam, mu):
    """det(L(lam) - mu) evaluated directly (independent oracle)."""
    X = L(lam)
    return np.linalg.det(X - mu * np.eye(X.shape[0]))


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Reorder ``cur`` to follow ``prev`` by nearest neighbour."""
    out = np.empty_like(cur)
    free = list(range(len(cur)))
    for k, p in enumerate(prev):
        idx = min(free, key=lambda q: abs(cur[q] - p))
        out[k] = cur[idx]
        free.remove(idx)
    return out


def isospectrality_report(spec: SystemSpec, traj: Trajectory, probe: float = 0.7) -> dict:
    """Drift of spectral data along a trajectory.

    For n = 4 the closed-form coefficients are tracked; for other n the
    invariants tr(L(probe)^k), k = 2, 4, stand in.  Eigenvalues of L(probe)
    are tracked in every dimension.
    """
    C = spec.chi / lax_coefficient(spec)
    series: dict[str, list[float]] = {}
    eig_prev = None
    eig_drift = 0.0
    eig0 = None
    for M, G in zip(traj.M, traj.Gamma):
        L = LaxPolynomial(C, M, G)
        if spec.n == 4 and not spec.vector_inertia:
            for k, v in spectral_coeffs(L).as_dict().items():
                series.setdefault(k, []).append(float(v))
        X = L(probe)
        X2 = X @ X
        series.setdefault("tr_L2", []).append(float(np.trace(X2)))
        series.setdefault("tr_L4", []).append(float(np.trace(X2 @ X2)))
        ev = np.linalg.eigvals(X)
        if eig_prev is None:
            eig0 = ev = np.sort_complex(ev)
        else:
            ev = _match(eig_prev, ev)
        eig_drift = max(eig_drift, float(np.abs(ev - eig0).max()))
        eig_prev = ev
    drifts = {}
    for k, s in series.items():
        s = np.asarray(s)
        d = float(np.abs(s - s[0]).max())
        drifts[k] = {"abs": d, "rel": d / abs(s[0]) if abs(s[0]) > 1e-12 else d}
    first = {k: v[0] for k, v in series.items()}
    return {
        "coefficients": first,
        "drifts": drifts,
        "residuals": {"eigenvalue_drift": eig_drift, "probe": probe},
    }
