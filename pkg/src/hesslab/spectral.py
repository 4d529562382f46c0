"""Spectral curves of the 4D system and its reduction to two e(3)-type tops.

Curve conventions (P, Q are the quartics of :mod:`hesslab.lax`):

* ``Gamma1``: u^2 = P^2/4 - Q^2, degree 8, generically genus 3;
* the full spectral curve has arithmetic genus 9 and one ordinary double
  point over each root of Q, so its normalization has genus 5;
* ``C1``, ``C2``: v^2 = P/2 + Q and v^2 = P/2 - Q (genus 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseState, Trajectory
from .lax import build, spectral_coeffs
from .models import SystemSpec
from .skewalg import split_so4

__all__ = [
    "CurveData",
    "CurveReport",
    "DegenerateCurve",
    "DegenerateCurveWarning",
    "QIdenticallyZero",
    "KZero",
    "ReducedState",
    "EllipticReduction",
    "curve_data",
    "distinct_roots",
    "curve_gamma1",
    "double_points",
    "curves_c1c2",
    "quartic_invariants",
    "j_invariant",
    "reduce",
    "reduced_rhs",
    "split_state",
    "quadrature_check",
    "curve_report",
]

ROOT_TOL = 1e-6


class DegenerateCurve(ValueError):
    pass


class DegenerateCurveWarning(UserWarning):
    pass


class QIdenticallyZero(ValueError):
    pass


class KZero(ValueError):
    pass


@dataclass(frozen=True)
class CurveData:
    P: np.ndarray  # highest degree first
    Q: np.ndarray

    @classmethod
    def from_coeffs(cls, c) -> "CurveData":
        return cls(np.asarray(c.P, dtype=float), np.asarray(c.Q, dtype=float))


@dataclass(frozen=True)
class CurveReport:
    coeffs: np.ndarray
    roots: np.ndarray
    distinct: int
    genus: int
    degenerate: bool


def curve_data(spec: SystemSpec, state) -> CurveData:
    L, _ = build(spec, state)
    return CurveData.from_coeffs(spectral_coeffs(L))


def distinct_roots(roots: np.ndarray, tol: float = ROOT_TOL) -> list[list[complex]]:
    """Cluster roots closer than ``tol`` relative to their size.

    A double root comes back from the companion matrix split by about
    sqrt(machine eps), so ``tol`` must sit well above 1e-8.
    """
    clusters: list[list[complex]] = []
    for r in roots:
        for c in clusters:
            if abs(r - c[0]) <= tol * max(1.0, abs(r)):
                c.append(r)
                break
        else:
            clusters.append([r])
    return clusters


def _roots(coeffs):
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "f")
    if coeffs.size <= 1:
        return np.array([], dtype=complex)
    return np.roots(coeffs)  # companion-matrix eigenvalues


def curve_gamma1(cd: CurveData, *, strict: bool = False) -> CurveReport:
    """u^2 = P^2/4 - Q^2 with genus floor((r - 1) / 2), r = distinct roots."""
    poly = np.polysub(np.polymul(cd.P, cd.P) / 4.0, np.polymul(cd.Q, cd.Q))
    roots = _roots(poly)
    clusters = distinct_roots(roots)
    r = len(clusters)
    genus = max((r - 1) // 2, 0)
    degenerate = r < len(roots)
    if degenerate:
        msg = f"{len(roots) - r} repeated root(s); genus {genus} is for the reduced root set"
        if strict:
            raise DegenerateCurve(msg)
        warnings.warn(msg, DegenerateCurveWarning, stacklevel=2)
    return CurveReport(poly, roots, r, genus, degenerate)


def double_points(cd: CurveData) -> dict:
    """Roots of Q: the singular points (lam_k, 0) of the spectral curve."""
    if not np.any(np.abs(cd.Q) > 0):
        raise QIdenticallyZero("Q vanishes identically")
    roots = _roots(cd.Q)
    clusters = distinct_roots(roots)
    arithmetic_genus = 9
    return {
        "roots": roots,
        "multiplicities": [len(c) for c in clusters],
        "simple": all(len(c) == 1 for c in clusters) and len(roots) == 4,
        "arithmetic_genus": arithmetic_genus,
        "normalization_genus": arithmetic_genus - len(roots),
    }


def curves_c1c2(cd: CurveData) -> tuple[np.ndarray, np.ndarray]:
    half = cd.P / 2.0
    return half + cd.Q, half - cd.Q


def quartic_invariants(coeffs):
    """Invariants (I, J) of a binary quartic a x^4 + b x^3 + c x^2 + d x + e.

    A cubic is treated as a quartic with a = 0 (a root at infinity).
    """
    c = np.zeros(5, dtype=complex)
    arr = np.asarray(coeffs, dtype=complex)
    c[5 - arr.size:] = arr
    a, b, cc, d, e = c
    I = 12 * a * e - 3 * b * d + cc**2
    J = 72 * a * cc * e + 9 * b * cc * d - 27 * a * d**2 - 27 * e * b**2 - 2 * cc**3
    return I, J


def j_invariant(coeffs) -> complex:
    """j-invariant of the genus-1 curve y^2 = quartic (or cubic)."""
    I, J = quartic_invariants(coeffs)
    den = 4 * I**3 - J**2
    if den == 0:
        raise DegenerateCurve("singular quartic")
    return 1728 * 4 * I**3 / den


# ------------------------------------------------------------- reduction


@dataclass(frozen=True)
class ReducedState:
    K1: float
    K2: float
    l1: float
    l2: float
    Gamma1: np.ndarray
    Gamma2: np.ndarray
    M1: np.ndarray
    M2: np.ndarray


@dataclass(frozen=True)
class EllipticReduction:
    A1: float
    B1: float
    C1: float
    A2: float
    B2: float
    C2: float
    rho1: float = 1.0
    rho2: float = 1.0

    def cubic(self, i: int) -> np.ndarray:
        """8A x^3 - 4B x^2 - 8A x - 4C (unit Gamma_i normalization)."""
        A, B, C = (self.A1, self.B1, self.C1) if i == 1 else (self.A2, self.B2, self.C2)
        return np.array([8 * A, -4 * B, -8 * A, -4 * C])

    def quadrature_cubic(self, i: int) -> np.ndarray:
        """Same cubic with |Gamma_i|^2 = rho_i kept general.

        Expanding 4s^2[(rho - x^2)(h - 2 chi x / s) - c^2] gives
        8A x^3 - 4B x^2 - 8A rho x + 4(rho B - s^2 c^2); at rho = 1 this is
        :meth:`cubic`.
        """
        A, B, C = (self.A1, self.B1, self.C1) if i == 1 else (self.A2, self.B2, self.C2)
        rho = self.rho1 if i == 1 else self.rho2
        s2c2 = C + B  # s^2 c^2
        return np.array([8 * A, -4 * B, -8 * A * rho, 4 * (rho * B - s2c2)])


def split_state(M, G):
    """(M1, G1, M2, G2) with M1 = (M+ + M-)/2, M2 = (M+ - M-)/2."""
    mp, mm = split_so4(M)
    gp, gm = split_so4(G)
    return (mp + mm) / 2, (gp + gm) / 2, (mp - mm) / 2, (gp - gm) / 2


def _chi_halves(spec):
    x12, x34 = spec.chi[0, 1], spec.chi[2, 3]
    return (
        np.array([0.0, 0.0, -(x12 + x34) / 2]),
        np.array([0.0, 0.0, -(x12 - x34) / 2]),
    )


def reduce(spec: SystemSpec, state) -> dict:
    """Split a 4D state and evaluate the reduced integrals and curve data."""
    if spec.n != 4 or spec.vector_inertia:
        raise ValueError("reduce needs a 4D block-form system")
    M, G = (state.M, state.Gamma) if isinstance(state, PhaseState) else state
    M1, G1, M2, G2 = split_state(M, G)
    x1, x2 = _chi_halves(spec)
    s = spec.J[0, 0] + spec.J[2, 2]
    h = [Mi @ Mi + 2 / s * (xi @ Gi) for Mi, Gi, xi in ((M1, G1, x1), (M2, G2, x2))]
    c = [M1 @ G1, M2 @ G2]
    K = [np.hypot(M1[0], M1[1]), np.hypot(M2[0], M2[1])]
    l = [np.arctan2(M1[0], M1[1]), np.arctan2(M2[0], M2[1])]
    ell = EllipticReduction(
        A1=s * x1[2], B1=s**2 * h[0], C1=s**2 * (c[0] ** 2 - h[0]),
        A2=s * x2[2], B2=s**2 * h[1], C2=s**2 * (c[1] ** 2 - h[1]),
        rho1=float(G1 @ G1), rho2=float(G2 @ G2),
    )
    return {
        "state": ReducedState(K[0], K[1], l[0], l[1], G1, G2, M1, M2),
        "h": h,
        "c": c,
        "gamma_norm": [G1 @ G1, G2 @ G2],
        "chi_dot_M": [x1 @ M1, x2 @ M2],
        "chi": (x1, x2),
        "elliptic": ell,
    }


def reduced_rhs(spec: SystemSpec, y: np.ndarray) -> np.ndarray:
    """Split equations for y = (M1, G1, M2, G2) in R^12, written out in full."""
    J1, J3, J13, J24 = spec.J[0, 0], spec.J[2, 2], spec.J[0, 2], spec.J[1, 3]
    s, d, p, q = J1 + J3, J1 - J3, J13 + J24, J13 - J24
    (m11, m12, m13), (g11, g12, g13) = y[0:3], y[3:6]
    (m21, m22, m23), (g21, g22, g23) = y[6:9], y[9:12]
    x1, x2 = (v[2] for v in _chi_halves(spec))
    w13 = s * m13 + d * m23 - p * m21
    w11 = s * m11 - q * m23
    w23 = s * m23 + d * m13 - q * m11
    w21 = s * m21 - p * m13
    return 2 * np.array([
        d * m12 * m23 - p * m12 * m21 + g12 * x1,
        -d * m23 * m11 - q * m13 * m23 + p * m11 * m21 - g11 * x1,
        q * m12 * m23,
        g12 * w13 - g13 * s * m12,
        g13 * w11 - g11 * w13,
        g11 * s * m12 - g12 * w11,
        d * m22 * m13 - q * m22 * m11 + g22 * x2,
        -d * m13 * m21 - p * m23 * m13 + q * m21 * m11 - g21 * x2,
        p * m22 * m13,
        g22 * w23 - g23 * s * m22,
        g23 * w21 - g21 * w23,
        g21 * s * m22 - g22 * w21,
    ])


def _centred_derivative(y, t):
    """Five-point centred difference on a uniform grid (edges: 2nd order)."""
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        return np.gradient(y, t, axis=0, edge_order=2)
    d = np.gradient(y, t, axis=0, edge_order=2)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h[0])
    return d


def quadrature_check(spec: SystemSpec, traj: Trajectory) -> dict:
    """Residuals of the reduced quadratures along a trajectory.

    Time derivatives are centred finite differences on the stored samples, so
    the trajectory should be sampled on a uniform grid.  Samples with K_i
    near zero are skipped for the angle equations.
    """
    s = spec.J[0, 0] + spec.J[2, 2]
    J13, J24 = spec.J[0, 2], spec.J[1, 3]
    red = [reduce(spec, (M, G)) for M, G in zip(traj.M, traj.Gamma)]
    t = traj.t
    g3 = np.array([[r["state"].Gamma1[2], r["state"].Gamma2[2]] for r in red])
    K = np.array([[r["state"].K1, r["state"].K2] for r in red])
    l = np.unwrap(np.array([[r["state"].l1, r["state"].l2] for r in red]), axis=0)
    h = np.array(red[0]["h"])
    c = np.array(red[0]["c"])
    rho = np.array(red[0]["gamma_norm"])
    x3 = np.array([red[0]["chi"][0][2], red[0]["chi"][1][2]])
    dg3 = _centred_derivative(g3, t)
    dl = _centred_derivative(l, t)
    inner = slice(2, -2)

    P3 = 4 * s**2 * ((rho - g3**2) * (h - 2 / s * x3 * g3) - c**2)
    res_quad = np.abs(dg3**2 - P3)[inner]
    res_K = np.abs(K**2 - (h - 2 / s * x3 * g3))
    skipped = 0
    ok = (K > 1e-6).all(axis=1)
    if not ok.all():
        skipped = int((~ok).sum())
    lhs1 = -2 * (J13 + J24) * K[:, 1] * np.sin(l[:, 1]) + 2 * x3[0] * c[0] / np.where(ok, K[:, 0], 1) ** 2
    lhs2 = -2 * (J13 - J24) * K[:, 0] * np.sin(l[:, 0]) + 2 * x3[1] * c[1] / np.where(ok, K[:, 1], 1) ** 2
    res_l = np.abs(np.stack([dl[:, 0] - lhs1, dl[:, 1] - lhs2], axis=1))[ok][2:-2]

    ell = red[0]["elliptic"]
    # the curve cubic against the quadrature polynomial, pointwise
    probe = np.linspace(-1, 1, 7)
    cubic_gap = max(
        float(np.abs(np.polyval(ell.quadrature_cubic(i + 1), probe)
                     - 4 * s**2 * ((rho[i] - probe**2) * (h[i] - 2 / s * x3[i] * probe) - c[i] ** 2)).max())
        for i in range(2)
    )
    return {
        "quadrature": float(res_quad.max()),
        "K_squared": float(res_K.max()),
        "l_dot": float(res_l.max()) if res_l.size else float("nan"),
        "K_zero_samples": skipped,
        "elliptic_vs_quadrature": cubic_gap,
        "gamma_norm": rho.tolist(),
        "elliptic": ell,
    }


def curve_report(spec: SystemSpec, state) -> dict:
    cd = curve_data(spec, state)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCurveWarning)
        g1 = curve_gamma1(cd)
    dp = double_points(cd)
    c1, c2 = curves_c1c2(cd)
    red = reduce(spec, state)
    ell = red["elliptic"]
    return {
        "genus": g1.genus,
        "degenerate": g1.degenerate,
        "double_points": [[float(z.real), float(z.imag)] for z in dp["roots"]],
        "normalization_genus": dp["normalization_genus"],
        "C1_j": _cplx(j_invariant(c1)),
        "C2_j": _cplx(j_invariant(c2)),
        "E1": {"A": ell.A1, "B": ell.B1, "C": ell.C1, "rho": ell.rho1,
               "j": _cplx(j_invariant(ell.quadrature_cubic(1)))},
        "E2": {"A": ell.A2, "B": ell.B2, "C": ell.C2, "rho": ell.rho2,
               "j": _cplx(j_invariant(ell.quadrature_cubic(2)))},
    }


def _cplx(z):
    z = complex(z)
    return [z.real, z.imag]
