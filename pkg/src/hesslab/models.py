"""Named rigid-body systems on so(n) × so(n) and their Hamiltonians.

A :class:`SystemSpec` bundles the inertia operator ``J`` and the constant
skew matrix ``chi``.  For the three-dimensional kinds (classical
Hess-Appel'rot and the Lagrange top) ``J`` acts on 3-vectors, ``Omega = J M``,
and ``chi`` is stored as the so(3) matrix ``hat(chi_vec)``.  All other kinds use
``Omega = J M + M J``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .skewalg import hat, inertia_map, pair_inner, pairs, skew, unhat

__all__ = [
    "Kind",
    "SystemSpec",
    "DiagonalizedSpec",
    "ConditionViolated",
    "DegenerateInertia",
    "Unsupported",
    "make_spec",
    "spec_from_json",
    "spec_to_json",
    "diagonalize",
    "hamiltonian",
    "perturbation_split",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


class Kind(str, enum.Enum):
    CLASSICAL_HA = "ClassicalHA"
    HA4 = "HA4"
    HAN = "HAn"
    LAGRANGE_TOP = "LagrangeTop"
    LAGRANGE_BITOP = "LagrangeBitop"
    CUSTOM = "Custom"


class ConditionViolated(ValueError):
    def __init__(self, condition: str, residual: float):
        super().__init__(f"{condition} violated (residual {residual:.3e})")
        self.condition = condition
        self.residual = residual


class DegenerateInertia(ValueError):
    pass


class Unsupported(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SystemSpec:
    kind: Kind
    n: int
    J: np.ndarray
    chi: np.ndarray
    params: Mapping[str, Any] = field(default_factory=dict)
    vector_inertia: bool = False

    def omega(self, M: np.ndarray) -> np.ndarray:
        if self.vector_inertia:
            return hat(self.J @ unhat(M))
        return inertia_map(self.J, M)

    @property
    def chi_vec(self) -> np.ndarray:
        return unhat(self.chi)

    def p(self, name: str, default: float = 0.0) -> float:
        return float(self.params.get(name, default))


@dataclass(frozen=True, eq=False)
class DiagonalizedSpec:
    Jtilde: np.ndarray
    chitilde: np.ndarray
    t1: float
    t2: float
    phi: float
    phi1: float
    S: np.ndarray
    residuals: Mapping[str, float]


_ENTRY = re.compile(r"^(J|chi)(\d)(\d)$")

# (kind) -> parameter names that are consumed by the canonical builder
_KNOWN = {
    Kind.HA4: {"J1", "J3", "J13", "J24", "chi12", "chi34"},
    Kind.HAN: {"J1", "J3", "J13", "J24", "chi12"},
    Kind.LAGRANGE_BITOP: {"J1", "J3", "chi12", "chi34"},
    Kind.LAGRANGE_TOP: {"J1", "J3", "chi12", "z0"},
}


def _block_J(n, J1, J3, J13=0.0, J24=0.0):
    J = np.diag([J1, J1] + [J3] * (n - 2)).astype(float)
    J[0, 2] = J[2, 0] = J13
    if n > 3:
        J[1, 3] = J[3, 1] = J24
    return J


def _chi(n, entries):
    c = np.zeros((n, n))
    for (i, j), v in entries.items():
        c[i - 1, j - 1] = v
        c[j - 1, i - 1] = -v
    return c


def _inject(kind, params, J, chi):
    """Apply explicit ``J``/``chi`` matrices and stray ``Jij``/``chiij`` keys."""
    if "J" in params:
        J = np.array(params["J"], dtype=float)
    if "chi" in params and np.ndim(params["chi"]) == 2:
        chi = np.array(params["chi"], dtype=float)
    for key, val in params.items():
        m = _ENTRY.match(key)
        if not m or key in _KNOWN.get(kind, ()):
            continue
        i, j = int(m.group(2)) - 1, int(m.group(3)) - 1
        if m.group(1) == "J":
            J[i, j] = J[j, i] = float(val)
        elif i != j:
            chi[i, j] = float(val)
            chi[j, i] = -float(val)
    return J, chi


def _check_pattern(name, mat, allowed, tol):
    mask = np.zeros(mat.shape, dtype=bool)
    for i, j in allowed:
        mask[i, j] = mask[j, i] = True
    off = np.abs(np.where(mask, 0.0, mat)).max(initial=0.0)
    if off > tol:
        raise ConditionViolated(f"{name} shape", float(off))


def _validate_block(kind, n, J, chi, tol):
    if np.abs(J - J.T).max() > tol:
        raise ConditionViolated("J symmetric", float(np.abs(J - J.T).max()))
    diag = [(k, k) for k in range(n)]
    couple = [(0, 2), (1, 3)] if kind in (Kind.HA4, Kind.HAN) else []
    _check_pattern("J", J, diag + couple, tol)
    d = np.diag(J)
    r = max(abs(d[0] - d[1]), max((abs(x - d[2]) for x in d[3:]), default=0.0))
    if r > tol:
        raise ConditionViolated("J diagonal J1,J1,J3,...,J3", float(r))
    chi_allowed = [(0, 1), (2, 3)] if kind in (Kind.HA4, Kind.LAGRANGE_BITOP) else [(0, 1)]
    _check_pattern("chi", chi, chi_allowed, tol)


def _principal_frame_residual(Jt, chi_vec):
    """Residual of the Hess condition for a 3×3 inverse-inertia operator.

    ``Jt`` may be non-diagonal; it is brought to principal axes first.  Axis
    orientations are not canonical, so the sign-free form is used.
    """
    w, V = np.linalg.eigh(Jt)
    x0, y0, z0 = V.T @ chi_vec
    a = math.sqrt(max(w[2] - w[1], 0.0))
    b = math.sqrt(max(w[1] - w[0], 0.0))
    return max(abs(y0), abs(abs(x0) * a - abs(z0) * b))


def make_spec(kind, params: Mapping[str, Any] | None = None, *, tol: float = DEFAULT_TOL) -> SystemSpec:
    """Build and validate a named system.

    Examples of ``params``:

    * ``ClassicalHA``: ``Jt1, Jt2, Jt3, x0, y0, z0`` (principal axes) or
      ``J1, J3, J13, z0`` (frame where the invariant surface is ``M3 = 0``)
    * ``HA4``: ``J1, J3, J13, J24, chi12, chi34``
    * ``HAn``: ``n, J1, J3, J13, J24, chi12``
    * ``LagrangeTop``: ``n=3, J1, J3, z0`` or ``n>=4, J1, J3, chi12``
    * ``LagrangeBitop``: ``J1, J3, chi12, chi34``
    * ``Custom``: ``n, J, chi`` (full matrices); ``vector_inertia`` for n=3
    """
    kind = Kind(kind)
    params = dict(params or {})
    g = lambda k, d=0.0: float(params.get(k, d))  # noqa: E731

    if kind is Kind.CLASSICAL_HA:
        if "Jt1" in params:
            Jt = np.diag([g("Jt1"), g("Jt2"), g("Jt3")])
            cv = np.array([g("x0"), g("y0"), g("z0")])
            if not Jt[0, 0] < Jt[1, 1] < Jt[2, 2]:
                raise ConditionViolated("Jt1 < Jt2 < Jt3", 0.0)
            res = max(
                abs(cv[1]),
                abs(cv[0] * math.sqrt(Jt[2, 2] - Jt[1, 1]) + cv[2] * math.sqrt(Jt[1, 1] - Jt[0, 0])),
            )
        else:
            J1, J3, J13 = g("J1"), g("J3"), g("J13")
            Jt = np.array([[J1, 0, J13], [0, J1, 0], [J13, 0, J3]], dtype=float)
            cv = np.array([0.0, 0.0, g("z0", 1.0)])
            res = _principal_frame_residual(Jt, cv)
        if res > tol:
            raise ConditionViolated("Hess condition", float(res))
        return SystemSpec(kind, 3, Jt, hat(cv), MappingProxyType(params), True)

    if kind is Kind.LAGRANGE_TOP and int(params.get("n", 3)) == 3:
        Jt = np.diag([g("J1"), g("J1"), g("J3")])
        cv = np.array([0.0, 0.0, g("z0", 1.0)])
        return SystemSpec(kind, 3, Jt, hat(cv), MappingProxyType(params), True)

    if kind is Kind.CUSTOM:
        J = np.array(params["J"], dtype=float)
        n = J.shape[0]
        chi_raw = np.array(params.get("chi", np.zeros((n, n))), dtype=float)
        vec = bool(params.get("vector_inertia", False))
        if vec and chi_raw.shape == (3,):
            chi_raw = hat(chi_raw)
        if np.abs(J - J.T).max() > tol:
            raise ConditionViolated("J symmetric", float(np.abs(J - J.T).max()))
        try:
            chi = skew(chi_raw)
        except ValueError:
            raise ConditionViolated("chi skew", float(np.abs(chi_raw + chi_raw.T).max())) from None
        return SystemSpec(kind, n, J, chi, MappingProxyType(params), vec)

    n = {Kind.HA4: 4, Kind.LAGRANGE_BITOP: 4}.get(kind, int(params.get("n", 4)))
    if n < 4:
        raise ConditionViolated("n >= 4", float(n))
    J13, J24 = (g("J13"), g("J24")) if kind in (Kind.HA4, Kind.HAN) else (0.0, 0.0)
    J = _block_J(n, g("J1"), g("J3"), J13, J24)
    if kind in (Kind.HA4, Kind.LAGRANGE_BITOP):
        chi = _chi(n, {(1, 2): g("chi12"), (3, 4): g("chi34")})
    else:
        chi = _chi(n, {(1, 2): g("chi12")})
    J, chi = _inject(kind, params, J, chi)
    _validate_block(kind, n, J, chi, tol)
    return SystemSpec(kind, n, J, skew(chi), MappingProxyType(params), False)


def spec_from_json(doc: Mapping[str, Any]) -> SystemSpec:
    params = dict(doc.get("params", {}))
    for key in ("J", "chi"):
        if key in doc:
            params[key] = doc[key]
    if "n" in doc:
        params.setdefault("n", doc["n"])
    return make_spec(doc["kind"], params, tol=float(doc.get("tol", DEFAULT_TOL)))


def spec_to_json(spec: SystemSpec) -> dict:
    params = {k: (np.asarray(v).tolist() if np.ndim(v) else v) for k, v in spec.params.items()}
    return {"kind": spec.kind.value, "n": spec.n, "params": params}


# --------------------------------------------------------------- diagonalize


def _half_arctan(num, den):
    if den == 0.0:
        return math.copysign(math.pi / 4, num) if num else 0.0
    return 0.5 * math.atan(num / den)


def _inv_sqrt1p(num, den):
    """1/sqrt(1+t^2) for t = num/den, finite when den == 0."""
    h = math.hypot(num, den)
    return float("nan") if h == 0.0 else abs(den) / h


def diagonalize(spec: SystemSpec, *, tol: float = DEFAULT_TOL) -> DiagonalizedSpec:
    """Rotate the (1,3) and (2,4) planes so that J becomes diagonal."""
    if spec.vector_inertia or spec.n < 4:
        raise Unsupported("diagonalize needs a block-form system with n >= 4")
    J, chi = spec.J, spec.chi
    J1, J3, J13, J24 = J[0, 0], J[2, 2], J[0, 2], J[1, 3]
    phi = _half_arctan(2 * J13, J3 - J1)
    phi1 = _half_arctan(2 * J24, J3 - J1)
    S = np.eye(spec.n)
    c, s, c1, s1 = math.cos(phi), math.sin(phi), math.cos(phi1), math.sin(phi1)
    S[0, 0], S[0, 2], S[2, 0], S[2, 2] = c, s, -s, c
    S[1, 1], S[1, 3], S[3, 1], S[3, 3] = c1, s1, -s1, c1
    Jt_full = S.T @ J @ S
    off = np.abs(Jt_full - np.diag(np.diag(Jt_full))).max()
    if off > 1e3 * tol * max(1.0, np.abs(J).max()):
        raise DegenerateInertia(f"rotation left off-diagonal residue {off:.3e}")
    Jt = np.diag(Jt_full).copy()
    ct = skew(S.T @ chi @ S)

    x12, x14, x23, x34 = ct[0, 1], ct[0, 3], ct[1, 2], ct[2, 3]
    n1, d1 = 2 * (x14 * x34 - x12 * x23), x14**2 - x34**2 + x12**2 - x23**2
    n2, d2 = 2 * (x14 * x12 - x23 * x34), -(x14**2) - x34**2 + x12**2 + x23**2
    # |chi12| == |chi34| makes one ratio 0/0; t is then indeterminate (nan).
    eps = 1e-12 * max(1.0, float(np.abs(ct).max()) ** 2)
    n1, d1, n2, d2 = (0.0 if abs(v) < eps else v for v in (n1, d1, n2, d2))
    t1 = n1 / d1 if d1 else (math.copysign(math.inf, n1) if n1 else math.nan)
    t2 = n2 / d2 if d2 else (math.copysign(math.inf, n2) if n2 else math.nan)
    lhs = (Jt[2] - Jt[0]) * _inv_sqrt1p(n1, d1)
    rhs = (Jt[3] - Jt[1]) * _inv_sqrt1p(n2, d2)
    residuals = {
        "J3-J4=J2-J1": float((Jt[2] - Jt[3]) - (Jt[1] - Jt[0])),
        "t-identity": float(abs(lhs) - abs(rhs)),
        "t-identity-signed": float(lhs - rhs),
        "orthogonality": float(np.abs(S.T @ S - np.eye(spec.n)).max()),
    }
    for key in ("J3-J4=J2-J1", "t-identity"):
        r = residuals[key]
        if not math.isnan(r) and abs(r) > tol * max(1.0, np.abs(J).max()):
            raise ConditionViolated(key, abs(r))
    return DiagonalizedSpec(Jt, ct, t1, t2, phi, phi1, S, MappingProxyType(residuals))


# -------------------------------------------------------------- hamiltonians


def _state(state):
    if hasattr(state, "M"):
        return state.M, state.Gamma
    return state


def hamiltonian(spec: SystemSpec, state, which: str = "H_first"):
    """Energy in the standard structure, or the second-structure Hamiltonian.

    ``state`` is a :class:`~hesslab.dynamics.PhaseState` or an ``(M, Gamma)``
    pair of skew matrices.
    """
    M, G = _state(state)
    if which == "H_first":
        return 0.5 * pair_inner(M, spec.omega(M)) + pair_inner(G, spec.chi)
    if which != "H_second":
        raise ValueError(f"unknown Hamiltonian {which!r}")
    return _second_hamiltonian(spec, M, G)


def _require(cond, msg):
    if not cond:
        raise Unsupported(msg)


def _second_hamiltonian(spec, M, G):
    kind, tol = spec.kind, 1e-12
    if kind is Kind.LAGRANGE_TOP and spec.n == 3:
        Jt = spec.J
        _require(abs(Jt[0, 0] - 1) < tol and abs(spec.chi_vec[2] - 1) < tol,
                 "second Hamiltonian needs J1 = 1 and z0 = 1")
        a = Jt[2, 2]
        m, g = unhat(M), unhat(G)
        return (a - 1) * m[2] * (0.5 * (m[0] ** 2 + m[1] ** 2) + g[2]) + m @ g
    if kind is Kind.LAGRANGE_BITOP:
        a, J3 = spec.J[0, 0], spec.J[2, 2]
        _require(abs(a + J3 - 1) < tol, "second Hamiltonian needs J1 + J3 = 1")
        x12, x34 = spec.chi[0, 1], spec.chi[2, 3]
        den = x12**2 - x34**2
        _require(abs(den) > 1e-9, "second Hamiltonian needs chi12^2 != chi34^2")
        sq = 0.5 * (M[0, 2] ** 2 + M[0, 3] ** 2 + M[1, 2] ** 2 + M[1, 3] ** 2)
        t1 = (2 * a - 1) * (x12 * M[0, 1] + x34 * M[2, 3]) / den * (sq + x12 * G[0, 1] + x34 * G[2, 3])
        t2 = (1 - 2 * a) * (x12 * M[2, 3] + x34 * M[0, 1]) / den * (
            M[1, 2] * M[0, 3] - M[0, 2] * M[1, 3] + x12 * G[2, 3] + x34 * G[0, 1]
        )
        return t1 + t2 + pair_inner(M, G)
    if kind is Kind.LAGRANGE_TOP:
        n, a, J3 = spec.n, spec.J[0, 0], spec.J[2, 2]
        _require(abs(a + J3 - 1) < tol and abs(spec.chi[0, 1] - 1) < tol,
                 "second Hamiltonian needs J1 + J3 = 1 and chi12 = 1")
        sq = 0.5 * sum(M[0, p] ** 2 + M[1, p] ** 2 for p in range(2, n))
        total = (2 * a - 1) * M[0, 1] * (sq + G[0, 1])
        for p in range(2, n):
            for q in range(p + 1, n):
                total = total + (1 - 2 * a) * M[p, q] * (
                    M[0, q] * M[1, p] - M[1, q] * M[0, p] + G[p, q]
                )
        return total + pair_inner(M, G)
    raise Unsupported(f"no second Hamiltonian for {kind.value}")


def relation_pairs(spec: SystemSpec) -> list[tuple[int, int]]:
    """Index pairs (0-based) of the M entries that vanish on the invariant set."""
    if spec.vector_inertia:
        return [(0, 1)]  # M3 = -M[0,1] in so(3) form
    if spec.kind in (Kind.HA4, Kind.LAGRANGE_BITOP):
        return [(0, 1), (2, 3)]
    if spec.kind in (Kind.HAN, Kind.LAGRANGE_TOP):
        return [(0, 1)] + [(l, p) for l, p in pairs(spec.n) if l >= 2]
    return []


def perturbation_split(spec: SystemSpec):
    """Write the Hess-Appel'rot energy as H0 + sum_j b_j f_j.

    Returns ``(base_spec, fpairs, bfuncs)`` where ``base_spec`` has the
    off-diagonal inertia removed, ``fpairs`` are the M-entries ``f_j`` and
    ``bfuncs[j](M, G)`` evaluates ``b_j``.  Each deformation monomial carries
    exactly one relation factor, so ``b_j = d(H - H0)/d f_j``.
    """
    fp = relation_pairs(spec)
    if spec.vector_inertia:
        J13 = spec.J[0, 2]
        base = make_spec(Kind.LAGRANGE_TOP, {"J1": spec.J[0, 0], "J3": spec.J[2, 2], "z0": spec.chi_vec[2]})
        # H - H0 = J13 M1 M3 with f = M3
        return base, ["M3"], [lambda M, G: J13 * unhat(M)[0]]
    J13, J24 = spec.J[0, 2], spec.J[1, 3]
    J0 = spec.J.copy()
    J0[0, 2] = J0[2, 0] = 0.0
    if spec.n > 3:
        J0[1, 3] = J0[3, 1] = 0.0
    base = SystemSpec(Kind.CUSTOM, spec.n, J0, spec.chi, MappingProxyType({}), False)

    def deformation(M):
        D = 0.0
        for k in range(spec.n):
            D = D + J13 * M[0, k] * M[2, k] + J24 * M[1, k] * M[3, k]
        return D

    def make_b(i, j):
        def b(M, G):
            # zero the relation coordinate, then take the exact unit slope
            Mz = M.copy()
            Mz[i, j] = Mz[j, i] = 0.0
            E = np.zeros_like(M)
            E[i, j], E[j, i] = 1.0, -1.0
            return deformation(Mz + E) - deformation(Mz)
        return b

    return base, [f"M{i + 1}{j + 1}" for i, j in fp], [make_b(i, j) for i, j in fp]
