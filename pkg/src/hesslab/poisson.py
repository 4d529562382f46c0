"""Affine Poisson tensors and numerical bracket checks.

Coordinates for so(n) × so(n) are ``(M_ij for i<j, Gamma_ij for i<j)`` in
lexicographic order; for e(3) they are ``(M1, M2, M3, G1, G2, G3)``.  A
structure is stored as ``pi(x) = const + lin @ x`` so its partial derivatives
are exact.

With these conventions ``pi(x) @ grad H`` equals the Euler-Poisson vector
field of the energy ``H`` (see :func:`hamiltonian_field`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dynamics import PhaseState
from .models import SystemSpec, hamiltonian, perturbation_split
from .skewalg import elementary, from_coords, hat, pair_labels, pairs, to_coords, unhat

__all__ = [
    "PoissonStructure",
    "ScalarField",
    "InvolutionFailed",
    "e3_standard",
    "e3_second",
    "so_standard",
    "bitop_structure",
    "lagrange_structure",
    "pencil",
    "bracket",
    "jacobi_defect",
    "jacobi_tensor_defect",
    "schouten_defect",
    "casimir_check",
    "ham_vector_field",
    "bihamiltonian_check",
    "restrictive_check",
    "bp_check",
    "random_points",
    "point_to_state",
    "state_to_point",
    "hamiltonian_field",
    "coordinate",
    "casimir_fields",
]

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k], _EPS3[_j, _i, _k] = 1.0, -1.0


class InvolutionFailed(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PoissonStructure:
    const: np.ndarray  # (d, d)
    lin: np.ndarray  # (d, d, d): pi_ij(x) = const_ij + lin_ijs x_s
    names: tuple[str, ...]
    label: str = ""

    @property
    def dim(self) -> int:
        return self.const.shape[0]

    def __call__(self, x) -> np.ndarray:
        return self.const + self.lin @ np.asarray(x)

    def __add__(self, other: "PoissonStructure") -> "PoissonStructure":
        return PoissonStructure(self.const + other.const, self.lin + other.lin, self.names,
                                f"{self.label}+{other.label}")

    def scaled(self, c: float) -> "PoissonStructure":
        return PoissonStructure(c * self.const, c * self.lin, self.names, f"{c}*{self.label}")


def pencil(A: PoissonStructure, B: PoissonStructure, lam: float) -> PoissonStructure:
    return A + B.scaled(lam)


class ScalarField:
    """A function of the coordinate vector with an optional analytic gradient.

    Without one, the gradient is a Richardson-extrapolated central difference
    with step 1e-3; that is exact (up to rounding) for polynomials of degree
    four or less, which covers every Hamiltonian used here.
    """

    def __init__(self, func: Callable, grad: Callable | None = None, name: str = "", step: float = 1e-3):
        self.func, self._grad, self.name, self.step = func, grad, name, step
        self.coord: int | None = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=float)
        h = self.step
        out = np.empty(x.size)
        for k in range(x.size):
            e = np.zeros(x.size)
            e[k] = 1.0
            d1 = (self.func(x + h * e) - self.func(x - h * e)) / (2 * h)
            d2 = (self.func(x + h / 2 * e) - self.func(x - h / 2 * e)) / h
            out[k] = (4 * d2 - d1) / 3
        return out

    def directional(self, x, v) -> float:
        """Derivative along v, same Richardson stencil as :meth:`grad`."""
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        if self._grad is not None:
            return float(self.grad(x) @ v)
        h = self.step
        d1 = (self.func(x + h * v) - self.func(x - h * v)) / (2 * h)
        d2 = (self.func(x + h / 2 * v) - self.func(x - h / 2 * v)) / h
        return float((4 * d2 - d1) / 3)

    def __repr__(self):
        return f"ScalarField({self.name!r})"


def coordinate(k: int, dim: int, name: str = "") -> ScalarField:
    e = np.zeros(dim)
    e[k] = 1.0
    f = ScalarField(lambda x: x[k], lambda x: e, name or f"x{k}")
    f.coord = k
    return f


# ----------------------------------------------------------------- builders


def _names(n):
    return tuple(pair_labels(n, "M") + pair_labels(n, "G"))


def _lie_block(n):
    """c[a, b, :] = coordinates of [E_a, E_b]."""
    idx = pairs(n)
    N = len(idx)
    c = np.zeros((N, N, N))
    E = [elementary(n, i + 1, j + 1) for i, j in idx]
    for a in range(N):
        for b in range(N):
            c[a, b] = to_coords(E[a] @ E[b] - E[b] @ E[a])
    return c


def so_standard(n: int) -> PoissonStructure:
    """Lie-Poisson structure of the semidirect product so(n) × so(n)."""
    N = n * (n - 1) // 2
    c = _lie_block(n)
    lin = np.zeros((2 * N, 2 * N, 2 * N))
    lin[:N, :N, :N] = -c
    lin[:N, N:, N:] = -c
    lin[N:, :N, N:] = -c
    return PoissonStructure(np.zeros((2 * N, 2 * N)), lin, _names(n), f"so({n})xso({n}) standard")


def e3_standard() -> PoissonStructure:
    lin = np.zeros((6, 6, 6))
    lin[:3, :3, :3] = -_EPS3
    lin[:3, 3:, 3:] = -_EPS3
    lin[3:, :3, 3:] = -_EPS3
    names = ("M1", "M2", "M3", "G1", "G2", "G3")
    return PoissonStructure(np.zeros((6, 6)), lin, names, "e(3) standard")


def e3_second() -> PoissonStructure:
    lin = np.zeros((6, 6, 6))
    lin[3:, 3:, 3:] = -_EPS3
    const = np.zeros((6, 6))
    const[0, 1], const[1, 0] = 1.0, -1.0
    names = ("M1", "M2", "M3", "G1", "G2", "G3")
    return PoissonStructure(const, lin, names, "e(3) second")


def _gamma_lie(n):
    N = n * (n - 1) // 2
    lin = np.zeros((2 * N, 2 * N, 2 * N))
    lin[N:, N:, N:] = -_lie_block(n)
    return lin


def _set_const(const, n, pairs_vals):
    lab = {p: k for k, p in enumerate(pairs(n))}
    for (a, b), v in pairs_vals:
        i, j = lab[a], lab[b]
        const[i, j] += v
        const[j, i] -= v


def bitop_structure(chi12: float, chi34: float) -> PoissonStructure:
    """Second structure on so(4) × so(4) with constant M-M block."""
    n, N = 4, 6
    const = np.zeros((2 * N, 2 * N))
    _set_const(const, n, [
        (((0, 2), (1, 2)), -chi12),
        (((0, 3), (1, 3)), -chi12),
        (((0, 2), (0, 3)), -chi34),
        (((1, 2), (1, 3)), -chi34),
    ])
    return PoissonStructure(const, _gamma_lie(n), _names(n), "bitop")


def lagrange_structure(n: int) -> PoissonStructure:
    N = n * (n - 1) // 2
    const = np.zeros((2 * N, 2 * N))
    _set_const(const, n, [(((0, l), (1, l)), -1.0) for l in range(2, n)])
    return PoissonStructure(const, _gamma_lie(n), _names(n), f"lagrange n={n}")


# ------------------------------------------------------------------ checks


def bracket(P: PoissonStructure, f: ScalarField, g: ScalarField, x) -> float:
    # a coordinate on either side turns the bracket into one directional derivative
    if g.coord is not None:
        return f.directional(x, P(x)[:, g.coord])
    if f.coord is not None:
        return -g.directional(x, P(x)[:, f.coord])
    return float(f.grad(x) @ P(x) @ g.grad(x))


def _as_field(f, dim):
    return coordinate(f, dim) if isinstance(f, (int, np.integer)) else f


def jacobi_defect(P: PoissonStructure, x, triple) -> float:
    """|{{f,g},h} + {{g,h},f} + {{h,f},g}| at x.

    Integer entries of ``triple`` are coordinate functions and use the exact
    tensor derivatives; general fields go through nested numeric brackets.
    """
    x = np.asarray(x, dtype=float)
    if all(isinstance(t, (int, np.integer)) for t in triple):
        i, j, k = triple
        pi = P(x)
        val = P.lin[i, j] @ pi[:, k] + P.lin[j, k] @ pi[:, i] + P.lin[k, i] @ pi[:, j]
        return float(abs(val))
    f, g, h = (_as_field(t, P.dim) for t in triple)

    def br(u, v):
        return ScalarField(lambda y: bracket(P, u, v, y))

    total = bracket(P, br(f, g), h, x) + bracket(P, br(g, h), f, x) + bracket(P, br(h, f), g, x)
    return float(abs(total))


def _schouten(A, B, x):
    a, b = A(x), B(x)
    T = np.einsum("ijs,sk->ijk", A.lin, b) + np.einsum("ijs,sk->ijk", B.lin, a)
    return T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)


def schouten_defect(A: PoissonStructure, B: PoissonStructure, x) -> float:
    """max_{ijk} |[A, B]_{ijk}|."""
    if A.dim != B.dim:
        raise ValueError("structures live on different spaces")
    return float(np.abs(_schouten(A, B, np.asarray(x, dtype=float))).max())


def jacobi_tensor_defect(P: PoissonStructure, x) -> float:
    """Max over all coordinate triples of the Jacobi cyclic sum."""
    return 0.5 * schouten_defect(P, P, x)


def random_points(dim: int, count: int = 100, seed: int = 42, constraint=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(count, dim))
    if constraint is not None:
        pts = np.array([constraint(p) for p in pts])
    return pts


def casimir_check(P: PoissonStructure, f: ScalarField, points=None, seed: int = 42) -> float:
    """max over points and coordinates g of |{f, g}|."""
    if points is None:
        points = random_points(P.dim, 100, seed)
    return float(max(np.abs(f.grad(x) @ P(x)).max() for x in points))


def ham_vector_field(P: PoissonStructure, H: ScalarField, x) -> np.ndarray:
    return P(x) @ H.grad(x)


def bihamiltonian_check(P1, H1, P2, H2, points=None, seed: int = 42) -> float:
    """max |pi1 grad H1 - pi2 grad H2| over the points (global, not per leaf)."""
    if points is None:
        points = random_points(P1.dim, 100, seed)
    return float(max(np.abs(ham_vector_field(P1, H1, x) - ham_vector_field(P2, H2, x)).max()
                     for x in points))


def _structure_constants(P: PoissonStructure, coords):
    """d_ij^l for coordinate relation functions, read off the affine tensor.

    Also returns the part of {f_i, f_j} that is not a combination of the f_l
    (the A2' defect is its size at a point).
    """
    d = P.lin[np.ix_(coords, coords, coords)]
    rest = P.lin[np.ix_(coords, coords)].copy()
    rest[:, :, coords] = 0.0
    return d, P.const[np.ix_(coords, coords)], rest


def restrictive_check(P1: PoissonStructure, H0: ScalarField, b: Sequence[ScalarField],
                      f: Sequence[ScalarField], points=None, *, involution_tol: float = 1e-9,
                      noncommutative: bool = False, seed: int = 42) -> dict:
    """Axioms A1/A2 and the c-symmetry of the A1 coefficients for H = H0 + sum_j b_j f_j.

    a_ij = {b_j, f_i}, c_il^j = {a_ij, f_l}.  A1 is checked at generic points
    as {H, f_i} - sum_j a_ij f_j, and separately as {H, f_i} on {f = 0} when
    every f_i is a coordinate function.

    With ``noncommutative=True`` a failed A2 is not an error: when the f_i are
    coordinates the constants d_ij^l are read off the tensor and the report
    gains ``A2_prime``, ``A1_A2prime`` (A1 with a_il + sum_j b_j d_ji^l) and the corrected symmetry defect
    c_il^j - c_li^j - sum_m d_il^m a_mj (``c_symmetry_A2prime``).  The
    variant with a_jm in place of a_mj is reported as
    ``c_symmetry_A2prime_transposed``.
    """
    if points is None:
        points = random_points(P1.dim, 100, seed)
    k = len(f)
    H = ScalarField(lambda x: H0(x) + sum(bj(x) * fj(x) for bj, fj in zip(b, f)), name="H")
    # a_ij are polynomial, so a wide stencil stays exact and keeps the second
    # derivative in c_il^j clear of rounding noise
    a = [[ScalarField(lambda x, i=i, j=j: bracket(P1, b[j], f[i], x), step=0.1) for j in range(k)]
         for i in range(k)]
    coords = [fi.coord for fi in f]
    on_coords = all(c is not None for c in coords)
    d = None
    if on_coords and noncommutative:
        d, dconst, rest = _structure_constants(P1, coords)
    a1 = a1p = a1_on_set = a2 = a2p = csym = csym_p = csym_t = 0.0
    for x in points:
        fx = np.array([fi(x) for fi in f])
        ax = np.array([[a[i][j](x) for j in range(k)] for i in range(k)])
        c = np.array([[[bracket(P1, a[i][j], f[l], x) for j in range(k)] for l in range(k)] for i in range(k)])
        for i in range(k):
            lhs = bracket(P1, H, f[i], x)
            a1 = max(a1, abs(lhs - ax[i] @ fx))
            for j in range(i + 1, k):
                a2 = max(a2, abs(bracket(P1, f[i], f[j], x)))
        # c[i, l, j] = c_il^j
        sym = c - c.transpose(1, 0, 2)
        csym = max(csym, float(np.abs(sym).max()))
        if d is not None:
            # {H, f_i} also picks up sum_j b_j {f_j, f_i} = sum_jl b_j d_ji^l f_l
            bx = np.array([bj(x) for bj in b])
            ax_p = ax + np.einsum("j,jil->il", bx, d)
            a1p = max(a1p, max(abs(bracket(P1, H, f[i], x) - ax_p[i] @ fx) for i in range(k)))
            a2p = max(a2p, float(np.abs(dconst + rest @ x).max()))
            csym_p = max(csym_p, float(np.abs(sym - np.einsum("ilm,mj->ilj", d, ax)).max()))
            csym_t = max(csym_t, float(np.abs(sym - np.einsum("ilm,jm->ilj", d, ax)).max()))
        if on_coords:
            y = np.array(x, dtype=float)
            y[coords] = 0.0
            a1_on_set = max(a1_on_set, max(abs(bracket(P1, H, fi, y)) for fi in f))
    if a2 > involution_tol and not noncommutative:
        raise InvolutionFailed(f"relation functions fail to commute: {a2:.3e}")
    out = {
        "A1": float(a1),
        "A1_on_set": a1_on_set if on_coords else None,
        "A2": float(a2),
        "c_symmetry": float(csym),
        "a_fields": a,
        "points_tested": len(points),
    }
    if d is not None:
        out.update({
            "A1_A2prime": float(a1p),
            "A2_prime": a2p,
            "structure_constants": d,
            "c_symmetry_A2prime": csym_p,
            "c_symmetry_A2prime_transposed": csym_t,
        })
    return out


def bp_check(P1, P2, H: ScalarField, f: Sequence[ScalarField], points=None, seed: int = 42) -> dict:
    """Involution under P1, Casimir property under P2, and tangency on {f=0}."""
    if points is None:
        points = random_points(P1.dim, 100, seed)
    inv = max((abs(bracket(P1, f[i], f[j], x)) for x in points
               for i in range(len(f)) for j in range(i + 1, len(f))), default=0.0)
    cas = max(casimir_check(P2, fi, points) for fi in f)
    coords = [fi.coord for fi in f]
    tangent = 0.0
    for x in points:
        y = np.array(x, dtype=float)
        y[coords] = 0.0
        v = ham_vector_field(P1, H, y)
        tangent = max(tangent, float(np.abs(v[coords]).max()))
    return {"involution": inv, "casimir_second": cas, "tangency": tangent}


# ----------------------------------------------------- bridges to the models


def point_to_state(spec: SystemSpec, x):
    x = np.asarray(x)
    if spec.vector_inertia:
        return hat(x[:3]), hat(x[3:])
    N = spec.n * (spec.n - 1) // 2
    return from_coords(x[:N], spec.n), from_coords(x[N:], spec.n)


def state_to_point(spec: SystemSpec, state) -> np.ndarray:
    M, G = (state.M, state.Gamma) if isinstance(state, PhaseState) else state
    if spec.vector_inertia:
        return np.concatenate([unhat(M), unhat(G)])
    return np.concatenate([to_coords(M), to_coords(G)])


def hamiltonian_field(spec: SystemSpec, which: str = "H_first") -> ScalarField:
    return ScalarField(lambda x: float(hamiltonian(spec, point_to_state(spec, x), which)),
                       name=f"{spec.kind.value}:{which}")


def standard_structure(spec: SystemSpec) -> PoissonStructure:
    return e3_standard() if spec.vector_inertia else so_standard(spec.n)


def relation_fields(spec: SystemSpec):
    """(base energy, b_j fields, f_j coordinate fields) for the HP split."""
    base, fnames, bfuncs = perturbation_split(spec)
    dim = 6 if spec.vector_inertia else spec.n * (spec.n - 1)
    names = ("M1", "M2", "M3") if spec.vector_inertia else tuple(pair_labels(spec.n, "M"))
    f = [coordinate(names.index(nm), dim, nm) for nm in fnames]
    b = [ScalarField(lambda x, bf=bf: float(bf(*point_to_state(spec, x))), name=f"b_{nm}")
         for bf, nm in zip(bfuncs, fnames)]
    return hamiltonian_field(base), b, f


def casimir_fields(kind: str, n: int = 4) -> dict[str, ScalarField]:
    """Casimir functions claimed for each structure, as scalar fields."""
    from .lax import LaxPolynomial, spectral_coeffs

    if kind == "e3_second":
        return {
            "|G|^2": ScalarField(lambda x: x[3] ** 2 + x[4] ** 2 + x[5] ** 2),
            "M3": coordinate(2, 6, "M3"),
        }
    N = n * (n - 1) // 2
    lab = {nm: k for k, nm in enumerate(_names(n))}
    trG = {
        f"tr(G^{2 * k})": ScalarField(
            lambda x, k=k: float(np.trace(np.linalg.matrix_power(from_coords(x[N:], n), 2 * k)))
        )
        for k in range(1, n // 2 + 1)
    }
    if kind == "standard":
        out = dict(trG)
        for k in range(0, (n - 1) // 2 + 1):
            out[f"tr(M G^{2 * k + 1})"] = ScalarField(
                lambda x, k=k: float(np.trace(from_coords(x[:N], n)
                                              @ np.linalg.matrix_power(from_coords(x[N:], n), 2 * k + 1)))
            )
        if n == 4:
            zero = np.zeros((4, 4))
            for name in ("d", "e", "i", "j"):
                out[name] = ScalarField(
                    lambda x, name=name: float(getattr(
                        spectral_coeffs(LaxPolynomial(zero, from_coords(x[:6], 4), from_coords(x[6:], 4))), name))
                )
        return out
    if kind == "bitop":
        return {
            "M12": coordinate(lab["M12"], 2 * N, "M12"),
            "M34": coordinate(lab["M34"], 2 * N, "M34"),
            "sum G^2": ScalarField(lambda x: float(np.sum(x[N:] ** 2))),
            "G12G34+G23G14-G13G24": ScalarField(
                lambda x: x[lab["G12"]] * x[lab["G34"]] + x[lab["G23"]] * x[lab["G14"]]
                - x[lab["G13"]] * x[lab["G24"]]
            ),
        }
    if kind == "lagrange":
        out = {"M12": coordinate(lab["M12"], 2 * N, "M12")}
        for p, q in pairs(n):
            if p >= 2:
                nm = f"M{p + 1}{q + 1}"
                out[nm] = coordinate(lab[nm], 2 * N, nm)
        out.update(trG)
        return out
    raise ValueError(f"unknown structure {kind!r}")
