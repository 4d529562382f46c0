"""Small-dimension skew-symmetric matrix algebra on so(n).

Skew matrices are plain ``numpy`` arrays.  Every constructor here enforces
exact skewness, so downstream code can rely on ``a.T == -a`` bit for bit.

The coordinate order used across the package is the lexicographic list of
upper-triangle pairs ``(i, j)``, ``i < j`` (0-based in code, 1-based in names
such as ``"M13"``).
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "DimensionError",
    "Vec3Pair",
    "pairs",
    "pair_labels",
    "skew",
    "from_coords",
    "to_coords",
    "elementary",
    "commutator",
    "hat",
    "unhat",
    "split_so4",
    "join_so4",
    "inertia_map",
    "pair_inner",
]


class DimensionError(ValueError):
    """Operands have incompatible or unsupported dimensions."""


class Vec3Pair(NamedTuple):
    plus: np.ndarray
    minus: np.ndarray


@lru_cache(maxsize=None)
def pairs(n: int) -> tuple[tuple[int, int], ...]:
    """Upper-triangle index pairs of an n×n matrix in lexicographic order."""
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def pair_labels(n: int, prefix: str) -> list[str]:
    return [f"{prefix}{i + 1}{j + 1}" for i, j in pairs(n)]


def skew(a) -> np.ndarray:
    """Return ``a`` as an exactly skew matrix, or raise if it is not skew.

    The strictly-upper triangle is taken as authoritative and mirrored, after
    checking that the lower triangle agrees to rounding level.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a + a.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not skew-symmetric")
    upper = np.triu(a, 1)
    return upper - upper.T


def from_coords(v, n: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != n * (n - 1) // 2:
        raise DimensionError(f"{v.shape[-1]} coordinates do not fit so({n})")
    m = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    iu = np.triu_indices(n, 1)
    m[..., iu[0], iu[1]] = v
    m[..., iu[1], iu[0]] = -v
    return m


def to_coords(m) -> np.ndarray:
    m = np.asarray(m)
    n = m.shape[-1]
    iu = np.triu_indices(n, 1)
    return m[..., iu[0], iu[1]]


def elementary(n: int, i: int, j: int) -> np.ndarray:
    """E_ij with +1 at (i, j) and -1 at (j, i); indices are 1-based."""
    e = np.zeros((n, n))
    e[i - 1, j - 1] = 1.0
    e[j - 1, i - 1] = -1.0
    return e


def _same_dim(*ms) -> None:
    shapes = {np.shape(m) for m in ms}
    if len(shapes) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(shapes)}")


def commutator(a, b) -> np.ndarray:
    _same_dim(a, b)
    return a @ b - b @ a


def hat(v) -> np.ndarray:
    """so(3) matrix with ``hat(v) @ x == cross(v, x)``."""
    v = np.asarray(v)
    if v.shape != (3,):
        raise DimensionError("hat expects a 3-vector")
    return np.array(
        [[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]], dtype=v.dtype
    )


def unhat(m) -> np.ndarray:
    m = np.asarray(m)
    if m.shape != (3, 3):
        raise DimensionError("unhat expects a 3×3 matrix")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def split_so4(m) -> Vec3Pair:
    """Decompose an so(4) matrix into the pair (M+, M-) of 3-vectors.

    Layout::

        [[0,    -p3,  p2, -q1],
         [p3,    0,  -p1, -q2],
         [-p2,  p1,   0,  -q3],
         [q1,   q2,  q3,   0 ]]
    """
    m = np.asarray(m)
    if m.shape != (4, 4):
        raise DimensionError("split_so4 expects a 4×4 matrix")
    plus = np.array([-m[1, 2], m[0, 2], -m[0, 1]])
    minus = np.array([-m[0, 3], -m[1, 3], -m[2, 3]])
    return Vec3Pair(plus, minus)


def join_so4(p: Vec3Pair) -> np.ndarray:
    plus, minus = (np.asarray(x) for x in p)
    if plus.shape != (3,) or minus.shape != (3,):
        raise DimensionError("join_so4 expects two 3-vectors")
    dtype = np.result_type(plus, minus)
    m = np.zeros((4, 4), dtype=dtype)
    m[:3, :3] = hat(plus)
    m[:3, 3] = -minus
    m[3, :3] = minus
    return m


def inertia_map(J, m) -> np.ndarray:
    """Omega = J M + M J."""
    _same_dim(J, m)
    return J @ m + m @ J


def pair_inner(a, b):
    """Sum over i<j of a_ij b_ij (half the Frobenius pairing of skew matrices)."""
    _same_dim(a, b)
    return 0.5 * np.sum(a * b)
