"""Closed-form DoF expressions, bounds and the 3-user region program.

Everything here is exact: inputs are coerced to ``Fraction`` and results
are ``Fraction`` values or tuples of them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ActiveSetViolationError


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


@dataclass(frozen=True)
class DofPoint:
    d: tuple[Fraction, ...]

    def __post_init__(self):
        d = tuple(_frac(x) for x in self.d)
        for x in d:
            if not 0 <= x <= 1:
                raise ValueError(f"per-user DoF {x} outside [0, 1]")
        object.__setattr__(self, "d", d)

    @property
    def sum(self) -> Fraction:
        return sum(self.d, Fraction(0))

    def __iter__(self):
        return iter(self.d)

    def __getitem__(self, i):
        return self.d[i]


@dataclass(frozen=True)
class RegionSpec:
    """Per-user fractions of slots with perfect CSIT."""

    gammas: tuple[Fraction, ...]

    def __post_init__(self):
        g = tuple(_frac(x) for x in self.gammas)
        if not g:
            raise ValueError("need at least one user")
        for x in g:
            if not 0 <= x <= 1:
                raise ValueError(f"gamma {x} outside [0, 1]")
        object.__setattr__(self, "gammas", g)

    @property
    def K(self) -> int:
        return len(self.gammas)


def achievable_dof(K: int) -> Fraction:
    """Sum DoF K^2 / (2K - 1) of the two-phase scheme."""
    if K < 1:
        raise ValueError("K must be positive")
    return Fraction(K * K, 2 * K - 1)


def theorem1_distribution(K: int) -> tuple[Fraction, Fraction, Fraction]:
    """(lambda_P, lambda_D, lambda_N) consumed by the scheme for K users."""
    if K < 2:
        raise ValueError("K must be at least 2")
    return (Fraction((K - 1) ** 2, 2 * K * K - K),
            Fraction(K - 1, 2 * K - 1),
            Fraction(1, K))


def harmonic(K: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, K + 1)), Fraction(0))


def mat_dof(K: int) -> Fraction:
    """Sum DoF K / (1 + 1/2 + ... + 1/K) with delayed CSIT from every user."""
    if K < 1:
        raise ValueError("K must be positive")
    return K / harmonic(K)


def tandon_bound(M: int, K: int) -> Fraction:
    """Sum-DoF bound for M antennas, K users, perfect-CSIT fraction min(M,K)/K."""
    if M < 1 or K < 1:
        raise ValueError("M and K must be positive")
    mk = min(M, K)
    lam = Fraction(mk, K)
    return K * (M + (mk - 1) * lam) / (M + K - 1)


def upper_bound_total(spec: RegionSpec) -> Fraction:
    """Sum of the K weighted-sum outer-bound inequalities, divided by 2K - 1."""
    K = spec.K
    return (K * K + (K - 1) * sum(spec.gammas, Fraction(0))) / (2 * K - 1)


def scheme_gammas(K: int) -> tuple[Fraction, ...]:
    """Per-user perfect-CSIT fractions of the scheme's pattern.

    User 1 is perfect in all K-1 phase-2 slots, the others in K-2.
    """
    if K < 1:
        raise ValueError("K must be positive")
    first = Fraction(K - 1, 2 * K - 1)
    rest = Fraction(max(K - 2, 0), 2 * K - 1)
    return (first,) + (rest,) * (K - 1)


# -- 3-user region ----------------------------------------------------------

REGION_A = (
    (3, 1, 1), (1, 3, 1), (1, 1, 3),
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (-1, 0, 0), (0, -1, 0), (0, 0, -1),
)


def region_rhs(gammas) -> tuple[Fraction, ...]:
    g = RegionSpec(tuple(gammas)).gammas
    if len(g) != 3:
        raise ValueError("the region program is defined for three users")
    return tuple(3 + 2 * x for x in g) + (Fraction(1),) * 3 + (Fraction(0),) * 3


def _det3(m) -> int:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _adj3(m) -> list[list[int]]:
    cof = [[0] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            minor = [[m[i][j] for j in range(3) if j != c] for i in range(3) if i != r]
            cof[r][c] = (-1) ** (r + c) * (minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0])
    return [[cof[c][r] for c in range(3)] for r in range(3)]


@lru_cache(maxsize=8)
def _active_sets(A: tuple):
    """Nonsingular 3-row subsets of ``A``.

    Returns row indices, integer adjugates, determinants, the lcm of the
    determinants and, per subset, lcm // det.
    """
    idx, adjs, dets = [], [], []
    for rows in itertools.combinations(range(len(A)), 3):
        m = [A[r] for r in rows]
        det = _det3(m)
        if det != 0:
            idx.append(rows)
            adjs.append(_adj3(m))
            dets.append(det)
    common = math.lcm(*(abs(d) for d in dets)) if dets else 1
    factor = [common // d for d in dets]
    return (np.array(idx), np.array(adjs, dtype=np.int64), np.array(dets, dtype=np.int64),
            common, np.array(factor, dtype=np.int64))


def _vertex_numerators(A, b) -> tuple[np.ndarray, int]:
    """Integer matrix V and denominator L with vertices ``V / L``."""
    A = tuple(tuple(int(v) for v in row) for row in A)
    b = [_frac(v) for v in b]
    idx, adj, det, common, factor = _active_sets(A)
    if len(idx) == 0:
        return np.zeros((0, 3), dtype=np.int64), 1
    scale = math.lcm(*(v.denominator for v in b))
    b_int = [v.numerator * (scale // v.denominator) for v in b]
    bound = max(1, max(abs(v) for v in b_int)) * common * 64 * max(1, int(np.abs(adj).max()))
    dtype = np.int64 if bound < 2**40 else object
    b_arr = np.array(b_int, dtype=dtype)
    A_arr = np.array(A, dtype=dtype)
    adj = adj.astype(dtype)
    det = det.astype(dtype)
    factor = factor.astype(dtype)
    # vertex = adj @ b_sub / (det * scale), kept as integer numerators
    num = np.einsum("tij,tj->ti", adj, b_arr[idx])
    slack = det[:, None] * b_arr[None, :] - num @ A_arr.T
    sign = np.where(det > 0, 1, -1).astype(dtype)
    feasible = np.all(sign[:, None] * slack >= 0, axis=1)
    V = num[feasible] * factor[feasible][:, None]
    return V, common * scale


def polytope_vertices(A, b) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Vertices of {x in R^3 : A x <= b} for integer ``A``, rational ``b``.

    Every nonsingular triple of constraints is made active and solved
    exactly; solutions violating any constraint are dropped.
    """
    V, L = _vertex_numerators(A, b)
    rows = {tuple(int(v) for v in row) for row in V}
    return sorted(tuple(Fraction(v, L) for v in row) for row in rows)


def region_vertices(g1, g2, g3) -> list[DofPoint]:
    """All corner points of the 3-user outer-bound region."""
    return [DofPoint(v) for v in polytope_vertices(REGION_A, region_rhs((g1, g2, g3)))]


def dof_region_lp(g1, g2, g3) -> DofPoint:
    """Maximize d1 + d2 + d3 over the 3-user outer-bound region.

    Ties between optimal vertices go to the lexicographically largest one.
    """
    V, L = _vertex_numerators(REGION_A, region_rhs((g1, g2, g3)))
    # all vertices share denominator L, so integer comparisons are exact
    best = max((tuple(int(v) for v in row) for row in V), key=lambda v: (sum(v), v))
    return DofPoint(tuple(Fraction(v, L) for v in best))


def closed_form_region(g1, g2, g3) -> DofPoint:
    """Sum-optimal point when the three weighted-sum constraints are all tight.

    Raises
    ------
    ActiveSetViolationError
        If the point leaves the unit box; use :func:`dof_region_lp` then.
    """
    g = RegionSpec((g1, g2, g3)).gammas
    total = sum(g, Fraction(0))
    d = tuple((3 + 4 * gi - (total - gi)) / 5 for gi in g)
    for i, x in enumerate(d):
        if not 0 <= x <= 1:
            raise ActiveSetViolationError(f"d_{i + 1} = {x} is outside [0, 1]")
    return DofPoint(d)


def format_fraction(x) -> str:
    """``p/q`` text of a rational; integers print without a denominator."""
    return str(_frac(x))
