"""Finite-set and arc models of the hyperspaces K(X) and C(X).

Elements of K(X) are represented by finite sets (dense in the Hausdorff
metric); elements of C(X) by closed arcs.  Images under the induced map are
computed pointwise for finite sets and through endpoints for arcs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .parallel import chunked_rows
from .systems import CIRCLE, INTERVAL, SPACES, DynSystem, SystemError_, metric, normalize, orbit

SET_TOL = 1e-12
DEFAULT_NET_CAP = 100_000


class HyperspaceError(ValueError):
    pass


@dataclass(frozen=True)
class FinitePoint:
    """A nonempty finite subset of the phase space, sorted and de-duplicated."""

    values: tuple
    space: str = CIRCLE

    @classmethod
    def of(cls, values, space: str = CIRCLE) -> "FinitePoint":
        if space not in SPACES:
            raise HyperspaceError(f"unknown space {space!r}")
        v = np.sort(normalize(space, np.atleast_1d(np.asarray(values, dtype=float))).ravel())
        if v.size == 0:
            raise HyperspaceError("a FinitePoint must be nonempty")
        keep = np.ones(v.size, dtype=bool)
        keep[1:] = np.diff(v) > SET_TOL
        v = v[keep]
        if space == CIRCLE and v.size > 1 and v[0] + 1.0 - v[-1] <= SET_TOL:
            v = v[:-1]
        return cls(tuple(float(x) for x in v), space)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __len__(self):
        return len(self.values)

    def to_list(self) -> list:
        return list(self.values)


@dataclass(frozen=True)
class ArcPoint:
    """Closed arc from ``a`` counterclockwise to ``b`` (interval: a <= b)."""

    a: float
    b: float
    space: str = CIRCLE

    def __post_init__(self):
        if self.space not in SPACES:
            raise HyperspaceError(f"unknown space {self.space!r}")
        if self.space == INTERVAL:
            if not 0.0 <= self.a <= self.b <= 1.0:
                raise HyperspaceError(f"interval arc needs 0 <= a <= b <= 1, got [{self.a}, {self.b}]")
        elif not (0.0 <= self.a < 1.0 and 0.0 <= self.b < 1.0):
            raise HyperspaceError(f"circle arc endpoints must lie in [0, 1), got ({self.a}, {self.b})")

    @classmethod
    def of(cls, a, b, space: str = CIRCLE) -> "ArcPoint":
        a, b = float(normalize(space, a)), float(normalize(space, b))
        if space == INTERVAL and a > b:
            a, b = b, a
        return cls(a, b, space)

    @property
    def length(self) -> float:
        if self.space == INTERVAL:
            return self.b - self.a
        return (self.b - self.a) % 1.0

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.space == INTERVAL:
            return (x >= self.a) & (x <= self.b)
        return (x - self.a) % 1.0 <= self.length

    def sample(self, n: int) -> FinitePoint:
        t = np.linspace(0.0, 1.0, n)
        return FinitePoint.of(self.a + t * self.length, self.space)

    def to_list(self) -> list:
        return [self.a, self.b]


def _check_space(A, B):
    if A.space != B.space:
        raise HyperspaceError(f"space mismatch: {A.space} vs {B.space}")


def directed_hausdorff(a: np.ndarray, b: np.ndarray, space: str) -> float:
    """max over a of the distance to the nearest point of b."""
    d = metric(space)(a[:, None], b[None, :])
    return float(d.min(axis=1).max())


def hausdorff(A: FinitePoint, B: FinitePoint) -> float:
    _check_space(A, B)
    a, b = A.array, B.array
    d = metric(A.space)(a[:, None], b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _arc_point_dist(x: float, B: ArcPoint) -> float:
    if B.contains(x):
        return 0.0
    if B.space == INTERVAL:
        return min(abs(x - B.a), abs(x - B.b))
    gap = 1.0 - B.length
    t = (x - B.b) % 1.0
    return min(t, gap - t)


def _arc_directed(A: ArcPoint, B: ArcPoint) -> float:
    # x -> d(x, B) is piecewise linear on A with its only interior peak at
    # the midpoint of the gap of B, so endpoints plus that midpoint suffice.
    cands = [A.a, A.b]
    mid = (B.b + 0.5 * (1.0 - B.length)) % 1.0
    if A.contains(mid):
        cands.append(mid)
    return max(_arc_point_dist(x, B) for x in cands)


def hausdorff_arcs(A: ArcPoint, B: ArcPoint) -> float:
    _check_space(A, B)
    if A.space == INTERVAL:
        return max(abs(A.a - B.a), abs(A.b - B.b))
    return max(_arc_directed(A, B), _arc_directed(B, A))


def induced_apply(sys: DynSystem, A: FinitePoint) -> FinitePoint:
    if A.space != sys.space:
        raise HyperspaceError("set and system live in different spaces")
    return FinitePoint.of(sys.forward(A.array), sys.space)


def induced_apply_arc(sys: DynSystem, A: ArcPoint) -> ArcPoint:
    if A.space != sys.space:
        raise HyperspaceError("arc and system live in different spaces")
    if not sys.invertible:
        raise HyperspaceError(f"{sys.name} is not a homeomorphism; arc images are not arcs")
    fa, fb = (float(v) for v in sys.forward(np.array([A.a, A.b])))
    if A.space == INTERVAL:
        return ArcPoint.of(min(fa, fb), max(fa, fb), INTERVAL)
    if A.a == A.b:
        return ArcPoint.of(fa, fa)
    if sys.degree == 1:
        return ArcPoint.of(fa, fb)
    return ArcPoint.of(fb, fa)


def arc_iterate(sys: DynSystem, A: ArcPoint, n: int) -> ArcPoint:
    """Image of an arc under T^n for a homeomorphism (n may be negative)."""
    if not sys.invertible:
        raise HyperspaceError(f"{sys.name} is not a homeomorphism")
    step = sys.forward if n >= 0 else sys.inverse
    a, b = float(A.a), float(A.b)
    deg = sys.degree or 1
    for _ in range(abs(n)):
        a, b = (float(v) for v in step(np.array([a, b])))
        if deg == -1:
            a, b = b, a
    if A.space == INTERVAL:
        return ArcPoint.of(min(a, b), max(a, b), INTERVAL)
    if A.a == A.b:
        return ArcPoint.of(a, a)
    return ArcPoint.of(a, b)


def induced_dyn_distance(sys: DynSystem, A: FinitePoint, B: FinitePoint, k: int) -> float:
    """D_k(A, B) = max_{i<k} d_H(T^i A, T^i B)."""
    if k < 1:
        raise HyperspaceError("k must be >= 1")
    _check_space(A, B)
    oa, ob = orbit(sys, A.array, k), orbit(sys, B.array, k)
    d = metric(sys.space)
    best = 0.0
    for i in range(k):
        m = d(oa[i][:, None], ob[i][None, :])
        best = max(best, m.min(axis=1).max(), m.min(axis=0).max())
    return float(best)


def induced_dyn_distance_arcs(sys: DynSystem, A: ArcPoint, B: ArcPoint, k: int) -> float:
    if k < 1:
        raise HyperspaceError("k must be >= 1")
    best = 0.0
    for _ in range(k):
        best = max(best, hausdorff_arcs(A, B))
        A, B = induced_apply_arc(sys, A), induced_apply_arc(sys, B)
    return best


def in_dyn_ball(sys: DynSystem, center: FinitePoint, C: FinitePoint, k: int, eps: float) -> bool:
    """True iff D_k(center, C) < eps."""
    if eps <= 0:
        raise HyperspaceError("eps must be positive")
    return induced_dyn_distance(sys, center, C, k) < eps


def dyn_ball_conditions(sys: DynSystem, marks: FinitePoint, C: FinitePoint, k: int, eps: float):
    """Decomposed ball test around marked points.

    Returns (coverage, meeting): every c in C lies in some (k, eps)-ball of a
    mark, and every mark's (k, eps)-ball meets C.  Both together imply
    D_k(marks, C) < eps; for a single mark the converse holds as well.
    """
    dk = _pair_dk(sys, marks.array, C.array, k)  # (marks, C)
    coverage = bool((dk.min(axis=0) < eps).all())
    meeting = bool((dk.min(axis=1) < eps).all())
    return coverage, meeting


def _pair_dk(sys, a, b, k):
    oa, ob = orbit(sys, a, k), orbit(sys, b, k)
    return metric(sys.space)(oa[:, :, None], ob[:, None, :]).max(axis=0)


# --------------------------------------------------------------------------
# pools of finite sets


def pad_sets(sets: Sequence[FinitePoint]) -> np.ndarray:
    """(F, m) array with sorted rows; short sets repeat their last point,
    which leaves every Hausdorff distance unchanged."""
    m = max(len(s) for s in sets)
    out = np.empty((len(sets), m))
    for i, s in enumerate(sets):
        v = s.array
        out[i, : v.size] = v
        out[i, v.size :] = v[-1]
    return out


def _extend_rows(Q: np.ndarray, space: str) -> np.ndarray:
    """Bracket each sorted row with sentinels so every query in [0, 1] has a
    left and a right neighbour in its own row.  On the circle the sentinels
    are the wrapped neighbours; on the interval they are too far to matter."""
    if space == CIRCLE:
        return np.hstack([Q[:, -1:] - 1.0, Q, Q[:, :1] + 1.0])
    G = Q.shape[0]
    return np.hstack([np.full((G, 1), -2.0), Q, np.full((G, 1), 3.0)])


def _directed_rows(P: np.ndarray, Q: np.ndarray, space: str, workers=None) -> np.ndarray:
    """H[i, j] = max_{p in P_i} min_{q in Q_j} d(p, q) for sorted rows of Q.

    Rows of Q are shifted apart by multiples of 8 so a single searchsorted
    finds, for every p and every row j, the neighbours bracketing p in Q_j.
    Distances are then taken with the metric against the unshifted values, so
    the shift's rounding can only swap which bracket side a near-tie lands on.
    """
    G = Q.shape[0]
    ext = _extend_rows(Q, space)
    off = 8.0 * np.arange(G)
    flat = (ext + off[:, None]).ravel()
    if space == CIRCLE:
        vals = np.hstack([Q[:, -1:], Q, Q[:, :1]]).ravel()
    else:
        vals = ext.ravel()
    d = metric(space)
    w = ext.shape[1]
    base = (w * np.arange(G))[None, :, None]

    def rows(lo, hi):
        p = P[lo:hi, None, :]
        idx = np.searchsorted(flat, p + off[None, :, None], side="right")
        idx = np.clip(idx, base + 1, base + w - 1)
        return np.minimum(d(p, vals[idx - 1]), d(p, vals[idx])).max(axis=2)

    m = P.shape[1]
    return chunked_rows(rows, P.shape[0], width=G, workers=workers, max_cells=max(1, 4_000_000 // m))


def cross_hausdorff_arrays(P: np.ndarray, Q: np.ndarray, space: str, *, workers=None) -> np.ndarray:
    """Hausdorff distances between padded set arrays P (F, m) and Q (G, n).

    Rows of both arrays must be sorted ascending (as pad_sets produces).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P is Q or (P.shape == Q.shape and np.array_equal(P, Q)):
        H = _directed_rows(P, P, space, workers)
        return np.maximum(H, H.T)
    return np.maximum(_directed_rows(P, Q, space, workers), _directed_rows(Q, P, space, workers).T)


def pairwise_hausdorff_arrays(P: np.ndarray, space: str, *, workers=None) -> np.ndarray:
    return cross_hausdorff_arrays(P, P, space, workers=workers)


def hyper_dyn_levels(sys: DynSystem, sets: Sequence[FinitePoint], others=None, *, workers=None):
    """Yield the level-i Hausdorff matrices d_H(T^i A, T^i B), i = 0, 1, ...

    Running maxima of these are the D_k matrices for k = 1, 2, ...
    """
    P = pad_sets(sets)
    Q = P if others is None else pad_sets(others)
    while True:
        yield cross_hausdorff_arrays(P, Q, sys.space, workers=workers)
        P = np.sort(sys.forward(P), axis=1)
        Q = P if others is None else np.sort(sys.forward(Q), axis=1)


def hyper_dyn_distance_matrix(sys: DynSystem, sets: Sequence[FinitePoint], k: int, others=None, *, workers=None) -> np.ndarray:
    """Pairwise D_k over a family of finite sets (or between two families)."""
    if k < 1:
        raise HyperspaceError("k must be >= 1")
    out = None
    for i, D in enumerate(hyper_dyn_levels(sys, sets, others, workers=workers)):
        out = D if out is None else np.maximum(out, D)
        if i + 1 == k:
            return out


def arc_levels(sys: DynSystem, arcs: Sequence[ArcPoint], others=None):
    """Level-i Hausdorff matrices between arc families under the induced map."""
    A = list(arcs)
    B = A if others is None else list(others)
    while True:
        yield np.array([[hausdorff_arcs(a, b) for b in B] for a in A]).reshape(len(A), len(B))
        A = [induced_apply_arc(sys, a) for a in A]
        B = A if others is None else [induced_apply_arc(sys, b) for b in B]


def arc_dyn_distance_matrix(sys: DynSystem, arcs: Sequence[ArcPoint], k: int, others=None) -> np.ndarray:
    if k < 1:
        raise HyperspaceError("k must be >= 1")
    out = None
    for i, D in enumerate(arc_levels(sys, arcs, others)):
        out = D if out is None else np.maximum(out, D)
        if i + 1 == k:
            return out


def hyper_net_size(grid: int, max_card: int) -> int:
    return sum(comb(grid, c) for c in range(1, min(max_card, grid) + 1))


def grid_points(space: str, grid: int) -> np.ndarray:
    """Uniform grid: j/grid on the circle, cell midpoints on the interval."""
    j = np.arange(grid, dtype=float)
    return j / grid if space == CIRCLE else (j + 0.5) / grid


def hyper_net(space: str, grid: int, max_card: int, cap: int = DEFAULT_NET_CAP) -> list:
    """All grid subsets of cardinality <= max_card, by size then lexicographic."""
    if grid < 2 or max_card < 1:
        raise HyperspaceError("grid must be >= 2 and max_card >= 1")
    size = hyper_net_size(grid, max_card)
    if size > cap:
        raise HyperspaceError(f"hyper_net would enumerate {size} sets, above the cap of {cap}")
    pts = grid_points(space, grid)
    out = []
    for c in range(1, min(max_card, grid) + 1):
        for idx in combinations(range(grid), c):
            out.append(FinitePoint.of(pts[list(idx)], space))
    return out


def arc_net(space: str, grid: int) -> list:
    """Arcs with endpoints on the uniform grid (singletons included)."""
    if grid < 2:
        raise HyperspaceError("grid must be >= 2")
    pts = grid_points(space, grid)
    out = []
    for i in range(grid):
        for j in range(grid):
            if space == INTERVAL and j < i:
                continue
            out.append(ArcPoint.of(pts[i], pts[j], space))
    return out
