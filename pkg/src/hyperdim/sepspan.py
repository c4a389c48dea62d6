"""Separated and spanning families, entropy and metric mean dimension estimates.

All counts are taken over explicit finite candidate pools, so Sep values are
lower bounds for the continuum quantity and Span values are upper bounds
relative to the chosen targets.

Separation is decided with a 1e-12 tie tolerance: a pair counts as
separated when D_k > eps - TIE_TOL, and a target counts as covered when
D_k < eps - TIE_TOL.  Grid pools produce many pairs at exactly eps up to
rounding, and without the tolerance the conflict graphs inherit arbitrary
floating-point noise.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import graphs
from .hyperspace import (
    ArcPoint,
    FinitePoint,
    HyperspaceError,
    arc_dyn_distance_matrix,
    arc_levels,
    arc_net,
    grid_points,
    hyper_dyn_distance_matrix,
    hyper_dyn_levels,
    hyper_net,
)
from .parallel import chunked_rows
from .systems import DynSystem, dyn_distance_matrix, metric, normalize

BASE = "base"
HYPER_FINITE = "hyper-finite"
HYPER_ARC = "hyper-arc"
SCOPES = (BASE, HYPER_FINITE, HYPER_ARC)
METHODS = ("exact", "greedy")

TIE_TOL = 1e-12
SEP_CAP = 2000
SPAN_CAP = 500


class SepSpanError(ValueError):
    pass


# --------------------------------------------------------------------------
# pools


def make_pool(scope: str, space: str, spec: dict):
    """Materialize a pool spec.

    Spec kinds: ``grid`` (n), ``hyper_net`` (grid, max_card[, cap]),
    ``arc_net`` (grid) and ``explicit`` (points).
    """
    if scope not in SCOPES:
        raise SepSpanError(f"unknown scope {scope!r}; expected one of {SCOPES}")
    kind = spec.get("kind")
    if kind == "grid":
        n = int(spec["n"])
        if n < 1:
            raise SepSpanError("grid size must be >= 1")
        pts = grid_points(space, n)
        if scope == BASE:
            return pts
        if scope == HYPER_FINITE:
            return [FinitePoint.of([p], space) for p in pts]
        return [ArcPoint.of(p, p, space) for p in pts]
    if kind == "hyper_net":
        if scope != HYPER_FINITE:
            raise SepSpanError("hyper_net pools belong to the hyper-finite scope")
        kw = {"cap": int(spec["cap"])} if "cap" in spec else {}
        return hyper_net(space, int(spec["grid"]), int(spec["max_card"]), **kw)
    if kind == "arc_net":
        if scope != HYPER_ARC:
            raise SepSpanError("arc_net pools belong to the hyper-arc scope")
        return arc_net(space, int(spec["grid"]))
    if kind == "explicit":
        pts = spec.get("points", [])
        if scope == BASE:
            return normalize(space, np.asarray(pts, dtype=float).ravel())
        if scope == HYPER_FINITE:
            return [FinitePoint.of(p, space) for p in pts]
        return [ArcPoint.of(a, b, space) for a, b in pts]
    raise SepSpanError(f"unknown pool kind {kind!r}")


def default_targets_spec(scope: str, pool_spec: dict) -> dict:
    """Targets default to a 4x finer grid for base grid pools, else the pool."""
    if scope == BASE and pool_spec.get("kind") == "grid":
        return {"kind": "grid", "n": 4 * int(pool_spec["n"])}
    return dict(pool_spec)


def pool_len(pool) -> int:
    return len(pool)


def serialize_point(p):
    if isinstance(p, FinitePoint):
        return p.to_list()
    if isinstance(p, ArcPoint):
        return p.to_list()
    return float(p)


# --------------------------------------------------------------------------
# distance matrices


def _base_levels(sys: DynSystem, a: np.ndarray, b: Optional[np.ndarray], workers=None):
    d = metric(sys.space)
    a = np.asarray(a, dtype=float)
    bb = a if b is None else np.asarray(b, dtype=float)
    while True:
        aa, cur_b = a, bb
        yield chunked_rows(lambda lo, hi: d(aa[lo:hi, None], cur_b[None, :]), len(a), width=len(bb), workers=workers)
        a = sys.forward(a)
        bb = a if b is None else sys.forward(bb)


def distance_levels(scope: str, sys: DynSystem, pool, others=None, *, workers=None):
    """Yield level-i distance matrices between pool and others (default pool)."""
    if scope == BASE:
        return _base_levels(sys, pool, others, workers)
    if scope == HYPER_FINITE:
        return hyper_dyn_levels(sys, pool, others, workers=workers)
    if scope == HYPER_ARC:
        return arc_levels(sys, pool, others)
    raise SepSpanError(f"unknown scope {scope!r}")


def dyn_matrices(scope: str, sys: DynSystem, pool, ks: Iterable[int], others=None, *, workers=None):
    """Yield (k, D_k matrix) for each requested k in increasing order.

    Running maxima are shared, so a whole k range costs max(ks) levels.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise SepSpanError("k values must be >= 1")
    want = set(ks)
    D = None
    for i, level in enumerate(distance_levels(scope, sys, pool, others, workers=workers)):
        D = level if D is None else np.maximum(D, level)
        if i + 1 in want:
            yield i + 1, D.copy()
        if i + 1 == ks[-1]:
            return


def dyn_matrix(scope: str, sys: DynSystem, pool, k: int, others=None, *, workers=None) -> np.ndarray:
    for _, D in dyn_matrices(scope, sys, pool, [k], others, workers=workers):
        return D


def _recheck_matrix(scope, sys, fam, k, others=None):
    """Independent recomputation on the chosen members only."""
    if scope == BASE:
        fam = np.asarray(fam, dtype=float)
        if others is None:
            return dyn_distance_matrix(sys, fam, k)
        oa = _orbit_stack(sys, fam, k)
        ob = _orbit_stack(sys, np.asarray(others, dtype=float), k)
        return metric(sys.space)(oa[:, :, None], ob[:, None, :]).max(axis=0)
    if scope == HYPER_FINITE:
        return hyper_dyn_distance_matrix(sys, fam, k, others)
    return arc_dyn_distance_matrix(sys, fam, k, others)


def _orbit_stack(sys, x, k):
    out = np.empty((k,) + x.shape)
    for i in range(k):
        out[i] = x
        x = sys.forward(x)
    return out


# --------------------------------------------------------------------------
# results


@dataclass
class SepSpanResult:
    mode: str
    scope: str
    k: int
    eps: float
    family: list
    indices: list
    method: str
    certified: bool
    min_distance: float
    pool_size: int
    pool_spec: Optional[dict] = None
    targets_spec: Optional[dict] = None

    @property
    def cardinality(self) -> int:
        return len(self.family)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "scope": self.scope,
            "k": self.k,
            "eps": self.eps,
            "cardinality": self.cardinality,
            "method": self.method,
            "certified": self.certified,
            "min_distance" if self.mode == "separated" else "max_target_distance": self.min_distance,
            "indices": list(self.indices),
            "family": [serialize_point(p) for p in self.family],
            "pool_size": self.pool_size,
            "pool_spec": self.pool_spec,
            "targets_spec": self.targets_spec,
        }


def _check_common(scope, pool, k, eps, method):
    if scope not in SCOPES:
        raise SepSpanError(f"unknown scope {scope!r}; expected one of {SCOPES}")
    if method not in METHODS:
        raise SepSpanError(f"unknown method {method!r}; expected one of {METHODS}")
    if len(pool) == 0:
        raise SepSpanError("candidate pool is empty")
    if k < 1:
        raise SepSpanError("k must be >= 1")
    if not eps > 0:
        raise SepSpanError("eps must be positive")


def conflict_graph(D: np.ndarray, eps: float) -> np.ndarray:
    """Pairs too close to be separated (diagonal included)."""
    return D <= eps - TIE_TOL


def coverage_matrix(D: np.ndarray, eps: float) -> np.ndarray:
    return D < eps - TIE_TOL


def separated_indices(D: np.ndarray, eps: float, method: str, node_limit: int = 5_000_000) -> list:
    c = conflict_graph(D, eps)
    if method == "greedy":
        return graphs.greedy_independent(c)
    return graphs.max_independent_set(c, node_limit=node_limit)


def _pick(pool, idx):
    if isinstance(pool, np.ndarray):
        return pool[np.asarray(idx, dtype=int)]
    return [pool[i] for i in idx]


def max_separated(
    scope: str,
    sys: DynSystem,
    pool,
    k: int,
    eps: float,
    method: str = "greedy",
    *,
    cap: int = SEP_CAP,
    workers=None,
    pool_spec: Optional[dict] = None,
    node_limit: int = 5_000_000,
    D: Optional[np.ndarray] = None,
) -> SepSpanResult:
    """Maximal (greedy) or maximum (exact) (k, eps)-separated subfamily of pool."""
    _check_common(scope, pool, k, eps, method)
    n = len(pool)
    if method == "exact" and n > cap:
        raise SepSpanError(f"pool of {n} exceeds the exact-search cap of {cap}; use method='greedy'")
    if D is None:
        D = dyn_matrix(scope, sys, pool, k, workers=workers)
    idx = separated_indices(D, eps, method, node_limit)
    fam = _pick(pool, idx)
    # re-verify from scratch on the chosen members
    if len(idx) > 1:
        R = _recheck_matrix(scope, sys, fam, k)
        np.fill_diagonal(R, np.inf)
        mind = float(R.min())
    else:
        mind = float("inf")
    certified = mind > eps - TIE_TOL
    if not certified:
        raise SepSpanError(f"separation re-check failed: min pairwise D_k {mind} < eps {eps}")
    return SepSpanResult(
        "separated", scope, int(k), float(eps), list(fam), [int(i) for i in idx], method,
        certified, mind, n, pool_spec,
    )


def min_spanning(
    scope: str,
    sys: DynSystem,
    pool,
    targets,
    k: int,
    eps: float,
    method: str = "greedy",
    *,
    cap: int = SPAN_CAP,
    workers=None,
    pool_spec: Optional[dict] = None,
    targets_spec: Optional[dict] = None,
    node_limit: int = 2_000_000,
    D: Optional[np.ndarray] = None,
) -> SepSpanResult:
    """Family from pool whose open (k, eps)-balls cover every target."""
    _check_common(scope, pool, k, eps, method)
    n = len(pool)
    if method == "exact" and n > cap:
        raise SepSpanError(f"pool of {n} exceeds the exact set-cover cap of {cap}; use method='greedy'")
    if len(targets) == 0:
        raise SepSpanError("target set is empty")
    if D is None:
        D = dyn_matrix(scope, sys, pool, k, targets, workers=workers)
    cover = coverage_matrix(D, eps)
    try:
        idx = graphs.greedy_cover(cover) if method == "greedy" else graphs.min_set_cover(cover, node_limit)
    except graphs.SearchError as exc:
        msg = str(exc)
        if "not covered" in msg:
            t = int(msg.split()[1])
            raise SepSpanError(f"infeasible: target {t} ({serialize_point(targets[t])}) is not coverable") from exc
        raise SepSpanError(msg) from exc
    idx = sorted(idx) if method == "exact" else idx
    fam = _pick(pool, idx)
    R = _recheck_matrix(scope, sys, fam, k, targets)
    worst = float(R.min(axis=0).max())
    certified = worst < eps - TIE_TOL
    if not certified:
        raise SepSpanError(f"coverage re-check failed: some target at D_k {worst} >= eps {eps}")
    return SepSpanResult(
        "spanning", scope, int(k), float(eps), list(fam), [int(i) for i in idx], method,
        certified, worst, n, pool_spec, targets_spec,
    )


# --------------------------------------------------------------------------
# entropy and metric mean dimension


@dataclass
class EntropyFit:
    eps: float
    ks: list
    seps: list
    slope: float
    residual: float
    method: str

    @property
    def value(self) -> float:
        return max(0.0, self.slope)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "k_range": list(self.ks),
            "sep": list(self.seps),
            "slope": self.slope,
            "h_est": self.value,
            "residual": self.residual,
            "method": self.method,
        }


def fit_log_growth(ks: Sequence[int], seps: Sequence[int]):
    """Least-squares slope of log Sep against k and the RMS residual."""
    ks = np.asarray(ks, dtype=float)
    y = np.log(np.asarray(seps, dtype=float))
    if np.all(y == y[0]):
        return 0.0, 0.0
    slope, icpt = np.polyfit(ks, y, 1)
    res = y - (slope * ks + icpt)
    return float(slope), float(np.sqrt(np.mean(res**2)))


def _check_k_range(k_range) -> list:
    ks = [int(k) for k in k_range]
    if len(ks) < 3 or len(set(ks)) != len(ks):
        raise SepSpanError("k_range needs at least 3 distinct values")
    if min(ks) < 1:
        raise SepSpanError("k values must be >= 1")
    return sorted(ks)


def _auto_method(method, n, cap):
    if method == "auto":
        return "exact" if n <= cap else "greedy"
    if method not in METHODS:
        raise SepSpanError(f"unknown method {method!r}")
    if method == "exact" and n > cap:
        raise SepSpanError(f"pool of {n} exceeds the exact-search cap of {cap}; use method='greedy'")
    return method


def sep_table(scope, sys, pool, ks, eps_list, method="auto", *, cap=SEP_CAP, workers=None) -> dict:
    """Sep(k, eps) for every pair, sharing one distance matrix per k."""
    method = _auto_method(method, len(pool), cap)
    out = {}
    for k, D in dyn_matrices(scope, sys, pool, ks, workers=workers):
        for eps in eps_list:
            out[(k, float(eps))] = len(separated_indices(D, eps, method))
    return out, method


def entropy_fit(
    sys: DynSystem,
    eps: float,
    k_range,
    pool_spec: dict,
    *,
    scope: str = BASE,
    method: str = "auto",
    cap: int = SEP_CAP,
    workers=None,
) -> EntropyFit:
    ks = _check_k_range(k_range)
    if not eps > 0:
        raise SepSpanError("eps must be positive")
    pool = make_pool(scope, sys.space, pool_spec)
    table, used = sep_table(scope, sys, pool, ks, [eps], method, cap=cap, workers=workers)
    seps = [table[(k, float(eps))] for k in ks]
    slope, res = fit_log_growth(ks, seps)
    return EntropyFit(float(eps), ks, seps, slope, res, used)


def entropy_estimate(sys: DynSystem, eps: float, k_range, pool_spec: dict, **kw) -> float:
    """Slope of log Sep(T, k, eps) over k_range, clamped at 0."""
    return entropy_fit(sys, eps, k_range, pool_spec, **kw).value


@dataclass
class EntropyCurve:
    eps: list
    fits: list
    slope: float
    scope: str = BASE
    pool_spec: dict = field(default_factory=dict)

    @property
    def h(self) -> list:
        return [f.value for f in self.fits]

    @property
    def ratios(self) -> list:
        return [f.value / -math.log(e) for f, e in zip(self.fits, self.eps)]

    def rows(self) -> list:
        out = []
        for f, r in zip(self.fits, self.ratios):
            out.append(
                {
                    "eps": f.eps,
                    "h_est": f.value,
                    "slope_window": f"{f.ks[0]}-{f.ks[-1]}",
                    "residual": f.residual,
                    "ratio": r,
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "pool_spec": self.pool_spec,
            "eps": list(self.eps),
            "h_est": self.h,
            "ratios": self.ratios,
            "slope": self.slope,
            "fits": [f.to_dict() for f in self.fits],
        }


CURVE_COLUMNS = ["eps", "h_est", "slope_window", "residual", "ratio"]


def mmdim_estimate(
    sys: DynSystem,
    eps_grid,
    k_range,
    pool_spec: dict,
    *,
    scope: str = BASE,
    method: str = "auto",
    cap: int = SEP_CAP,
    workers=None,
) -> EntropyCurve:
    """Entropy estimates along a decreasing eps grid, with h/(-log eps) ratios.

    ``slope`` is the regression slope of the estimates against -log eps.
    """
    eps = [float(e) for e in eps_grid]
    if len(eps) < 4:
        raise SepSpanError("eps grid needs at least 4 points")
    if not all(0 < e < 1 for e in eps):
        raise SepSpanError("eps values must lie in (0, 1)")
    if not all(a > b for a, b in zip(eps, eps[1:])):
        raise SepSpanError("eps grid must be strictly decreasing")
    ks = _check_k_range(k_range)
    pool = make_pool(scope, sys.space, pool_spec)
    table, used = sep_table(scope, sys, pool, ks, eps, method, cap=cap, workers=workers)
    fits = []
    for e in eps:
        seps = [table[(k, e)] for k in ks]
        s, r = fit_log_growth(ks, seps)
        fits.append(EntropyFit(e, ks, seps, s, r, used))
    x = -np.log(eps)
    h = np.array([f.value for f in fits])
    slope = float(np.polyfit(x, h, 1)[0]) if np.ptp(h) > 0 else 0.0
    return EntropyCurve(eps, fits, slope, scope, dict(pool_spec))
