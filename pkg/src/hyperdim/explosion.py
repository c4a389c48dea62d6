"""Explosion mechanisms for induced hyperspace maps.

Two constructions live here:

* subset certificates: every nonempty subset of a (k, eps)-separated base
  family becomes a point of K(X), and the pairwise D_k distances between the
  subsets are checked;
* shift embeddings: symbol blocks xi in ([0,1]^k)^[-N, N] are sent to finite
  sets built from the images of a wandering arc, and the induced map is
  compared with the inverse shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .hyperspace import (
    ArcPoint,
    FinitePoint,
    arc_iterate,
    hausdorff,
    induced_apply,
)
from .sepspan import (
    BASE,
    HYPER_FINITE,
    SEP_CAP,
    TIE_TOL,
    dyn_matrix,
    max_separated,
    separated_indices,
)
from .systems import CIRCLE, INTERVAL, DynSystem, iterate, metric, omega_limit_estimate, orbit

MP_PREC = 256


class ExplosionError(ValueError):
    pass


class CertificateError(ExplosionError):
    """Raised when a subset certificate finds a pair closer than eps."""

    def __init__(self, msg, certificate=None):
        super().__init__(msg)
        self.certificate = certificate


# --------------------------------------------------------------------------
# wandering intervals


@dataclass
class WanderingResult:
    verdict: str  # "wandering" or "identity"
    interval: Optional[tuple] = None
    horizon: int = 0
    images_checked: int = 0
    max_deviation: float = 0.0
    base_point: Optional[float] = None
    min_gap: Optional[str] = None  # decimal string: gaps can be far below double range

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "interval": None if self.interval is None else list(self.interval),
            "horizon": self.horizon,
            "images_checked": self.images_checked,
            "max_deviation_T2": self.max_deviation,
            "base_point": self.base_point,
            "min_gap": self.min_gap,
        }


def _mp_chain(step, x, power: int, horizon: int) -> list:
    """[x, S(x), ..., S^horizon(x)] with S = step^power."""
    out = [x]
    for _ in range(horizon):
        for _ in range(power):
            x = step(x)
        out.append(x)
    return out


def interval_images_mp(sys: DynSystem, lo, hi, power: int, horizon: int) -> list:
    """Endpoint images of [lo, hi] under T^(power*n), |n| <= horizon, at high precision."""
    with mpmath.workprec(MP_PREC):
        ends = []
        for x in (mpmath.mpf(lo), mpmath.mpf(hi)):
            fwd = _mp_chain(sys.forward_mp, x, power, horizon)
            bwd = _mp_chain(sys.inverse_mp, x, power, horizon)
            ends.append(bwd[:0:-1] + fwd)
        return [(min(a, b), max(a, b)) for a, b in zip(*ends)]


def intervals_disjoint(images) -> tuple:
    """(all disjoint, smallest gap) for closed intervals given by endpoints."""
    srt = sorted(images)
    gaps = [srt[i + 1][0] - srt[i][1] for i in range(len(srt) - 1)]
    if not gaps:
        return True, None
    g = min(gaps)
    return bool(g > 0), g


def find_wandering_interval(
    sys: DynSystem, horizon: int = 20, grid: int = 1000, tol: float = 1e-9
) -> WanderingResult:
    """Wandering interval for T^2 of an interval homeomorphism, or the verdict T^2 = id.

    The base point x maximizes |T^2(x) - x| over a uniform grid; J is the
    middle third of the interval between x and T^2(x), which sits inside a
    fundamental domain of the increasing map T^2.  The images T^(2n)(J),
    |n| <= horizon, are checked for disjointness at high precision.
    """
    if sys.space != INTERVAL or not sys.invertible:
        raise ExplosionError(f"{sys.name} is not an interval homeomorphism")
    x = np.linspace(0.0, 1.0, grid)
    dev = np.abs(sys.forward(sys.forward(x)) - x)
    worst = float(dev.max())
    if worst < tol:
        return WanderingResult("identity", horizon=horizon, max_deviation=worst)
    i = int(np.argmax(dev))
    x0 = float(x[i])
    y0 = float(sys.forward(sys.forward(np.array(x0))))
    lo, hi = min(x0, y0), max(x0, y0)
    J = (lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0)
    imgs = interval_images_mp(sys, J[0], J[1], 2, horizon)
    ok, gap = intervals_disjoint(imgs)
    if not ok:
        raise ExplosionError(f"candidate interval {J} is not wandering up to horizon {horizon}")
    return WanderingResult("wandering", J, horizon, len(imgs), worst, x0, mpmath.nstr(gap, 8))


# --------------------------------------------------------------------------
# subset certificates


@dataclass
class SubsetCertificate:
    base_family: list
    base_indices: list
    k: int
    eps: float
    sep_count: int
    mode: str
    pairs_checked: int
    min_distance: float
    violations: int
    witness: Optional[dict] = None
    seed: Optional[int] = None
    samples: Optional[int] = None
    base_selection: str = "exact"
    space: str = CIRCLE
    pool_spec: Optional[dict] = None

    @property
    def N(self) -> int:
        return len(self.base_family)

    @property
    def subset_count(self) -> int:
        return 2**self.N - 1

    @property
    def verified(self) -> bool:
        return self.violations == 0 and self.min_distance > self.eps - TIE_TOL

    def subsets(self):
        """The nonempty subsets as FinitePoints, ordered by bitmask."""
        pts = self.base_family
        for mask in range(1, 2**self.N):
            yield FinitePoint.of([pts[j] for j in range(self.N) if mask >> j & 1], self.space)

    def to_dict(self) -> dict:
        bound = self.subset_count if self.verified else None
        return {
            "base_family": list(self.base_family),
            "base_indices": list(self.base_indices),
            "base_selection": self.base_selection,
            "k": self.k,
            "eps": self.eps,
            "N": self.N,
            "sep_count": self.sep_count,
            "subset_count": self.subset_count,
            "verification": {
                "mode": self.mode,
                "seed": self.seed,
                "samples": self.samples,
                "pairs_checked": self.pairs_checked,
                "min_pairwise_distance": self.min_distance,
                "violations": self.violations,
                "witness": self.witness,
            },
            "verified": self.verified,
            "implied_bounds": {"sep_hyper_lower": bound, "span_hyper_half_eps_lower": bound},
            "pool_spec": self.pool_spec,
        }


def level_matrices(sys: DynSystem, pts, k: int) -> np.ndarray:
    """M[i, a, b] = d(T^i p_a, T^i p_b) for i < k."""
    o = orbit(sys, np.asarray(pts, dtype=float), k)
    return metric(sys.space)(o[:, :, None], o[:, None, :])


def subset_distance_table(M: np.ndarray) -> np.ndarray:
    """D_k between all pairs of nonempty subsets, indexed by bitmask.

    With mm[B, a] = max_i min_{b in B} M[i, a, b] the directed part is
    X[A, B] = max_{a in A} mm[B, a] and D = max(X, X^T).  Both tables are
    filled by peeling the lowest set bit, so the cost is O(4^N) rather than
    O(4^N k N^2).  Row and column 0 (the empty set) are meaningless.
    """
    k, N, _ = M.shape
    S = 1 << N
    mins = np.full((S, k, N), np.inf)
    for B in range(1, S):
        low = (B & -B).bit_length() - 1
        mins[B] = np.minimum(mins[B & (B - 1)], M[:, :, low])
    mm = mins.max(axis=1)  # (S, N): mm[B, a]
    X = np.full((S, S), -np.inf)
    for A in range(1, S):
        low = (A & -A).bit_length() - 1
        X[A] = np.maximum(X[A & (A - 1)], mm[:, low])
    return np.maximum(X, X.T)


def subset_pair_distances(M: np.ndarray, A: np.ndarray, B: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """D_k for sampled subset pairs given as boolean membership rows."""
    out = np.empty(A.shape[0])
    for lo in range(0, A.shape[0], chunk):
        a, b = A[lo : lo + chunk], B[lo : lo + chunk]
        # d(x, B) per level for x in the base family: (s, k, N)
        dB = np.where(b[:, None, None, :], M[None], np.inf).min(axis=3)
        dA = np.where(a[:, None, None, :], M[None], np.inf).min(axis=3)
        ab = np.where(a[:, None, :], dB, -np.inf).max(axis=(1, 2))
        ba = np.where(b[:, None, :], dA, -np.inf).max(axis=(1, 2))
        out[lo : lo + chunk] = np.maximum(ab, ba)
    return out


def _mask_members(mask: int, pts) -> list:
    return [pts[j] for j in range(len(pts)) if mask >> j & 1]


def isolated_family(sys: DynSystem, pool, k: int, eps: float) -> list:
    """Greedy family in which every member has a private separating level.

    Member p is kept only if some level i < k puts T^i p at distance >= eps
    from T^i q for every other member q (and adding p preserves this for the
    members already chosen).  For such families D_k(A, B) >= eps for all
    distinct subsets A, B, since a point of the symmetric difference is
    eps-far from the other subset at its private level.
    """
    M = level_matrices(sys, pool, k)  # (k, n, n)
    far = M > eps - TIE_TOL
    chosen: list = []
    for c in range(len(pool)):
        trial = chosen + [c]
        sub = far[:, trial][:, :, trial]
        ok = True
        for t in range(len(trial)):
            others = [u for u in range(len(trial)) if u != t]
            if others and not sub[:, t, others].all(axis=1).any():
                ok = False
                break
        if ok:
            chosen = trial
    return chosen


def build_subset_certificate(
    sys: DynSystem,
    k: int,
    eps: float,
    pool,
    cap: int = 12,
    *,
    pool_spec: Optional[dict] = None,
    strict: bool = False,
    base_selection: str = "exact",
    exhaustive_limit: int = 4096,
    samples: int = 100_000,
    seed: int = 0,
    sep_cap: int = SEP_CAP,
) -> SubsetCertificate:
    """Certify D_k >= eps between the nonempty subsets of a separated family.

    The base family is an exact maximum separated subfamily of the pool
    (``base_selection="exact"``) or the isolated family above
    (``"isolated"``).  When the family has more than ``cap`` members the
    first ``cap`` by pool index are used, or ``strict`` rejects the input.
    """
    pool = np.asarray(pool, dtype=float)
    if cap < 1:
        raise ExplosionError("cap must be >= 1")
    if base_selection == "exact":
        res = max_separated(BASE, sys, pool, k, eps, "exact", cap=sep_cap)
        idx = list(res.indices)
    elif base_selection == "isolated":
        idx = isolated_family(sys, pool, k, eps)
    else:
        raise ExplosionError(f"unknown base_selection {base_selection!r}")
    sep_count = len(idx)
    if sep_count > cap:
        if strict:
            raise ExplosionError(f"separated family has {sep_count} members, above the cap of {cap}")
        idx = idx[:cap]
    pts = [float(p) for p in pool[idx]]
    N = len(pts)
    M = level_matrices(sys, pts, k)
    S = (1 << N) - 1
    if S <= exhaustive_limit:
        D = subset_distance_table(M)[1:, 1:]
        iu = np.triu_indices(S, 1)
        vals = D[iu]
        mode, used_seed, used_samples = "exhaustive", None, None
        masks_a, masks_b = iu[0] + 1, iu[1] + 1
    else:
        if samples < 100_000:
            raise ExplosionError("sampled verification needs at least 1e5 pairs")
        rng = np.random.default_rng(seed)
        ma = rng.integers(1, S + 1, size=samples)
        mb = rng.integers(1, S, size=samples)
        mb = np.where(mb >= ma, mb + 1, mb)  # uniform over masks != ma
        bits = 1 << np.arange(N)
        A = (ma[:, None] & bits) > 0
        B = (mb[:, None] & bits) > 0
        vals = subset_pair_distances(M, A, B)
        mode, used_seed, used_samples = "sampled", int(seed), int(samples)
        masks_a, masks_b = ma, mb
    if vals.size:
        j = int(np.argmin(vals))
        mind = float(vals[j])
        witness = {
            "A": _mask_members(int(masks_a[j]), pts),
            "B": _mask_members(int(masks_b[j]), pts),
            "distance": mind,
        }
    else:
        mind, witness = math.inf, None
    violations = int((vals <= eps - TIE_TOL).sum())
    cert = SubsetCertificate(
        pts, [int(i) for i in idx], int(k), float(eps), sep_count, mode, int(vals.size), mind,
        violations, witness, used_seed, used_samples, base_selection, sys.space, pool_spec,
    )
    if violations:
        raise CertificateError(
            f"{violations} subset pairs closer than eps={eps}; closest pair {witness}", cert
        )
    return cert


# --------------------------------------------------------------------------
# shift embeddings


@dataclass
class EmbedConfig:
    system: DynSystem
    gamma: ArcPoint
    channels: int
    J: list
    horizon: int
    padding: FinitePoint
    padding_error: float
    arc_images: list = field(repr=False, default_factory=list)

    def psi(self, i: int, t):
        lo, hi = self.J[i]
        return lo + np.asarray(t, dtype=float) * (hi - lo)

    def phi(self, s):
        g = self.gamma
        x = g.a + np.asarray(s, dtype=float) * g.length
        return x % 1.0 if g.space == CIRCLE else x

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "gamma": self.gamma.to_list(),
            "channels": self.channels,
            "J": [list(j) for j in self.J],
            "horizon": self.horizon,
            "padding": self.padding.to_list(),
            "padding_error": self.padding_error,
        }


def fundamental_arc(sys: DynSystem, c: Optional[float] = None, shrink: float = 0.02) -> ArcPoint:
    """Arc strictly inside the fundamental domain [T(c), c].

    By default c maximizes |c - T(c)| on a grid of (0, 1/2) for circle maps or
    (0, 1) for interval maps.  ``shrink`` trims that fraction off each end.
    """
    if c is None:
        hi = 0.5 if sys.space == CIRCLE else 1.0
        xs = np.linspace(0.0, hi, 4801)[1:-1]
        d = metric(sys.space)(sys.forward(xs), xs)
        c = float(xs[int(np.argmax(d))])
    tc = float(sys.forward(np.array(c)))
    if sys.space == INTERVAL:
        lo, L = min(tc, c), abs(c - tc)
        return ArcPoint.of(lo + shrink * L, lo + (1.0 - shrink) * L, INTERVAL)
    ahead = (tc - c) % 1.0
    lo, L = (c, ahead) if ahead < 0.5 else (tc, 1.0 - ahead)
    return ArcPoint.of(lo + shrink * L, lo + (1.0 - shrink) * L)


def _arcs_disjoint(a: ArcPoint, b: ArcPoint) -> bool:
    if a.space == INTERVAL:
        return a.b < b.a or b.b < a.a
    return (b.a - a.a) % 1.0 > a.length and (a.a - b.a) % 1.0 > b.length


def channel_intervals(channels: int, gap: float = 0.2) -> list:
    """k equal cells of [0, 1], each shrunk by ``gap`` of its width."""
    return [((i + gap / 2) / channels, (i + 1 - gap / 2) / channels) for i in range(channels)]


def make_embed_config(
    sys: DynSystem,
    channels: int,
    horizon: int,
    gamma: Optional[ArcPoint] = None,
    *,
    gap: float = 0.2,
    limit_horizon: int = 1000,
    limit_tol: float = 1e-9,
) -> EmbedConfig:
    if not sys.invertible:
        raise ExplosionError(f"{sys.name} is not a homeomorphism")
    if channels < 1 or horizon < 0:
        raise ExplosionError("channels must be >= 1 and horizon >= 0")
    if not 0.0 <= gap < 1.0:
        raise ExplosionError("gap must lie in [0, 1)")
    gamma = fundamental_arc(sys) if gamma is None else gamma
    if gamma.space != sys.space:
        raise ExplosionError("arc and system live in different spaces")
    imgs = [arc_iterate(sys, gamma, n) for n in range(-horizon, horizon + 1)]
    for i in range(len(imgs)):
        for j in range(i + 1, len(imgs)):
            if not _arcs_disjoint(imgs[i], imgs[j]):
                raise ExplosionError(
                    f"arc images T^{i - horizon}(gamma) and T^{j - horizon}(gamma) intersect"
                )
    pad = []
    for x in (gamma.a, gamma.b):
        for direction in (1, -1):
            est = omega_limit_estimate(sys, x, burn=limit_horizon, window=8, tol=1e-6, direction=direction)
            pad.extend(est.values)
    padding = FinitePoint.of(pad, sys.space)
    err = hausdorff(induced_apply(sys, padding), padding)
    if err > limit_tol:
        raise ExplosionError(f"limit padding {padding.to_list()} is not invariant (error {err:.3g})")
    J = channel_intervals(channels, gap)
    return EmbedConfig(sys, gamma, int(channels), J, int(horizon), padding, float(err), imgs)


@dataclass
class EmbedState:
    xi: np.ndarray  # shape (2N + 1, k), row n + N holds xi_n
    horizon: int
    image: FinitePoint

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "xi": self.xi.tolist(), "image": self.image.to_list()}


def _check_block(cfg: EmbedConfig, xi, N: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1 and cfg.channels == 1:
        xi = xi[:, None]
    if xi.shape != (2 * N + 1, cfg.channels):
        raise ExplosionError(f"block must have shape {(2 * N + 1, cfg.channels)}, got {xi.shape}")
    if np.any(xi < 0) or np.any(xi > 1):
        raise ExplosionError("symbols must lie in [0, 1]")
    return xi


def embed_points(cfg: EmbedConfig, xi: np.ndarray, N: int) -> np.ndarray:
    """T^n(phi(psi_i(xi_{n,i}))) for |n| <= N, as an array (2N + 1, k)."""
    base = np.column_stack([cfg.phi(cfg.psi(i, xi[:, i])) for i in range(cfg.channels)])
    out = np.empty_like(base)
    for r, n in enumerate(range(-N, N + 1)):
        out[r] = iterate(cfg.system, base[r], n)
    return out


def build_embedding(cfg: EmbedConfig, xi, horizon: Optional[int] = None) -> EmbedState:
    """Phi_N(xi): the embedded points together with the limit padding."""
    N = cfg.horizon if horizon is None else int(horizon)
    if N > cfg.horizon:
        raise ExplosionError(f"horizon {N} exceeds the verified horizon {cfg.horizon}")
    xi = _check_block(cfg, xi, N)
    pts = embed_points(cfg, xi, N).ravel()
    image = FinitePoint.of(np.concatenate([pts, cfg.padding.array]), cfg.system.space)
    return EmbedState(xi, N, image)


def inverse_shift(xi: np.ndarray) -> np.ndarray:
    """(sigma^-1 xi)_m = xi_{m-1} on [-N+1, N-1] for xi on [-N, N]."""
    return np.asarray(xi)[:-2]


def arc_set_distance(arc: ArcPoint, P: FinitePoint) -> float:
    """max over the arc of the distance to the finite set P."""
    d = metric(arc.space)
    cands = [arc.a, arc.b]
    v = P.array
    if arc.space == CIRCLE:
        nxt = np.roll(v, -1)
        gaps = (nxt - v) % 1.0
        gaps[gaps == 0] = 1.0
        mids = (v + gaps / 2) % 1.0
    else:
        mids = (v[:-1] + v[1:]) / 2
    cands.extend(float(m) for m in mids if arc.contains(m))
    return float(max(d(np.array(c), v).min() for c in cands))


@dataclass
class ConjugacyReport:
    horizon: int
    residual: float
    bound: float

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "residual": self.residual, "bound": self.bound}


def check_conjugacy(cfg: EmbedConfig, xi, horizon: Optional[int] = None) -> ConjugacyReport:
    """Residual between T(Phi_N(xi)) and Phi_{N-1}(sigma^-1 xi).

    Only the two outermost forward terms (indices N-1 and N after one step)
    and the padding error separate the two sets, so the residual is bounded by
    the distance from T^N(gamma) and T^(N+1)(gamma) to the padding plus the
    padding error.
    """
    N = cfg.horizon if horizon is None else int(horizon)
    if N < 1:
        raise ExplosionError("conjugacy check needs N >= 1")
    st = build_embedding(cfg, xi, N)
    lhs = induced_apply(cfg.system, st.image)
    rhs = build_embedding(cfg, inverse_shift(st.xi), N - 1).image
    res = hausdorff(lhs, rhs)
    sys = cfg.system
    outer = [arc_iterate(sys, cfg.gamma, N), arc_iterate(sys, cfg.gamma, N + 1)]
    bound = max(arc_set_distance(a, cfg.padding) for a in outer) + cfg.padding_error
    return ConjugacyReport(N, float(res), float(bound))


@dataclass
class GrowthReport:
    channels: int
    n_window: int
    eps: float
    symbols: int
    family_size: int
    sampled: bool
    seed: Optional[int]
    sep: int
    rate: float
    min_image_distance: float
    method: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def symbol_grid(m: int) -> np.ndarray:
    return np.array([0.5]) if m == 1 else np.linspace(0.0, 1.0, m)


def window_indices(n_window: int) -> list:
    """Varying indices -(n-1), ..., 0: each passes through gamma within n steps."""
    return list(range(-n_window + 1, 1))


def embedded_growth(
    cfg: EmbedConfig,
    n_window: int,
    eps: float,
    symbols: int = 4,
    *,
    fill: float = 0.5,
    max_family: int = 4096,
    seed: int = 0,
    exact_cap: int = SEP_CAP,
) -> GrowthReport:
    """Sep of {Phi_N(xi)} under D_{n_window}, symbols varying on a window.

    Coordinates outside the window are held at ``fill``.  The rate is
    log Sep / (n_window * (-log eps)).
    """
    N = cfg.horizon
    if n_window < 1 or n_window > N + 1:
        raise ExplosionError(f"n_window must lie in [1, {N + 1}]")
    if not 0 < eps < 1:
        raise ExplosionError("eps must lie in (0, 1)")
    k = cfg.channels
    grid = symbol_grid(symbols)
    m = len(grid)
    slots = [(n, i) for n in window_indices(n_window) for i in range(k)]
    total = m ** len(slots)
    sampled = total > max_family
    if sampled:
        rng = np.random.default_rng(seed)
        codes = np.sort(rng.choice(total, size=max_family, replace=False))
    else:
        codes = np.arange(total)
    fam = []
    for code in codes:
        xi = np.full((2 * N + 1, k), float(fill))
        c = int(code)
        for n, i in slots:
            c, r = divmod(c, m)
            xi[n + N, i] = grid[r]
        fam.append(build_embedding(cfg, xi).image)
    D = dyn_matrix(HYPER_FINITE, cfg.system, fam, n_window)
    method = "exact" if len(fam) <= exact_cap else "greedy"
    sep = len(separated_indices(D, eps, method))
    if len(fam) > 1:
        D0 = dyn_matrix(HYPER_FINITE, cfg.system, fam, 1)
        np.fill_diagonal(D0, np.inf)
        min_img = float(D0.min())
    else:
        min_img = math.inf
    rate = math.log(sep) / (n_window * -math.log(eps))
    return GrowthReport(
        k, int(n_window), float(eps), m, len(fam), bool(sampled), int(seed) if sampled else None,
        sep, rate, min_img, method,
    )
