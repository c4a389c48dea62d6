"""Phase spaces, a catalog of one-dimensional maps, and orbit machinery.

Circle points are unit-normalized angles in [0, 1) with the wraparound metric;
interval points live in [0, 1] with the usual metric.  Every map is written
once against a small math namespace so the same formula can be evaluated on
numpy arrays (fast path) or on mpmath scalars (used when a verification has to
survive super-attracting dynamics that underflow double precision).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Any, Callable, Optional

import mpmath
import numpy as np

CIRCLE = "circle"
INTERVAL = "interval"
SPACES = (CIRCLE, INTERVAL)

KINDS = (
    "rotation",
    "doubling",
    "tent",
    "north_south",
    "morse_smale",
    "reflection",
    "identity",
    "pl_circle",
    "pl_interval",
    "interval_square",
)

INVERSE_TOL = 1e-12

NP = SimpleNamespace(
    sin=np.sin, tan=np.tan, atan=np.arctan, pi=np.pi, floor=np.floor, sqrt=np.sqrt, abs=np.abs
)
MP = SimpleNamespace(
    sin=mpmath.sin, tan=mpmath.tan, atan=mpmath.atan, pi=mpmath.pi, floor=mpmath.floor,
    sqrt=mpmath.sqrt, abs=abs,
)
NORTH_SOUTH_FORMS = ("sine", "mobius")


class SystemError_(ValueError):
    """Invalid catalog id or parameters for a dynamical system."""


def wrap(x):
    """Reduce to [0, 1); guards the x % 1 == 1.0 rounding corner."""
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def circle_dist(x, y):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def interval_dist(x, y):
    return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))


def metric(space: str) -> Callable:
    if space == CIRCLE:
        return circle_dist
    if space == INTERVAL:
        return interval_dist
    raise SystemError_(f"unknown space {space!r}")


def normalize(space: str, x):
    x = np.asarray(x, dtype=float)
    if space == CIRCLE:
        return wrap(x)
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class PhasePoint:
    value: float
    space: str = CIRCLE

    def __post_init__(self):
        if self.space not in SPACES:
            raise SystemError_(f"unknown space {self.space!r}")
        hi_ok = self.value < 1.0 if self.space == CIRCLE else self.value <= 1.0
        if not (0.0 <= self.value and hi_ok):
            raise SystemError_(f"{self.value} is outside the {self.space} phase space")

    def dist(self, other: "PhasePoint") -> float:
        if other.space != self.space:
            raise SystemError_("points live in different spaces")
        return float(metric(self.space)(self.value, other.value))


# --------------------------------------------------------------------------
# map implementations


class _Map:
    """Formula container.  ``fwd``/``lift``/``inv`` take (x, lib)."""

    space = CIRCLE
    invertible = False
    degree: Optional[int] = None  # +1/-1 for homeomorphisms, None otherwise

    def fwd(self, x, lib):
        raise NotImplementedError

    def lift(self, x, lib):
        return None

    def inv(self, x, lib):
        raise NotImplementedError


class _Rotation(_Map):
    invertible = True
    degree = 1

    def __init__(self, theta):
        self.theta = float(theta)

    def lift(self, x, lib):
        return x + self.theta

    def fwd(self, x, lib):
        return self.lift(x, lib)

    def inv(self, x, lib):
        return x - self.theta


class _Doubling(_Map):
    def fwd(self, x, lib):
        return 2 * x


class _Tent(_Map):
    space = INTERVAL

    def __init__(self, slope):
        self.slope = float(slope)

    def fwd(self, x, lib):
        if lib is NP:
            return self.slope * np.minimum(x, 1.0 - x)
        return self.slope * min(x, 1 - x)


class _MorseSmale(_Map):
    """Lift x + shift/petals - (1 - lam)/(2 pi petals) sin(2 pi petals x).

    Attracting points at j/petals (derivative lam), repelling points at
    (j + 1/2)/petals (derivative 2 - lam).  ``petals=1, shift=0`` is the
    north-south map with 0 attracting and 1/2 repelling.
    """

    invertible = True
    degree = 1

    def __init__(self, lam, petals=1, shift=0):
        self.lam = float(lam)
        self.petals = int(petals)
        self.shift = int(shift)
        self.amp = (1.0 - self.lam) / (2.0 * np.pi * self.petals)

    def lift(self, x, lib):
        m = self.petals
        if lib is MP:
            amp = (1 - mpmath.mpf(self.lam)) / (2 * mpmath.pi * m)
            shift = mpmath.mpf(self.shift) / m
        else:
            amp, shift = self.amp, self.shift / m
        return x + shift - amp * lib.sin(2 * lib.pi * m * x)

    def fwd(self, x, lib):
        return self.lift(x, lib)

    def inv(self, x, lib):
        return _bisect_lift(self, x, lib)


class _Mobius(_Map):
    """North-south map x -> atan(lam tan(pi x))/pi, lifted to the real line.

    Same fixed points as the sine form (0 attracting with derivative lam,
    1/2 repelling with derivative 1/lam) but fundamental domains grow toward
    the whole half circle as lam -> 0.  The inverse is closed-form.
    """

    invertible = True
    degree = 1

    def __init__(self, lam):
        self.lam = float(lam)

    def _conj(self, x, lib, c):
        n = lib.floor(x + 0.5)
        u = x - n
        if lib is MP:
            c = mpmath.mpf(c)
            if u == -0.5:
                return x
        return n + lib.atan(c * lib.tan(lib.pi * u)) / lib.pi

    def lift(self, x, lib):
        return self._conj(x, lib, self.lam)

    def fwd(self, x, lib):
        return self.lift(x, lib)

    def inv(self, x, lib):
        return self._conj(x, lib, 1.0 / self.lam)


class _Reflection(_Map):
    invertible = True
    degree = -1

    def __init__(self, space=CIRCLE):
        self.space = space

    def lift(self, x, lib):
        return -x if self.space == CIRCLE else None

    def fwd(self, x, lib):
        return -x if self.space == CIRCLE else 1 - x

    def inv(self, x, lib):
        return self.fwd(x, lib)


class _Identity(_Map):
    invertible = True
    degree = 1

    def __init__(self, space=CIRCLE):
        self.space = space

    def lift(self, x, lib):
        return x if self.space == CIRCLE else None

    def fwd(self, x, lib):
        return x

    def inv(self, x, lib):
        return x


def _pl_eval(xs, ys, x, lib):
    if lib is NP:
        return np.interp(x, xs, ys)
    # mpmath scalar path
    x = mpmath.mpf(x)
    if x <= xs[0]:
        return mpmath.mpf(ys[0])
    for i in range(1, len(xs)):
        if x <= xs[i]:
            x0, x1, y0, y1 = (mpmath.mpf(v) for v in (xs[i - 1], xs[i], ys[i - 1], ys[i]))
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return mpmath.mpf(ys[-1])


class _PLCircle(_Map):
    invertible = True

    def __init__(self, xs, ys):
        self.xs = [float(v) for v in xs]
        self.ys = [float(v) for v in ys]
        self.degree = 1 if self.ys[-1] > self.ys[0] else -1

    def lift(self, x, lib):
        n = lib.floor(x)
        return self.degree * n + _pl_eval(self.xs, self.ys, x - n, lib)

    def fwd(self, x, lib):
        return self.lift(x, lib)

    def inv(self, x, lib):
        if self.degree == 1:
            # inverse lift is piecewise linear on the swapped breakpoints
            shift = lib.floor(x - self.ys[0])
            y = x - shift
            return _pl_eval(self.ys, self.xs, y, lib) + shift
        return _bisect_lift(self, x, lib)


class _PLInterval(_Map):
    space = INTERVAL

    def __init__(self, xs, ys):
        self.xs = [float(v) for v in xs]
        self.ys = [float(v) for v in ys]
        d = np.diff(self.ys)
        ends = sorted((self.ys[0], self.ys[-1]))
        monotone = bool(np.all(d > 0) or np.all(d < 0))
        self.invertible = monotone and ends == [0.0, 1.0]
        if self.invertible:
            self.degree = 1 if d[0] > 0 else -1

    def fwd(self, x, lib):
        return _pl_eval(self.xs, self.ys, x, lib)

    def inv(self, x, lib):
        if self.degree == 1:
            return _pl_eval(self.ys, self.xs, x, lib)
        return _pl_eval(self.ys[::-1], self.xs[::-1], x, lib)


class _IntervalSquare(_Map):
    space = INTERVAL
    invertible = True
    degree = 1

    def fwd(self, x, lib):
        return x * x

    def inv(self, x, lib):
        return lib.sqrt(x)


def _bisect_lift(impl: _Map, y, lib):
    """Invert a monotone degree +-1 lift by bisection.

    L(x) - deg*x is 1-periodic with oscillation < 1, so the root of L(x) = y
    is bracketed by one unit around y*deg - c0 where c0 = L(0).
    """
    deg = impl.degree
    if lib is NP:
        y = np.asarray(y, dtype=float)
        c0 = float(impl.lift(np.array(0.0), NP))
        mid = (y - c0) * deg
        lo, hi = mid - 1.0, mid + 1.0
        for _ in range(64):
            m = 0.5 * (lo + hi)
            up = (impl.lift(m, NP) - y) * deg > 0
            hi = np.where(up, m, hi)
            lo = np.where(up, lo, m)
            if np.all(hi - lo <= INVERSE_TOL * 1e-3):
                break
        return 0.5 * (lo + hi)
    y = mpmath.mpf(y)
    c0 = impl.lift(mpmath.mpf(0), MP)
    mid = (y - c0) * deg
    lo, hi = mid - 1, mid + 1
    eps = mpmath.mpf(2) ** (-mpmath.mp.prec)
    for _ in range(mpmath.mp.prec + 8):
        m = (lo + hi) / 2
        if (impl.lift(m, MP) - y) * deg > 0:
            hi = m
        else:
            lo = m
        if hi - lo <= eps:
            break
    return (lo + hi) / 2


# --------------------------------------------------------------------------
# public system type


@dataclass(frozen=True, eq=False)
class DynSystem:
    """A continuous self-map of the circle or the unit interval."""

    kind: str
    params: dict
    impl: _Map = field(repr=False)

    @property
    def space(self) -> str:
        return self.impl.space

    @property
    def name(self) -> str:
        if not self.params:
            return self.kind
        args = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({args})"

    @property
    def invertible(self) -> bool:
        return bool(self.impl.invertible)

    @property
    def degree(self) -> Optional[int]:
        """+1 orientation preserving, -1 reversing, None if not a homeomorphism."""
        return self.impl.degree if self.invertible else None

    @property
    def has_lift(self) -> bool:
        return self.space == CIRCLE and self.invertible

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        return normalize(self.space, self.impl.fwd(x, NP))

    def inverse(self, x):
        if not self.invertible:
            raise SystemError_(f"{self.name} has no inverse")
        x = np.asarray(x, dtype=float)
        return normalize(self.space, self.impl.inv(x, NP))

    def lift(self, x):
        if not self.has_lift:
            raise SystemError_(f"{self.name} has no circle-homeomorphism lift")
        return self.impl.lift(np.asarray(x, dtype=float), NP)

    def lift_inverse(self, x):
        if not self.has_lift:
            raise SystemError_(f"{self.name} has no circle-homeomorphism lift")
        return self.impl.inv(np.asarray(x, dtype=float), NP)

    # high-precision scalar evaluation; callers set mpmath.mp precision
    def forward_mp(self, x):
        y = self.impl.fwd(mpmath.mpf(x), MP)
        if self.space == CIRCLE:
            return y - mpmath.floor(y)
        return min(max(y, mpmath.mpf(0)), mpmath.mpf(1))

    def inverse_mp(self, x):
        if not self.invertible:
            raise SystemError_(f"{self.name} has no inverse")
        y = self.impl.inv(mpmath.mpf(x), MP)
        if self.space == CIRCLE:
            return y - mpmath.floor(y)
        return min(max(y, mpmath.mpf(0)), mpmath.mpf(1))

    def lift_mp(self, x):
        return self.impl.lift(mpmath.mpf(x), MP)

    def lift_inverse_mp(self, x):
        return self.impl.inv(mpmath.mpf(x), MP)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


def _check_breakpoints(xs, ys, space):
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    problems = []
    if len(xs) != len(ys) or len(xs) < 2:
        problems.append("xs and ys must have equal length >= 2")
        raise SystemError_("; ".join(problems))
    if xs[0] != 0.0 or xs[-1] != 1.0:
        problems.append("xs must start at 0 and end at 1")
    if not np.all(np.diff(xs) > 0):
        problems.append("xs must be strictly increasing")
    d = np.diff(ys)
    if space == CIRCLE:
        if not (np.all(d > 0) or np.all(d < 0)):
            problems.append("lift breakpoints must be strictly monotone for a circle homeomorphism")
        elif abs(abs(ys[-1] - ys[0]) - 1.0) > 1e-12:
            problems.append("lift must satisfy |L(1) - L(0)| = 1")
    else:
        if min(ys) < 0.0 or max(ys) > 1.0:
            problems.append("interval breakpoints must map into [0, 1]")
    if problems:
        raise SystemError_("; ".join(problems))
    return xs, ys


def make_system(kind: str, params: Optional[dict] = None) -> DynSystem:
    """Build a catalog system.

    >>> float(make_system("rotation", {"theta": 0.25}).forward(0.9))
    0.15000000000000002
    """
    params = dict(params or {})
    if kind == "rotation":
        theta = float(params.get("theta", 0.0))
        impl = _Rotation(theta)
        params = {"theta": theta}
    elif kind == "doubling":
        impl = _Doubling()
        params = {}
    elif kind == "tent":
        slope = float(params.get("slope", 2.0))
        if not 0.0 < slope <= 2.0:
            raise SystemError_(f"tent slope must lie in (0, 2], got {slope}")
        impl = _Tent(slope)
        params = {"slope": slope}
    elif kind in ("north_south", "morse_smale"):
        lam = float(params.get("lam", 0.5))
        if not 0.0 < lam < 1.0:
            raise SystemError_(f"contraction rate lam must lie in (0, 1), got {lam}")
        if kind == "north_south":
            form = params.get("form", "sine")
            if form not in NORTH_SOUTH_FORMS:
                raise SystemError_(f"north_south form must be one of {NORTH_SOUTH_FORMS}, got {form!r}")
            impl = _MorseSmale(lam) if form == "sine" else _Mobius(lam)
            params = {"lam": lam} if form == "sine" else {"lam": lam, "form": form}
        else:
            petals = int(params.get("petals", 1))
            shift = int(params.get("shift", 0))
            if petals < 1:
                raise SystemError_(f"petals must be >= 1, got {petals}")
            impl = _MorseSmale(lam, petals, shift)
            params = {"lam": lam, "petals": petals, "shift": shift}
    elif kind in ("reflection", "identity"):
        space = params.get("space", CIRCLE)
        if space not in SPACES:
            raise SystemError_(f"unknown space {space!r}")
        impl = _Reflection(space) if kind == "reflection" else _Identity(space)
        params = {"space": space}
    elif kind == "pl_circle":
        xs, ys = _check_breakpoints(params.get("xs", ()), params.get("ys", ()), CIRCLE)
        impl = _PLCircle(xs, ys)
        params = {"xs": xs, "ys": ys}
    elif kind == "pl_interval":
        xs, ys = _check_breakpoints(params.get("xs", ()), params.get("ys", ()), INTERVAL)
        impl = _PLInterval(xs, ys)
        if params.get("homeomorphism") and not impl.invertible:
            raise SystemError_(
                "breakpoints are not strictly monotone onto [0, 1]; not a homeomorphism"
            )
        params = {"xs": xs, "ys": ys}
    elif kind == "interval_square":
        impl = _IntervalSquare()
        params = {}
    else:
        raise SystemError_(f"unknown system kind {kind!r}; expected one of {KINDS}")
    return DynSystem(kind, params, impl)


# --------------------------------------------------------------------------
# orbits and dynamical distance


@dataclass(frozen=True)
class OrbitSegment:
    base: float
    points: tuple

    @property
    def length(self) -> int:
        return len(self.points)


def iterate(sys: DynSystem, x, n: int):
    """n-fold composition; negative n uses the inverse."""
    n = int(n)
    x = normalize(sys.space, x)
    if n < 0 and not sys.invertible:
        raise SystemError_(f"negative iterate requested but {sys.name} has no inverse")
    step = sys.forward if n >= 0 else sys.inverse
    for _ in range(abs(n)):
        x = step(x)
    return x


def orbit(sys: DynSystem, x, k: int) -> np.ndarray:
    """Array of shape (k, *x.shape): T^0 x, ..., T^(k-1) x."""
    if k < 1:
        raise SystemError_("orbit length must be >= 1")
    x = normalize(sys.space, x)
    out = np.empty((k,) + x.shape)
    out[0] = x
    for i in range(1, k):
        out[i] = sys.forward(out[i - 1])
    return out


def orbit_segment(sys: DynSystem, x: float, k: int) -> OrbitSegment:
    pts = orbit(sys, np.array(float(x)), k)
    return OrbitSegment(float(x), tuple(float(v) for v in pts))


def dyn_distance(sys: DynSystem, x, y, k: int):
    """d_k(x, y) = max_{0 <= i < k} d(T^i x, T^i y); broadcasts over arrays."""
    if k < 1:
        raise SystemError_("k must be >= 1")
    d = metric(sys.space)
    ox, oy = orbit(sys, x, k), orbit(sys, y, k)
    return d(ox, oy).max(axis=0)


def dyn_distance_matrix(sys: DynSystem, pts, k: int, *, workers: int = 1) -> np.ndarray:
    """Pairwise d_k over a 1-D array of points."""
    from .parallel import chunked_rows

    pts = normalize(sys.space, np.asarray(pts, dtype=float))
    orb = orbit(sys, pts, k)  # (k, n)
    d = metric(sys.space)

    def rows(lo, hi):
        return d(orb[:, lo:hi, None], orb[:, None, :]).max(axis=0)

    return chunked_rows(rows, len(pts), workers=workers)


def omega_limit_estimate(
    sys: DynSystem,
    x: float,
    burn: int = 1000,
    window: int = 1000,
    tol: float = 1e-6,
    direction: int = 1,
):
    """Cluster T^n(x), burn <= n < burn + window, into a finite point set.

    ``direction=-1`` iterates the inverse and estimates the alpha-limit set.
    """
    from .hyperspace import FinitePoint

    if burn < 1 or window < 1 or tol <= 0:
        raise SystemError_("burn, window must be >= 1 and tol > 0")
    if direction not in (1, -1):
        raise SystemError_("direction must be +1 or -1")
    if direction == -1 and not sys.invertible:
        raise SystemError_(f"alpha-limit requested but {sys.name} has no inverse")
    step = sys.forward if direction == 1 else sys.inverse
    p = normalize(sys.space, np.array(float(x)))
    for _ in range(burn):
        p = step(p)
    pts = np.empty(window)
    for i in range(window):
        pts[i] = p
        p = step(p)
    reps = cluster_points(pts, tol, sys.space)
    return FinitePoint.of(reps, sys.space)


def cluster_points(pts, tol: float, space: str) -> np.ndarray:
    """Sweep clustering: clusters of diameter <= tol, one medoid each.

    Points are swept in sorted order (on the circle, starting just after the
    widest gap) and a new cluster opens whenever a point is more than tol from
    the current cluster's first member.  Well-separated tight clusters come out
    exactly as single linkage would give them; dense orbits give a tol-net
    instead of one chained blob.
    """
    pts = np.asarray(pts, dtype=float)
    order = np.sort(pts)
    if space == CIRCLE and len(order) > 1:
        gaps = np.diff(np.append(order, order[0] + 1.0))
        cut = int(np.argmax(gaps)) + 1
        order = np.concatenate([order[cut:], order[:cut] + 1.0])
    clusters = []
    start = 0
    for i in range(1, len(order) + 1):
        if i == len(order) or order[i] - order[start] > tol:
            clusters.append(order[start:i])
            start = i
    reps = []
    for c in clusters:
        mid = 0.5 * (c[0] + c[-1])
        reps.append(c[int(np.argmin(np.abs(c - mid)))])
    return normalize(space, np.array(reps))
