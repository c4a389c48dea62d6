"""Rotation numbers and the zero/infinite classifier for circle homeomorphisms.

A homeomorphism with a periodic point of period q is cut open at that point,
which turns H^q into a homeomorphism of [0, 1]; the interval finder then
either certifies (H^q)^2 = id or returns a wandering interval that is pulled
back to the circle.  Without periodic points the classifier looks for dense
orbits (conjugacy to a rotation) or a wandering gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .explosion import MP_PREC, ExplosionError, _mp_chain, find_wandering_interval
from .systems import CIRCLE, INTERVAL, MP, NP, DynSystem, _Map, circle_dist

ZERO = "zero"
INFINITE = "infinite"
RATIONAL = "rational"
IRRATIONAL = "irrational-at-tolerance"
UNDETERMINED = "undetermined"


class CircleError(ValueError):
    pass


class ClassificationError(RuntimeError):
    """No verified verdict within the budgets; carries diagnostics."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


def _require_circle_homeo(sys: DynSystem):
    if sys.space != CIRCLE or not sys.invertible:
        raise CircleError(f"{sys.name} is not a circle homeomorphism")


def lift_power(sys: DynSystem, x, n: int):
    for _ in range(n):
        x = sys.lift(x)
    return x


# --------------------------------------------------------------------------
# rotation number


@dataclass
class RotationNumber:
    value: float
    verdict: str
    p: Optional[int] = None
    q: Optional[int] = None
    periodic_point: Optional[float] = None
    periodic_error: Optional[float] = None
    iterates: int = 0
    cauchy_gap: float = 0.0
    lift_value: float = 0.0
    convergents: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "verdict": self.verdict,
            "p": self.p,
            "q": self.q,
            "periodic_point": self.periodic_point,
            "periodic_error": self.periodic_error,
            "iterates": self.iterates,
            "cauchy_gap": self.cauchy_gap,
            "convergents": [list(c) for c in self.convergents],
        }


def convergents(x: float, max_q: int) -> list:
    """Continued-fraction convergents (p, q) of x with q <= max_q."""
    out = []
    a = Fraction(x).limit_denominator(10**15)
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        n = a.numerator // a.denominator
        h0, h1 = h1, n * h1 + h0
        k0, k1 = k1, n * k1 + k0
        if k1 > max_q:
            break
        out.append((h1, k1))
        frac = a - n
        if frac == 0:
            break
        a = 1 / frac
    return out


def find_periodic_point(sys: DynSystem, p: int, q: int, tol: float = 1e-9, grid: int = 2000):
    """x with L^q(x) = x + p, by grid scan and bisection, or None."""
    x = np.linspace(0.0, 1.0, grid + 1)
    G = lift_power(sys, x, q) - x - p
    hit = np.flatnonzero(np.abs(G) < tol)
    if hit.size:
        i = int(hit[np.argmin(np.abs(G[hit]))])
        return float(x[i]) % 1.0, float(abs(G[i]))
    s = np.flatnonzero(np.sign(G[:-1]) * np.sign(G[1:]) < 0)
    if not s.size:
        return None
    lo, hi = float(x[s[0]]), float(x[s[0] + 1])
    glo = float(lift_power(sys, np.array(lo), q) - lo - p)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = float(lift_power(sys, np.array(mid), q) - mid - p)
        if gm == 0 or hi - lo < 1e-15:
            lo = hi = mid
            break
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    x0 = 0.5 * (lo + hi)
    err = float(circle_dist(_power(sys, x0, q), x0))
    if err >= tol:
        return None
    return x0 % 1.0, err


def _power(sys, x, q):
    y = np.array(x, dtype=float)
    for _ in range(q):
        y = sys.forward(y)
    return y


def rotation_number(
    sys: DynSystem, iterates: int = 10_000, tol: float = 1e-9, max_q: int = 64, x0: float = 0.0
) -> RotationNumber:
    """Birkhoff estimate of the rotation number with a rationality check.

    A convergent p/q (q <= max_q) is accepted only when a point with
    L^q(x) = x + p is found, since such an orbit forces rho = p/q exactly.
    """
    _require_circle_homeo(sys)
    if sys.degree != 1:
        raise CircleError(f"{sys.name} reverses orientation; rotation number is defined for degree +1")
    if iterates < 1000:
        raise CircleError("iterates must be >= 1000")
    half = iterates // 2
    x = np.array(float(x0))
    for _ in range(half):
        x = sys.lift(x)
    est_half = float(x - x0) / half
    for _ in range(iterates - half):
        x = sys.lift(x)
    est = float(x - x0) / iterates
    gap = abs(est - est_half)
    value = est % 1.0
    shift = int(np.floor(est))
    convs = convergents(value, max_q)
    for p, q in convs:
        found = find_periodic_point(sys, p + shift * q, q, tol)
        if found is not None:
            xp, err = found
            return RotationNumber((p % q) / q, RATIONAL, p % q, q, xp, err, iterates, gap, est, convs)
    # |L^n(x) - x - n rho| < 1, so convergents farther than 1/n from the
    # estimate are ruled out; a closer one without a periodic orbit is not
    ambiguous = any(abs(value - p / q) < 1.0 / iterates for p, q in convs)
    verdict = UNDETERMINED if ambiguous else IRRATIONAL
    return RotationNumber(value, verdict, None, None, None, None, iterates, gap, est, convs)


# --------------------------------------------------------------------------
# identity powers and minimality


def identity_power_deviation(sys: DynSystem, q: int, grid: int = 10_000) -> float:
    if q < 1:
        raise CircleError("q must be >= 1")
    x = np.arange(grid, dtype=float) / grid
    y = x.copy()
    for _ in range(2 * q):
        y = sys.forward(y)
    if sys.space == CIRCLE:
        return float(circle_dist(y, x).max())
    return float(np.abs(y - x).max())


def identity_power_test(sys: DynSystem, q: int, tol: float = 1e-9, grid: int = 10_000) -> bool:
    """True iff H^(2q) moves no grid point by tol or more."""
    return identity_power_deviation(sys, q, grid) < tol


@dataclass
class MinimalityEvidence:
    minimal: bool
    largest_gap: float
    gap_arc: tuple
    seed: float
    iterates: int
    tol_density: float

    def __bool__(self):
        return self.minimal

    def to_dict(self) -> dict:
        return {
            "minimal": self.minimal,
            "largest_gap": self.largest_gap,
            "gap_arc": list(self.gap_arc),
            "seed": self.seed,
            "iterates": self.iterates,
            "tol_density": self.tol_density,
        }


def largest_orbit_gap(sys: DynSystem, seed: float, iterates: int):
    pts = np.empty(iterates)
    x = np.array(float(seed))
    for i in range(iterates):
        pts[i] = x
        x = sys.forward(x)
    v = np.sort(pts)
    gaps = np.diff(np.append(v, v[0] + 1.0))
    j = int(np.argmax(gaps))
    return float(gaps[j]), (float(v[j]), float((v[j] + gaps[j]) % 1.0))


def minimality_test(
    sys: DynSystem,
    tol_density: float = 0.01,
    iterates: int = 10_000,
    seeds: int = 8,
    rotation: Optional[RotationNumber] = None,
) -> MinimalityEvidence:
    """Forward orbits of ``seeds`` equally spaced points must all be tol_density-dense."""
    _require_circle_homeo(sys)
    rot = rotation_number(sys, iterates) if rotation is None else rotation
    if rot.verdict == RATIONAL:
        raise CircleError(f"rotation number {rot.p}/{rot.q} is rational; minimality test does not apply")
    worst = (-1.0, (0.0, 0.0), 0.0)
    for j in range(seeds):
        s = j / seeds
        g, arc = largest_orbit_gap(sys, s, iterates)
        if g > worst[0]:
            worst = (g, arc, s)
    g, arc, s = worst
    return MinimalityEvidence(bool(g < tol_density), g, arc, s, iterates, tol_density)


# --------------------------------------------------------------------------
# classification


class _CutMap(_Map):
    """H^q (degree +1) or H (degree -1) cut open at a periodic point x0.

    t -> L^q(x0 + t) - L^q(x0) maps [0, 1] onto itself increasingly; for
    orientation-reversing H the map t -> 1 + L(x0 + t) - L(x0) is the
    decreasing analogue.
    """

    space = INTERVAL
    invertible = True

    def __init__(self, sys: DynSystem, x0: float, q: int):
        self.sys, self.x0, self.q = sys, float(x0), int(q)
        self.degree = 1 if sys.degree == 1 else -1

    def _L(self, x, lib, n, inverse=False):
        impl = self.sys.impl
        for _ in range(n):
            x = impl.inv(x, lib) if inverse else impl.lift(x, lib)
        return x

    def _base(self, lib):
        x0 = mpmath.mpf(self.x0) if lib is MP else self.x0
        return x0, self._L(x0, lib, self.q)

    def fwd(self, t, lib):
        x0, y0 = self._base(lib)
        y = self._L(x0 + t, lib, self.q) - y0
        return y if self.degree == 1 else 1 + y

    def inv(self, s, lib):
        x0, y0 = self._base(lib)
        s = s if self.degree == 1 else s - 1
        return self._L(s + y0, lib, self.q, inverse=True) - x0


def cut_system(sys: DynSystem, x0: float, q: int) -> DynSystem:
    return DynSystem("cut", {"x0": float(x0), "q": int(q), "of": sys.to_dict()}, _CutMap(sys, x0, q))


def circle_images_mp(sys: DynSystem, start: float, length: float, power: int, horizon: int) -> list:
    """(start, length) of H^(power*n)(arc), |n| <= horizon, via the lift at high precision.

    ``power`` must make H^power orientation preserving.
    """
    if sys.degree == -1 and power % 2:
        raise CircleError("power must be even for orientation-reversing maps")
    with mpmath.workprec(MP_PREC):
        a0 = mpmath.mpf(start)
        ends = []
        for x in (a0, a0 + mpmath.mpf(length)):
            fwd = _mp_chain(sys.lift_mp, x, power, horizon)
            bwd = _mp_chain(sys.lift_inverse_mp, x, power, horizon)
            ends.append(bwd[:0:-1] + fwd)
        return [(a - mpmath.floor(a), b - a) for a, b in zip(*ends)]


def circle_arcs_disjoint(arcs) -> tuple:
    """(all pairwise disjoint, smallest separation) for (start, length) arcs."""
    best = None
    for i in range(len(arcs)):
        s1, l1 = arcs[i]
        for j in range(i + 1, len(arcs)):
            s2, l2 = arcs[j]
            g1 = (s2 - s1) % 1 - l1
            g2 = (s1 - s2) % 1 - l2
            g = min(g1, g2)
            best = g if best is None else min(best, g)
            if g <= 0:
                return False, g
    return True, best


@dataclass
class MdimVerdict:
    verdict: str
    reason: str
    witness: dict
    budgets: dict
    rotation: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "witness": self.witness,
            "budgets": self.budgets,
            "rotation": self.rotation,
        }


def _fixed_point_reversing(sys: DynSystem) -> float:
    """Fixed point of a degree -1 circle map: L(x) - x falls by 2 over [0, 1]."""
    F = lambda x: float(sys.lift(np.array(x))) - x
    c = np.floor(F(0.0))
    lo, hi = 0.0, 1.0
    if F(lo) == c:
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if F(mid) > c:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi) % 1.0


def classify_mdim(
    sys: DynSystem,
    *,
    iterates: int = 10_000,
    tol: float = 1e-9,
    max_q: int = 64,
    horizon: int = 20,
    grid: int = 1000,
    identity_grid: int = 10_000,
    tol_density: float = 0.01,
) -> MdimVerdict:
    """Zero or infinite metric mean dimension of the induced map on K(S^1)."""
    _require_circle_homeo(sys)
    budgets = {
        "iterates": iterates, "tol": tol, "max_q": max_q, "horizon": horizon,
        "grid": grid, "identity_grid": identity_grid, "tol_density": tol_density,
    }
    rot = None
    if sys.degree == -1:
        x0, q = _fixed_point_reversing(sys), 1
        periodic = {"point": x0, "period": 1, "error": float(circle_dist(sys.forward(np.array(x0)), x0))}
    else:
        rot = rotation_number(sys, iterates, tol, max_q)
        if rot.verdict == RATIONAL:
            x0, q = rot.periodic_point, rot.q
            periodic = {"point": x0, "period": q, "error": rot.periodic_error}
        else:
            x0 = None
    rot_d = None if rot is None else rot.to_dict()

    if x0 is not None:
        T = cut_system(sys, x0, q)
        try:
            w = find_wandering_interval(T, horizon=horizon, grid=grid, tol=tol)
        except ExplosionError as exc:
            raise ClassificationError(str(exc), {"periodic": periodic, "rotation": rot_d}) from exc
        if w.verdict == "identity":
            dev = identity_power_deviation(sys, q, identity_grid)
            if dev >= tol:
                raise ClassificationError(
                    f"cut map squares to the identity but H^{2 * q} moves a grid point by {dev:.3g}",
                    {"periodic": periodic, "rotation": rot_d},
                )
            witness = {"periodic": periodic, "identity_power": 2 * q, "max_deviation": dev}
            return MdimVerdict(ZERO, "H^{2q}-identity", witness, budgets, rot_d)
        u, v = w.interval
        start, length = (x0 + u) % 1.0, v - u
        arcs = circle_images_mp(sys, start, length, 2 * q, horizon)
        ok, sep = circle_arcs_disjoint(arcs)
        if not ok:
            raise ClassificationError(
                "pulled-back interval is not wandering on the circle",
                {"periodic": periodic, "arc": [start, length]},
            )
        witness = {
            "periodic": periodic,
            "arc": [start, (start + length) % 1.0],
            "power": 2 * q,
            "images_checked": len(arcs),
            "min_separation": mpmath.nstr(sep, 8),
        }
        return MdimVerdict(INFINITE, "wandering-interval-found", witness, budgets, rot_d)

    if rot.verdict == UNDETERMINED:
        raise ClassificationError(
            "rotation number is within the estimate error of a convergent but no periodic orbit was found",
            {"rotation": rot_d},
        )
    ev = minimality_test(sys, tol_density, iterates, rotation=rot)
    if ev.minimal:
        return MdimVerdict(ZERO, "conjugate-to-rotation", {"minimality": ev.to_dict()}, budgets, rot_d)
    a, b = ev.gap_arc
    gap = (b - a) % 1.0
    start, length = (a + gap / 3) % 1.0, gap / 3
    arcs = circle_images_mp(sys, start, length, 1, horizon)
    ok, sep = circle_arcs_disjoint(arcs)
    if not ok:
        raise ClassificationError(
            "orbits are not dense but the largest gap does not wander within the horizon",
            {"rotation": rot_d, "minimality": ev.to_dict()},
        )
    witness = {
        "minimality": ev.to_dict(),
        "arc": [start, (start + length) % 1.0],
        "power": 1,
        "images_checked": len(arcs),
        "min_separation": mpmath.nstr(sep, 8),
    }
    return MdimVerdict(INFINITE, "cantor-nonwandering", witness, budgets, rot_d)
