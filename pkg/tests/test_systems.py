import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdim.systems import (
    CIRCLE,
    INTERVAL,
    KINDS,
    PhasePoint,
    SystemError_,
    cluster_points,
    dyn_distance,
    dyn_distance_matrix,
    iterate,
    make_system,
    omega_limit_estimate,
    orbit,
    orbit_segment,
)

import oracles

unit = st.floats(0.0, 1.0, allow_nan=False, exclude_max=True)

HOMEOS = [
    ("rotation", {"theta": 0.3}),
    ("north_south", {"lam": 0.5}),
    ("north_south", {"lam": 0.2, "form": "mobius"}),
    ("morse_smale", {"lam": 0.5, "petals": 4, "shift": 1}),
    ("reflection", {}),
    ("identity", {}),
    ("pl_circle", {"xs": [0, 0.3, 1], "ys": [0.1, 0.7, 1.1]}),
    ("pl_circle", {"xs": [0, 0.5, 1], "ys": [0.0, -0.2, -1.0]}),
    ("interval_square", {}),
    ("reflection", {"space": "interval"}),
    ("pl_interval", {"xs": [0, 0.4, 1], "ys": [0, 0.7, 1]}),
]


def test_catalog_examples():
    assert float(make_system("rotation", {"theta": 0.25}).forward(0.9)) == pytest.approx(0.15, abs=1e-15)
    assert float(make_system("doubling").forward(0.75)) == 0.5
    assert float(make_system("interval_square").forward(0.5)) == 0.25


def test_iterate_examples():
    assert float(iterate(make_system("rotation", {"theta": 0.25}), 0.0, 4)) == 0.0
    assert float(iterate(make_system("doubling"), 0.1, 3)) == pytest.approx(0.8, abs=1e-15)
    ns = make_system("north_south", {"lam": 0.5})
    back = float(iterate(ns, 0.25, -2))
    assert float(iterate(ns, back, 2)) == pytest.approx(0.25, abs=1e-12)
    # against scalar bisection on the oracle lift
    lift = oracles.sine_north_south_lift(0.5)
    y = 0.25
    for _ in range(2):
        lo, hi = y - 1, y + 1
        for _ in range(100):
            mid = (lo + hi) / 2
            lo, hi = (lo, mid) if lift(mid) > y else (mid, hi)
        y = (lo + hi) / 2
    assert back == pytest.approx(y % 1.0, abs=1e-12)


def test_iterate_zero_and_negative_rejected():
    d = make_system("doubling")
    assert float(iterate(d, 0.37, 0)) == 0.37
    with pytest.raises(SystemError_, match="no inverse"):
        iterate(d, 0.1, -1)


def test_dyn_distance_examples():
    d = make_system("doubling")
    assert float(dyn_distance(d, 0.0, 0.1, 2)) == pytest.approx(0.2)
    assert float(dyn_distance(d, 0.0, 0.3, 3)) == pytest.approx(0.4)
    with pytest.raises(SystemError_):
        dyn_distance(d, 0.0, 0.1, 0)


def test_rotation_dk_equals_d():
    r = make_system("rotation", {"theta": math.sqrt(2) - 1})
    rng = np.random.default_rng(3)
    x, y = rng.random(1000), rng.random(1000)
    for k in (1, 5, 10):
        assert np.abs(dyn_distance(r, x, y, k) - dyn_distance(r, x, y, 1)).max() <= 1e-12


def test_rejections():
    with pytest.raises(SystemError_, match="slope"):
        make_system("tent", {"slope": 3})
    with pytest.raises(SystemError_, match="lam"):
        make_system("north_south", {"lam": 1.5})
    with pytest.raises(SystemError_, match="monotone"):
        make_system("pl_circle", {"xs": [0, 0.5, 1], "ys": [0, 0.7, 0.6]})
    with pytest.raises(SystemError_, match="homeomorphism"):
        make_system("pl_interval", {"xs": [0, 0.5, 1], "ys": [0, 1, 0], "homeomorphism": True})
    with pytest.raises(SystemError_, match="unknown system kind"):
        make_system("henon")
    with pytest.raises(SystemError_, match="form"):
        make_system("north_south", {"lam": 0.5, "form": "cubic"})


def test_non_homeomorphism_pl_interval_is_allowed_without_flag():
    s = make_system("pl_interval", {"xs": [0, 0.5, 1], "ys": [0, 1, 0]})
    assert not s.invertible
    assert float(s.forward(0.25)) == 0.5


def test_phase_point():
    assert PhasePoint(0.1).dist(PhasePoint(0.9)) == pytest.approx(0.2)
    assert PhasePoint(1.0, INTERVAL).value == 1.0
    with pytest.raises(SystemError_):
        PhasePoint(1.0, CIRCLE)


@pytest.mark.parametrize("kind,params", HOMEOS)
def test_inverse_roundtrip_on_grid(kind, params):
    s = make_system(kind, params)
    x = np.linspace(0, 1, 1000, endpoint=s.space == INTERVAL)
    back = s.inverse(s.forward(x))
    d = oracles.circ if s.space == CIRCLE else oracles.line
    assert max(d(a, b) for a, b in zip(back, x)) <= 1e-12


@pytest.mark.parametrize("kind,params", HOMEOS)
def test_iterate_roundtrip(kind, params):
    s = make_system(kind, params)
    x = np.linspace(0.05, 0.95, 37)
    if kind == "interval_square":
        x = np.linspace(0.3, 0.7, 9)  # x^(2^20) underflows outside tiny neighbourhoods
    d = oracles.circ if s.space == CIRCLE else oracles.line
    # longer horizons collapse orbits onto the attractor in double precision
    for n in (1, 5):
        y = iterate(s, iterate(s, x, n), -n)
        assert max(d(a, b) for a, b in zip(y, x)) <= 1e-9


@pytest.mark.parametrize("kind,params", [h for h in HOMEOS if h[0] != "interval_square" and "space" not in h[1] and h[0] != "pl_interval"])
def test_lift_consistency(kind, params):
    s = make_system(kind, params)
    x = np.linspace(0, 1, 1000, endpoint=False)
    L = s.lift(x)
    assert np.all(np.vectorize(oracles.circ)(np.mod(L, 1.0), s.forward(x)) <= 1e-12)
    # degree relation L(x + 1) = L(x) + deg
    assert np.allclose(s.lift(x + 1.0) - L, s.degree, atol=1e-12)


def test_north_south_fixed_points_and_rates():
    for form in ("sine", "mobius"):
        s = make_system("north_south", {"lam": 0.3, "form": form})
        assert float(s.forward(0.0)) == 0.0
        assert float(s.forward(0.5)) == pytest.approx(0.5, abs=1e-15)
        h = 1e-6
        assert float(s.lift(h) - s.lift(-h)) / (2 * h) == pytest.approx(0.3, rel=1e-6)
        # the repeller is expanding
        assert float(s.lift(0.5 + h) - s.lift(0.5 - h)) / (2 * h) > 1.0
        x = np.linspace(0.01, 0.49, 50)
        assert np.all(s.forward(x) < x)


def test_sine_form_matches_formula():
    s = make_system("north_south", {"lam": 0.5})
    lift = oracles.sine_north_south_lift(0.5)
    for x in np.linspace(0, 1, 11):
        assert float(s.lift(x)) == pytest.approx(lift(x), abs=1e-15)


def test_morse_smale_period_four():
    s = make_system("morse_smale", {"lam": 0.5, "petals": 4, "shift": 1})
    orb = orbit(s, np.array(0.0), 5)
    assert np.allclose(orb.ravel(), [0, 0.25, 0.5, 0.75, 0.0], atol=1e-15)


def test_mp_paths_agree_with_numpy():
    import mpmath

    for kind, params in HOMEOS:
        s = make_system(kind, params)
        for x in (0.1, 0.37, 0.8):
            assert float(s.forward_mp(x)) == pytest.approx(float(s.forward(x)), abs=1e-12)
            assert float(s.inverse_mp(x)) == pytest.approx(float(s.inverse(x)), abs=1e-11)
    with mpmath.workprec(200):
        sq = make_system("interval_square")
        y = mpmath.mpf("0.5")
        for _ in range(30):
            y = sq.forward_mp(y)
        assert y > 0  # no underflow at high precision


@settings(max_examples=300, deadline=None)
@given(unit, unit, unit, st.integers(1, 8))
def test_dk_metric_axioms_and_monotone(x, y, z, k):
    for s in (make_system("doubling"), make_system("north_south", {"lam": 0.5})):
        dxy = float(dyn_distance(s, x, y, k))
        assert dxy == float(dyn_distance(s, y, x, k))
        assert float(dyn_distance(s, x, x, k)) == 0.0
        assert dxy <= float(dyn_distance(s, x, z, k)) + float(dyn_distance(s, z, y, k)) + 1e-15
        assert dxy <= float(dyn_distance(s, x, y, k + 1))


@settings(max_examples=200, deadline=None)
@given(unit, unit, st.integers(1, 10))
def test_dk_matches_oracle(x, y, k):
    s = make_system("doubling")
    assert float(dyn_distance(s, x, y, k)) == pytest.approx(oracles.dk(oracles.doubling, x, y, k), abs=1e-12)


def test_dyn_distance_matrix_matches_pairs_and_workers():
    s = make_system("doubling")
    pts = np.linspace(0, 1, 50, endpoint=False)
    M = dyn_distance_matrix(s, pts, 4)
    ref = np.array([[oracles.dk(oracles.doubling, a, b, 4) for b in pts] for a in pts])
    assert np.abs(M - ref).max() <= 1e-12
    assert np.array_equal(M, dyn_distance_matrix(s, pts, 4, workers=4))


def test_orbit_segment():
    seg = orbit_segment(make_system("doubling"), 0.1, 4)
    assert seg.length == 4
    assert seg.points == pytest.approx((0.1, 0.2, 0.4, 0.8))
    with pytest.raises(SystemError_):
        orbit(make_system("doubling"), 0.1, 0)


def test_omega_limit_examples():
    ns = make_system("north_south", {"lam": 0.5})
    assert omega_limit_estimate(ns, 0.25).to_list() == [0.0]
    rot = make_system("rotation", {"theta": 1 / 3})
    assert omega_limit_estimate(rot, 0.0).values == pytest.approx((0.0, 1 / 3, 2 / 3), abs=1e-9)
    irr = make_system("rotation", {"theta": math.sqrt(2) - 1})
    est = omega_limit_estimate(irr, 0.0, tol=0.05)
    assert len(est) >= 20
    # 0.05-dense: every grid point is within 0.05 of a cluster representative
    v = est.array
    grid = np.linspace(0, 1, 1000, endpoint=False)
    assert max(min(oracles.circ(g, c) for c in v) for g in grid) <= 0.05


def test_alpha_limit():
    ns = make_system("north_south", {"lam": 0.5})
    assert omega_limit_estimate(ns, 0.25, direction=-1).values == pytest.approx((0.5,), abs=1e-9)
    with pytest.raises(SystemError_):
        omega_limit_estimate(make_system("doubling"), 0.1, direction=-1)


def test_cluster_points_separated_clusters():
    pts = np.array([0.999999, 0.0000001, 0.3, 0.3000001, 0.7])
    reps = cluster_points(pts, 1e-3, CIRCLE)
    assert len(reps) == 3


def test_kinds_are_constructible():
    for k in KINDS:
        if k in ("pl_circle", "pl_interval"):
            continue
        make_system(k, {"lam": 0.5} if k in ("north_south", "morse_smale") else {})
