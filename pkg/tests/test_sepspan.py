import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdim.hyperspace import FinitePoint, hyper_net, induced_dyn_distance
from hyperdim.sepspan import (
    BASE,
    CURVE_COLUMNS,
    HYPER_ARC,
    HYPER_FINITE,
    SepSpanError,
    default_targets_spec,
    dyn_matrix,
    entropy_estimate,
    entropy_fit,
    fit_log_growth,
    make_pool,
    max_separated,
    min_spanning,
    mmdim_estimate,
)
from hyperdim.systems import dyn_distance, make_system

import oracles

ROT = make_system("rotation", {"theta": 0.1234})
DBL = make_system("doubling")


def grid(n, space="circle"):
    return make_pool(BASE, space, {"kind": "grid", "n": n})


@pytest.mark.parametrize("k", [1, 4, 9])
def test_rotation_sep_is_three(k):
    for method in ("exact", "greedy"):
        r = max_separated(BASE, ROT, grid(1000), k, 0.3, method)
        assert r.cardinality == 3
        assert r.certified


def test_eps_above_diameter():
    r = max_separated(BASE, DBL, grid(200), 3, 0.6, "exact")
    assert r.cardinality == 1
    s = min_spanning(BASE, DBL, grid(50), grid(200), 3, 0.6, "exact")
    assert s.cardinality == 1


def test_doubling_sep_sixteen():
    r = max_separated(BASE, DBL, grid(512), 3, 0.25, "exact")
    assert r.cardinality == 16 == math.floor(1 / 0.25) * 2 ** (3 - 1)
    pts = list(r.family)
    assert min(oracles.dk(oracles.doubling, a, b, 3) for i, a in enumerate(pts) for b in pts[i + 1:]) >= 0.25


def test_sep_matches_bruteforce_oracle():
    pts = [float(x) for x in grid(14)]
    for sys, f in ((DBL, oracles.doubling), (ROT, oracles.rotation(0.1234))):
        for k, eps in ((1, 0.2), (2, 0.3), (3, 0.15)):
            got = max_separated(BASE, sys, grid(14), k, eps, "exact").cardinality
            # the conflict tolerance is 1e-12; grid distances sit well clear of eps
            assert got == oracles.sep_bruteforce(f, pts, k, eps)


def test_span_matches_bruteforce_oracle():
    pool, targets = grid(10), grid(30)
    for sys, f in ((DBL, oracles.doubling), (ROT, oracles.rotation(0.1234))):
        # eps off the 1/30 lattice, away from the 1e-12 tie tolerance
        for k, eps in ((1, 0.21), (2, 0.31), (3, 0.17)):
            got = min_spanning(BASE, sys, pool, targets, k, eps, "exact").cardinality
            assert got == oracles.span_bruteforce(f, list(pool), list(targets), k, eps)


def test_rotation_span_golden():
    pool = grid(400)
    r = min_spanning(BASE, ROT, pool, pool, 3, 0.3, "exact")
    assert r.cardinality == 2
    assert r.certified and r.min_distance < 0.3
    assert oracles.span_bruteforce(oracles.rotation(0.1234), list(grid(40)), list(grid(40)), 3, 0.3) == 2


@pytest.mark.parametrize("k,eps", [(1, 0.1), (2, 0.2), (3, 0.15), (4, 0.3)])
def test_sandwich(k, eps):
    pool = grid(60)
    for sys in (DBL, ROT, make_system("north_south", {"lam": 0.5})):
        span = min_spanning(BASE, sys, pool, pool, k, eps, "exact").cardinality
        sep = max_separated(BASE, sys, pool, k, eps, "exact").cardinality
        span_half = min_spanning(BASE, sys, pool, pool, k, eps / 2, "exact").cardinality
        assert span <= sep <= span_half


def test_monotone_in_eps_and_k():
    pool = grid(128)
    sep = {(k, e): max_separated(BASE, DBL, pool, k, e, "exact").cardinality
           for k in (1, 2, 3, 4) for e in (0.1, 0.2, 0.3)}
    for k in (1, 2, 3, 4):
        assert sep[(k, 0.1)] >= sep[(k, 0.2)] >= sep[(k, 0.3)]
    for e in (0.1, 0.2, 0.3):
        assert sep[(1, e)] <= sep[(2, e)] <= sep[(3, e)] <= sep[(4, e)]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.45))
def test_greedy_family_spans_pool(k, eps):
    pool = grid(90)
    r = max_separated(BASE, DBL, pool, k, eps, "greedy")
    D = dyn_matrix(BASE, DBL, pool, k)
    # maximality: every pool point is within eps of a chosen member
    assert (D[:, r.indices] <= eps - 1e-12).any(axis=1).all()
    s = min_spanning(BASE, DBL, r.family, pool, k, eps + 1e-9, "greedy")
    assert s.cardinality <= r.cardinality


def test_determinism():
    pool = grid(300)
    a = max_separated(BASE, DBL, pool, 4, 0.12, "greedy")
    b = max_separated(BASE, DBL, pool, 4, 0.12, "greedy", workers=3)
    assert a.indices == b.indices
    c = max_separated(BASE, DBL, grid(120), 3, 0.12, "exact")
    d = max_separated(BASE, DBL, grid(120), 3, 0.12, "exact")
    assert c.to_dict() == d.to_dict()


def test_errors():
    with pytest.raises(SepSpanError, match="empty"):
        max_separated(BASE, DBL, np.array([]), 1, 0.1)
    with pytest.raises(SepSpanError, match="greedy"):
        max_separated(BASE, DBL, grid(2001), 1, 0.1, "exact")
    with pytest.raises(SepSpanError, match="greedy"):
        min_spanning(BASE, DBL, grid(501), grid(10), 1, 0.1, "exact")
    with pytest.raises(SepSpanError, match="target 1"):
        min_spanning(BASE, DBL, np.array([0.0]), np.array([0.0, 0.5]), 1, 0.1, "exact")
    with pytest.raises(SepSpanError):
        max_separated(BASE, DBL, grid(10), 0, 0.1)
    with pytest.raises(SepSpanError):
        make_pool(BASE, "circle", {"kind": "hyper_net", "grid": 4, "max_card": 2})


def test_hyper_finite_scope():
    ns = make_system("north_south", {"lam": 0.5})
    pool = make_pool(HYPER_FINITE, "circle", {"kind": "hyper_net", "grid": 8, "max_card": 2})
    r = max_separated(HYPER_FINITE, ns, pool, 3, 0.2, "exact")
    fam = r.family
    for i, A in enumerate(fam):
        for B in fam[i + 1:]:
            assert induced_dyn_distance(ns, A, B, 3) >= 0.2 - 1e-12
    assert r.cardinality >= max_separated(HYPER_FINITE, ns, make_pool(HYPER_FINITE, "circle", {"kind": "grid", "n": 8}), 3, 0.2, "exact").cardinality
    s = min_spanning(HYPER_FINITE, ns, pool, pool, 3, 0.2, "exact")
    assert s.cardinality <= r.cardinality


def test_singleton_hyper_scope_matches_base():
    pool = make_pool(HYPER_FINITE, "circle", {"kind": "grid", "n": 64})
    for k, eps in ((2, 0.1), (3, 0.2)):
        a = max_separated(HYPER_FINITE, DBL, pool, k, eps, "exact").cardinality
        b = max_separated(BASE, DBL, grid(64), k, eps, "exact").cardinality
        assert a == b


def test_hyper_arc_scope():
    pool = make_pool(HYPER_ARC, "circle", {"kind": "arc_net", "grid": 6})
    r = max_separated(HYPER_ARC, ROT, pool, 3, 0.3, "exact")
    assert r.certified and r.cardinality >= 3


def test_default_targets():
    assert default_targets_spec(BASE, {"kind": "grid", "n": 100}) == {"kind": "grid", "n": 400}
    spec = {"kind": "hyper_net", "grid": 4, "max_card": 2}
    assert default_targets_spec(HYPER_FINITE, spec) == spec


def test_fit_log_growth():
    ks = [3, 4, 5, 6]
    s, r = fit_log_growth(ks, [2 ** k for k in ks])
    assert s == pytest.approx(math.log(2)) and r == pytest.approx(0, abs=1e-12)
    assert fit_log_growth(ks, [1, 1, 1, 1]) == (0.0, 0.0)


def test_entropy_zero_cases():
    assert entropy_estimate(ROT, 0.1, range(2, 7), {"kind": "grid", "n": 500}) == 0.0
    assert entropy_estimate(make_system("identity"), 0.1, range(2, 7), {"kind": "grid", "n": 500}) == 0.0
    with pytest.raises(SepSpanError):
        entropy_estimate(ROT, 0.1, [1, 2], {"kind": "grid", "n": 50})


def test_doubling_entropy_on_dyadic_pool():
    # dyadic grid points separate at exactly the dyadic eps, so Sep = 2^(k+5)
    fit = entropy_fit(DBL, 2 ** -6, range(4, 9), {"kind": "grid", "n": 2 ** 13}, method="greedy")
    assert fit.seps == [2 ** (k + 5) for k in range(4, 9)]
    assert fit.value == pytest.approx(math.log(2), rel=1e-9)


def test_mmdim_rotation_and_induced_rotation():
    curve = mmdim_estimate(ROT, [0.4, 0.3, 0.2, 0.1], range(2, 6), {"kind": "grid", "n": 400})
    assert curve.ratios == [0.0] * 4 and curve.slope == 0.0
    hyper = mmdim_estimate(ROT, [0.4, 0.3, 0.2, 0.15], range(2, 5),
                           {"kind": "hyper_net", "grid": 8, "max_card": 2}, scope=HYPER_FINITE)
    assert hyper.ratios == [0.0] * 4


def test_mmdim_doubling_ratios_decrease():
    eps = [0.2, 0.1, 0.05, 0.025, 0.0125]
    curve = mmdim_estimate(DBL, eps, range(3, 7), {"kind": "grid", "n": 1024}, method="greedy")
    r = curve.ratios
    assert all(h >= 0 for h in curve.h)
    assert r[-1] < r[1]
    # ratios are h/(-log eps) with h below log 2
    assert max(r) <= math.log(2) / -math.log(eps[0]) + 0.1
    csv_text = curve.to_csv()
    assert csv_text.splitlines()[0] == ",".join(CURVE_COLUMNS)
    assert len(csv_text.splitlines()) == 6


def test_mmdim_grid_validation():
    spec = {"kind": "grid", "n": 50}
    with pytest.raises(SepSpanError, match="4 points"):
        mmdim_estimate(ROT, [0.3, 0.2, 0.1], range(2, 5), spec)
    with pytest.raises(SepSpanError, match="decreasing"):
        mmdim_estimate(ROT, [0.3, 0.2, 0.25, 0.1], range(2, 5), spec)
    with pytest.raises(SepSpanError):
        mmdim_estimate(ROT, [1.5, 0.2, 0.15, 0.1], range(2, 5), spec)


def test_exact_span_hard_instance():
    # needed dominance reductions to finish within the node limit
    tent = make_system("tent", {"slope": 2})
    pool = grid(66)
    span = min_spanning(BASE, tent, pool, pool, 5, 0.19474220857150593, "exact")
    greedy = min_spanning(BASE, tent, pool, pool, 5, 0.19474220857150593, "greedy")
    assert span.certified and span.cardinality <= greedy.cardinality
