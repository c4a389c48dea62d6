import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdim.hyperspace import (
    ArcPoint,
    FinitePoint,
    HyperspaceError,
    arc_dyn_distance_matrix,
    arc_iterate,
    arc_net,
    cross_hausdorff_arrays,
    dyn_ball_conditions,
    hausdorff,
    hausdorff_arcs,
    hyper_dyn_distance_matrix,
    hyper_net,
    hyper_net_size,
    in_dyn_ball,
    induced_apply,
    induced_apply_arc,
    induced_dyn_distance,
    induced_dyn_distance_arcs,
    pad_sets,
)
from hyperdim.systems import make_system

import oracles

unit = st.floats(0.0, 1.0, allow_nan=False, exclude_max=True)
finite_sets = st.lists(unit, min_size=1, max_size=6)


def F(*v, space="circle"):
    return FinitePoint.of(list(v), space)


def test_finite_point_normalizes():
    A = F(0.5, 0.1, 0.5 + 1e-14, 1.0)
    assert A.values == (0.0, 0.1, 0.5)
    with pytest.raises(HyperspaceError):
        FinitePoint.of([])
    assert F(1.0, space="interval").values == (1.0,)


def test_hausdorff_examples():
    A = F(0.2, 0.7)
    assert hausdorff(A, A) == 0.0
    assert hausdorff(F(0.0), F(0.5)) == 0.5
    assert hausdorff(F(0.0, 0.25), F(0.1)) == pytest.approx(0.15)
    assert hausdorff(F(0.0, 0.25), F(0.1)) == pytest.approx(oracles.hausdorff([0.0, 0.25], [0.1]))
    with pytest.raises(HyperspaceError):
        hausdorff(F(0.1), F(0.1, space="interval"))


@settings(max_examples=300, deadline=None)
@given(finite_sets, finite_sets, finite_sets)
def test_hausdorff_metric_axioms_and_oracle(a, b, c):
    A, B, C = F(*a), F(*b), F(*c)
    ab = hausdorff(A, B)
    assert ab == pytest.approx(oracles.hausdorff(A.values, B.values), abs=1e-15)
    assert ab == hausdorff(B, A)
    assert ab <= hausdorff(A, C) + hausdorff(C, B) + 1e-15
    assert (ab == 0) == (A == B)


def test_arc_examples():
    A = ArcPoint.of(0.1, 0.3)
    assert hausdorff_arcs(A, A) == 0.0
    I1, I2 = ArcPoint.of(0, 0.5, "interval"), ArcPoint.of(0.25, 0.75, "interval")
    assert hausdorff_arcs(I1, I2) == pytest.approx(0.25)
    assert oracles.hausdorff_arcs_sampled((0, 0.5), (0.25, 0.75), "interval", 1001) == pytest.approx(0.25, abs=1e-3)
    # singleton {0} against [0.4, 0.6]: the far end of the arc is 0.4 away but
    # its midpoint 0.5 sits at distance 0.5, so the Hausdorff distance is 0.5
    S, B = ArcPoint.of(0.0, 0.0), ArcPoint.of(0.4, 0.6)
    assert hausdorff_arcs(S, B) == pytest.approx(0.5)
    assert oracles.hausdorff_arcs_sampled((0.0, 0.0), (0.4, 0.6), "circle", 1001) == pytest.approx(0.5, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(unit, unit, unit, unit)
def test_arc_agrees_with_sampled_sets(a1, b1, a2, b2):
    A, B = ArcPoint.of(a1, b1), ArcPoint.of(a2, b2)
    sampled = hausdorff(A.sample(200), B.sample(200))
    assert abs(hausdorff_arcs(A, B) - sampled) <= 2 / 200
    Ai, Bi = ArcPoint.of(a1, b1, "interval"), ArcPoint.of(a2, b2, "interval")
    assert abs(hausdorff_arcs(Ai, Bi) - hausdorff(Ai.sample(200), Bi.sample(200))) <= 2 / 200


def test_induced_apply_examples():
    ident, dbl, rot = make_system("identity"), make_system("doubling"), make_system("rotation", {"theta": 0.25})
    A = F(0.1, 0.6)
    assert induced_apply(ident, A) == A
    assert induced_apply(dbl, A).values == pytest.approx((0.2,))
    assert induced_apply(rot, F(0.0, 0.5)).values == (0.25, 0.75)


def test_induced_apply_arc_examples():
    arc = ArcPoint.of(0.0, 0.5)
    assert induced_apply_arc(make_system("identity"), arc) == arc
    assert induced_apply_arc(make_system("rotation", {"theta": 0.25}), arc).to_list() == [0.25, 0.75]
    img = induced_apply_arc(make_system("reflection"), ArcPoint.of(0.1, 0.2))
    assert img.to_list() == pytest.approx([0.8, 0.9])
    # the image arc contains exactly the images of sampled points
    pts = ArcPoint.of(0.1, 0.2).sample(101).array
    assert img.contains((-pts) % 1.0 + 0 * pts).all()
    with pytest.raises(HyperspaceError, match="homeomorphism"):
        induced_apply_arc(make_system("doubling"), arc)


def test_arc_iterate_roundtrip():
    ns = make_system("north_south", {"lam": 0.5})
    arc = ArcPoint.of(0.1, 0.3)
    back = arc_iterate(ns, arc_iterate(ns, arc, 3), -3)
    assert back.to_list() == pytest.approx(arc.to_list(), abs=1e-12)


def test_induced_dyn_distance_examples():
    rot = make_system("rotation", {"theta": 0.3})
    A, B = F(0.1, 0.4), F(0.7)
    for k in (1, 3, 7):
        assert induced_dyn_distance(rot, A, B, k) == pytest.approx(hausdorff(A, B), abs=1e-12)
        assert induced_dyn_distance(rot, A, A, k) == 0.0
    dbl = make_system("doubling")
    assert induced_dyn_distance(dbl, F(0.0), F(0.1), 3) == pytest.approx(0.4)
    with pytest.raises(HyperspaceError):
        induced_dyn_distance(dbl, A, B, 0)


def test_rotation_isometry_lifts():
    rot = make_system("rotation", {"theta": 0.1234})
    rng = np.random.default_rng(0)
    for _ in range(1000):
        A = F(*rng.random(rng.integers(1, 5)))
        B = F(*rng.random(rng.integers(1, 5)))
        assert abs(hausdorff(induced_apply(rot, A), induced_apply(rot, B)) - hausdorff(A, B)) <= 1e-12


@settings(max_examples=150, deadline=None)
@given(finite_sets, finite_sets, st.integers(1, 6))
def test_Dk_matches_oracle_and_monotone(a, b, k):
    dbl = make_system("doubling")
    A, B = F(*a), F(*b)
    Dk = induced_dyn_distance(dbl, A, B, k)
    assert Dk == pytest.approx(oracles.Dk(oracles.doubling, A.values, B.values, k), abs=1e-12)
    assert hausdorff(A, B) <= Dk <= induced_dyn_distance(dbl, A, B, k + 1)


def test_in_dyn_ball_examples():
    dbl = make_system("doubling")
    C = F(0.2, 0.3)
    assert in_dyn_ball(dbl, C, C, 4, 1e-9)
    assert not in_dyn_ball(dbl, F(0.0), F(0.3), 3, 0.39)
    assert in_dyn_ball(dbl, F(0.0), F(0.3), 3, 0.41)


@settings(max_examples=200, deadline=None)
@given(unit, finite_sets, st.integers(1, 5), st.floats(0.01, 0.5))
def test_singleton_ball_characterization(x, c, k, eps):
    dbl = make_system("doubling")
    C = F(*c)
    direct = max(oracles.dk(oracles.doubling, x, y, k) for y in C.values) < eps
    assert in_dyn_ball(dbl, F(x), C, k, eps) == direct
    cov, meet = dyn_ball_conditions(dbl, F(x), C, k, eps)
    assert (cov and meet) == direct


@settings(max_examples=200, deadline=None)
@given(finite_sets, finite_sets, st.integers(1, 4), st.floats(0.01, 0.5))
def test_decomposed_ball_is_sufficient(m, c, k, eps):
    dbl = make_system("doubling")
    marks, C = F(*m), F(*c)
    cov, meet = dyn_ball_conditions(dbl, marks, C, k, eps)
    if cov and meet:
        assert in_dyn_ball(dbl, marks, C, k, eps)


def test_decomposed_ball_not_necessary():
    # D_2 < 0.2, yet partners swap between levels so no pointwise ball works
    dbl = make_system("doubling")
    marks, C = F(0.0, 0.3), F(0.45, 0.85)
    assert induced_dyn_distance(dbl, marks, C, 2) == pytest.approx(0.15)
    assert oracles.Dk(oracles.doubling, marks.values, C.values, 2) == pytest.approx(0.15)
    assert in_dyn_ball(dbl, marks, C, 2, 0.2)
    assert dyn_ball_conditions(dbl, marks, C, 2, 0.2) == (False, False)


def test_hyper_net_examples():
    net = hyper_net("circle", 2, 2)
    assert [s.values for s in net] == [(0.0,), (0.5,), (0.0, 0.5)]
    assert len(hyper_net("circle", 4, 1)) == 4
    assert len(hyper_net("circle", 10, 3)) == 175 == hyper_net_size(10, 3)
    with pytest.raises(HyperspaceError, match="4087975"):
        hyper_net("circle", 100, 4)


def test_arc_net_sizes():
    assert len(arc_net("circle", 5)) == 25
    assert len(arc_net("interval", 5)) == 15


def test_fast_hausdorff_matches_bruteforce():
    rng = np.random.default_rng(11)
    for space in ("circle", "interval"):
        for _ in range(30):
            P = [FinitePoint.of(rng.random(rng.integers(1, 6)), space) for _ in range(12)]
            Q = [FinitePoint.of(rng.random(rng.integers(1, 6)), space) for _ in range(9)]
            H = cross_hausdorff_arrays(pad_sets(P), pad_sets(Q), space)
            ref = np.array([[hausdorff(a, b) for b in Q] for a in P])
            assert np.array_equal(H, ref)


def test_hyper_dyn_matrix_matches_pairwise():
    ns = make_system("north_south", {"lam": 0.5})
    sets = hyper_net("circle", 8, 2)
    M = hyper_dyn_distance_matrix(ns, sets, 4)
    ref = np.array([[induced_dyn_distance(ns, a, b, 4) for b in sets] for a in sets])
    assert np.abs(M - ref).max() <= 1e-12
    assert np.array_equal(M, hyper_dyn_distance_matrix(ns, sets, 4, workers=3))
    others = hyper_net("circle", 5, 1)
    X = hyper_dyn_distance_matrix(ns, sets, 3, others)
    assert X.shape == (len(sets), 5)
    assert X[3, 2] == pytest.approx(induced_dyn_distance(ns, sets[3], others[2], 3), abs=1e-12)


def test_arc_dyn_matrix_matches_pairwise():
    ns = make_system("north_south", {"lam": 0.5})
    arcs = arc_net("circle", 6)
    M = arc_dyn_distance_matrix(ns, arcs, 3)
    assert M[4, 17] == pytest.approx(induced_dyn_distance_arcs(ns, arcs[4], arcs[17], 3))
    assert np.allclose(M, M.T)
