import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratahjb import DuplicateHyperplane, Hyperplane, NonPositiveDimension, PointNotInClosure, build_stratification
from stratahjb.stratification import CELL, INTERFACE, INTERSECTION

ONE = build_stratification([Hyperplane(0, 0.0)], d=2)
CROSS = build_stratification([Hyperplane(0, 0.0), Hyperplane(1, 0.0)], d=2, snap_tolerance=1e-12)


def test_single_plane_counts():
    assert ONE.n_strata == 3
    assert [s.dim for s in ONE.cells()] == [2, 2]
    assert [s.dim for s in ONE.interfaces()] == [1]


def test_two_orthogonal_planes():
    kinds = [s.kind for s in CROSS.strata]
    assert CROSS.n_strata == 9
    assert kinds.count(CELL) == 4
    assert kinds.count(INTERFACE) == 4
    assert kinds.count(INTERSECTION) == 1
    assert CROSS[CROSS.id_of((0, 0))].dim == 0


def test_empty_separator_set():
    S = build_stratification([], d=1)
    assert S.n_strata == 1
    assert S[0].kind == CELL


def test_strata_count_rule():
    S = build_stratification([Hyperplane(0, 0.0), Hyperplane(0, 1.0), Hyperplane(1, -0.5)], d=2)
    assert S.n_strata == (2 * 2 + 1) * (2 * 1 + 1)


def test_rejects_bad_input():
    with pytest.raises(DuplicateHyperplane):
        build_stratification([Hyperplane(0, 0.0), Hyperplane(0, 0.0)], d=2)
    with pytest.raises(NonPositiveDimension):
        build_stratification([], d=0)


def test_locate_examples():
    assert ONE[ONE.locate([0.5, -0.2])].signature == (1,)
    assert ONE[ONE.locate([0.0, 3.0])].signature == (0,)
    assert CROSS[CROSS.locate([1e-15, 1e-15])].signature == (0, 0)


def test_tangent_cones():
    gamma = ONE.id_of((0,))
    cone = ONE.tangent_cone(gamma, [0.0, 1.0])
    assert cone.contains([0.0, 5.0])
    assert not cone.contains([0.1, 0.0])
    half = ONE.tangent_cone(gamma, [0.0, 1.0], closure_of=ONE.id_of((1,)))
    assert half.contains([3.0, -2.0])
    assert half.contains([0.0, 1.0])
    assert not half.contains([-1e-3, 0.0])
    origin = CROSS.tangent_cone(CROSS.id_of((0, 0)), [0.0, 0.0])
    assert origin.contains([0.0, 0.0])
    assert origin.contains([1e-13, 0.0], tolerance=1e-12)
    assert not origin.contains([1e-6, 0.0], tolerance=1e-12)


def test_tangent_cone_requires_closure():
    with pytest.raises(PointNotInClosure):
        ONE.tangent_cone(ONE.id_of((1,)), [-1.0, 0.0])


def test_projections():
    gamma = ONE.id_of((0,))
    assert np.allclose(ONE.project_to_stratum(gamma, [3.0, 4.0]), [0.0, 4.0])
    assert ONE.distance_to_stratum(gamma, [3.0, 4.0]) == pytest.approx(3.0)
    o = CROSS.id_of((0, 0))
    assert np.allclose(CROSS.project_to_stratum(o, [3.0, 4.0]), [0.0, 0.0])
    assert CROSS.distance_to_stratum(o, [3.0, 4.0]) == pytest.approx(5.0)
    assert np.array_equal(ONE.project_to_stratum(gamma, [0.0, 2.5]), [0.0, 2.5])
    assert ONE.distance_to_stratum(gamma, [0.0, 2.5]) == 0.0


def test_star_matches_closure_relation():
    for s in CROSS.strata:
        for m in CROSS.star(s.id):
            big = CROSS[m].signature
            assert all(a == 0 or a == b for a, b in zip(s.signature, big))


def test_records_round_trip():
    recs = CROSS.to_records()
    again = build_stratification([Hyperplane(r["axis"], r["offset"]) for r in recs], d=2)
    assert [s.signature for s in again.strata] == [s.signature for s in CROSS.strata]


coords = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(coords, min_size=2, max_size=2), st.sampled_from([None, 0.0, 1e-13, -1e-13]))
def test_locate_is_a_partition(x, jitter):
    """Exactly one stratum contains the snapped point."""
    x = np.array(x)
    if jitter is not None:
        x[0] = jitter
    y = CROSS.snap_point(x)
    sig = tuple(int(np.sign(y[h.axis] - h.offset)) for h in CROSS.hyperplanes)
    hits = [s.id for s in CROSS.strata if s.signature == sig]
    assert hits == [CROSS.locate(x)]


@settings(max_examples=200, deadline=None)
@given(st.lists(coords, min_size=2, max_size=2))
def test_projection_distance_consistent(x):
    x = np.array(x)
    for s in CROSS.strata:
        p = CROSS.project_to_stratum(s.id, x)
        assert abs(np.linalg.norm(x - p) - CROSS.distance_to_stratum(s.id, x)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.lists(st.floats(-5, 5).filter(lambda a: a == 0 or abs(a) > 1e-6), min_size=2, max_size=2))
def test_half_space_cone_duality(x2, v):
    """A direction is in the closure cone of a cell iff a short step along it stays in the closure."""
    v = np.array(v)
    gamma = ONE.id_of((0,))
    for cell in ONE.cells():
        cone = ONE.tangent_cone(gamma, [0.0, x2], closure_of=cell.id)
        inside = ONE.point_in_closure(cell.id, np.array([0.0, x2]) + 1e-3 * v, snap=0.0)
        assert cone.contains(v) == inside
        assert cone.distance(cone.project(v)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 8))
def test_sampled_points_locate_to_their_stratum(sid):
    pts = CROSS.sample_points(sid, 5, (-2.0, 2.0), np.random.default_rng(sid))
    assert all(CROSS.locate(p) == sid for p in pts)
