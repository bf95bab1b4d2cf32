import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotset.dynamics import DomainError
from rotset.evolve import BoxSet, RotationApprox
from rotset.geometry import (BoxUnion, boundary_samples, convex_hull, covered_by_neighborhood,
                             distance_to_approx, distance_to_polygon, hausdorff_boxes,
                             hausdorff_points, hausdorff_polygons, hausdorff_to_polygon,
                             rectangle)
from rotset.sampling import sample_Kn


def _approx(boxes, k=1, n=1):
    return RotationApprox("t", k, n, 0.0, 2, 2.0, True, BoxSet.from_boxes(boxes, k))


def _strictly_convex(P):
    v = P.vertices
    a, b, c = v, np.roll(v, -1, 0), np.roll(v, -2, 0)
    cr = (b[:, 0] - a[:, 0]) * (c[:, 1] - b[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - b[:, 0])
    return np.all(cr > 0)


def test_hull_square():
    P = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert len(P.vertices) == 4 and _strictly_convex(P)


def test_hull_point_and_segment():
    assert convex_hull([(2, 3)]).vertices.tolist() == [[2, 3]]
    seg = convex_hull([(0, 0), (1, 1), (2, 2), (0.5, 0.5)])
    assert seg.degenerate and seg.vertices.tolist() == [[0, 0], [2, 2]]


def test_hull_drops_collinear_edge_points():
    P = convex_hull([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    assert len(P.vertices) == 4


def test_hull_empty():
    with pytest.raises(DomainError):
        convex_hull(np.zeros((0, 2)))


def test_hull_disc_containment(rng):
    r = np.sqrt(rng.uniform(0, 1, 1000))
    th = rng.uniform(0, 2 * np.pi, 1000)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], 1)
    P = convex_hull(pts)
    assert _strictly_convex(P)
    assert {tuple(v) for v in P.vertices} <= {tuple(p) for p in pts}
    assert distance_to_polygon(pts, P).max() <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=60))
def test_hull_idempotent(pts):
    P = convex_hull(pts)
    assert convex_hull(P.vertices) == P


def test_hausdorff_points_examples():
    A = np.array([(0, 0), (1, 0), (0, 1), (1, 1)], float)
    assert hausdorff_points(A, A) == 0
    assert hausdorff_points([(0, 0)], [(3, 4)]) == 5
    assert hausdorff_points(A, np.vstack([A, (0.5, 0.5)])) == pytest.approx(math.sqrt(2) / 2)


def test_hausdorff_points_symmetry(rng):
    A, B = rng.normal(size=(50, 2)), rng.normal(size=(70, 2))
    d = hausdorff_points(A, B)
    assert d == hausdorff_points(B, A) >= 0
    brute = max(np.hypot(*(A[:, None] - B[None]).transpose(2, 0, 1)).min(1).max(),
                np.hypot(*(B[:, None] - A[None]).transpose(2, 0, 1)).min(1).max())
    assert d == pytest.approx(brute, rel=1e-15)


def test_hausdorff_points_empty():
    with pytest.raises(DomainError):
        hausdorff_points([], [(0, 0)])


def test_distance_to_polygon():
    P = rectangle(0, 1, 0, 1)
    d = distance_to_polygon([(0.5, 0.5), (2, 0.5), (2, 2), (1, 1)], P)
    assert d.tolist() == pytest.approx([0, 1, math.sqrt(2), 0])
    seg = convex_hull([(0, 0), (2, 0)])
    assert distance_to_polygon([(1, 1), (3, 0)], seg).tolist() == pytest.approx([1, 1])


def test_boundary_samples_spacing():
    s = boundary_samples(rectangle(0, 1, 0, 2), 0.01)
    assert len(s) == 600
    assert distance_to_polygon(s, rectangle(0, 1, 0, 2)).max() == 0


def test_hausdorff_to_polygon_unit_square():
    Q = _approx([(0, 0)])
    assert hausdorff_to_polygon(Q, rectangle(0, 1, 0, 1)) == 0
    assert hausdorff_to_polygon(Q, rectangle(0, 2, 0, 1), 1e-3) == pytest.approx(1, abs=1e-3)


def test_hausdorff_to_polygon_adding_boxes():
    P = rectangle(0, 3, 0, 1)
    small = hausdorff_to_polygon(_approx([(0, 0)]), P)
    bigger = hausdorff_to_polygon(_approx([(0, 0), (1, 0)]), P)
    assert bigger <= small + 1e-3


def test_covered_by_neighbourhood():
    Q = _approx([(0, 0), (3, 3)])
    assert covered_by_neighborhood([(0.2, 0.7), (3.5, 3.5)], Q, 0.0)
    assert not covered_by_neighborhood([(2, 0.5)], Q, 0.5)
    assert covered_by_neighborhood([(2, 0.5)], Q, 1.0)


def test_box_union_distance_brute_force(rng):
    boxes = rng.integers(-6, 6, (40, 2))
    Q = _approx(boxes, k=2, n=3)
    s = Q.scale
    p = rng.uniform(-2, 2, (500, 2))
    lo, hi = boxes * s, (boxes + 1) * s
    gx = np.maximum(np.maximum(lo[None, :, 0] - p[:, None, 0], 0), p[:, None, 0] - hi[None, :, 0])
    gy = np.maximum(np.maximum(lo[None, :, 1] - p[:, None, 1], 0), p[:, None, 1] - hi[None, :, 1])
    brute = np.hypot(gx, gy).min(1)
    assert np.allclose(BoxUnion(Q.boxes, s).distance(p), brute, atol=1e-15)


def test_polygon_and_box_hausdorff():
    assert hausdorff_polygons(rectangle(0, 1, 0, 1), rectangle(0, 2, 0, 1)) == 1
    Q = _approx([(0, 0), (1, 0)])
    assert hausdorff_boxes(Q, Q)[0] == 0
    v, err = hausdorff_boxes(_approx([(0, 0)]), Q)
    assert v == pytest.approx(1) and err == 0.5


@pytest.mark.parametrize("n", [5, 10, 25])
def test_hull_of_Kn_near_samples(f11, n):
    K = sample_Kn(f11, n, 200)
    P = convex_hull(K)
    from scipy.spatial import cKDTree
    d, _ = cKDTree(K).query(P.vertices)
    assert d.max() <= 3 * math.sqrt(2) / n
