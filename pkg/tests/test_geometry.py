import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from oracles import mvee_logdet_volume, quadric_inside, sampled_clipped_length, sampled_segment_hits, sphere_inside
from taskcomplexity.geometry import (EdgeSegment, Ellipsoid3, MinimumVolumeEllipsoid, NodeSphere, Sphere3,
                                     clipped_length, element_in_region, mvee, node_angle)

coords = st.floats(-10, 10, allow_nan=False)
points3 = st.tuples(coords, coords, coords).map(np.array)


def random_ellipsoid(rng):
    axes = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
    return Ellipsoid3.from_axes(rng.normal(size=3), axes, rng.uniform(0.2, 2.0, size=3))


def test_node_angle_examples():
    assert node_angle([-1, 0, 0], [0, 0, 0], [1, 0, 0]) == pytest.approx(180.0)
    assert node_angle([1, 0, 0], [0, 0, 0], [0, 2, 0]) == pytest.approx(90.0)
    assert node_angle([1, 0, 0], [0, 0, 0], [3, 0, 0]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        node_angle([0, 0, 0], [0, 0, 0], [1, 0, 0])


@given(points3, points3, points3, st.floats(0.01, 100))
def test_node_angle_rigid_and_scale_invariant(a, w, b, s):
    if np.linalg.norm(a - w) < 1e-3 or np.linalg.norm(b - w) < 1e-3:
        return
    R = Rotation.from_euler("xyz", [0.3, -1.1, 2.0]).as_matrix()
    t = np.array([1.5, -2.0, 0.25])
    before = node_angle(a, w, b)
    after = node_angle(s * R @ a + t, s * R @ w + t, s * R @ b + t)
    assert 0.0 <= before <= 180.0
    assert after == pytest.approx(before, abs=1e-9)


def test_ellipsoid_validation_and_json():
    with pytest.raises(ValueError):
        Ellipsoid3(np.zeros(3), np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        Ellipsoid3(np.zeros(3), np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]]))
    E = Ellipsoid3.from_axes([1, 2, 3], np.eye(3), [1.0, 2.0, 3.0])
    assert np.allclose(E.semi_axes, [1, 2, 3])
    assert E.volume == pytest.approx(4 / 3 * math.pi * 6)
    F = Ellipsoid3.from_json(E.to_json())
    assert np.array_equal(F.form, E.form) and np.array_equal(F.center, E.center)
    assert E.contains([1, 2, 5.9])[0] and not E.contains([1, 2, 6.1])[0]


def test_element_in_region_examples():
    S = Sphere3([0, 0, 0], 1.0)
    assert element_in_region(EdgeSegment(np.array([-2.0, 0, 0]), np.array([2.0, 0, 0])), S)
    assert not element_in_region(EdgeSegment(np.array([3.0, 3, 3]), np.array([4.0, 5, 3])), S)
    assert element_in_region(NodeSphere(np.array([0.5, 0, 0])), S)
    assert not element_in_region(NodeSphere(np.array([1.005, 0, 0]), 0.01), S)
    assert element_in_region(NodeSphere(np.array([1.005, 0, 0]), 0.01), S, inflate_nodes=True)


def test_grazing_segment_against_ellipsoid():
    E = Ellipsoid3.from_axes([0, 0, 0], np.eye(3), [1.0, 2.0, 0.5])
    # the line y = 2 * sqrt(0.999) touches q = 0.999 at its closest point
    y = 2.0 * math.sqrt(0.999)
    seg = EdgeSegment(np.array([-1.0, y, 0]), np.array([1.0, y, 0]))
    assert element_in_region(seg, E)
    assert sampled_segment_hits(seg.start, seg.end, quadric_inside(E.center, E.form))
    far = EdgeSegment(np.array([-1.0, 2.001, 0]), np.array([1.0, 2.001, 0]))
    assert not element_in_region(far, E)


def test_segment_membership_matches_dense_sampling(rng):
    for _ in range(300):
        E = random_ellipsoid(rng)
        p0, p1 = rng.normal(scale=2.0, size=(2, 3))
        ours = element_in_region(EdgeSegment(p0, p1), E)
        assert ours == sampled_segment_hits(p0, p1, quadric_inside(E.center, E.form))


def test_clipped_length_examples():
    S = Sphere3([0, 0, 0], 0.7)
    assert clipped_length(EdgeSegment(np.array([-2.0, 0, 0]), np.array([2.0, 0, 0])), S) == pytest.approx(1.4)
    assert clipped_length(EdgeSegment(np.array([2.0, 2, 2]), np.array([3.0, 2, 2])), S) == 0.0


def test_clipped_length_matches_sampling(rng):
    for _ in range(100):
        E = random_ellipsoid(rng)
        p0, p1 = rng.normal(scale=2.0, size=(2, 3))
        seg = EdgeSegment(p0, p1)
        ours = clipped_length(seg, E)
        ref = sampled_clipped_length(p0, p1, quadric_inside(E.center, E.form))
        assert abs(ours - ref) <= 1e-4
        assert ours <= seg.length + 1e-12
        inside = element_in_region(seg, E)
        assert inside == (ours > 0 or bool(E.contains(np.vstack([p0, p1])).any()))


def test_sphere_clipped_length_matches_sampling(rng):
    for _ in range(50):
        c, r = rng.normal(size=3), rng.uniform(0.3, 2)
        p0, p1 = rng.normal(scale=2.0, size=(2, 3))
        ours = clipped_length(EdgeSegment(p0, p1), Sphere3(c, r))
        assert abs(ours - sampled_clipped_length(p0, p1, sphere_inside(c, r))) <= 1e-4


def test_mvee_cube_corners_is_a_ball():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    E = mvee(corners)
    assert np.allclose(E.semi_axes, math.sqrt(3) / 2, rtol=0.01)
    assert np.allclose(E.center, 0.5, atol=1e-6)


def test_mvee_single_point_and_collinear():
    E = mvee([[0.3, 1.2, -0.4]], min_thickness=0.002)
    assert np.allclose(E.semi_axes, 0.002) and np.allclose(E.center, [0.3, 1.2, -0.4])
    line = np.outer(np.linspace(0, 1, 5), [1.0, 2.0, 2.0])
    E = mvee(line, min_thickness=0.002)
    assert np.all(E.quadratic_form(line) <= 1 + 1e-6)
    assert E.semi_axes[0] == pytest.approx(0.002) and E.semi_axes[1] == pytest.approx(0.002)
    assert E.semi_axes[2] == pytest.approx(1.5, rel=1e-3)
    planar = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    E = mvee(planar, min_thickness=0.01)
    assert np.all(E.quadratic_form(planar) <= 1 + 1e-6)
    assert E.semi_axes[0] == pytest.approx(0.01)


def test_mvee_errors():
    with pytest.raises(ValueError):
        mvee(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        mvee([[0, 0, 0]], eps=0)


def test_mvee_twenty_points_against_logdet_oracle(rng):
    eps = 1e-3
    for _ in range(10):
        P = rng.normal(size=(20, 3))
        E = mvee(P, eps=eps)
        assert E.volume <= (1 + eps) * mvee_logdet_volume(P)


@given(st.integers(0, 10_000), st.integers(4, 16))
def test_mvee_containment_and_minimality(seed, n):
    P = np.random.default_rng(seed).normal(size=(n, 3))
    eps = 1e-3
    E = mvee(P, eps=eps)
    q = E.quadratic_form(P)
    assert np.all(q <= 1 + 1e-6)
    shrunk = Ellipsoid3(E.center, E.form / (1 - 10 * eps) ** 2)
    assert np.any(shrunk.quadratic_form(P) > 1)


@given(st.integers(0, 10_000))
def test_mvee_equivariance(seed):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(int(rng.integers(4, 12)), 3))
    R = Rotation.random(random_state=seed).as_matrix()
    t = rng.normal(size=3)
    E = mvee(P)
    F = mvee(P @ R.T + t)
    assert np.allclose(F.center, R @ E.center + t, atol=1e-8)
    assert np.allclose(F.quadratic_form(P @ R.T + t), E.quadratic_form(P), atol=1e-8)


def test_estimator_interface():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 3))
    est = MinimumVolumeEllipsoid(eps=1e-4).fit(X)
    assert est.get_params()["eps"] == 1e-4
    assert np.all(est.predict(X) == 1)
    assert est.predict(np.full((1, 3), 50.0))[0] == -1
    assert est.ellipsoid_.volume > 0
