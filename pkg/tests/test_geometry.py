"""Geometry layer: oriented boxes, containment, voxels, nearest distances."""

import numpy as np
import pytest

from graspfit.fixtures import make_box, make_icosphere
from graspfit.geometry import (intersection_volume, min_dist_point_set,
                               min_dist_set_set, nearest_in_set, pca_obb,
                               points_inside, ray_triangle)
from graspfit.losses import rotation_matrix
from graspfit.mesh import Mesh


def test_pca_obb_recovers_box_extents():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        size = np.sort(rng.uniform(0.5, 5.0, size=3))
        if size[1] / size[0] < 1.1 or size[2] / size[1] < 1.1:
            size = np.array([1.0, 2.0, 3.5])  # keep spectra distinct
        box = make_box(tuple(size), subdiv=2)
        R = rotation_matrix(rng.normal(size=3))
        t = rng.normal(scale=4.0, size=3)
        obb = pca_obb(box.vertices @ R.T + t)
        assert obb.lengths == pytest.approx(size, rel=1e-9)
        assert obb.axes @ obb.axes.T == pytest.approx(np.eye(3), abs=1e-9)
        assert np.linalg.det(obb.axes) == pytest.approx(1.0, abs=1e-9)
        assert obb.center == pytest.approx(box.vertices.mean(0) @ R.T + t)


def test_ray_triangle_hit_miss_and_parallel():
    tri = [np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0])]
    assert ray_triangle([0.2, 0.2, -1.0], [0, 0, 1], tri) == pytest.approx(1.0)
    assert ray_triangle([2.0, 2.0, -1.0], [0, 0, 1], tri) is None
    assert ray_triangle([0.2, 0.2, 1.0], [0, 0, 1], tri) is None  # behind
    assert ray_triangle([0.2, 0.2, -1.0], [1, 0, 0], tri) is None  # parallel


def test_points_inside_box_property():
    box = make_box((2, 2, 2), subdiv=1)
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        pts = rng.uniform(-1.5, 1.5, size=(500, 3))
        expected = np.all(np.abs(pts) < 1.0, axis=1)
        assert np.array_equal(points_inside(box, pts), expected)


def test_points_inside_strict_interior_convention():
    box = make_box((2, 2, 2), subdiv=1)
    on_surface = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.3], [1.0, 1.0, 1.0]])
    assert not points_inside(box, on_surface).any()


def test_intersection_volume_of_identical_and_disjoint_cubes():
    cube = make_box((1, 1, 1), subdiv=1)
    assert intersection_volume(cube, cube, 0.05) == pytest.approx(1.0, rel=0.05)
    far = Mesh(cube.vertices + 10.0, cube.faces)
    assert intersection_volume(cube, far, 0.05) == 0.0


def test_nearest_and_min_distances_match_brute_force():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(80, 3))
    B = rng.normal(size=(60, 3)) + 2.0
    full = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
    d, idx = nearest_in_set(A, B)
    assert d == pytest.approx(full.min(axis=1), abs=1e-12)
    assert np.array_equal(idx, full.argmin(axis=1))
    assert min_dist_set_set(A, B) == pytest.approx(full.min(), abs=1e-12)
    assert min_dist_point_set(A[0], B) == pytest.approx(full[0].min(), abs=1e-12)


def test_points_inside_requires_watertight():
    from graspfit.errors import NonWatertightError
    box = make_box((1, 1, 1))
    holed = Mesh(box.vertices, box.faces[1:])
    with pytest.raises(NonWatertightError):
        points_inside(holed, np.zeros((1, 3)))


def test_points_inside_sphere_interior_band():
    sphere = make_icosphere(1.0, subdiv=2)
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(300, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    deep = pts * 0.8       # clearly interior even for the faceted surface
    outer = pts * 1.2
    assert points_inside(sphere, deep).all()
    assert not points_inside(sphere, outer).any()
