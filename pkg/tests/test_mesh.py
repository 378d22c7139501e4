"""Mesh container, OBJ round trip, and watertightness audit."""

import numpy as np
import pytest

from graspfit.errors import MeshLoadError, NonWatertightError
from graspfit.fixtures import make_box, make_icosphere
from graspfit.mesh import Mesh, drop_degenerate_faces, load_obj, save_obj


def test_constructor_validates_shapes():
    with pytest.raises(MeshLoadError):
        Mesh(np.zeros((4, 2)), np.zeros((1, 3), int))
    with pytest.raises(MeshLoadError):
        Mesh(np.zeros((0, 3)), np.zeros((0, 3), int))
    with pytest.raises(MeshLoadError):
        Mesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))


def test_box_volume_and_centroid():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        size = rng.uniform(0.5, 4.0, size=3)
        box = make_box(tuple(size), subdiv=2)
        assert box.volume() == pytest.approx(np.prod(size), rel=1e-12)
        assert box.centroid() == pytest.approx(np.zeros(3), abs=1e-12)


def test_watertight_audit():
    box = make_box((1, 1, 1))
    assert box.is_watertight()
    holed = Mesh(box.vertices, box.faces[1:])
    assert not holed.is_watertight()
    with pytest.raises(NonWatertightError):
        holed.require_watertight("holed box")


def test_normals_are_unit_and_outward():
    sphere = make_icosphere(2.0, subdiv=2)
    fn = sphere.face_normals()
    assert np.linalg.norm(fn, axis=1) == pytest.approx(1.0, abs=1e-12)
    centers = sphere.vertices[sphere.faces].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", fn, centers) > 0)
    vn = sphere.vertex_normals
    assert np.linalg.norm(vn, axis=1) == pytest.approx(1.0, abs=1e-12)


def test_transformed_preserves_volume_under_rigid_motion():
    box = make_box((1, 2, 3))
    rng = np.random.default_rng(3)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = 0.7
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(ang) * K + (1 - np.cos(ang)) * K @ K
    moved = box.transformed(rotation=R, translation=np.array([5.0, -2.0, 1.0]))
    assert moved.volume() == pytest.approx(box.volume(), rel=1e-12)
    scaled = box.transformed(scale=2.0)
    assert scaled.volume() == pytest.approx(8 * box.volume(), rel=1e-12)


def test_obj_round_trip(tmp_path):
    mesh = make_icosphere(1.3, subdiv=1, center=(0.2, -0.4, 1.0))
    path = tmp_path / "ball.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    assert back.vertices == pytest.approx(mesh.vertices, abs=1e-6)
    assert np.array_equal(back.faces, mesh.faces)
    assert back.is_watertight()


def test_degenerate_faces_are_dropped():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0]], float)
    f = np.array([[0, 1, 2], [0, 1, 3]])  # second face has zero area
    kept, dropped = drop_degenerate_faces(v, f)
    assert len(kept) == 1 and dropped == 1
    assert np.array_equal(kept[0], f[0])
