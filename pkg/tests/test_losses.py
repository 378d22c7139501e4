"""Loss terms: scalar maps, grasp matrix, pose parameters, term isolation."""

import numpy as np
import pytest

from graspfit.fitting import FitConfig
from graspfit.fixtures import make_box, make_hand
from graspfit.losses import (PoseParams, attraction_loss, grasp_matrix,
                             phi_alpha, phi_alpha_grad, repulsion_loss,
                             rotation_jacobian, rotation_matrix, scale_map,
                             scale_map_grad, skew, total_loss,
                             wrap_axis_angle)


def test_scale_map_range_and_fixed_point():
    k = 0.1
    x = np.linspace(-20, 20, 2001)
    s = scale_map(x, k)
    assert np.all(s > 1 - k) and np.all(s < 1 + k)
    assert scale_map(1.0, k) == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(s) > 0)  # strictly increasing
    with pytest.raises(ValueError):
        scale_map(0.0, 1.5)


def test_scale_map_gradient_matches_fd():
    k, h = 0.1, 1e-6
    for x in (-2.0, 0.0, 1.0, 3.0):
        fd = (scale_map(x + h, k) - scale_map(x - h, k)) / (2 * h)
        assert scale_map_grad(x, k) == pytest.approx(fd, rel=1e-6)


def test_phi_alpha_properties():
    alpha = 2.0
    x = np.linspace(0, 10, 500)
    y = phi_alpha(x, alpha)
    assert np.all(np.isfinite(y))
    assert np.all(np.diff(y) >= 0)
    assert phi_alpha(0.0, alpha) == 0.0
    small = np.linspace(0, 0.1, 50)
    assert phi_alpha(small, alpha) == pytest.approx(small, abs=1e-4)
    cap = 0.99 * alpha * np.pi / 2
    assert phi_alpha_grad(cap + 1.0, alpha) == 0.0
    with pytest.raises(ValueError):
        phi_alpha(np.array([-0.1]), alpha)


def test_skew_and_grasp_matrix():
    g = np.array([1.0, 2.0, 3.0])
    w = np.array([0.5, -1.0, 2.0])
    assert skew(g) @ w == pytest.approx(np.cross(g, w))
    G = grasp_matrix([g])
    assert G.shape == (6, 3)
    f = np.array([0.0, 0.0, 1.0])
    wrench = G @ f
    assert wrench[:3] == pytest.approx(f)
    assert wrench[3:] == pytest.approx(np.cross(g, f))
    with pytest.raises(ValueError):
        grasp_matrix(np.zeros((0, 3)))


def test_rotation_matrix_and_jacobian():
    rng = np.random.default_rng(4)
    for _ in range(5):
        r = rng.normal(scale=0.8, size=3)
        R = rotation_matrix(r)
        assert R @ R.T == pytest.approx(np.eye(3), abs=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
        u = rng.normal(size=3)
        J = rotation_jacobian(r, u)
        h = 1e-6
        for i in range(3):
            dr = np.zeros(3)
            dr[i] = h
            fd = (rotation_matrix(r + dr) @ u - rotation_matrix(r - dr) @ u) / (2 * h)
            assert J[:, i] == pytest.approx(fd, abs=1e-6)


def test_wrap_axis_angle_preserves_rotation():
    r = np.array([0.0, 0.0, 5.0])  # > pi
    w = wrap_axis_angle(r)
    assert np.linalg.norm(w) <= np.pi + 1e-12
    assert rotation_matrix(w) == pytest.approx(rotation_matrix(r), abs=1e-12)
    small = np.array([0.1, -0.2, 0.3])
    assert np.array_equal(wrap_axis_angle(small), small)


def test_pose_params_vector_round_trip():
    pose = PoseParams(np.array([1.0, 2, 3]), np.array([0.1, 0.2, 0.3]), 1.4)
    back = PoseParams.from_vector(pose.as_vector())
    assert back.as_vector() == pytest.approx(pose.as_vector())
    M = pose.matrix(0.1)
    verts = np.random.default_rng(0).normal(size=(10, 3))
    hom = np.c_[verts, np.ones(10)] @ M.T
    assert pose.apply(verts, 0.1) == pytest.approx(hom[:, :3])


def test_total_loss_term_isolation():
    """With the force-closure term off and the object far from the hand there
    is no penetration and no contact: the total reduces to the attraction
    term alone, and the repulsion term is exactly zero."""
    hand = make_hand("curl")
    obj = make_box((2, 2, 2), center=(40.0, 0.0, 0.0), subdiv=1)
    cfg = FitConfig(lambda_sim=0.0)
    pose = PoseParams(np.zeros(3), np.zeros(3), 1.0)
    comps, structure = total_loss(hand, obj.vertices, pose, cfg)
    assert comps["L_R"] == 0.0
    assert structure.n_contacts == 0
    assert comps["total"] == pytest.approx(cfg.lambda_a * comps["L_A"])
    assert comps["L_A"] == pytest.approx(
        attraction_loss(hand, obj.vertices, cfg.alpha))
    assert repulsion_loss(hand, obj.vertices, cfg.alpha) == 0.0


def test_repulsion_positive_when_penetrating():
    hand = make_hand("curl")
    # a small box centered inside the palm slab penetrates with all vertices
    obj = make_box((1.0, 1.0, 1.0), center=(0.2, 0.0, 0.0), subdiv=1)
    cfg = FitConfig()
    pose = PoseParams(np.zeros(3), np.zeros(3), 1.0)
    comps, structure = total_loss(hand, obj.vertices, pose, cfg)
    assert structure.inside_mask.all()
    assert comps["L_R"] > 0.0
    assert comps["L_R"] == pytest.approx(
        repulsion_loss(hand, obj.vertices, cfg.alpha))
