"""Grasp-fitting loss terms and their semi-smooth gradients.

The total objective is a weighted sum of attraction (pull object surface to
the six hand contact regions), repulsion (push penetrating object vertices
out of the hand), and a force-closure term built from the grasp matrix of the
current contacts. Discrete memberships (penetration set, contact labels,
nearest-neighbour pairings) are recomputed per evaluation and frozen within
it, so the gradient is exact for the frozen-structure loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import _cross_rows, mesh_kdtree, points_inside
from .hand import HandModel

PHI_CLAMP_FRACTION = 0.99  # of alpha*pi/2, keeps tan off its pole
NO_CONTACT_PENALTY = 1e3


# -- scalar maps ----------------------------------------------------------

def scale_map(x, k: float):
    """Sigmoid scale wrap: range (1-k, 1+k), equals 1 at x = 1."""
    if not 0 < k < 1:
        raise ValueError("k must be in (0,1)")
    return 2.0 * k / (1.0 + np.exp(-np.asarray(x, float) + 1.0)) + 1.0 - k


def scale_map_grad(x, k: float):
    e = np.exp(-np.asarray(x, float) + 1.0)
    return 2.0 * k * e / (1.0 + e) ** 2


def phi_alpha(x, alpha: float):
    """Penalization alpha*tan(x/alpha), argument clamped short of the pole."""
    x = np.asarray(x, float)
    if np.any(x < 0):
        raise ValueError("phi_alpha expects non-negative distances")
    cap = PHI_CLAMP_FRACTION * alpha * np.pi / 2.0
    return alpha * np.tan(np.minimum(x, cap) / alpha)


def phi_alpha_grad(x, alpha: float):
    """d/dx of phi_alpha; zero beyond the clamp."""
    x = np.asarray(x, float)
    cap = PHI_CLAMP_FRACTION * alpha * np.pi / 2.0
    g = 1.0 / np.cos(np.minimum(x, cap) / alpha) ** 2
    return np.where(x >= cap, 0.0, g)


# -- grasp matrix ----------------------------------------------------------

def skew(g):
    """Matrix M with M @ w = g x w."""
    g = np.asarray(g, float)
    return np.array([[0.0, -g[2], g[1]],
                     [g[2], 0.0, -g[0]],
                     [-g[1], g[0], 0.0]])


def grasp_matrix(contacts) -> np.ndarray:
    """6 x 3N wrench map: identity blocks over skew blocks of contact positions."""
    contacts = np.asarray(contacts, float).reshape(-1, 3)
    n = len(contacts)
    if n == 0:
        raise ValueError("grasp matrix needs at least one contact")
    G = np.zeros((6, 3 * n))
    for i, g in enumerate(contacts):
        G[:3, 3 * i:3 * i + 3] = np.eye(3)
        G[3:, 3 * i:3 * i + 3] = skew(g)
    return G


def force_closure_terms(contacts, normals, epsilon_fc: float):
    """(hinge on the smallest eigenvalue of GG', ||G n_hat||) for given contacts."""
    G = grasp_matrix(contacts)
    GGt = G @ G.T
    eig0 = float(np.linalg.eigvalsh(GGt)[0])
    hinge = max(epsilon_fc - eig0, 0.0)
    nhat = np.asarray(normals, float).reshape(-1)
    wrench = float(np.linalg.norm(G @ nhat))
    return hinge, wrench, eig0


# -- pose ------------------------------------------------------------------

def rotation_matrix(r):
    """Rodrigues rotation from an axis-angle vector."""
    r = np.asarray(r, float)
    theta = np.linalg.norm(r)
    if theta < 1e-12:
        K = skew(r)
        return np.eye(3) + K + 0.5 * K @ K
    k = r / theta
    K = skew(k)
    return np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * K @ K


def rotation_jacobian(r, u):
    """d(R(r) @ u)/dr as a (3,3) matrix (columns are d/dr_i).

    Gallego & Yezzi closed form; at the identity it reduces to -[u]_x.
    """
    r = np.asarray(r, float)
    u = np.asarray(u, float)
    theta = np.linalg.norm(r)
    R = rotation_matrix(r)
    Ru = R @ u
    if theta < 1e-8:
        return -skew(u)
    J = np.empty((3, 3))
    I = np.eye(3)
    for i in range(3):
        e = I[i]
        w = r[i] * r + np.cross(r, (I - R) @ e)
        J[:, i] = (skew(w) @ Ru) / theta ** 2
    return J


def wrap_axis_angle(r):
    """Keep the rotation magnitude in [0, pi] (flip axis past pi)."""
    r = np.asarray(r, float)
    theta = np.linalg.norm(r)
    if theta <= np.pi or theta < 1e-12:
        return r
    wrapped = theta % (2 * np.pi)
    if wrapped > np.pi:
        wrapped -= 2 * np.pi
    return r * (wrapped / theta)


@dataclass
class PoseParams:
    translation: np.ndarray          # (3,) [cm]
    rotation: np.ndarray             # (3,) axis-angle [rad]
    scale_logit: float = 1.0         # s(1) = 1 exactly

    def as_vector(self):
        return np.concatenate([self.translation, self.rotation,
                               [self.scale_logit]])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, float)
        return cls(translation=v[:3].copy(),
                   rotation=wrap_axis_angle(v[3:6]),
                   scale_logit=float(v[6]))

    def apply(self, verts, k: float):
        s = float(scale_map(self.scale_logit, k))
        R = rotation_matrix(self.rotation)
        return (np.asarray(verts, float) * s) @ R.T + self.translation

    def matrix(self, k: float) -> np.ndarray:
        """4x4 homogeneous transform (includes the mapped scale)."""
        s = float(scale_map(self.scale_logit, k))
        M = np.eye(4)
        M[:3, :3] = rotation_matrix(self.rotation) * s
        M[:3, 3] = self.translation
        return M


# -- frozen structure --------------------------------------------------------

@dataclass
class FrozenStructure:
    """Discrete memberships captured at one pose, reused for loss/gradient.

    attr_hand / attr_idx: one (hand vertex position, object vertex index)
    pair per contact region that has a non-penetrating nearest object vertex.
    rep_idx / rep_hand: penetrating object vertices and their nearest hand
    vertex positions. sim_hand / sim_idx: contact points paired with their
    nearest object vertices for the contact-to-surface distance term;
    sim_constant covers the eigenvalue hinge and wrench norm, which do not
    vary while the contact set is frozen.
    """
    attr_hand: np.ndarray    # (m,3)
    attr_idx: np.ndarray     # (m,)
    rep_idx: np.ndarray      # (p,)
    rep_hand: np.ndarray     # (p,3)
    sim_hand: np.ndarray     # (q,3)
    sim_idx: np.ndarray      # (q,)
    sim_constant: float
    n_contacts: int
    inside_mask: np.ndarray = field(repr=False, default=None)


def compute_structure(hand: HandModel, obj_verts, pose: PoseParams,
                      config) -> FrozenStructure:
    """Recompute penetration set, contact labels, and nearest-pair indices."""
    W = pose.apply(obj_verts, config.k)
    inside = points_inside(hand.mesh, W)
    outside_idx = np.flatnonzero(~inside)
    hv = hand.mesh.vertices

    attr_hand, attr_idx = [], []
    if len(outside_idx):
        tree_out = cKDTree(W[outside_idx])
        for region in hand.contact_regions:
            rv = hv[region]
            if len(rv) == 0:
                continue
            d, j = tree_out.query(rv, k=1)
            best = int(np.argmin(d))
            attr_hand.append(rv[best])
            attr_idx.append(int(outside_idx[j[best]]))
    attr_hand = np.asarray(attr_hand, float).reshape(-1, 3)
    attr_idx = np.asarray(attr_idx, np.int64)

    rep_idx = np.flatnonzero(inside)
    if len(rep_idx):
        _, hi = mesh_kdtree(hand.mesh).query(W[rep_idx], k=1)
        rep_hand = hv[hi]
    else:
        rep_hand = np.zeros((0, 3))

    # contacts: labeled hand vertices near the posed object surface
    tree_W = cKDTree(W)
    d_contact, nearest_obj = tree_W.query(hv, k=1)
    contact_mask = d_contact <= config.contact_threshold
    contact_idx = np.flatnonzero(contact_mask)
    sim_constant = NO_CONTACT_PENALTY
    if len(contact_idx):
        g = hv[contact_idx]
        sim_idx = nearest_obj[contact_idx]
        centroid = W.mean(axis=0)
        normals = hand.mesh.vertex_normals[contact_idx].copy()
        toward = W[sim_idx] - g
        flip = np.einsum("ij,ij->i", normals, toward) < 0
        normals[flip] = -normals[flip]
        hinge, wrench, _ = force_closure_terms(g - centroid, normals,
                                               config.epsilon_fc)
        sim_constant = hinge + wrench
    else:
        g = np.zeros((0, 3))
        sim_idx = np.zeros(0, np.int64)
    return FrozenStructure(attr_hand=attr_hand, attr_idx=attr_idx,
                           rep_idx=rep_idx, rep_hand=rep_hand,
                           sim_hand=g, sim_idx=np.asarray(sim_idx, np.int64),
                           sim_constant=float(sim_constant),
                           n_contacts=len(contact_idx),
                           inside_mask=inside)


def loss_given_structure(structure: FrozenStructure, hand: HandModel,
                         obj_verts, pose: PoseParams, config):
    """Loss components at `pose` with memberships frozen in `structure`."""
    W = pose.apply(obj_verts, config.k)
    alpha = config.alpha
    st = structure
    l_a = 0.0
    if len(st.attr_idx):
        d = np.linalg.norm(W[st.attr_idx] - st.attr_hand, axis=1)
        l_a = float(phi_alpha(d, alpha).sum())
    l_r = 0.0
    if len(st.rep_idx):
        d = np.linalg.norm(W[st.rep_idx] - st.rep_hand, axis=1)
        l_r = float(phi_alpha(d, alpha).sum())
    l_dist = 0.0
    if len(st.sim_idx):
        l_dist = float(np.linalg.norm(W[st.sim_idx] - st.sim_hand,
                                      axis=1).sum())
    l_sim = st.sim_constant + config.lambda_dist * l_dist
    total = (config.lambda_a * l_a + config.lambda_r * l_r
             + config.lambda_sim * l_sim)
    return {"L_A": l_a, "L_R": l_r, "L_sim": l_sim, "total": total}


def _rotation_weight_matrix(r, R):
    """W with rows w_i such that (J_u' g)_i = w_i . (R u x g) for any u, g."""
    theta = np.linalg.norm(r)
    if theta < 1e-8:
        return np.eye(3)
    I = np.eye(3)
    Wm = np.empty((3, 3))
    for i in range(3):
        Wm[i] = (r[i] * r + np.cross(r, (I - R) @ I[i])) / theta ** 2
    return Wm


def gradient_given_structure(structure: FrozenStructure, hand: HandModel,
                             obj_verts, pose: PoseParams, config):
    """Analytic gradient of the frozen-structure total loss.

    Returns a 7-vector over (translation, axis-angle rotation, scale logit).
    """
    obj_verts = np.asarray(obj_verts, float)
    W = pose.apply(obj_verts, config.k)
    alpha = config.alpha
    st = structure
    grad_w = np.zeros_like(obj_verts)   # dL/d(posed vertex), accumulated

    def accumulate(idx, targets, coef, use_phi):
        if len(idx) == 0:
            return
        diff = W[idx] - targets
        d = np.linalg.norm(diff, axis=1)
        ok = d > 1e-12
        w = np.where(ok, coef * (phi_alpha_grad(d, alpha) if use_phi else 1.0)
                     / np.where(ok, d, 1.0), 0.0)
        np.add.at(grad_w, idx, w[:, None] * diff)

    accumulate(st.attr_idx, st.attr_hand, config.lambda_a, True)
    accumulate(st.rep_idx, st.rep_hand, config.lambda_r, True)
    accumulate(st.sim_idx, st.sim_hand,
               config.lambda_sim * config.lambda_dist, False)

    grad = np.zeros(7)
    if not grad_w.any():
        return grad
    ds = float(scale_map_grad(pose.scale_logit, config.k))
    s = float(scale_map(pose.scale_logit, config.k))
    R = rotation_matrix(pose.rotation)
    grad[:3] = grad_w.sum(axis=0)
    Rv = obj_verts @ R.T
    grad[6] = ds * float(np.einsum("ij,ij->", grad_w, Rv))
    # rotation: sum_j J(s v_j)^T g_j = W_rows @ sum_j (s R v_j) x g_j
    c = _cross_rows(s * Rv, grad_w).sum(axis=0)
    grad[3:6] = _rotation_weight_matrix(pose.rotation, R) @ c
    return grad


def total_loss(hand: HandModel, obj_verts, pose: PoseParams, config):
    """Loss components at `pose` with memberships recomputed there."""
    structure = compute_structure(hand, obj_verts, pose, config)
    comps = loss_given_structure(structure, hand, obj_verts, pose, config)
    return comps, structure


def gradient(hand: HandModel, obj_verts, pose: PoseParams, config):
    """Semi-smooth gradient of the total loss (structure frozen at `pose`)."""
    structure = compute_structure(hand, obj_verts, pose, config)
    return gradient_given_structure(structure, hand, obj_verts, pose, config)


# -- standalone loss surfaces (contract mirrors) ------------------------------

def attraction_loss(hand: HandModel, posed_obj_verts, alpha: float) -> float:
    """Sum over regions of phi(min distance to non-penetrating object vertices)."""
    W = np.asarray(posed_obj_verts, float)
    inside = points_inside(hand.mesh, W)
    W_out = W[~inside]
    total = 0.0
    for region in hand.contact_regions:
        rv = hand.mesh.vertices[region]
        if len(W_out) == 0 or len(rv) == 0:
            continue
        d, _ = cKDTree(W_out).query(rv, k=1)
        total += float(phi_alpha(d.min(), alpha))
    return total


def repulsion_loss(hand: HandModel, posed_obj_verts, alpha: float) -> float:
    """Sum of phi(distance to nearest hand vertex) over penetrating vertices."""
    W = np.asarray(posed_obj_verts, float)
    inside = points_inside(hand.mesh, W)
    if not inside.any():
        return 0.0
    d, _ = cKDTree(hand.mesh.vertices).query(W[inside], k=1)
    return float(phi_alpha(d, alpha).sum())


def sim_loss(contact_points, contact_normals, obj_verts, epsilon_fc: float,
             lambda_dist: float, center=None) -> float:
    """Force-closure hinge + wrench norm + contact-to-surface distance."""
    g = np.asarray(contact_points, float).reshape(-1, 3)
    if len(g) == 0:
        return NO_CONTACT_PENALTY
    obj_verts = np.asarray(obj_verts, float)
    rel = g - (np.asarray(center, float) if center is not None else 0.0)
    hinge, wrench, _ = force_closure_terms(rel, contact_normals, epsilon_fc)
    d, _ = cKDTree(obj_verts).query(g, k=1)
    return float(hinge + wrench + lambda_dist * d.sum())
