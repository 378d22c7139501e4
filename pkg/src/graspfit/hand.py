"""Hand representation, canonicalization, contact labeling, and the grasp gate.

A hand is a watertight mesh plus 21 joints (root, then 4 per finger with the
thumb first) and six disjoint contact-region vertex sets (5 fingertip pads and
the palm). Hands load from an OBJ mesh with a JSON sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError
from .geometry import nearest_in_set
from .hull import ConvexPlanes, convex_hull, inscribed_ball
from .mesh import Mesh, load_obj, save_obj

N_JOINTS = 21
N_REGIONS = 6
GATE_THRESHOLD = 0.4
CONTACT_THRESHOLD_CM = 1.0

# joint layout: 0 = root, then 4 joints per finger, thumb first
THUMB_BASE = 1
FINGER_ROOTS = (1, 5, 9, 13, 17)       # thumb, index, middle, ring, pinky
FINGER_TIPS = (4, 8, 12, 16, 20)
MIDDLE_ROOT = 9


@dataclass(frozen=True)
class HandModel:
    mesh: Mesh
    joints: np.ndarray                  # (21,3) [cm]
    contact_regions: tuple              # 6 int arrays, disjoint vertex indices
    side: str = "right"

    def __post_init__(self):
        j = np.asarray(self.joints, float)
        if j.shape != (N_JOINTS, 3):
            raise ValueError(f"joints must be (21,3), got {j.shape}")
        regions = tuple(np.asarray(r, np.int64) for r in self.contact_regions)
        if len(regions) != N_REGIONS:
            raise ValueError("expected 6 contact regions")
        nv = len(self.mesh.vertices)
        seen = set()
        for r in regions:
            if r.size and (r.min() < 0 or r.max() >= nv):
                raise ValueError("contact region index out of range")
            s = set(r.tolist())
            if seen & s:
                raise ValueError("contact regions must be disjoint")
            seen |= s
        j.setflags(write=False)
        object.__setattr__(self, "joints", j)
        object.__setattr__(self, "contact_regions", regions)

    def region_vertices(self, i: int) -> np.ndarray:
        return self.mesh.vertices[self.contact_regions[i]]


@dataclass(frozen=True)
class ContactLabels:
    in_contact: np.ndarray    # (V,) bool over hand vertices
    points: np.ndarray        # (K,3) positions of labeled vertices [cm]
    indices: np.ndarray       # (K,) hand vertex indices


@dataclass(frozen=True)
class GateReport:
    hull_scale: float
    inscribed_radius: float
    inscribed_radius_normalized: float
    accepted: bool
    center: np.ndarray
    trace: list = field(repr=False, default_factory=list)


def load_hand(obj_path, json_path) -> HandModel:
    mesh = load_obj(obj_path)
    with open(json_path) as fh:
        meta = json.load(fh)
    return HandModel(
        mesh=mesh,
        joints=np.asarray(meta["joints"], float),
        contact_regions=tuple(np.asarray(r, np.int64)
                              for r in meta["contact_regions"]),
        side=meta.get("side", "right"),
    )


def save_hand(hand: HandModel, obj_path, json_path):
    save_obj(hand.mesh, obj_path)
    meta = {
        "joints": [[float(x) for x in row] for row in hand.joints],
        "contact_regions": [[int(i) for i in r] for r in hand.contact_regions],
        "side": hand.side,
    }
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def principal_bone_length(hand: HandModel) -> float:
    """Distance from the root joint to the first thumb joint [cm]."""
    b = float(np.linalg.norm(hand.joints[THUMB_BASE] - hand.joints[0]))
    if b <= 0:
        raise DegenerateGeometryError("principal bone length is zero")
    return b


def normalization_scale(hand: HandModel) -> float:
    """Max vertex distance from the vertex centroid; the 'normalized hand space' unit."""
    c = hand.mesh.centroid()
    return float(np.linalg.norm(hand.mesh.vertices - c, axis=1).max())


def _canonical_frame(joints):
    """Rows of the rotation taking hand axes to world axes."""
    y = joints[MIDDLE_ROOT] - joints[0]
    ny = np.linalg.norm(y)
    if ny < 1e-12:
        raise DegenerateGeometryError("wrist and middle-finger root coincide")
    y = y / ny
    w = joints[FINGER_ROOTS[1]] - joints[FINGER_ROOTS[4]]  # index root - pinky root
    x = w - (w @ y) * y
    nx = np.linalg.norm(x)
    if nx < 1e-9:
        raise DegenerateGeometryError("collinear hand frame vectors")
    x = x / nx
    z = np.cross(x, y)  # palm normal, right-handed completion
    return np.stack([x, y, z])


def canonicalize(hand: HandModel) -> HandModel:
    """Center the hand on its vertex centroid and normalize its rotation.

    The wrist-to-middle-finger-root direction maps to +y and the palm normal
    to +z. Idempotent.
    """
    R = _canonical_frame(hand.joints)
    c = hand.mesh.centroid()
    verts = (hand.mesh.vertices - c) @ R.T
    joints = (hand.joints - c) @ R.T
    return HandModel(Mesh(verts, hand.mesh.faces), joints,
                     hand.contact_regions, hand.side)


def contact_labels(hand: HandModel, obj: Mesh,
                   threshold: float = CONTACT_THRESHOLD_CM) -> ContactLabels:
    """Label hand vertices within `threshold` cm of the object's vertices."""
    d, _ = nearest_in_set(hand.mesh.vertices, obj.vertices)
    mask = d <= threshold
    idx = np.flatnonzero(mask)
    return ContactLabels(in_contact=mask,
                         points=hand.mesh.vertices[idx],
                         indices=idx)


def grasp_gate(hand: HandModel, threshold: float = GATE_THRESHOLD,
               seed: int = 0) -> GateReport:
    """Reject non-grasping poses via the hand hull's largest inscribed ball.

    The ball radius, normalized by the hand normalization scale, must reach
    the threshold; thin (flat/splayed) hands produce thin hulls and fail.
    Expects a canonicalized hand.
    """
    hull = convex_hull(hand.mesh.vertices)
    planes = ConvexPlanes(hull)
    center, radius, trace = inscribed_ball(planes, seed=seed)
    scale = normalization_scale(hand)
    normalized = radius / scale
    return GateReport(
        hull_scale=planes.circumradius,
        inscribed_radius=radius,
        inscribed_radius_normalized=float(normalized),
        accepted=bool(normalized >= threshold),
        center=center,
        trace=trace,
    )


def hand_descriptor(hand: HandModel) -> np.ndarray:
    """Rigid-invariant 20-vector pose signature, normalized by the principal bone.

    Five fingertip-to-finger-root extensions plus the 15 pairwise distances
    among the five fingertips and the root.
    """
    b = principal_bone_length(hand)
    j = hand.joints
    ext = [np.linalg.norm(j[t] - j[r]) for r, t in zip(FINGER_ROOTS, FINGER_TIPS)]
    keypoints = [j[t] for t in FINGER_TIPS] + [j[0]]
    pair = []
    for a in range(len(keypoints)):
        for c in range(a + 1, len(keypoints)):
            pair.append(np.linalg.norm(keypoints[a] - keypoints[c]))
    return np.asarray(ext + pair, float) / b
