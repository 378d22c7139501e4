"""Procedural test assets: primitive objects and parametric synthetic hands.

Hands are unions of pairwise-disjoint closed components (a palm slab plus
five finger tubes); disjointness keeps ray-parity containment exact on the
union. All generators are deterministic given their arguments.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .catalog import Exemplar, MANIFEST_NAME, save_exemplars
from .codes import compute_object_code
from .hand import HandModel, principal_bone_length, save_hand
from .mesh import Mesh, save_obj

FINGER_RADIUS = 0.35
GRIP_RADIUS = 1.5
GRIP_CENTER = np.array([0.0, 0.5, 2.9])   # cylinder axis runs along x here


# -- primitive meshes --------------------------------------------------------

def _oriented(verts, faces):
    m = Mesh(verts, faces)
    if m.volume() < 0:
        m = Mesh(verts, np.asarray(faces)[:, [0, 2, 1]])
    return m


def make_box(size, center=(0, 0, 0), subdiv=1) -> Mesh:
    """Axis-aligned box with subdivided faces (watertight)."""
    size = np.asarray(size, float)
    center = np.asarray(center, float)
    n = int(subdiv)
    grid = {}
    verts = []

    def vid(i, j, k):
        key = (i, j, k)
        if key not in grid:
            grid[key] = len(verts)
            verts.append(((np.array([i, j, k]) / n) - 0.5) * size + center)
        return grid[key]

    faces = []

    def quad(a, b, c, d):
        faces.append([a, b, c])
        faces.append([a, c, d])

    for i in range(n):
        for j in range(n):
            # z- and z+ faces
            quad(vid(i, j, 0), vid(i, j + 1, 0), vid(i + 1, j + 1, 0),
                 vid(i + 1, j, 0))
            quad(vid(i, j, n), vid(i + 1, j, n), vid(i + 1, j + 1, n),
                 vid(i, j + 1, n))
            # y- / y+
            quad(vid(i, 0, j), vid(i + 1, 0, j), vid(i + 1, 0, j + 1),
                 vid(i, 0, j + 1))
            quad(vid(i, n, j), vid(i, n, j + 1), vid(i + 1, n, j + 1),
                 vid(i + 1, n, j))
            # x- / x+
            quad(vid(0, i, j), vid(0, i, j + 1), vid(0, i + 1, j + 1),
                 vid(0, i + 1, j))
            quad(vid(n, i, j), vid(n, i + 1, j), vid(n, i + 1, j + 1),
                 vid(n, i, j + 1))
    return _oriented(np.asarray(verts), np.asarray(faces))


def make_cylinder(radius, length, n_theta=20, n_len=12, axis="x") -> Mesh:
    """Closed cylinder along the given axis, centered at the origin."""
    theta = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    zs = np.linspace(-length / 2, length / 2, n_len + 1)
    verts = []
    for z in zs:
        for t in theta:
            verts.append([z, radius * np.cos(t), radius * np.sin(t)])
    bottom = len(verts)
    verts.append([zs[0], 0.0, 0.0])
    top = len(verts)
    verts.append([zs[-1], 0.0, 0.0])
    faces = []
    for i in range(n_len):
        for j in range(n_theta):
            a = i * n_theta + j
            b = i * n_theta + (j + 1) % n_theta
            c = (i + 1) * n_theta + (j + 1) % n_theta
            d = (i + 1) * n_theta + j
            faces.append([a, b, c])
            faces.append([a, c, d])
    for j in range(n_theta):
        faces.append([bottom, (j + 1) % n_theta, j])
        faces.append([top, n_len * n_theta + j,
                      n_len * n_theta + (j + 1) % n_theta])
    verts = np.asarray(verts)
    if axis == "y":
        verts = verts[:, [1, 0, 2]]
    elif axis == "z":
        verts = verts[:, [1, 2, 0]]
    return _oriented(verts, np.asarray(faces))


def make_icosphere(radius=1.0, subdiv=2, center=(0, 0, 0)) -> Mesh:
    """Geodesic sphere from a subdivided icosahedron."""
    phi = (1 + np.sqrt(5)) / 2
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]], float)
    verts /= np.linalg.norm(verts[0])
    faces = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
             [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
             [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
             [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    verts = list(verts)
    for _ in range(subdiv):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                m = m / np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    v = np.asarray(verts) * radius + np.asarray(center, float)
    return _oriented(v, np.asarray(faces))


def make_revolution(profile, n_theta=24) -> Mesh:
    """Solid of revolution about z from an (r, z) profile polyline.

    The profile must start and end on the axis (r = 0); interior points must
    have r > 0. Used for mugs and cups.
    """
    profile = np.asarray(profile, float)
    if profile[0, 0] != 0 or profile[-1, 0] != 0:
        raise ValueError("profile must start and end on the axis")
    theta = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    verts = [np.array([0.0, 0.0, profile[0, 1]])]
    ring_start = {}
    for i, (r, z) in enumerate(profile[1:-1], start=1):
        ring_start[i] = len(verts)
        for t in theta:
            verts.append([r * np.cos(t), r * np.sin(t), z])
    apex_top = len(verts)
    verts.append(np.array([0.0, 0.0, profile[-1, 1]]))
    faces = []
    rings = sorted(ring_start)
    first, last = rings[0], rings[-1]
    for j in range(n_theta):
        faces.append([0, ring_start[first] + (j + 1) % n_theta,
                      ring_start[first] + j])
    for a, b in zip(rings[:-1], rings[1:]):
        for j in range(n_theta):
            p = ring_start[a] + j
            q = ring_start[a] + (j + 1) % n_theta
            r_ = ring_start[b] + (j + 1) % n_theta
            s = ring_start[b] + j
            faces.append([p, q, r_])
            faces.append([p, r_, s])
    for j in range(n_theta):
        faces.append([apex_top, ring_start[last] + j,
                      ring_start[last] + (j + 1) % n_theta])
    return _oriented(np.asarray(verts, float), np.asarray(faces))


def make_mug(outer_radius=2.0, height=4.0, wall=0.4, n_theta=20) -> Mesh:
    profile = [(0, 0), (outer_radius, 0), (outer_radius, height),
               (outer_radius - wall, height), (outer_radius - wall, wall),
               (0, wall)]
    return make_revolution(profile, n_theta)


def make_cup(inner_radius=2.6, wall=0.4, height=2.5, n_theta=24) -> Mesh:
    """Open cup used as a static support in simulation tests."""
    r_out = inner_radius + wall
    profile = [(0, 0), (r_out, 0), (r_out, height), (inner_radius, height),
               (inner_radius, wall), (0, wall)]
    return make_revolution(profile, n_theta)


def make_tube(path, radius, n_sides=6) -> Mesh:
    """Closed tube swept along a polyline, capped at both ends (watertight)."""
    path = np.asarray(path, float)
    n = len(path)
    tangents = np.zeros_like(path)
    tangents[0] = path[1] - path[0]
    tangents[-1] = path[-1] - path[-2]
    tangents[1:-1] = path[2:] - path[:-2]
    tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
    # parallel-transported frames
    ref = np.array([1.0, 0.0, 0.0])
    if abs(tangents[0] @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(tangents[0], ref)
    u /= np.linalg.norm(u)
    verts = []
    angles = np.linspace(0, 2 * np.pi, n_sides, endpoint=False)
    for i in range(n):
        if i > 0:
            u = u - (u @ tangents[i]) * tangents[i]
            u /= np.linalg.norm(u)
        w = np.cross(tangents[i], u)
        for a in angles:
            verts.append(path[i] + radius * (np.cos(a) * u + np.sin(a) * w))
    cap0 = len(verts)
    verts.append(path[0] - 1e-6 * tangents[0])
    cap1 = len(verts)
    verts.append(path[-1] + 1e-6 * tangents[-1])
    faces = []
    for i in range(n - 1):
        for j in range(n_sides):
            a = i * n_sides + j
            b = i * n_sides + (j + 1) % n_sides
            c = (i + 1) * n_sides + (j + 1) % n_sides
            d = (i + 1) * n_sides + j
            faces.append([a, b, c])
            faces.append([a, c, d])
    for j in range(n_sides):
        faces.append([cap0, (j + 1) % n_sides, j])
        faces.append([cap1, (n - 1) * n_sides + j,
                      (n - 1) * n_sides + (j + 1) % n_sides])
    return _oriented(np.asarray(verts), np.asarray(faces))


def merge_meshes(meshes) -> Mesh:
    """Concatenate disjoint closed meshes into one (stays edge-manifold)."""
    verts = []
    faces = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return Mesh(np.vstack(verts), np.vstack(faces))


# -- synthetic hands ----------------------------------------------------------

_FINGER_X = (3.0, 1.0, -1.0, -3.0)      # index, middle, ring, pinky


def _finger_path_curled(x, grip_center, grip_radius, phi_start=25.0,
                        phi_end=215.0, n_arc=8):
    """Base + knuckle + arc wrapping the grip axis (axis along x)."""
    r_f = grip_radius + FINGER_RADIUS + 0.10
    base = np.array([x, 4.55, 1.2])
    knuckle = np.array([x, 3.3, 2.3])
    pts = [base, knuckle]
    for phi in np.linspace(np.radians(phi_start), np.radians(phi_end), n_arc):
        pts.append(np.array([x,
                             grip_center[1] + r_f * np.cos(phi),
                             grip_center[2] + r_f * np.sin(phi)]))
    return np.asarray(pts)


def _finger_path_flat(x):
    base = np.array([x, 4.55, 0.4])
    return np.asarray([base + np.array([0.0, dy, 0.0])
                       for dy in np.linspace(0, 4.5, 8)])


def _thumb_path_curled(grip_center, grip_radius):
    # waypoints keep the tube centerline a clearance away from the grip surface
    r_t = grip_radius + FINGER_RADIUS + 0.10
    y0, z0 = grip_center[1], grip_center[2]
    base = np.array([4.6, 1.2, 1.7])
    mid1 = np.array([4.0, y0 + r_t * np.cos(np.deg2rad(-25.0)),
                     z0 + r_t * np.sin(np.deg2rad(-25.0))])
    mid2 = np.array([2.7, y0 + r_t * np.cos(np.deg2rad(-10.0)),
                     z0 + r_t * np.sin(np.deg2rad(-10.0))])
    target = np.array([1.6, y0 + r_t, z0])
    return np.asarray([base, mid1, mid2, target])


def _thumb_path_flat():
    base = np.array([4.6, 0.5, 0.4])
    return np.asarray([base + f * np.array([1.0, 0.8, 0.0])
                       for f in np.linspace(0, 3.0, 4)])


def make_hand(pose: str = "curl", grip_radius: float = GRIP_RADIUS,
              n_sides: int = 6) -> HandModel:
    """Parametric synthetic right hand: palm slab plus five finger tubes.

    pose: 'curl' (grasping, fingers wrap the grip cylinder), 'flat'
    (splayed, rejected by the gate), or 'pinch' (thumb+index curled only).
    """
    palm = make_box((7.6, 8.0, 2.5), center=(0.2, 0.0, 0.0), subdiv=4)
    components = [palm]
    grip_center = GRIP_CENTER.copy()
    grip_center[2] = 1.25 + grip_radius + 0.15

    finger_paths = []
    if pose == "curl":
        for x in _FINGER_X:
            finger_paths.append(_finger_path_curled(x, grip_center, grip_radius))
        thumb = _thumb_path_curled(grip_center, grip_radius)
    elif pose == "flat":
        for x in _FINGER_X:
            finger_paths.append(_finger_path_flat(x))
        thumb = _thumb_path_flat()
    elif pose == "pinch":
        finger_paths.append(_finger_path_curled(_FINGER_X[0], grip_center,
                                                grip_radius, phi_end=190.0))
        for x in _FINGER_X[1:]:
            finger_paths.append(_finger_path_flat(x))
        thumb = _thumb_path_curled(grip_center, grip_radius)
    else:
        raise ValueError(f"unknown hand pose {pose!r}")

    paths = [thumb] + finger_paths  # thumb first, matching the joint layout
    tubes = [make_tube(p, FINGER_RADIUS, n_sides) for p in paths]
    components += tubes
    mesh = merge_meshes(components)

    # joints: root + 4 per finger sampled along each path
    root = np.array([0.2, -3.6, 0.0])
    joints = [root]
    for p in paths:
        t = np.linspace(0, 1, 4)
        cum = np.concatenate([[0], np.cumsum(
            np.linalg.norm(np.diff(p, axis=0), axis=1))])
        cum /= cum[-1]
        for f in t:
            idx = np.searchsorted(cum, f, side="right") - 1
            idx = min(idx, len(p) - 2)
            local = (f - cum[idx]) / max(cum[idx + 1] - cum[idx], 1e-12)
            joints.append(p[idx] + local * (p[idx + 1] - p[idx]))
    joints = np.asarray(joints)

    # contact regions: tip vertices of each tube + a palm top patch
    regions = []
    offset = len(palm.vertices)
    for p, tube in zip(paths, tubes):
        n_ring = n_sides
        n_rings = len(p)
        tip = np.arange((n_rings - 2) * n_ring, n_rings * n_ring) + offset
        tip = np.append(tip, offset + n_rings * n_ring + 1)  # tip cap apex
        regions.append(tip)
        offset += len(tube.vertices)
    pv = palm.vertices
    palm_top = np.flatnonzero((np.abs(pv[:, 2] - 1.25) < 1e-9)
                              & (np.abs(pv[:, 0] - 0.2) < 2.9)
                              & (np.abs(pv[:, 1]) < 3.1))
    regions.append(palm_top)
    return HandModel(mesh=mesh, joints=joints,
                     contact_regions=tuple(regions), side="right")


def matched_cylinder(hand: HandModel = None, grip_radius: float = GRIP_RADIUS,
                     length: float = 7.0) -> Mesh:
    """Cylinder sized and placed to match the curled hand's grip."""
    grip_center = GRIP_CENTER.copy()
    grip_center[2] = 1.25 + grip_radius + 0.15
    cyl = make_cylinder(grip_radius, length, n_theta=20, n_len=12, axis="x")
    return Mesh(cyl.vertices + grip_center, cyl.faces)


# -- fixture set generation ----------------------------------------------------

CATALOG_OBJECTS = {
    "cyl_a": ("cylinder", lambda: make_cylinder(1.5, 7.0)),
    "cyl_b": ("cylinder", lambda: make_cylinder(1.2, 9.0)),
    "cyl_c": ("cylinder", lambda: make_cylinder(2.0, 5.0)),
    "box_a": ("box", lambda: make_box((3.0, 4.5, 6.0), subdiv=3)),
    "box_b": ("box", lambda: make_box((2.0, 2.5, 8.0), subdiv=3)),
    "sphere_a": ("sphere", lambda: make_icosphere(2.2, subdiv=2)),
    "mug_a": ("mug", lambda: make_mug()),
}


def write_fixtures(out_dir, seed: int = 0) -> dict:
    """Write the deterministic fixture set: hands, catalog, exemplars.

    Returns a manifest of the written paths. The seed only perturbs exemplar
    grip radii so exemplar tables differ across seeds while staying
    reproducible for a given seed.
    """
    out = Path(out_dir)
    hands_dir = out / "hands"
    objects_dir = out / "objects"
    hands_dir.mkdir(parents=True, exist_ok=True)
    objects_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"hands": {}, "catalog_dir": str(objects_dir),
                "exemplars": str(out / "exemplars.json")}

    for pose in ("curl", "flat", "pinch"):
        hand = make_hand(pose)
        obj_path = hands_dir / f"{pose}.obj"
        json_path = hands_dir / f"{pose}.json"
        save_hand(hand, obj_path, json_path)
        manifest["hands"][pose] = [str(obj_path), str(json_path)]

    categories = {}
    for name, (category, builder) in sorted(CATALOG_OBJECTS.items()):
        save_obj(builder(), objects_dir / f"{name}.obj")
        categories[name] = category
    with open(objects_dir / MANIFEST_NAME, "w") as fh:
        json.dump(categories, fh, indent=1, sort_keys=True)
        fh.write("\n")

    rng = np.random.default_rng(seed)
    exemplars = []
    from .hand import hand_descriptor
    for radius in (1.2, 1.5, 1.8):
        r = radius + float(rng.uniform(-0.05, 0.05))
        hand = make_hand("curl", grip_radius=r)
        b = principal_bone_length(hand)
        cyl = matched_cylinder(grip_radius=r)
        code = compute_object_code(cyl, b)
        exemplars.append(Exemplar(descriptor=hand_descriptor(hand),
                                  code=code, category="cylinder"))
    save_exemplars(exemplars, out / "exemplars.json")
    return manifest
