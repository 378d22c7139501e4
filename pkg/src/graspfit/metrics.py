"""Grasp-quality metrics and a deterministic quasi-static stability proxy.

The simulation distance is computed by an in-package penalty-contact rigid
body integrator ("SD-proxy"): the object falls under gravity against the
static hand; the metric is the center-of-mass displacement after a fixed
number of symplectic Euler steps. Values are not comparable to any external
physics engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, SimulationUnstable
from .geometry import intersection_volume, nearest_in_set, points_inside
from .hand import HandModel
from .mesh import Mesh

DEFAULT_VOXEL_CM = 0.5
COVERAGE_THRESHOLD_CM = 0.5
SUCCESS_SD_CM = 2.0
SUCCESS_DEPTH_CM = 0.5


@dataclass
class SimConfig:
    gravity: tuple = (0.0, 0.0, -980.0)   # cm/s^2
    timestep: float = 1e-3                # s
    steps: int = 500
    stiffness: float = 98000.0            # per unit mass, 1/s^2
    damping_ratio: float = 0.7
    friction: float = 0.8
    max_force_depth: float = 0.1          # cm, elastic force saturates here

    def validate(self):
        if self.timestep <= 0 or self.steps <= 0 or self.friction < 0:
            raise ValueError("invalid simulation config")
        if self.max_force_depth <= 0:
            raise ValueError("max_force_depth must be positive")


@dataclass
class MetricsReport:
    penetration_depth: float        # cm
    penetration_volume: float       # cm^3
    sim_distance: float             # cm (SD-proxy)
    contact_region_coverage: int    # 0..6
    success: bool

    def to_dict(self):
        return {
            "pene_depth_cm": float(self.penetration_depth),
            "pene_vox_cm3": float(self.penetration_volume),
            "sd_proxy_cm": float(self.sim_distance),
            "coverage": int(self.contact_region_coverage),
            "success": bool(self.success),
        }


def penetration_depth(hand: HandModel, obj: Mesh) -> float:
    """Max distance-to-nearest-hand-vertex over object vertices inside the hand."""
    inside = points_inside(hand.mesh, obj.vertices)
    if not inside.any():
        return 0.0
    d, _ = cKDTree(hand.mesh.vertices).query(obj.vertices[inside], k=1)
    return float(d.max())


def penetration_volume(hand: HandModel, obj: Mesh,
                       voxel_size: float = DEFAULT_VOXEL_CM) -> float:
    return intersection_volume(hand.mesh, obj, voxel_size)


def _mass_properties(obj: Mesh, density: float = 1.0):
    """Mass, center of mass, and body inertia from signed tetrahedra."""
    tri = obj.vertices[obj.faces]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    det = np.einsum("ij,ij->i", a, np.cross(b, c))
    vol = det.sum() / 6.0
    if vol <= 1e-9:
        raise DegenerateGeometryError("object volume is non-positive")
    com = (det[:, None] * (a + b + c)).sum(axis=0) / (24.0 * vol)
    # canonical covariance-based inertia of the union of origin tetrahedra;
    # integral of u u^T over the unit simplex is (I + ones)/120
    C = np.zeros((3, 3))
    unit = (np.eye(3) + 1.0) / 120.0
    for i in range(len(det)):
        T = np.stack([a[i], b[i], c[i]])
        C += det[i] * T.T @ unit @ T
    mass = density * vol
    C *= density
    # shift to center of mass
    C -= mass * np.outer(com, com)
    inertia = np.trace(C) * np.eye(3) - C
    return mass, com, inertia


def _hand_surface_samples(hand_mesh: Mesh):
    """Contact proxy: triangle centroids + vertices, each with an outward normal."""
    fn = hand_mesh.face_normals()
    centroids = hand_mesh.vertices[hand_mesh.faces].mean(axis=1)
    pts = np.vstack([centroids, hand_mesh.vertices])
    nrm = np.vstack([fn, hand_mesh.vertex_normals])
    return pts, nrm


def simulation_distance(hand, obj: Mesh, sim: SimConfig | None = None) -> float:
    """SD-proxy: CoM displacement of the object after quasi-static settling [cm]."""
    sim = sim or SimConfig()
    sim.validate()
    hand_mesh = hand.mesh if isinstance(hand, HandModel) else hand
    obj.require_watertight("simulated object")
    mass, com0, inertia_body = _mass_properties(obj)
    surf_pts, surf_nrm = _hand_surface_samples(hand_mesh)
    tree = cKDTree(surf_pts)

    g = np.asarray(sim.gravity, float)
    dt = sim.timestep
    k = sim.stiffness                      # accel per cm of penetration
    c = 2.0 * np.sqrt(k) * sim.damping_ratio
    mu = sim.friction

    body_pts = obj.vertices - com0         # contact sample points, body frame
    x = com0.copy()
    v = np.zeros(3)
    R = np.eye(3)
    omega = np.zeros(3)
    inv_inertia_body = np.linalg.inv(inertia_body)
    speed_limit = 1e5

    for _ in range(sim.steps):
        world_pts = body_pts @ R.T + x
        # exact containment gates the contacts; the tangent plane of the
        # nearest sample misfires near edges and corners
        pen = points_inside(hand_mesh, world_pts)
        force = mass * g
        torque = np.zeros(3)
        if pen.any():
            p = world_pts[pen]
            d, idx = tree.query(p, k=1)
            q = surf_pts[idx]
            n = surf_nrm[idx]
            # depth from the tangent plane of the nearest sample (stable for
            # points that crossed between samples); saturating the elastic
            # term keeps pre-existing overlap from launching the object
            depth = np.clip(np.einsum("ij,ij->i", q - p, n),
                            0.0, sim.max_force_depth)
            rel = p - x
            vel = v + np.cross(omega, rel)
            vn = np.einsum("ij,ij->i", vel, n)
            m_c = mass / len(p)
            fn_mag = m_c * (k * depth - c * vn)
            fn_mag = np.maximum(fn_mag, 0.0)
            fnormal = fn_mag[:, None] * n
            vt = vel - vn[:, None] * n
            vt_norm = np.linalg.norm(vt, axis=1)
            ft_mag = np.minimum(m_c * c * vt_norm, mu * fn_mag)
            safe = np.where(vt_norm < 1e-12, 1.0, vt_norm)
            ffric = -(ft_mag / safe)[:, None] * vt
            f = fnormal + ffric
            force = force + f.sum(axis=0)
            torque = torque + np.cross(rel, f).sum(axis=0)
        v = v + (force / mass) * dt
        inv_inertia_world = R @ inv_inertia_body @ R.T
        omega = omega + (inv_inertia_world @ torque) * dt
        x = x + v * dt
        ang = np.linalg.norm(omega) * dt
        if ang > 1e-12:
            axis = omega / np.linalg.norm(omega)
            K = np.array([[0, -axis[2], axis[1]],
                          [axis[2], 0, -axis[0]],
                          [-axis[1], axis[0], 0]])
            dR = np.eye(3) + np.sin(ang) * K + (1 - np.cos(ang)) * K @ K
            R = dR @ R
        if np.linalg.norm(v) > speed_limit:
            raise SimulationUnstable("velocity blow-up in SD-proxy")
    return float(np.linalg.norm(x - com0))


def evaluate(hand: HandModel, obj: Mesh, sim: SimConfig | None = None,
             voxel_size: float = DEFAULT_VOXEL_CM,
             coverage_threshold: float = COVERAGE_THRESHOLD_CM,
             success_sd: float = SUCCESS_SD_CM,
             success_depth: float = SUCCESS_DEPTH_CM) -> MetricsReport:
    """Aggregate the metric suite for a posed object against a hand."""
    depth = penetration_depth(hand, obj)
    volume = penetration_volume(hand, obj, voxel_size)
    sd = simulation_distance(hand, obj, sim)
    coverage = 0
    for region in hand.contact_regions:
        if len(region) == 0:
            continue
        d, _ = nearest_in_set(hand.mesh.vertices[region], obj.vertices)
        if d.min() <= coverage_threshold:
            coverage += 1
    success = sd <= success_sd and depth <= success_depth
    return MetricsReport(penetration_depth=depth,
                         penetration_volume=volume,
                         sim_distance=sd,
                         contact_region_coverage=coverage,
                         success=success)


def write_metrics(report: MetricsReport, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
