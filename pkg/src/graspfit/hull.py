"""Convex hulls, convex signed distance, and the largest inscribed ball."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull as _QHull
from scipy.spatial import QhullError

from .errors import ContractViolation, DegenerateGeometryError
from .mesh import Mesh

_PLANE_TOL = 1e-9


def convex_hull(points) -> Mesh:
    """Watertight convex triangle mesh with outward-facing normals."""
    pts = np.asarray(points, float).reshape(-1, 3)
    if len(pts) < 4:
        raise DegenerateGeometryError("need >= 4 points for a 3D hull")
    try:
        qh = _QHull(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(f"degenerate hull input: {exc}") from exc
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[qh.vertices] = np.arange(len(qh.vertices))
    verts = pts[qh.vertices]
    faces = remap[qh.simplices]
    # reorient each triangle to match qhull's outward plane normal
    tri = verts[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    flip = np.einsum("ij,ij->i", n, qh.equations[:, :3]) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return Mesh(verts, faces)


class ConvexPlanes:
    """Face-plane representation of a convex watertight mesh.

    Precomputes (normal, offset) per face and audits convexity: every vertex
    must lie on or behind every face plane.
    """

    def __init__(self, hull: Mesh, audit_tol: float = 1e-7):
        self.mesh = hull
        self.normals = hull.face_normals()
        tri0 = hull.vertices[hull.faces[:, 0]]
        self.offsets = np.einsum("ij,ij->i", self.normals, tri0)
        scale = max(np.abs(hull.vertices).max(), 1.0)
        slack = hull.vertices @ self.normals.T - self.offsets  # (V,F)
        if slack.max() > audit_tol * scale:
            raise ContractViolation("mesh is not convex (face-plane audit failed)")
        self.centroid = hull.vertices.mean(axis=0)
        self.circumradius = float(
            np.linalg.norm(hull.vertices - self.centroid, axis=1).max())

    def plane_distances(self, points) -> np.ndarray:
        """Signed distance to each face plane, positive outside: (N,F)."""
        p = np.asarray(points, float).reshape(-1, 3)
        return p @ self.normals.T - self.offsets

    def sdf(self, points) -> np.ndarray:
        """Signed distance to the hull surface: positive outside, negative inside."""
        p = np.asarray(points, float).reshape(-1, 3)
        pd = self.plane_distances(p)
        inside = np.all(pd <= _PLANE_TOL, axis=1)
        out = np.empty(len(p))
        if inside.any():
            # interior distance to boundary of a convex body = min face-plane gap
            out[inside] = pd[inside].max(axis=1)
        if (~inside).any():
            out[~inside] = _point_mesh_distance(p[~inside], self.mesh)
        return out


def sdf_convex(hull: Mesh, point) -> float:
    """Signed distance from a point to a convex watertight hull [cm]."""
    hull.require_watertight("sdf_convex hull")
    return float(ConvexPlanes(hull).sdf(np.asarray(point, float))[0])


def _point_mesh_distance(points, mesh: Mesh) -> np.ndarray:
    """Exact unsigned point-to-triangle-mesh distance, vectorized over points."""
    p = np.asarray(points, float).reshape(-1, 3)
    tri = mesh.vertices[mesh.faces]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    best = np.full(len(p), np.inf)
    chunk = max(1, int(2e6) // max(len(tri), 1))
    for s in range(0, len(p), chunk):
        q = p[s:s + chunk][:, None, :]  # (n,1,3)
        d = _point_triangle_dist(q, a[None], b[None], c[None])
        best[s:s + chunk] = d.min(axis=1)
    return best


def _point_triangle_dist(p, a, b, c):
    """Ericson's closest-point-on-triangle, broadcast over (n,F,3)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("...j,...j->...", ab, ap)
    d2 = np.einsum("...j,...j->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...j,...j->...", ab, bp)
    d4 = np.einsum("...j,...j->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...j,...j->...", ab, cp)
    d6 = np.einsum("...j,...j->...", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    denom = np.where(np.abs(denom) < 1e-30, 1.0, denom)
    v = vb / denom
    w = vc / denom
    closest = a + v[..., None] * ab + w[..., None] * ac
    # clamp to edges/vertices region by region
    closest = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a, closest)
    closest = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b, closest)
    closest = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c, closest)
    tab = np.clip(d1 / np.where(d1 - d3 == 0, 1.0, d1 - d3), 0, 1)
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest = np.where(on_ab[..., None], a + tab[..., None] * ab, closest)
    tac = np.clip(d2 / np.where(d2 - d6 == 0, 1.0, d2 - d6), 0, 1)
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest = np.where(on_ac[..., None], a + tac[..., None] * ac, closest)
    num = d4 - d3
    den = (d4 - d3) + (d5 - d6)
    tbc = np.clip(num / np.where(den == 0, 1.0, den), 0, 1)
    on_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    closest = np.where(on_bc[..., None], b + tbc[..., None] * (c - b), closest)
    return np.linalg.norm(p - closest, axis=-1)


def inscribed_ball(planes: ConvexPlanes, n_starts: int = 8, iters: int = 500,
                   seed: int = 0):
    """Largest ball inside a convex hull by subgradient descent on the SDF.

    Multi-start (centroid + jittered copies); the step starts at 1% of the
    circumscribed radius and halves every 60 iterations so the center settles
    well below metric tolerances. Returns (center, radius, trace) where trace
    holds (center, sdf) pairs for the winning start.
    """
    rng = np.random.default_rng(seed)
    scale = max(planes.circumradius, 1e-12)
    starts = [planes.centroid.copy()]
    for _ in range(n_starts - 1):
        starts.append(planes.centroid + rng.normal(scale=0.05 * scale, size=3))
    best = (None, -np.inf, None)
    for start in starts:
        o = start.copy()
        # keep jittered starts inside
        pd = planes.plane_distances(o)[0]
        if pd.max() > 0:
            o = planes.centroid.copy()
        step0 = 0.01 * scale
        trace = []
        for it in range(iters):
            pd = planes.plane_distances(o)[0]
            val = pd.max()
            trace.append((o.copy(), float(val)))
            active = pd >= val - 1e-6 * scale
            g = planes.normals[active].mean(axis=0)
            gn = np.linalg.norm(g)
            if gn < 1e-15:
                break  # balanced subgradient: center of the active planes
            step = step0 * 0.5 ** (it // 60)
            o = o - step * (g / gn)
        pd = planes.plane_distances(o)[0]
        r = -pd.max()
        if r > best[1]:
            best = (o, r, trace)
    return best[0], float(best[1]), best[2]
