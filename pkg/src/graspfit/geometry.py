"""Geometric primitives: PCA boxes, ray casting, containment, distances, voxel overlap.

Everything here is deterministic; batch operations use fixed traversal orders so
results are bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError
from .mesh import Mesh

# fixed ray direction for parity tests, plus deterministic jitter retries
_PARITY_DIR = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
_JITTERS = [
    np.array([1.0, 1.0, 1.0]),
    np.array([0.912, 1.071, 0.983]),
    np.array([1.133, 0.871, 1.049]),
    np.array([0.787, 1.211, 1.017]),
    np.array([1.301, 1.013, 0.771]),
    np.array([0.931, 0.713, 1.287]),
    np.array([1.097, 1.233, 0.913]),
    np.array([0.713, 0.997, 1.311]),
    np.array([1.271, 0.733, 1.111]),
]
_EPS = 1e-12


@dataclass(frozen=True)
class ObbResult:
    """Tight PCA-aligned box: lengths ascending, right-handed orthonormal axes."""

    lengths: np.ndarray   # (3,) ascending [cm]
    axes: np.ndarray      # (3,3), rows are the axes matching lengths
    center: np.ndarray    # (3,) centroid of input points [cm]


@dataclass(frozen=True)
class VoxelGrid:
    origin: np.ndarray        # (3,) [cm]
    voxel_size: float         # [cm]
    dims: tuple               # (nx, ny, nz)
    occupancy: np.ndarray     # flat bool, len = nx*ny*nz

    def volume(self) -> float:
        return float(self.occupancy.sum()) * self.voxel_size ** 3


_REF_DIR = np.array([1.0, 1e-3, 1e-6])  # sign-fixing reference for OBB axes


def pca_obb(points) -> ObbResult:
    """Tight oriented box from PCA of point positions.

    Axes are the covariance eigenvectors permuted so extents sort ascending,
    signs fixed against a reference direction, third axis from a cross product
    so the basis is right-handed.
    """
    pts = np.asarray(points, float).reshape(-1, 3)
    if len(pts) < 4:
        raise DegenerateGeometryError("need >= 4 points for a 3D box")
    center = pts.mean(axis=0)
    d = pts - center
    cov = d.T @ d / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] <= 1e-18 * max(evals[-1], 1.0):
        raise DegenerateGeometryError("points are coplanar/collinear (rank < 3)")
    axes = evecs.T  # rows
    proj = d @ axes.T
    lengths = proj.max(axis=0) - proj.min(axis=0)
    order = np.argsort(lengths, kind="stable")
    lengths = lengths[order]
    axes = axes[order]
    for i in range(2):
        if axes[i] @ _REF_DIR < 0:
            axes[i] = -axes[i]
    axes[2] = np.cross(axes[0], axes[1])
    if np.any(lengths <= 0):
        raise DegenerateGeometryError("degenerate extent in OBB")
    return ObbResult(lengths=lengths, axes=axes, center=center)


def ray_triangle(origin, direction, tri):
    """Moller-Trumbore. Returns smallest positive hit distance or None.

    Boundary rule is inclusive: rays through edges/vertices report a hit.
    """
    origin = np.asarray(origin, float)
    d = np.asarray(direction, float)
    v0, v1, v2 = (np.asarray(t, float) for t in tri)
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(d, e2)
    det = e1 @ pvec
    if abs(det) < _EPS:
        return None
    inv = 1.0 / det
    tvec = origin - v0
    u = (tvec @ pvec) * inv
    if u < -1e-12 or u > 1 + 1e-12:
        return None
    qvec = np.cross(tvec, e1)
    v = (d @ qvec) * inv
    if v < -1e-12 or u + v > 1 + 1e-12:
        return None
    t = (e2 @ qvec) * inv
    if t <= _EPS:
        return None
    return float(t)


def _cross_rows(a, b):
    """Cross product over the last axis without np.cross's axis shuffling."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


class _RayGrid:
    """Triangle data plus a 2D bucket grid perpendicular to a fixed ray direction.

    All rays share one direction, so a triangle can only be crossed by rays
    whose projection onto the perpendicular plane falls inside the triangle's
    projected bounding box; the grid turns the all-pairs cast into a sparse one.
    """

    def __init__(self, mesh: Mesh, direction):
        d = np.asarray(direction, float)
        tri = mesh.vertices[mesh.faces]
        self.tri0 = np.ascontiguousarray(tri[:, 0])
        self.e1 = np.ascontiguousarray(tri[:, 1] - tri[:, 0])
        self.e2 = np.ascontiguousarray(tri[:, 2] - tri[:, 0])
        self.pvec = _cross_rows(d[None, :], self.e2)
        det = np.einsum("fj,fj->f", self.e1, self.pvec)
        fn = _cross_rows(self.e1, self.e2)
        fn /= np.linalg.norm(fn, axis=1, keepdims=True)
        self.fn = fn
        self.near_parallel = np.abs(det) < 1e-10
        self.inv = np.where(self.near_parallel, 0.0,
                            1.0 / np.where(det == 0, 1.0, det))
        # orthonormal basis of the plane perpendicular to the ray direction
        ref = np.eye(3)[np.argmin(np.abs(d))]
        p1 = np.cross(d, ref)
        p1 /= np.linalg.norm(p1)
        self.P = np.stack([p1, np.cross(d, p1)])      # (2,3)
        uv = tri @ self.P.T                           # (F,3,2)
        pad = 1e-9
        lo2 = uv.min(axis=1) - pad
        hi2 = uv.max(axis=1) + pad
        self.origin2 = lo2.min(axis=0)
        extent = hi2 - lo2
        self.cell = max(float(np.median(extent)), 1e-6)
        self.dims2 = np.maximum(
            np.ceil((hi2.max(axis=0) - self.origin2) / self.cell), 1
        ).astype(int)
        i0 = np.clip(((lo2 - self.origin2) / self.cell).astype(int),
                     0, self.dims2 - 1)
        i1 = np.clip(((hi2 - self.origin2) / self.cell).astype(int),
                     0, self.dims2 - 1)
        spans = (i1 - i0 + 1)
        cell_ids, face_ids = [], []
        for f in range(len(tri)):
            sx, sy = spans[f]
            gx = np.arange(i0[f, 0], i1[f, 0] + 1)
            gy = np.arange(i0[f, 1], i1[f, 1] + 1)
            cells = (gx[:, None] * self.dims2[1] + gy[None, :]).ravel()
            cell_ids.append(cells)
            face_ids.append(np.full(sx * sy, f))
        cell_ids = np.concatenate(cell_ids)
        face_ids = np.concatenate(face_ids)
        order = np.argsort(cell_ids, kind="stable")
        self.bucket_faces = face_ids[order]
        n_cells = int(self.dims2[0] * self.dims2[1])
        self.bucket_start = np.searchsorted(cell_ids[order],
                                            np.arange(n_cells + 1))

    def candidates(self, points):
        """CSR-style (pair_point, pair_face) arrays of grid-local candidates."""
        uvp = points @ self.P.T
        ci = np.floor((uvp - self.origin2) / self.cell).astype(int)
        valid = np.all((ci >= 0) & (ci < self.dims2), axis=1)
        cell = np.where(valid, ci[:, 0] * self.dims2[1] + ci[:, 1], 0)
        start = np.where(valid, self.bucket_start[cell], 0)
        count = np.where(valid, self.bucket_start[cell + 1] - start, 0)
        total = int(count.sum())
        if total == 0:
            return (np.zeros(0, np.int64), np.zeros(0, np.int64))
        pair_pt = np.repeat(np.arange(len(points)), count)
        base = np.cumsum(count) - count
        flat = np.arange(total) - np.repeat(base, count) + np.repeat(start,
                                                                     count)
        return pair_pt, self.bucket_faces[flat]


def _ray_precompute(mesh: Mesh, attempt: int, direction) -> _RayGrid:
    """Per-(mesh, direction) ray-cast grid, cached on the immutable mesh."""
    cache = getattr(mesh, "_ray_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(mesh, "_ray_cache", cache)
    if attempt not in cache:
        cache[attempt] = _RayGrid(mesh, direction)
    return cache[attempt]


def _cast_all(points, direction, grid: _RayGrid):
    """Sparse parity ray cast: crossing counts and a 'grazing' flag per point.

    Suspect marks hits too close to a triangle boundary or an in-plane
    parallel triangle, requiring a jitter retry.
    """
    d = np.asarray(direction, float)
    counts = np.zeros(len(points), dtype=np.int64)
    suspect = np.zeros(len(points), dtype=bool)
    pair_pt, pair_face = grid.candidates(np.asarray(points, float))
    if len(pair_pt) == 0:
        return counts, suspect
    tol = 1e-9
    p = points[pair_pt]
    tvec = p - grid.tri0[pair_face]
    inv = grid.inv[pair_face]
    par = grid.near_parallel[pair_face]
    u = np.einsum("nj,nj->n", tvec, grid.pvec[pair_face]) * inv
    qvec = _cross_rows(tvec, grid.e1[pair_face])
    v = (qvec @ d) * inv
    t = np.einsum("nj,nj->n", qvec, grid.e2[pair_face]) * inv
    hit = (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 1e-9) & ~par
    np.add.at(counts, pair_pt, hit)
    grazing = ((np.abs(u) < tol) | (np.abs(v) < tol)
               | (np.abs(1 - u - v) < tol) | (np.abs(t) < tol))
    near_edge = (u > -tol) & (v > -tol) & (u + v < 1 + tol) & ~par
    # a ray parallel to a face only grazes it if the origin sits in its plane
    in_plane = par & (np.abs(np.einsum("nj,nj->n", tvec,
                                       grid.fn[pair_face])) < tol)
    np.logical_or.at(suspect, pair_pt, (grazing & near_edge) | in_plane)
    return counts, suspect


def points_inside(mesh: Mesh, points) -> np.ndarray:
    """Odd ray-crossing parity containment test for a watertight mesh.

    Surface points count as outside (strict interior convention). Uses a fixed
    ray direction with up to 8 deterministic jitter retries on grazing hits.
    """
    mesh.require_watertight("points_inside input")
    pts = np.asarray(points, float).reshape(-1, 3)
    lo, hi = mesh.aabb()
    result = np.zeros(len(pts), dtype=bool)
    inside_aabb = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
    todo = np.flatnonzero(inside_aabb)
    for attempt, jit in enumerate(_JITTERS):
        if len(todo) == 0:
            break
        d = jit / np.linalg.norm(jit)
        counts, suspect = _cast_all(pts[todo], d,
                                    _ray_precompute(mesh, attempt, d))
        settled = ~suspect if attempt < len(_JITTERS) - 1 else np.ones_like(suspect)
        result[todo[settled]] = counts[settled] % 2 == 1
        todo = todo[~settled]
    return result


def mesh_kdtree(mesh: Mesh) -> cKDTree:
    """KD-tree over mesh vertices, cached on the (immutable) mesh."""
    tree = getattr(mesh, "_kdtree", None)
    if tree is None:
        tree = cKDTree(mesh.vertices)
        object.__setattr__(mesh, "_kdtree", tree)
    return tree


def min_dist_point_set(v, V) -> float:
    """d(v, V) = min over w in V of ||v - w||."""
    V = np.asarray(V, float).reshape(-1, 3)
    if len(V) == 0:
        raise ValueError("empty point set")
    return float(np.linalg.norm(V - np.asarray(v, float), axis=1).min())


def min_dist_set_set(V1, V2) -> float:
    """d(V1, V2) = min over v in V1 of d(v, V2). KD-tree accelerated, exact."""
    V1 = np.asarray(V1, float).reshape(-1, 3)
    V2 = np.asarray(V2, float).reshape(-1, 3)
    if len(V1) == 0 or len(V2) == 0:
        raise ValueError("empty point set")
    d, _ = cKDTree(V2).query(V1, k=1)
    return float(d.min())


def nearest_in_set(queries, V):
    """Per-query nearest neighbour in V: (distances, indices)."""
    V = np.asarray(V, float).reshape(-1, 3)
    q = np.asarray(queries, float).reshape(-1, 3)
    if len(V) == 0 or len(q) == 0:
        raise ValueError("empty point set")
    d, idx = cKDTree(V).query(q, k=1)
    return np.asarray(d, float), np.asarray(idx, np.int64)


def intersection_voxels(mesh_a: Mesh, mesh_b: Mesh, voxel_size: float) -> VoxelGrid:
    """Occupancy of voxels whose centers lie inside both meshes.

    Grid covers the AABB intersection plus a one-voxel margin.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    mesh_a.require_watertight("intersection mesh A")
    mesh_b.require_watertight("intersection mesh B")
    lo_a, hi_a = mesh_a.aabb()
    lo_b, hi_b = mesh_b.aabb()
    lo = np.maximum(lo_a, lo_b) - voxel_size
    hi = np.minimum(hi_a, hi_b) + voxel_size
    if np.any(hi <= lo):
        return VoxelGrid(lo, voxel_size, (0, 0, 0), np.zeros(0, dtype=bool))
    dims = np.maximum(np.ceil((hi - lo) / voxel_size).astype(int), 1)
    ax = [lo[i] + (np.arange(dims[i]) + 0.5) * voxel_size for i in range(3)]
    gx, gy, gz = np.meshgrid(*ax, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    occ = points_inside(mesh_a, centers)
    if occ.any():
        occ[occ] = points_inside(mesh_b, centers[occ])
    return VoxelGrid(lo, float(voxel_size), tuple(int(x) for x in dims), occ)


def intersection_volume(mesh_a: Mesh, mesh_b: Mesh, voxel_size: float) -> float:
    """Voxelized overlap volume [cm^3]."""
    return intersection_voxels(mesh_a, mesh_b, voxel_size).volume()
