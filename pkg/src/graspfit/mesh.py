"""Indexed triangle meshes and ASCII OBJ input/output.

All lengths are in centimeters. Meshes are immutable after construction;
vertex normals are computed once (area-weighted face normals) and cached.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshLoadError, NonWatertightError

log = logging.getLogger("graspfit")

DEGENERATE_AREA = 1e-12  # cm^2, faces below this are dropped at load time


@dataclass(frozen=True)
class Mesh:
    """Triangle surface: (N,3) float vertices and (F,3) int faces."""

    vertices: np.ndarray
    faces: np.ndarray
    _normals: np.ndarray = field(default=None, repr=False, compare=False)
    _watertight: bool = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshLoadError(f"vertices must be (N,3), got {v.shape}")
        if f.size and (f.ndim != 2 or f.shape[1] != 3):
            raise MeshLoadError(f"faces must be (F,3), got {f.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.shape[0] == 0:
            raise MeshLoadError("empty mesh: no vertices")
        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            raise MeshLoadError(
                f"face index out of range: max {f.max()} over {v.shape[0]} vertices")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "_normals", None)
        object.__setattr__(self, "_watertight", None)

    # -- derived quantities ------------------------------------------------

    @property
    def vertex_normals(self) -> np.ndarray:
        if self._normals is None:
            n = _vertex_normals(self.vertices, self.faces)
            n.setflags(write=False)
            object.__setattr__(self, "_normals", n)
        return self._normals

    def face_normals(self) -> np.ndarray:
        """Unit outward normals per face (orientation as stored)."""
        tri = self.vertices[self.faces]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        return n / lens

    def face_areas(self) -> np.ndarray:
        tri = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def is_watertight(self) -> bool:
        """Every edge shared by exactly two faces with opposite orientation."""
        if self._watertight is None:
            object.__setattr__(self, "_watertight", self._audit_watertight())
        return self._watertight

    def _audit_watertight(self) -> bool:
        if len(self.faces) == 0:
            return False
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        # each directed edge must appear exactly once, and its reverse exactly once
        keys = directed[:, 0] * (len(self.vertices) + 1) + directed[:, 1]
        rkeys = directed[:, 1] * (len(self.vertices) + 1) + directed[:, 0]
        uk, counts = np.unique(keys, return_counts=True)
        if counts.max() > 1:
            return False
        return np.array_equal(np.sort(keys), np.sort(rkeys))

    def require_watertight(self, what: str = "mesh"):
        if not self.is_watertight():
            raise NonWatertightError(f"{what} is not watertight")

    def transformed(self, rotation=None, translation=None, scale=1.0) -> "Mesh":
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return Mesh(v, self.faces)

    def volume(self) -> float:
        """Signed volume via divergence theorem over triangles [cm^3]."""
        tri = self.vertices[self.faces]
        return float(np.einsum("ij,ij->i", tri[:, 0],
                               np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


def _vertex_normals(vertices, faces):
    normals = np.zeros_like(vertices)
    if len(faces):
        tri = vertices[faces]
        fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])  # area-weighted
        for k in range(3):
            np.add.at(normals, faces[:, k], fn)
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    fallback = lens[:, 0] < 1e-20
    normals[fallback] = (1.0, 0.0, 0.0)
    lens[fallback] = 1.0
    return normals / lens


def drop_degenerate_faces(vertices, faces, min_area=DEGENERATE_AREA):
    """Remove faces with area <= min_area; returns (faces, dropped_count)."""
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        return faces, 0
    tri = np.asarray(vertices, float)[faces]
    areas = 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    keep = areas > min_area
    return faces[keep], int((~keep).sum())


def load_obj(path) -> Mesh:
    """Load an ASCII OBJ. Polygon faces are fan-triangulated; vn/vt ignored."""
    vertices = []
    faces = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshLoadError(f"{path}:{lineno}: malformed vertex record")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise MeshLoadError(f"{path}:{lineno}: {exc}") from exc
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshLoadError(f"{path}:{lineno}: face with <3 vertices")
                try:
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                except ValueError as exc:
                    raise MeshLoadError(f"{path}:{lineno}: {exc}") from exc
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                for a, b in zip(idx[1:-1], idx[2:]):
                    faces.append([idx[0], a, b])
    if not vertices:
        raise MeshLoadError(f"{path}: no vertices")
    if not faces:
        raise MeshLoadError(f"{path}: no faces")
    verts = np.asarray(vertices, float)
    faces = np.asarray(faces, np.int64)
    if faces.min() < 0 or faces.max() >= len(verts):
        raise MeshLoadError(
            f"{path}: face index {faces.max() + 1} over {len(verts)} vertices")
    faces, dropped = drop_degenerate_faces(verts, faces)
    if dropped:
        log.warning("%s: dropped %d degenerate faces", path, dropped)
    if len(faces) == 0:
        raise MeshLoadError(f"{path}: all faces degenerate")
    return Mesh(verts, faces)


def save_obj(mesh: Mesh, path):
    """Write v/f records only (normals are regenerated on load)."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write("v %.9g %.9g %.9g\n" % (v[0], v[1], v[2]))
        for f in mesh.faces:
            fh.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))


# back-compat friendly aliases matching the public surface
load_mesh = load_obj
save_mesh = save_obj
