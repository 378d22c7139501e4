"""Local object catalog: ingest, code-space retrieval, and exemplar lookup.

The catalog replaces network fetching: a directory of watertight OBJ files
with a categories manifest is indexed once into JSON. Held-object prediction
is exemplar retrieval: nearest hand descriptors vote for object codes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import ObjectCode, compute_object_code, rescale_to_code
from .errors import GraspFitError
from .geometry import pca_obb
from .hand import HandModel, hand_descriptor
from .mesh import Mesh, load_obj

log = logging.getLogger("graspfit")

INDEX_NAME = "catalog_index.json"
MANIFEST_NAME = "categories.json"
DESCRIPTOR_DIM = 20


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    category: str
    mesh_path: str
    canonical_code: ObjectCode   # computed with b = 1 (raw length ratios)
    obb_lengths: np.ndarray      # ascending [cm]
    watertight: bool = True

    def load_mesh(self) -> Mesh:
        return load_obj(self.mesh_path)


@dataclass(frozen=True)
class Exemplar:
    descriptor: np.ndarray   # (20,)
    code: ObjectCode
    category: str


def build_catalog(directory, index_path=None) -> str:
    """Index every OBJ in `directory`; writes a deterministic JSON index.

    Non-watertight or unloadable meshes are excluded with the reason recorded.
    Requires a categories manifest mapping file stem to category.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise GraspFitError(f"missing categories manifest {manifest_path}")
    with open(manifest_path) as fh:
        categories = json.load(fh)
    entries = []
    excluded = []
    for obj_path in sorted(directory.glob("*.obj")):
        stem = obj_path.stem
        if stem not in categories:
            excluded.append({"id": stem, "reason": "not in categories manifest"})
            continue
        try:
            mesh = load_obj(obj_path)
        except GraspFitError as exc:
            excluded.append({"id": stem, "reason": f"load error: {exc}"})
            continue
        if not mesh.is_watertight():
            excluded.append({"id": stem, "reason": "not watertight"})
            continue
        obb = pca_obb(mesh.vertices)
        code = compute_object_code(mesh, b=1.0)
        entries.append({
            "id": stem,
            "category": categories[stem],
            "mesh_path": obj_path.name,
            "canonical_code": [float(v) for v in code.x],
            "obb_lengths": [float(v) for v in obb.lengths],
        })
    if not entries:
        raise GraspFitError(f"no usable meshes in {directory}")
    for ex in excluded:
        log.warning("catalog: excluded %s (%s)", ex["id"], ex["reason"])
    index = {"entries": entries, "excluded": excluded}
    index_path = Path(index_path) if index_path else directory / INDEX_NAME
    with open(index_path, "w") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return str(index_path)


def load_catalog(index_path) -> list:
    index_path = Path(index_path)
    with open(index_path) as fh:
        index = json.load(fh)
    base = index_path.parent
    entries = []
    for e in index["entries"]:
        entries.append(CatalogEntry(
            id=e["id"],
            category=e["category"],
            mesh_path=str(base / e["mesh_path"]),
            canonical_code=ObjectCode(np.asarray(e["canonical_code"], float)),
            obb_lengths=np.asarray(e["obb_lengths"], float),
        ))
    if not entries:
        raise GraspFitError(f"empty catalog {index_path}")
    return entries


def load_exemplars(path) -> list:
    with open(path) as fh:
        raw = json.load(fh)
    if not raw:
        raise GraspFitError(f"empty exemplar set {path}")
    out = []
    for e in raw:
        desc = np.asarray(e["descriptor"], float)
        if desc.shape != (DESCRIPTOR_DIM,):
            raise GraspFitError(f"bad descriptor length {desc.shape}")
        out.append(Exemplar(descriptor=desc,
                            code=ObjectCode(np.asarray(e["code"], float)),
                            category=e["category"]))
    return out


def save_exemplars(exemplars, path):
    raw = [{
        "descriptor": [float(v) for v in e.descriptor],
        "code": [float(v) for v in e.code.x],
        "category": e.category,
    } for e in exemplars]
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=1, sort_keys=True)
        fh.write("\n")


def predict_code(hand: HandModel, exemplars, k: int, seed: int):
    """Retrieve an object code for a hand from the exemplar table.

    Takes the k nearest exemplars by descriptor distance and samples one with
    probability proportional to inverse distance; different seeds give the
    diverse selections the pipeline samples from.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    desc = hand_descriptor(hand)
    dists = np.array([np.linalg.norm(desc - e.descriptor) for e in exemplars])
    order = np.argsort(dists, kind="stable")[:k]
    weights = 1.0 / (dists[order] + 1e-6)
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    pick = order[rng.choice(len(order), p=weights)]
    return exemplars[pick].code, exemplars[pick].category


def code_distance(entry: CatalogEntry, code: ObjectCode, b: float) -> float:
    """Catalog ranking distance: shape ratios plus bone-scaled smallest extent.

    Canonical codes are stored with b = 1, so the entry's x1 is its raw
    smallest extent in cm; the query's x1 carries the hand scale through b.
    """
    ex = entry.canonical_code.x
    qx = code.x
    return float(np.sqrt((ex[1] - qx[1]) ** 2 + (ex[2] - qx[2]) ** 2
                         + ((ex[0] - qx[0] * b) / b) ** 2))


def select_object(code: ObjectCode, category: str, catalog, b: float,
                  seed: int) -> Mesh:
    """Pick a catalog mesh near the code and rescale it to match exactly.

    Filters to the category (falling back to the whole catalog when absent),
    ranks by code distance, and samples among the top 3 with the seeded RNG.
    """
    if not catalog:
        raise GraspFitError("empty catalog")
    pool = [e for e in catalog if e.category == category]
    if not pool:
        pool = list(catalog)
    dists = np.array([code_distance(e, code, b) for e in pool])
    order = np.argsort(dists, kind="stable")[:3]
    rng = np.random.default_rng(seed)
    entry = pool[order[rng.integers(len(order))]]
    return rescale_to_code(entry.load_mesh(), code, b)
