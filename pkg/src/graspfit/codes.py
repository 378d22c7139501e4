"""Compact object codes from oriented-bounding-box length ratios.

The code is x = [l3/b, l2/l3, l1/l2] with l1 >= l2 >= l3 the sorted tight-box
lengths and b the hand's principal bone length; sorting makes the code
invariant to rigid motion of the object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .geometry import ObbResult, pca_obb
from .mesh import Mesh


@dataclass(frozen=True)
class ObjectCode:
    x: np.ndarray  # (3,) dimensionless, x[1] >= 1 and x[2] >= 1

    def __post_init__(self):
        x = np.asarray(self.x, float)
        if x.shape != (3,) or np.any(x <= 0):
            raise ValueError(f"invalid object code {x}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    def extents(self, b: float) -> np.ndarray:
        """Ascending box lengths this code encodes at bone length b [cm]."""
        x1, x2, x3 = self.x
        return np.array([x1 * b, x1 * x2 * b, x1 * x2 * x3 * b])


def compute_object_code(obj: Mesh, b: float) -> ObjectCode:
    if b <= 0:
        raise ValueError("principal bone length must be positive")
    obb = pca_obb(obj.vertices)
    l3, l2, l1 = obb.lengths  # stored ascending
    return ObjectCode(np.array([l3 / b, l2 / l3, l1 / l2]))


def rescale_to_code(obj: Mesh, code: ObjectCode, b: float) -> Mesh:
    """Anisotropically scale along the object's box axes to match the code.

    The resulting sorted extents are (x1*b, x1*x2*b, x1*x2*x3*b) ascending.
    Scaling happens in the box frame about the box center, so PCA axes are
    preserved and the round trip through compute_object_code is exact.
    """
    obb: ObbResult = pca_obb(obj.vertices)
    target = code.extents(b)
    if np.any(obb.lengths <= 0):
        raise DegenerateGeometryError("degenerate box extents")
    factors = target / obb.lengths
    A = obb.axes  # rows
    local = (obj.vertices - obb.center) @ A.T
    verts = (local * factors) @ A + obb.center
    return Mesh(verts, obj.faces)
