"""Exception types shared across the package."""


class GraspFitError(Exception):
    """Base class for all graspfit errors."""


class MeshLoadError(GraspFitError):
    """Malformed or empty mesh file."""


class DegenerateGeometryError(GraspFitError):
    """Input geometry has insufficient rank (coplanar/collinear points, zero extents)."""


class NonWatertightError(GraspFitError):
    """Operation requires a watertight (edge-manifold, consistently oriented) mesh."""


class ContractViolation(GraspFitError):
    """A documented precondition was violated (e.g. non-convex hull passed to a convex op)."""


class SimulationUnstable(GraspFitError):
    """Rigid-body integration diverged (energy/velocity blow-up)."""


class FitError(GraspFitError):
    """Optimization produced NaN or otherwise failed; message carries the iteration."""
