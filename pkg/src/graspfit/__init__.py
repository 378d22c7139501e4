"""graspfit: synthesize and evaluate a plausible held object for a fixed 3D hand."""

__version__ = "0.1.0"

from .codes import ObjectCode, compute_object_code, rescale_to_code
from .errors import GraspFitError
from .fitting import FitConfig, FitReport, fit
from .hand import HandModel, canonicalize, contact_labels, grasp_gate
from .mesh import Mesh, load_obj, save_obj
from .metrics import MetricsReport, SimConfig, evaluate

__all__ = [
    "ObjectCode", "compute_object_code", "rescale_to_code",
    "GraspFitError", "FitConfig", "FitReport", "fit",
    "HandModel", "canonicalize", "contact_labels", "grasp_gate",
    "Mesh", "load_obj", "save_obj",
    "MetricsReport", "SimConfig", "evaluate",
    "__version__",
]
