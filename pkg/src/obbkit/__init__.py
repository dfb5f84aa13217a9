"""Oriented-bounding-box toolkit.

Rotated-box geometry (IoU via convex clipping), the box delta transform,
Hungarian set matching with a composite focal/L1/IoU cost, rotated RoIAlign,
a six-stage sparse-proposal refinement pipeline, and rotated-AP50
evaluation with inshore/offshore splits.
"""

__version__ = "0.1.0"

from .errors import ParseError, SingularTransformError, ValidationError
from .types import (
    Detection,
    GroundTruthRecord,
    OrientedBox,
    Scene,
    WeightStore,
    canonicalize_angle,
)

__all__ = [
    "Detection",
    "GroundTruthRecord",
    "OrientedBox",
    "ParseError",
    "Scene",
    "SingularTransformError",
    "ValidationError",
    "WeightStore",
    "canonicalize_angle",
    "__version__",
]
