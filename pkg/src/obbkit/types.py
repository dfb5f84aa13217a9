"""Core value types: oriented boxes, detections, ground truth, weight stores.

Angle convention: theta is the rotation (radians) of the box's w-edge away
from the +x axis, toward +y. Image coordinates put +y downward. A box is
invariant under rotation by pi, so theta is stored canonically in
(-pi/2, pi/2].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_HALF_PI = math.pi / 2.0


def canonicalize_angle(theta: float) -> float:
    """Reduce an angle to the canonical (-pi/2, pi/2] representative mod pi."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValidationError(f"angle must be finite, got {theta!r}")
    # IEEE remainder is exact and canonical angles map to themselves.
    r = math.remainder(theta, math.pi)
    if r <= -_HALF_PI:
        r += math.pi
    return r


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle (cx, cy, w, h, theta) in image pixels / radians."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(
                f"box sides must be positive, got w={self.w!r} h={self.h!r}"
            )
        object.__setattr__(self, "theta", canonicalize_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.theta)


class Scene(str, enum.Enum):
    INSHORE = "inshore"
    OFFSHORE = "offshore"
    UNSPECIFIED = "unspecified"


@dataclass(frozen=True)
class Detection:
    """A scored, classed box prediction for one image."""

    box: OrientedBox
    score: float
    class_id: int = 0
    image_id: str = ""

    def __post_init__(self):
        s = float(self.score)
        if not math.isfinite(s) or not 0.0 <= s <= 1.0:
            raise ValidationError(f"score must be in [0, 1], got {self.score!r}")
        object.__setattr__(self, "score", s)
        if int(self.class_id) < 0:
            raise ValidationError(f"class_id must be >= 0, got {self.class_id!r}")
        object.__setattr__(self, "class_id", int(self.class_id))


@dataclass(frozen=True)
class GroundTruthRecord:
    """An annotated box with its scene tag."""

    box: OrientedBox
    class_id: int = 0
    image_id: str = ""
    scene: Scene = Scene.UNSPECIFIED

    def __post_init__(self):
        if int(self.class_id) < 0:
            raise ValidationError(f"class_id must be >= 0, got {self.class_id!r}")
        object.__setattr__(self, "class_id", int(self.class_id))
        if not isinstance(self.scene, Scene):
            try:
                object.__setattr__(self, "scene", Scene(self.scene))
            except ValueError:
                raise ValidationError(f"unknown scene {self.scene!r}") from None


class WeightStore:
    """Named map of parameter path -> float64 array, validated on insert."""

    def __init__(self, arrays=None):
        self._arrays: dict[str, np.ndarray] = {}
        if arrays:
            for name, arr in arrays.items():
                self.put(name, arr)

    def put(self, name: str, arr) -> None:
        a = np.ascontiguousarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ValidationError(f"weight {name!r} contains non-finite values")
        self._arrays[str(name)] = a

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def require(self, names) -> None:
        """Raise naming every missing parameter path."""
        missing = sorted(n for n in names if n not in self._arrays)
        if missing:
            raise ValidationError("missing weights: " + ", ".join(missing))

    def __eq__(self, other):
        if not isinstance(other, WeightStore):
            return NotImplemented
        if self._arrays.keys() != other._arrays.keys():
            return False
        return all(
            a.shape == other._arrays[n].shape and np.array_equal(a, other._arrays[n])
            for n, a in self._arrays.items()
        )
