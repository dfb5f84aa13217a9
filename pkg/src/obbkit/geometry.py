"""Convex polygon geometry for oriented boxes: corners, clipping, IoU.

The pairwise IoU kernel has a compiled implementation (obbkit._clip) and a
pure-Python twin (obbkit._clip_py); the import below picks the compiled one
when available. Set OBBKIT_PURE_PYTHON=1 to force the fallback. Both produce
bit-identical results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _clip_py
from .errors import ValidationError
from .types import OrientedBox

if os.environ.get("OBBKIT_PURE_PYTHON"):
    _kernel = _clip_py
else:
    try:
        from . import _clip as _kernel
    except ImportError:  # extension not built
        _kernel = _clip_py

_COLLINEAR_TOL = 1e-9
_MIN_AREA = 1e-12


def active_kernel() -> str:
    """Name of the IoU kernel in use: "compiled" or "python"."""
    return _kernel.KERNEL_NAME


@dataclass(frozen=True)
class ConvexPolygon:
    """Counter-clockwise convex polygon; may be empty (no region)."""

    vertices: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n == 0:
            return
        if n < 3:
            raise ValidationError(f"polygon needs >= 3 vertices, got {n}")
        for i in range(n):
            x0, y0 = verts[i - 1]
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            e1x, e1y = x1 - x0, y1 - y0
            e2x, e2y = x2 - x1, y2 - y1
            cross = e1x * e2y - e1y * e2x
            scale = max(1.0, (e1x * e1x + e1y * e1y) ** 0.5
                        * (e2x * e2x + e2y * e2y) ** 0.5)
            if cross < -_COLLINEAR_TOL * scale:
                raise ValidationError("polygon is not convex/counter-clockwise")

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def __len__(self) -> int:
        return len(self.vertices)


def corners(box: OrientedBox) -> ConvexPolygon:
    """The box's 4 corners, counter-clockwise."""
    return ConvexPolygon(
        tuple(_clip_py.box_corners(box.cx, box.cy, box.w, box.h, box.theta))
    )


def polygon_area(p: ConvexPolygon) -> float:
    """Shoelace area; 0 for the empty polygon."""
    if p.is_empty:
        return 0.0
    return _clip_py.shoelace_area(p.vertices)


def polygon_intersection(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    """Convex intersection region, empty when the overlap is degenerate."""
    if a.is_empty or b.is_empty:
        return ConvexPolygon()
    pts = _clip_py.clip_convex(list(a.vertices), list(b.vertices))
    # Drop consecutive duplicates introduced by clipping through vertices.
    cleaned = []
    for x, y in pts:
        if cleaned:
            px, py = cleaned[-1]
            if abs(x - px) <= _COLLINEAR_TOL and abs(y - py) <= _COLLINEAR_TOL:
                continue
        cleaned.append((x, y))
    if len(cleaned) >= 2:
        x0, y0 = cleaned[0]
        xn, yn = cleaned[-1]
        if abs(x0 - xn) <= _COLLINEAR_TOL and abs(y0 - yn) <= _COLLINEAR_TOL:
            cleaned.pop()
    if len(cleaned) < 3 or _clip_py.shoelace_area(cleaned) < _MIN_AREA:
        return ConvexPolygon()
    return ConvexPolygon(tuple(cleaned))


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """IoU of two oriented boxes via convex clipping; exact symmetry."""
    return _kernel.iou_pair(*a.as_tuple(), *b.as_tuple())


def boxes_array(boxes) -> np.ndarray:
    """Stack OrientedBox objects into an (n, 5) float64 array."""
    return np.asarray(
        [b.as_tuple() for b in boxes], dtype=np.float64
    ).reshape(-1, 5)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU matrix; entry (i, j) = rotated_iou(boxes_a[i], boxes_b[j]).

    Accepts sequences of OrientedBox or (n, 5) arrays.
    """
    a = boxes_a if isinstance(boxes_a, np.ndarray) else boxes_array(boxes_a)
    b = boxes_b if isinstance(boxes_b, np.ndarray) else boxes_array(boxes_b)
    if a.ndim != 2 or a.shape[1] != 5 or b.ndim != 2 or b.shape[1] != 5:
        raise ValidationError("iou_matrix expects (n, 5) box arrays")
    return _kernel.iou_matrix(a, b)
