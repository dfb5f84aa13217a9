"""Box delta transform (decode/encode) and learnable-proposal initialization.

Two decode variants ship:

  paper_literal    center update [[cos, sin], [sin, cos]] — the published
                   form. Its inverse is singular where cos(2*theta) = 0,
                   i.e. at theta = +/- pi/4.
  rotation_matrix  proper rotation [[cos, -sin], [sin, cos]]; invertible
                   for every angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularTransformError, ValidationError
from .types import OrientedBox

PAPER_LITERAL = "paper_literal"
ROTATION_MATRIX = "rotation_matrix"
VARIANTS = (PAPER_LITERAL, ROTATION_MATRIX)

DELTA_CLAMP = 8.0
PROPOSAL_FEATURE_DIM = 256
_SINGULAR_EPS = 1e-6


@dataclass(frozen=True)
class BoxDeltas:
    """Regression offsets (dx, dy, dw, dh, dtheta).

    dw/dh are clamped to [-8, 8] before use so the exponential in decode
    cannot overflow.
    """

    dx: float
    dy: float
    dw: float
    dh: float
    dtheta: float

    def __post_init__(self):
        for name in ("dx", "dy", "dw", "dh", "dtheta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        for name in ("dw", "dh"):
            v = getattr(self, name)
            if v > DELTA_CLAMP:
                object.__setattr__(self, name, DELTA_CLAMP)
            elif v < -DELTA_CLAMP:
                object.__setattr__(self, name, -DELTA_CLAMP)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.dx, self.dy, self.dw, self.dh, self.dtheta)


@dataclass(eq=False)
class ProposalSet:
    """Proposal boxes paired with their 256-d feature rows."""

    boxes: tuple[OrientedBox, ...]
    features: np.ndarray

    def __post_init__(self):
        self.boxes = tuple(self.boxes)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != PROPOSAL_FEATURE_DIM:
            raise ValidationError(
                f"features must be (n, {PROPOSAL_FEATURE_DIM}), "
                f"got {self.features.shape}"
            )
        if len(self.boxes) != self.features.shape[0]:
            raise ValidationError(
                f"{len(self.boxes)} boxes vs {self.features.shape[0]} feature rows"
            )

    def __len__(self) -> int:
        return len(self.boxes)


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValidationError(f"unknown decode variant {variant!r}")


def decode(p: OrientedBox, d: BoxDeltas, variant: str = PAPER_LITERAL) -> OrientedBox:
    """Apply deltas to a proposal box."""
    _check_variant(variant)
    c = math.cos(p.theta)
    s = math.sin(p.theta)
    if variant == PAPER_LITERAL:
        cx = p.cx + d.dx * p.w * c + d.dy * p.h * s
        cy = p.cy + d.dx * p.w * s + d.dy * p.h * c
    else:
        cx = p.cx + d.dx * p.w * c - d.dy * p.h * s
        cy = p.cy + d.dx * p.w * s + d.dy * p.h * c
    w = p.w * math.exp(d.dw)
    h = p.h * math.exp(d.dh)
    return OrientedBox(cx, cy, w, h, p.theta + d.dtheta)


def encode(p: OrientedBox, target: OrientedBox,
           variant: str = PAPER_LITERAL) -> BoxDeltas:
    """Deltas that carry proposal `p` onto `target` under `variant`."""
    _check_variant(variant)
    c = math.cos(p.theta)
    s = math.sin(p.theta)
    ex = target.cx - p.cx
    ey = target.cy - p.cy
    if variant == PAPER_LITERAL:
        det = c * c - s * s
        if abs(det) < _SINGULAR_EPS:
            raise SingularTransformError(
                "paper-literal center map is singular near theta = +/- pi/4 "
                f"(cos(2*theta) = {det:.3e})"
            )
        u = (c * ex - s * ey) / det
        v = (c * ey - s * ex) / det
    else:
        u = c * ex + s * ey
        v = -s * ex + c * ey
    dw = math.log(target.w / p.w)
    dh = math.log(target.h / p.h)
    dtheta = math.remainder(target.theta - p.theta, math.pi)
    return BoxDeltas(u / p.w, v / p.h, dw, dh, dtheta)


def init_proposals(n: int, image_w: float, image_h: float) -> ProposalSet:
    """n identical center proposals: w = W/4, h = H/2, theta = -pi/4."""
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"proposal count must be a positive int, got {n!r}")
    if not (image_w > 0 and image_h > 0):
        raise ValidationError("image dimensions must be positive")
    box = OrientedBox(
        image_w / 2.0, image_h / 2.0, image_w / 4.0, image_h / 2.0,
        -math.pi / 4.0,
    )
    return ProposalSet(
        boxes=(box,) * n,
        features=np.zeros((n, PROPOSAL_FEATURE_DIM)),
    )
