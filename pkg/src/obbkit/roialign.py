"""Rotated RoIAlign over feature grids and pyramid level assignment.

Sampling convention: the value of cell (row i, col j) sits at continuous
feature coordinate (x=j, y=i). Sample points land at bin-relative positions
((k + 0.5) / ratio) on a regular sub-grid inside each bin of the box's
rotated frame, are mapped to image coordinates through the box center and
axes, then scaled by 1/stride. Points beyond one cell outside the grid
contribute zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .types import OrientedBox


@dataclass(eq=False)
class FeatureMap:
    """One pyramid level: (channels, height, width) grid plus its stride."""

    data: np.ndarray
    stride: float

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValidationError(
                f"feature map must be (C, H, W), got shape {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("feature map contains non-finite values")
        self.stride = float(self.stride)
        if not self.stride > 0:
            raise ValidationError(f"stride must be positive, got {self.stride!r}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]


PYRAMID_CHANNELS = 256


@dataclass(eq=False)
class FeaturePyramid:
    """Ordered levels with strides doubling (4, 8, 16, 32 for P2..P5),
    256 channels each."""

    levels: tuple[FeatureMap, ...]

    def __post_init__(self):
        self.levels = tuple(self.levels)
        if not self.levels:
            raise ValidationError("pyramid needs at least one level")
        chans = {lvl.channels for lvl in self.levels}
        if chans != {PYRAMID_CHANNELS}:
            raise ValidationError(
                f"pyramid levels must all have {PYRAMID_CHANNELS} channels, "
                f"got {sorted(chans)}"
            )
        for prev, cur in zip(self.levels, self.levels[1:]):
            if cur.stride != prev.stride * 2.0:
                raise ValidationError(
                    f"strides must double per level, got {prev.stride} "
                    f"then {cur.stride}"
                )

    @property
    def channels(self) -> int:
        return self.levels[0].channels


def bilinear_sample(fmap: FeatureMap, x: float, y: float, channel: int) -> float:
    """Bilinear interpolation at feature coords (x, y) with zero padding
    beyond one cell outside the grid."""
    data = fmap.data
    _, height, width = data.shape
    x = float(x)
    y = float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError("sample coordinates must be finite")
    if x < -1.0 or x > width or y < -1.0 or y > height:
        return 0.0
    if x < 0.0:
        x = 0.0
    if y < 0.0:
        y = 0.0
    x0 = int(x)
    y0 = int(y)
    if x0 >= width - 1:
        x0 = width - 1
        x1 = x0
        x = float(x0)
    else:
        x1 = x0 + 1
    if y0 >= height - 1:
        y0 = height - 1
        y1 = y0
        y = float(y0)
    else:
        y1 = y0 + 1
    lx = x - x0
    ly = y - y0
    hx = 1.0 - lx
    hy = 1.0 - ly
    plane = data[channel]
    return (hy * hx * plane[y0, x0] + hy * lx * plane[y0, x1]
            + ly * hx * plane[y1, x0] + ly * lx * plane[y1, x1])


def _sample_grid(box: OrientedBox, stride: float, out_h: int, out_w: int,
                 ratio: int):
    """Feature-coord sample points, bin-major then sub-sample order."""
    cos_t = math.cos(box.theta)
    sin_t = math.sin(box.theta)
    # Fractional offsets from the box center along the w- and h-axes.
    sub = (np.arange(ratio, dtype=np.float64) + 0.5) / ratio
    along_w = ((np.arange(out_w, dtype=np.float64)[:, None] + sub[None, :])
               / out_w - 0.5).ravel() * box.w
    along_h = ((np.arange(out_h, dtype=np.float64)[:, None] + sub[None, :])
               / out_h - 0.5).ravel() * box.h
    u = along_w[None, :]              # (1, out_w*ratio)
    v = along_h[:, None]              # (out_h*ratio, 1)
    x_img = box.cx + u * cos_t - v * sin_t
    y_img = box.cy + u * sin_t + v * cos_t
    scale = 1.0 / stride
    return x_img * scale, y_img * scale


def _bilinear_grid(data: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Vectorized bilinear sampling; xs/ys are equally shaped 2-D grids.

    Returns (C, *xs.shape) with the same padding rule as bilinear_sample.
    """
    _, height, width = data.shape
    valid = ((xs >= -1.0) & (xs <= float(width))
             & (ys >= -1.0) & (ys <= float(height)))
    x = np.clip(xs, 0.0, None)
    y = np.clip(ys, 0.0, None)
    x0 = np.minimum(x.astype(np.int64), width - 1)
    y0 = np.minimum(y.astype(np.int64), height - 1)
    at_right = x0 >= width - 1
    at_bottom = y0 >= height - 1
    x = np.where(at_right, x0.astype(np.float64), x)
    y = np.where(at_bottom, y0.astype(np.float64), y)
    x1 = np.where(at_right, x0, x0 + 1)
    y1 = np.where(at_bottom, y0, y0 + 1)
    lx = x - x0
    ly = y - y0
    hx = 1.0 - lx
    hy = 1.0 - ly
    v00 = data[:, y0, x0]
    v01 = data[:, y0, x1]
    v10 = data[:, y1, x0]
    v11 = data[:, y1, x1]
    out = (hy * hx * v00 + hy * lx * v01 + ly * hx * v10 + ly * lx * v11)
    return np.where(valid, out, 0.0)


def rotated_roi_align(fmap: FeatureMap, box: OrientedBox,
                      out_h: int = 7, out_w: int = 7,
                      sampling_ratio: int = 2) -> np.ndarray:
    """Pool the rotated box into a (C, out_h, out_w) grid of bin averages."""
    if out_h < 1 or out_w < 1 or sampling_ratio < 1:
        raise ValidationError("output dims and sampling ratio must be >= 1")
    xs, ys = _sample_grid(box, fmap.stride, out_h, out_w, sampling_ratio)
    samples = _bilinear_grid(fmap.data, xs, ys)
    c = fmap.channels
    r = sampling_ratio
    binned = samples.reshape(c, out_h, r, out_w, r)
    return binned.mean(axis=(2, 4))


def assign_fpn_level(box: OrientedBox, num_levels: int = 4,
                     canonical_level: int = 4, canonical_size: float = 224.0,
                     min_level: int = 2) -> int:
    """Pyramid index for a box: k = floor(k0 + log2(sqrt(w*h) / size0)),
    clamped into [0, num_levels), with index 0 meaning P<min_level>."""
    if num_levels < 1:
        raise ValidationError(f"num_levels must be >= 1, got {num_levels!r}")
    scale = math.sqrt(box.w * box.h)
    k = math.floor(canonical_level + math.log2(scale / canonical_size))
    idx = k - min_level
    if idx < 0:
        return 0
    if idx >= num_levels:
        return num_levels - 1
    return idx
