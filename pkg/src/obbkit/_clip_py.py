"""Pure-Python rotated-IoU kernel.

Mirrors obbkit._clip operation for operation; the two must stay
bit-identical. Keep arithmetic expression order in sync with _clip.pyx.
"""

from __future__ import annotations

import math

import numpy as np

KERNEL_NAME = "python"

_MIN_INTERSECTION_AREA = 1e-12


def box_corners(cx, cy, w, h, theta):
    """Counter-clockwise corners of a rotated rectangle."""
    c = math.cos(theta)
    s = math.sin(theta)
    ux = 0.5 * w * c
    uy = 0.5 * w * s
    vx = -0.5 * h * s
    vy = 0.5 * h * c
    return [
        (cx - ux - vx, cy - uy - vy),
        (cx + ux - vx, cy + uy - vy),
        (cx + ux + vx, cy + uy + vy),
        (cx - ux + vx, cy - uy + vy),
    ]


def shoelace_area(pts):
    n = len(pts)
    s = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * abs(s)


def clip_convex(subject, clipper):
    """Sutherland-Hodgman: clip `subject` by convex CCW `clipper`."""
    output = list(subject)
    n = len(clipper)
    ax, ay = clipper[-1]
    for k in range(n):
        bx, by = clipper[k]
        if not output:
            return []
        inputs = output
        output = []
        sx, sy = inputs[-1]
        s_in = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax) >= 0.0
        for ex, ey in inputs:
            e_in = (bx - ax) * (ey - ay) - (by - ay) * (ex - ax) >= 0.0
            if e_in:
                if not s_in:
                    output.append(_line_hit(ax, ay, bx, by, sx, sy, ex, ey))
                output.append((ex, ey))
            elif s_in:
                output.append(_line_hit(ax, ay, bx, by, sx, sy, ex, ey))
            sx, sy = ex, ey
            s_in = e_in
        ax, ay = bx, by
    return output


def _line_hit(ax, ay, bx, by, sx, sy, ex, ey):
    """Intersection of the infinite line a->b with the segment s->e."""
    dcx = ax - bx
    dcy = ay - by
    dpx = sx - ex
    dpy = sy - ey
    n1 = ax * by - ay * bx
    n2 = sx * ey - sy * ex
    n3 = 1.0 / (dcx * dpy - dcy * dpx)
    return ((n1 * dpx - n2 * dcx) * n3, (n1 * dpy - n2 * dcy) * n3)


def iou_pair(acx, acy, aw, ah, at, bcx, bcy, bw, bh, bt):
    """Rotated IoU of two boxes given as raw 5-tuples."""
    # Order the operands deterministically so iou(a, b) == iou(b, a) exactly.
    if (bcx, bcy, bw, bh, bt) < (acx, acy, aw, ah, at):
        acx, acy, aw, ah, at, bcx, bcy, bw, bh, bt = (
            bcx, bcy, bw, bh, bt, acx, acy, aw, ah, at,
        )
    pa = box_corners(acx, acy, aw, ah, at)
    pb = box_corners(bcx, bcy, bw, bh, bt)
    inter = clip_convex(pa, pb)
    if len(inter) < 3:
        return 0.0
    ai = shoelace_area(inter)
    if ai < _MIN_INTERSECTION_AREA:
        return 0.0
    area_a = shoelace_area(pa)
    area_b = shoelace_area(pb)
    m = area_a if area_a < area_b else area_b
    if ai > m:
        ai = m
    return ai / (area_a + area_b - ai)


def iou_matrix(a, b):
    """Pairwise rotated IoU for (n, 5) and (m, 5) float64 arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        acx, acy, aw, ah, at = a[i]
        for j in range(m):
            out[i, j] = iou_pair(acx, acy, aw, ah, at, *b[j])
    return out
