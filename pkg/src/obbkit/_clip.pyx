# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rotated-IoU kernel.

Must stay bit-identical to obbkit._clip_py: same operations in the same
order, compiled with -ffp-contract=off.
"""

from libc.math cimport cos, sin, fabs

import numpy as np

KERNEL_NAME = "compiled"

cdef enum:
    MAXV = 16

cdef double MIN_INTERSECTION_AREA = 1e-12


cdef void _box_corners(double cx, double cy, double w, double h, double t,
                       double* xs, double* ys) noexcept nogil:
    cdef double c = cos(t)
    cdef double s = sin(t)
    cdef double ux = 0.5 * w * c
    cdef double uy = 0.5 * w * s
    cdef double vx = -0.5 * h * s
    cdef double vy = 0.5 * h * c
    xs[0] = cx - ux - vx; ys[0] = cy - uy - vy
    xs[1] = cx + ux - vx; ys[1] = cy + uy - vy
    xs[2] = cx + ux + vx; ys[2] = cy + uy + vy
    xs[3] = cx - ux + vx; ys[3] = cy - uy + vy


cdef double _shoelace(double* xs, double* ys, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i, j
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * fabs(s)


cdef void _line_hit(double ax, double ay, double bx, double by,
                    double sx, double sy, double ex, double ey,
                    double* ox, double* oy) noexcept nogil:
    cdef double dcx = ax - bx
    cdef double dcy = ay - by
    cdef double dpx = sx - ex
    cdef double dpy = sy - ey
    cdef double n1 = ax * by - ay * bx
    cdef double n2 = sx * ey - sy * ex
    cdef double n3 = 1.0 / (dcx * dpy - dcy * dpx)
    ox[0] = (n1 * dpx - n2 * dcx) * n3
    oy[0] = (n1 * dpy - n2 * dcy) * n3


cdef int _clip_convex(double* sxs, double* sys, int sn,
                      double* cxs, double* cys, int cn,
                      double* oxs, double* oys) noexcept nogil:
    cdef double bufx[MAXV]
    cdef double bufy[MAXV]
    cdef int n_out = sn
    cdef int n_in, i, k
    cdef double ax, ay, bx, by, sx, sy, ex, ey
    cdef bint s_in, e_in
    for i in range(sn):
        oxs[i] = sxs[i]
        oys[i] = sys[i]
    ax = cxs[cn - 1]
    ay = cys[cn - 1]
    for k in range(cn):
        bx = cxs[k]
        by = cys[k]
        if n_out == 0:
            return 0
        n_in = n_out
        for i in range(n_in):
            bufx[i] = oxs[i]
            bufy[i] = oys[i]
        n_out = 0
        sx = bufx[n_in - 1]
        sy = bufy[n_in - 1]
        s_in = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax) >= 0.0
        for i in range(n_in):
            ex = bufx[i]
            ey = bufy[i]
            e_in = (bx - ax) * (ey - ay) - (by - ay) * (ex - ax) >= 0.0
            if e_in:
                if not s_in:
                    _line_hit(ax, ay, bx, by, sx, sy, ex, ey,
                              &oxs[n_out], &oys[n_out])
                    n_out += 1
                oxs[n_out] = ex
                oys[n_out] = ey
                n_out += 1
            elif s_in:
                _line_hit(ax, ay, bx, by, sx, sy, ex, ey,
                          &oxs[n_out], &oys[n_out])
                n_out += 1
            sx = ex
            sy = ey
            s_in = e_in
        ax = bx
        ay = by
    return n_out


cdef double _iou_pair(double acx, double acy, double aw, double ah, double at,
                      double bcx, double bcy, double bw, double bh,
                      double bt) noexcept nogil:
    cdef double t
    cdef bint swap = False
    # Lexicographic operand ordering, mirroring the tuple compare in Python.
    if bcx < acx:
        swap = True
    elif bcx == acx:
        if bcy < acy:
            swap = True
        elif bcy == acy:
            if bw < aw:
                swap = True
            elif bw == aw:
                if bh < ah:
                    swap = True
                elif bh == ah:
                    swap = bt < at
    if swap:
        t = acx; acx = bcx; bcx = t
        t = acy; acy = bcy; bcy = t
        t = aw; aw = bw; bw = t
        t = ah; ah = bh; bh = t
        t = at; at = bt; bt = t
    cdef double pax[4]
    cdef double pay[4]
    cdef double pbx[4]
    cdef double pby[4]
    cdef double ixs[MAXV]
    cdef double iys[MAXV]
    _box_corners(acx, acy, aw, ah, at, pax, pay)
    _box_corners(bcx, bcy, bw, bh, bt, pbx, pby)
    cdef int n = _clip_convex(pax, pay, 4, pbx, pby, 4, ixs, iys)
    if n < 3:
        return 0.0
    cdef double ai = _shoelace(ixs, iys, n)
    if ai < MIN_INTERSECTION_AREA:
        return 0.0
    cdef double area_a = _shoelace(pax, pay, 4)
    cdef double area_b = _shoelace(pbx, pby, 4)
    cdef double m = area_a if area_a < area_b else area_b
    if ai > m:
        ai = m
    return ai / (area_a + area_b - ai)


def iou_pair(double acx, double acy, double aw, double ah, double at,
             double bcx, double bcy, double bw, double bh, double bt):
    """Rotated IoU of two boxes given as raw 5-tuples."""
    return _iou_pair(acx, acy, aw, ah, at, bcx, bcy, bw, bh, bt)


def iou_matrix(a, b):
    """Pairwise rotated IoU for (n, 5) and (m, 5) float64 arrays."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t m = bv.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                ov[i, j] = _iou_pair(av[i, 0], av[i, 1], av[i, 2], av[i, 3],
                                     av[i, 4], bv[j, 0], bv[j, 1], bv[j, 2],
                                     bv[j, 3], bv[j, 4])
    return out
