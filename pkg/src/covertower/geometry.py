"""Exact rational geometry helpers shared by the whole package.

All cell geometry lives in root coordinates: corners are tuples of Fractions
with power-of-5 denominators, weights are dyadic Fractions.  Predicates that
the construction depends on (operator-norm intervals, distances to boundary,
separation bounds) are decided with rational arithmetic; floats appear only in
sampled certificates and reports.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple  # tuple of Fraction (or float in sampled paths)

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def vadd(a: Sequence, b: Sequence) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Sequence, b: Sequence) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c, a: Sequence) -> Vec:
    return tuple(c * x for x in a)


def vdot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def norm2(a: Sequence):
    return sum(x * x for x in a)


def dist2(a: Sequence, b: Sequence):
    return norm2(vsub(a, b))


def as_floats(a: Sequence) -> tuple:
    return tuple(float(x) for x in a)


def pad(a: Sequence, dim: int) -> Vec:
    return tuple(a) + (ZERO,) * (dim - len(a))


# ---------------------------------------------------------------------------
# Exact eigenvalue interval tests for symmetric 2x2 Gram matrices.
# ---------------------------------------------------------------------------

def lambda_max_leq(m11, m12, m22, bound) -> bool:
    """Largest eigenvalue of [[m11,m12],[m12,m22]] <= bound, exactly.

    Uses the characteristic polynomial: lam_max <= B iff tr <= 2B and
    p(B) = B^2 - tr*B + det >= 0.
    """
    tr = m11 + m22
    det = m11 * m22 - m12 * m12
    return tr <= 2 * bound and bound * bound - tr * bound + det >= 0


def lambda_max_geq(m11, m12, m22, bound) -> bool:
    """Largest eigenvalue of [[m11,m12],[m12,m22]] >= bound, exactly."""
    tr = m11 + m22
    det = m11 * m22 - m12 * m12
    return tr >= 2 * bound or bound * bound - tr * bound + det <= 0


def lambda_max_float(m11, m12, m22) -> float:
    tr = float(m11 + m22)
    det = float(m11 * m22 - m12 * m12)
    disc = max(tr * tr - 4.0 * det, 0.0)
    return 0.5 * (tr + math.sqrt(disc))


def gram2(col1: Sequence, col2: Sequence):
    """Gram matrix entries of two ambient column vectors."""
    return vdot(col1, col1), vdot(col1, col2), vdot(col2, col2)


def affine_map_2d(p0, p1, p2, v0, v1, v2):
    """Jacobian columns of the affine map sending triangle (p0,p1,p2) in the
    plane to ambient values (v0,v1,v2).

    Returns (col_x, col_y): the images of the unit x/y directions.  All inputs
    rational => output rational.  Raises ZeroDivisionError on degenerate
    triangles.
    """
    e1 = vsub(p1, p0)
    e2 = vsub(p2, p0)
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if det == 0:
        raise ZeroDivisionError("degenerate triangle")
    w1 = vsub(v1, v0)
    w2 = vsub(v2, v0)
    # inverse of [[e1x,e2x],[e1y,e2y]] applied to value differences
    col_x = tuple((w1[i] * e2[1] - w2[i] * e1[1]) / det for i in range(len(w1)))
    col_y = tuple((-w1[i] * e2[0] + w2[i] * e1[0]) / det for i in range(len(w1)))
    return col_x, col_y


def barycentric(p0, p1, p2, q):
    """Exact barycentric coordinates of q in triangle (p0,p1,p2)."""
    e1 = vsub(p1, p0)
    e2 = vsub(p2, p0)
    det = e1[0] * e2[1] - e1[1] * e2[0]
    d = vsub(q, p0)
    b1 = (d[0] * e2[1] - d[1] * e2[0]) / det
    b2 = (-d[0] * e1[1] + d[1] * e1[0]) / det
    return ONE - b1 - b2, b1, b2


# ---------------------------------------------------------------------------
# Exact distances used by the adapted-cell predicate.
# ---------------------------------------------------------------------------

def max_min_affine_over_box(funcs, lo, hi) -> Fraction:
    """max over the box [lo1,hi1]x[lo2,hi2] of min_i (a_i.x + b_i), exactly.

    funcs: iterable of (a1, a2, b).  Solved as the tiny LP max t subject to
    t <= a_i.x+b_i, lo<=x<=hi by enumerating basic feasible points.
    """
    funcs = list(funcs)
    cands = []
    xs = (lo[0], hi[0])
    ys = (lo[1], hi[1])
    # box corners
    for x in xs:
        for y in ys:
            cands.append((x, y))
    # intersections of pairs of bisector lines a_i.x+b_i = a_j.x+b_j
    n = len(funcs)
    lines = [(funcs[i][0] - funcs[j][0], funcs[i][1] - funcs[j][1],
              funcs[i][2] - funcs[j][2]) for i in range(n) for j in range(i + 1, n)]
    for i in range(len(lines)):
        a1, b1, c1 = lines[i]
        # line ∩ box edges
        for x in xs:
            if b1 != 0:
                y = -(a1 * x + c1) / b1
                if ys[0] <= y <= ys[1]:
                    cands.append((x, y))
        for y in ys:
            if a1 != 0:
                x = -(b1 * y + c1) / a1
                if xs[0] <= x <= xs[1]:
                    cands.append((x, y))
        for j in range(i + 1, len(lines)):
            a2, b2, c2 = lines[j]
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            x = (-c1 * b2 + c2 * b1) / det
            y = (-a1 * c2 + a2 * c1) / det
            if xs[0] <= x <= xs[1] and ys[0] <= y <= ys[1]:
                cands.append((x, y))
    best = None
    for (x, y) in cands:
        val = min(a * x + b * y + c for (a, b, c) in funcs)
        if best is None or val > best:
            best = val
    return best


def seg_point_dist2(a, b, p) -> Fraction:
    """Exact squared distance from point p to segment [a,b] (2D rational)."""
    ab = vsub(b, a)
    ap = vsub(p, a)
    denom = norm2(ab)
    if denom == 0:
        return norm2(ap)
    t = vdot(ap, ab) / denom
    if t < 0:
        t = ZERO
    elif t > 1:
        t = ONE
    proj = vadd(a, vscale(t, ab))
    return dist2(p, proj)


def box_segments_dist2(lo, hi, segments) -> Fraction:
    """Exact squared distance from the box [lo,hi] to a union of 2D segments.

    Distance between a box and a segment is attained between the segment and
    the box boundary (or is 0 if they intersect); we check segment endpoints
    against the box, box corners against the segment, and edge crossings.
    """
    best = None

    def upd(d2):
        nonlocal best
        if best is None or d2 < best:
            best = d2

    corners = [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])]
    edges = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    for (a, b) in segments:
        # endpoint inside box?
        for p in (a, b):
            dx = max(lo[0] - p[0], ZERO, p[0] - hi[0])
            dy = max(lo[1] - p[1], ZERO, p[1] - hi[1])
            upd(dx * dx + dy * dy)
        for (c, d) in edges:
            upd(_seg_seg_dist2(a, b, c, d))
        if best == 0:
            return ZERO
    return best


def _seg_seg_dist2(a, b, c, d) -> Fraction:
    if _segments_intersect(a, b, c, d):
        return ZERO
    return min(seg_point_dist2(a, b, c), seg_point_dist2(a, b, d),
               seg_point_dist2(c, d, a), seg_point_dist2(c, d, b))


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(a, b, c, d) -> bool:
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    if ((o1 > 0) != (o2 > 0) and o1 != 0 and o2 != 0 and
            (o3 > 0) != (o4 > 0) and o3 != 0 and o4 != 0):
        return True

    def on_seg(p, q, r):
        return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and
                min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))

    if o1 == 0 and on_seg(a, b, c):
        return True
    if o2 == 0 and on_seg(a, b, d):
        return True
    if o3 == 0 and on_seg(c, d, a):
        return True
    if o4 == 0 and on_seg(c, d, b):
        return True
    return False


def ceil_neg_log5(value: Fraction) -> int:
    """ceil(-log5(value)) for a positive rational, exactly.

    Returns the smallest integer i with 5^(-i) <= value.
    """
    if value <= 0:
        raise ValueError("value must be positive")
    num, den = value.numerator, value.denominator
    i = 0
    if num >= den:
        while num >= den * 5:
            den *= 5
            i -= 1
        return i
    p = 1
    while num * p < den:
        p *= 5
        i += 1
    return i


def floor_log10_scaled(m: int, scale: int) -> int:
    """floor(scale * log10(m)) for integers m >= 1, exactly."""
    if m < 1:
        raise ValueError("m must be >= 1")
    # floor(scale*log10 m) = max i with 10^i <= m^scale
    target = m ** scale
    i = len(str(target)) - 1
    return i
