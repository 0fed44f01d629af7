"""Closed-form deformation maps and their certified piecewise-affine versions.

The two helper functions and the cut-off are piecewise linear with exact
rational breakpoint values once the angle is measured as u = theta/pi, so
everything here computes in Fractions.  The piecewise-affine approximation
interpolates exact vertex values on triangulated subdivision cells and
certifies its bounds with exact per-piece operator norms.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cover import CoverRecord, _EDGE_CHART, _CORNER_CHART, _ev, _ring_point
from .geometry import (affine_map_2d, barycentric, dist2, gram2,
                       lambda_max_float, lambda_max_geq, lambda_max_leq,
                       norm2, vsub)

TWO = Fraction(2)


def _check_u(u):
    if u < 0 or u > 4:
        raise ValueError("angle out of range [0, 4pi]")


def h1_u(u, delta) -> Fraction:
    """First helper function with the angle given as u = theta/pi in [0,4]."""
    _check_u(u)
    return delta * (1 - abs(u - 2) / TWO)


def h2_u(u, delta) -> Fraction:
    """Second helper function, u = theta/pi in [0,4]: three linear pieces."""
    _check_u(u)
    if u <= 1:
        return -delta * u
    if u <= 3:
        return delta * (u - 2)
    return delta * (4 - u)


def h1(theta: float, delta: float) -> float:
    """Tent profile on [0, 4pi]; Lipschitz constant delta/(2 pi) exactly."""
    if theta < 0 or theta > 4 * math.pi + 1e-12:
        raise ValueError("theta out of range [0, 4pi]")
    return delta / (2 * math.pi) * (2 * math.pi - abs(theta - 2 * math.pi))


def h2(theta: float, delta: float) -> float:
    """Zigzag profile on [0, 4pi]; Lipschitz constant delta/pi exactly."""
    if theta < 0 or theta > 4 * math.pi + 1e-12:
        raise ValueError("theta out of range [0, 4pi]")
    if theta <= math.pi:
        return -delta / math.pi * theta
    if theta <= 3 * math.pi:
        return -delta + delta / math.pi * (theta - math.pi)
    return delta - delta / math.pi * (theta - 3 * math.pi)


H1_SLOPES_U = (Fraction(1, 2), Fraction(-1, 2))      # x delta, per u = theta/pi
H2_SLOPES_U = (Fraction(-1), Fraction(1), Fraction(-1))


def phi_cutoff(r, i: int):
    """5-Lipschitz cut-off on [0, 5^(-i-1)]: ramp, plateau at 5^(-i-1), ramp."""
    scale = Fraction(1, 5 ** (i + 1))
    return phi_scaled(r, scale)


def phi_scaled(r, scale):
    if r < 0 or r > scale:
        raise ValueError("r out of range")
    lo = scale / 5
    if r <= lo:
        return 5 * r
    if r <= scale - lo:
        return scale
    return 5 * (scale - r)


def phi_unit(rhat):
    """Cut-off with both the radius and the value in cell-side units."""
    if rhat < 0 or rhat > 1:
        raise ValueError("rhat out of range")
    if rhat <= Fraction(1, 5):
        return 5 * rhat
    if rhat <= Fraction(4, 5):
        return Fraction(1)
    return 5 * (1 - rhat)


def fiber_gap_sq(u, delta):
    """Squared gap between the two lifts over base angle u = theta/pi in [0,2]."""
    if u < 0 or u > 2:
        raise ValueError("base angle out of range [0, 2pi]")
    d1 = h1_u(u, delta) - h1_u(u + 2, delta)
    d2 = h2_u(u, delta) - h2_u(u + 2, delta)
    return d1 * d1 + d2 * d2


def fiber_gap_lower(theta: float, delta: float) -> float:
    """Gap between the h-values of a fiber pair over base angle theta.

    Always >= delta/2 (the exact minimum is 2*delta/sqrt(5)).
    """
    if theta < 0 or theta > 2 * math.pi + 1e-12:
        raise ValueError("theta out of range [0, 2pi]")
    g1 = h1(theta, delta) - h1(theta + 2 * math.pi, delta)
    g2 = h2(theta, delta) - h2(theta + 2 * math.pi, delta)
    return math.hypot(g1, g2)


def fiber_gap_exact_min(delta):
    """Exact minimum of the fiber gap (squared) over the base circle.

    The squared gap is piecewise quadratic in u; the minimum is attained at a
    breakpoint or an interior critical point of a piece.  Returns
    (min_gap_sq, argmin_u).
    """
    cands = [Fraction(0), Fraction(1), Fraction(2)]
    # piece [0,1]: (u-1)^2 + 4u^2, critical at u = 1/5
    cands.append(Fraction(1, 5))
    # piece [1,2]: (u-1)^2 + 4(2-u)^2, critical at u = 9/5
    cands.append(Fraction(9, 5))
    best = None
    arg = None
    for u in cands:
        v = fiber_gap_sq(u, delta)
        if best is None or v < best:
            best, arg = v, u
    return best, arg


def halfpi_gap_sq(u, delta):
    """Squared h-gap at angular shift pi (used by the annulus walk)."""
    if u < 0 or u > 3:
        raise ValueError("angle out of range")
    d1 = h1_u(u, delta) - h1_u(u + 1, delta)
    d2 = h2_u(u, delta) - h2_u(u + 1, delta)
    return d1 * d1 + d2 * d2


# ---------------------------------------------------------------------------
# Exact evaluation of Psi on a cover.
# ---------------------------------------------------------------------------

def psi_value(cover: CoverRecord, delta, ring_idx: int, x, y, sheet: int):
    """Exact Psi at a local point of a sheet cell (rational in, rational out).

    Returns the pair (phi(r) h1, phi(r) h2) in root units.
    """
    w, rhat = cover.chart(ring_idx, x, y)
    u = (((ring_idx - cover.start_idx) % 8) + w) / Fraction(4) + 2 * sheet
    phi = phi_unit(rhat) * cover.child_side
    return (phi * h1_u(u, delta), phi * h2_u(u, delta))


def psi_point(cover: CoverRecord, delta, xy, ring_idx: int, sheet: int):
    lx, ly = cover.local(xy)
    return psi_value(cover, delta, ring_idx, lx, ly, sheet)


def psi_jacobian(cover: CoverRecord, delta, ring_idx: int, x, y, sheet: int):
    """Exact Jacobian of Psi w.r.t. local plane coordinates at a generic
    point (away from chart breakpoints).  Columns are d/dx, d/dy; divide by
    child_side for root-coordinate derivatives."""
    w, rhat = cover.chart(ring_idx, x, y)
    u = (((ring_idx - cover.start_idx) % 8) + w) / Fraction(4) + 2 * sheet
    cs = cover.child_side
    phi = phi_unit(rhat) * cs
    dphi = _phi_unit_slope(rhat) * cs
    h = (h1_u(u, delta), h2_u(u, delta))
    dh = (_h1_slope(u, delta), _h2_slope(u, delta))
    if ring_idx in _EDGE_CHART:
        wf, rf = _EDGE_CHART[ring_idx]
        gw = (Fraction(wf[0]), Fraction(wf[1]))
        gr = (Fraction(rf[0]), Fraction(rf[1]))
    else:
        af, bf = _CORNER_CHART[ring_idx]
        a, b = _ev(af, x, y), _ev(bf, x, y)
        ga = (Fraction(af[0]), Fraction(af[1]))
        gb = (Fraction(bf[0]), Fraction(bf[1]))
        if a >= b:
            gr = ga
            gw = tuple(gb[i] / (2 * a) - b * ga[i] / (2 * a * a) for i in range(2))
        else:
            gr = gb
            gw = tuple(-ga[i] / (2 * b) + a * gb[i] / (2 * b * b) for i in range(2))
    gu = (gw[0] / 4, gw[1] / 4)
    rows = []
    for comp in range(2):
        rows.append(tuple(dphi * gr[c] * h[comp] + phi * dh[comp] * gu[c]
                          for c in range(2)))
    return rows


def _phi_unit_slope(rhat):
    if rhat < Fraction(1, 5):
        return Fraction(5)
    if rhat < Fraction(4, 5):
        return Fraction(0)
    return Fraction(-5)


def _h1_slope(u, delta):
    return delta / 2 if u < 2 else -delta / 2


def _h2_slope(u, delta):
    if u < 1:
        return -delta
    if u < 3:
        return delta
    return -delta


# ---------------------------------------------------------------------------
# Piecewise-affine approximation with certified bounds.
# ---------------------------------------------------------------------------

class CertificationError(ValueError):
    """A required bound failed; the message names the violated bound."""


@dataclass
class CertifiedBounds:
    """Verified constants of one affine approximation.

    The interval claim on the Lipschitz constant is certified exactly: every
    piece norm is <= 23 delta and the largest piece is >= delta/16 (rational
    eigenvalue tests); the float fields are reports.
    """

    glip_max: float                  # float report of the max piece norm
    glip_interval_ok: bool           # exact [delta/16, 23 delta] certificate
    min_sep_ratio_sq: Fraction       # min over vertex fiber pairs of gap^2/phi^2
    sup_norm_sq: Fraction            # max over vertices of ||Phi||^2
    sup_dist_to_psi: float           # midpoint sup distance to Psi (reported)

    def as_report(self):
        return {
            "glip_max": self.glip_max,
            "glip_interval_ok": self.glip_interval_ok,
            "min_sep_ratio": math.sqrt(float(self.min_sep_ratio_sq)),
            "sup_norm": math.sqrt(float(self.sup_norm_sq)),
            "sup_dist_to_psi": self.sup_dist_to_psi,
        }


@dataclass
class AffineApproximation:
    """Per-triangle affine interpolation of Psi on the N-fold subdivision.

    Triangles of covered subdivision cells carry exact Jacobians; the map is
    zero on the central square and the outer annulus.  The triangulation
    diagonal follows the inner-corner direction inside corner ring cells so
    pieces never straddle the two projective chart regions.
    """

    cover: CoverRecord
    delta: Fraction
    n_sub: int
    certified: Optional[CertifiedBounds] = None
    _vertex_cache: dict = field(default_factory=dict, repr=False)

    def grid(self):
        return 5 ** self.n_sub

    def diagonal_dir(self, ring_idx: int) -> int:
        """+1 for a '/' diagonal, -1 for '\\', matching the corner charts."""
        return +1 if ring_idx in (0, 1, 2, 5, 6) else -1 if ring_idx in (3, 4, 7) else +1

    def vertex_value(self, ring_idx: int, sheet: int, vx, vy):
        key = (ring_idx, sheet, vx, vy)
        val = self._vertex_cache.get(key)
        if val is None:
            val = psi_value(self.cover, self.delta, ring_idx, vx, vy, sheet)
            self._vertex_cache[key] = val
        return val

    def triangles(self, ring_idx: int, sheet: int):
        """Yield (p0, p1, p2, v0, v1, v2) over the subdivided ring cell."""
        n = self.grid()
        eps = Fraction(1, n)
        from .cells import ANNULUS_ORDER
        j1, j2 = ANNULUS_ORDER[ring_idx]
        d = self.diagonal_dir(ring_idx)
        for a in range(n):
            for b in range(n):
                x0, y0 = j1 + a * eps, j2 + b * eps
                x1, y1 = x0 + eps, y0 + eps
                q = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
                tris = ([(q[0], q[1], q[2]), (q[0], q[2], q[3])] if d > 0
                        else [(q[0], q[1], q[3]), (q[1], q[2], q[3])])
                for tri in tris:
                    vals = tuple(self.vertex_value(ring_idx, sheet, *p) for p in tri)
                    yield tri + vals

    def evaluate(self, ring_idx: int, sheet: int, x, y):
        """Exact Phi at a local point (barycentric interpolation)."""
        n = self.grid()
        eps = Fraction(1, n)
        from .cells import ANNULUS_ORDER
        j1, j2 = ANNULUS_ORDER[ring_idx]
        a = min(int((x - j1) / eps), n - 1)
        b = min(int((y - j2) / eps), n - 1)
        x0, y0 = j1 + a * eps, j2 + b * eps
        x1, y1 = x0 + eps, y0 + eps
        d = self.diagonal_dir(ring_idx)
        if d > 0:
            tri = ((x0, y0), (x1, y0), (x1, y1)) if (x - x0) >= (y - y0) \
                else ((x0, y0), (x1, y1), (x0, y1))
        else:
            tri = ((x0, y0), (x1, y0), (x0, y1)) if (x - x0) + (y - y0) <= eps \
                else ((x1, y0), (x1, y1), (x0, y1))
        vals = tuple(self.vertex_value(ring_idx, sheet, *p) for p in tri)
        l0, l1, l2 = barycentric(tri[0], tri[1], tri[2], (x, y))
        return tuple(l0 * vals[0][c] + l1 * vals[1][c] + l2 * vals[2][c]
                     for c in range(2))


def build_affine_approx(cover: CoverRecord, delta, n_sub: int,
                        check: bool = True) -> AffineApproximation:
    """Build the approximation at subdivision depth n_sub and certify it.

    Raises CertificationError naming the violated bound if a required bound
    fails for this depth (the caller increases the depth).
    """
    if n_sub < 1:
        raise ValueError("subdivision depth must be >= 1")
    delta = Fraction(delta)
    approx = AffineApproximation(cover=cover, delta=delta, n_sub=n_sub)
    if check:
        approx.certified = certify_affine_approx(approx)
    return approx


def certify_affine_approx(approx: AffineApproximation) -> CertifiedBounds:
    """Exact certification of the approximation bounds.

    - per-piece operator norms, max in [delta/16, 23 delta] (length metric);
    - vertex fiber-pair separation >= (delta/3) phi(r);
    - sup norm <= 2 delta diam Q;
    - midpoint sup distance to Psi (reported, drives the depth search).
    """
    cover, delta = approx.cover, approx.delta
    cs = cover.child_side
    lo_bound_sq = (delta / 16) ** 2
    hi_bound_sq = (23 * delta) ** 2
    best_gram = None
    best_lam = -1.0
    for ring_idx in range(8):
        for sheet in (0, 1):
            for (p0, p1, p2, v0, v1, v2) in approx.triangles(ring_idx, sheet):
                # local coords are in child-side units; values in root units.
                col_x, col_y = affine_map_2d(p0, p1, p2, v0, v1, v2)
                col_x = tuple(c / cs for c in col_x)
                col_y = tuple(c / cs for c in col_y)
                m11, m12, m22 = gram2(col_x, col_y)
                if not lambda_max_leq(m11, m12, m22, hi_bound_sq):
                    raise CertificationError(
                        f"piece operator norm exceeds 23*delta at ring {ring_idx}")
                lam = lambda_max_float(m11, m12, m22)
                if lam > best_lam:
                    best_lam = lam
                    best_gram = (m11, m12, m22)
    if best_gram is None or not lambda_max_geq(*best_gram, lo_bound_sq):
        raise CertificationError("global Lipschitz constant below delta/16")

    min_ratio_sq = None
    sup_sq = Fraction(0)
    n = approx.grid()
    eps = Fraction(1, n)
    from .cells import ANNULUS_ORDER
    sep_sq_bound = (delta / 3) ** 2
    for ring_idx in range(8):
        j1, j2 = ANNULUS_ORDER[ring_idx]
        for a in range(n + 1):
            for b in range(n + 1):
                vx, vy = j1 + a * eps, j2 + b * eps
                v0 = approx.vertex_value(ring_idx, 0, vx, vy)
                v1 = approx.vertex_value(ring_idx, 1, vx, vy)
                sup_sq = max(sup_sq, norm2(v0), norm2(v1))
                _, rhat = cover.chart(ring_idx, vx, vy)
                phi = phi_unit(rhat) * cs
                gap_sq = dist2(v0, v1)
                if phi > 0:
                    ratio = gap_sq / (phi * phi)
                    if gap_sq < sep_sq_bound * phi * phi:
                        raise CertificationError(
                            "vertex fiber separation below (delta/3) phi")
                    if min_ratio_sq is None or ratio < min_ratio_sq:
                        min_ratio_sq = ratio
    diam_sq = 2 * cover.side * cover.side
    if sup_sq > 4 * delta * delta * diam_sq:
        raise CertificationError("sup norm exceeds 2*delta*diam Q")

    sup_dist = 0.0
    for ring_idx in range(8):
        j1, j2 = ANNULUS_ORDER[ring_idx]
        for a in range(n):
            for b in range(n):
                mx = j1 + (2 * a + 1) * eps / 2
                my = j2 + (2 * b + 1) * eps / 2
                for sheet in (0, 1):
                    pv = psi_value(cover, delta, ring_idx, mx, my, sheet)
                    fv = approx.evaluate(ring_idx, sheet, mx, my)
                    sup_dist = max(sup_dist, math.sqrt(float(dist2(pv, fv))))
    return CertifiedBounds(glip_max=math.sqrt(best_lam),
                           glip_interval_ok=True,
                           min_sep_ratio_sq=min_ratio_sq,
                           sup_norm_sq=sup_sq,
                           sup_dist_to_psi=sup_dist)


def find_min_subdivision(cover: CoverRecord, delta, n_cap: int = 4):
    """Smallest subdivision depth whose certification passes.

    The existence is asserted by the construction; the value is recorded, not
    fixed a priori.
    """
    last_err = None
    for n_sub in range(1, n_cap + 1):
        try:
            return build_affine_approx(cover, delta, n_sub=n_sub, check=True)
        except CertificationError as e:
            last_err = e
    raise CertificationError(
        f"no subdivision depth <= {n_cap} passes certification: {last_err}")


def sample_psi_lipschitz(cover: CoverRecord, delta, samples: int = 100000,
                         seed: int = 0) -> tuple:
    """Sampled Lipschitz ratios of Psi over same-cell and adjacent-cell pairs.

    Adjacent ring cells unfold isometrically across the shared face, so the
    straight-line distance is the true path distance for crossing segments.
    Returns (max_ratio, min_positive_ratio) as floats, delta-normalized by the
    caller if desired.
    """
    rng = random.Random(seed)
    max_ratio = 0.0
    min_ratio = None
    cs = float(cover.child_side)
    for t in range(samples):
        ring_idx = rng.randrange(8)
        sheet = rng.randrange(2)
        w1 = Fraction(rng.randrange(1, 400), 400)
        r1 = Fraction(rng.randrange(1, 400), 400)
        p1 = _ring_point(cover, ring_idx, w1, r1)
        if t % 3 == 2:
            # pair in the cyclically adjacent cell, same sheet band
            ring2 = (ring_idx + 1) % 8
            w2 = Fraction(rng.randrange(1, 400), 400)
            r2 = r1
            p2 = _ring_point(cover, ring2, w2, r2)
            sheet2 = sheet
            if ring2 == cover.start_idx:
                continue  # crossing the cut changes sheets; skip here
        else:
            ring2 = ring_idx
            w2 = Fraction(rng.randrange(1, 400), 400)
            r2 = Fraction(rng.randrange(1, 400), 400)
            p2 = _ring_point(cover, ring_idx, w2, r2)
            sheet2 = sheet
        d2 = dist2(p1, p2)
        if d2 == 0:
            continue
        v1 = psi_value(cover, delta, ring_idx, p1[0], p1[1], sheet)
        v2 = psi_value(cover, delta, ring2, p2[0], p2[1], sheet2)
        num = math.sqrt(float(dist2(v1, v2)))
        den = math.sqrt(float(d2)) * cs
        ratio = num / den
        if ratio > max_ratio:
            max_ratio = ratio
        if ratio > 0 and (min_ratio is None or ratio < min_ratio):
            min_ratio = ratio
    return max_ratio, min_ratio
