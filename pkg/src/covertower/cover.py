"""Branched double covers of middle annuli and their polar charts.

The middle annulus of a subdivided square is an 8-cell ring.  We replace it
by a two-sheet cover, halve the measure, and glue the boundary fibers back to
the central square and the inner component of the outer annulus.  The chart
realizes the identification Q_a ~ [0, 5^(-i-1)] x S^1: edge ring cells unroll
isometrically, corner ring cells use the inner-corner square-polar chart, so
r is the sup-norm layer coordinate and theta is an exact rational multiple of
pi.  Sheet bit 0 is Sigma_- (theta in (0, 2pi)), bit 1 is Sigma_+.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cells import (ANNULUS_ORDER, CellAddress, CellRecord, ROLE_ANNULUS,
                    AnnulusDecomposition, classify_children)
from .geometry import dist2

HALF = Fraction(1, 2)

# affine functionals (cx, cy, c0) on the local [0,5]^2 frame
_EDGE_CHART = {
    0: ((0, 1, -2), (1, 0, -3)),    # E:  w = y-2, r = x-3
    2: ((-1, 0, 3), (0, 1, -3)),    # N:  w = 3-x, r = y-3
    4: ((0, -1, 3), (-1, 0, 2)),    # W:  w = 3-y, r = 2-x
    6: ((1, 0, -2), (0, -1, 2)),    # S:  w = x-2, r = 2-y
}
# corner cells: a = distance from the exit face line, b = from the entry face
_CORNER_CHART = {
    1: ((1, 0, -3), (0, 1, -3)),    # NE, inner corner (3,3)
    3: ((0, 1, -3), (-1, 0, 2)),    # NW, inner corner (2,3)
    5: ((-1, 0, 2), (0, -1, 2)),    # SW, inner corner (2,2)
    7: ((0, -1, 2), (1, 0, -3)),    # SE, inner corner (3,2)
}
# cyclic face f sits between ring cells f-1 and f (unit segments, local frame)
FACE_SEGMENTS = {
    0: ((3, 2), (4, 2)), 1: ((3, 3), (4, 3)), 2: ((3, 3), (3, 4)),
    3: ((2, 3), (2, 4)), 4: ((2, 3), (1, 3)), 5: ((2, 2), (1, 2)),
    6: ((2, 2), (2, 1)), 7: ((3, 2), (3, 1)),
}

_RING_INDEX = {pos: i for i, pos in enumerate(ANNULUS_ORDER)}


def _ev(f, x, y):
    return f[0] * x + f[1] * y + f[2]


class OnCutError(ValueError):
    """Point lies on the cut sigma; the polar angle is undefined there."""


class SigmaChoiceError(ValueError):
    """Proposed cut does not join the two boundary components of the annulus."""


@dataclass(frozen=True)
class PolarCoord:
    """Exact polar data: r in [0, 5^(-i-1)], u = theta/pi in [0, 4]."""

    r: Fraction
    u: Fraction
    sheet: int

    @property
    def theta(self) -> float:
        import math
        return float(self.u) * math.pi

    @property
    def base_u(self) -> Fraction:
        return self.u - 2 * self.sheet


@dataclass
class CoverRecord:
    """One branched double cover: chart, cut, sheets and gluing data."""

    parent: CellAddress
    level: int                      # generation i of the covered square
    corner: tuple                   # root coords of the parent corner (plane axes)
    side: Fraction                  # parent side 5^-i
    plane: tuple = (1, 2)           # shadow plane (xi, zeta), 1-based
    sigma_face: int = 0             # cyclic face index carrying the cut
    delta_level: int = 1            # schedule index of this cover's deformation

    @property
    def child_side(self) -> Fraction:
        return self.side / 5

    @property
    def start_idx(self) -> int:
        return self.sigma_face

    def local(self, xy) -> tuple:
        """Plane-axes coordinates of a root point in the [0,5]^2 frame."""
        xi, zeta = self.plane
        cs = self.child_side
        return ((xy[xi - 1] - self.corner[0]) / cs,
                (xy[zeta - 1] - self.corner[1]) / cs)

    def to_root_plane(self, x, y) -> tuple:
        """Inverse of `local` on the plane axes."""
        cs = self.child_side
        return (self.corner[0] + x * cs, self.corner[1] + y * cs)

    def ring_index(self, digit) -> Optional[int]:
        """Geometric ring index 0..7 of a child digit, None if not annulus."""
        xi, zeta = self.plane
        return _RING_INDEX.get((digit[xi - 1], digit[zeta - 1]))

    def ring_index_local(self, x, y) -> Optional[int]:
        """Ring index from local coordinates (interior points only)."""
        return _RING_INDEX.get((int(x), int(y)))

    def chart(self, ring_idx: int, x, y):
        """(w, rhat) of a local point lying in ring cell ring_idx.

        w is the within-cell cyclic offset in [0, 1], rhat the radial offset
        in [0, 1].  Exact on rational inputs; at the inner corner of a corner
        cell (rhat = 0) the offset is fixed to 1/2 by convention.
        """
        if ring_idx in _EDGE_CHART:
            wf, rf = _EDGE_CHART[ring_idx]
            return _ev(wf, x, y), _ev(rf, x, y)
        af, bf = _CORNER_CHART[ring_idx]
        a, b = _ev(af, x, y), _ev(bf, x, y)
        if a == 0 and b == 0:
            return HALF, Fraction(0)
        if a >= b:
            return b / (2 * a), a
        return 1 - a / (2 * b), b

    def pos8(self, ring_idx: int, x, y):
        """Cyclic position in [0, 8], anticlockwise from the cut."""
        w, _ = self.chart(ring_idx, x, y)
        return ((ring_idx - self.start_idx) % 8) + w

    def polar(self, ring_idx: int, x, y, sheet: int) -> PolarCoord:
        """Lifted polar coordinates; raises OnCutError on the sigma fiber."""
        w, rhat = self.chart(ring_idx, x, y)
        p = ((ring_idx - self.start_idx) % 8) + w
        if p == 0 or p == 8:
            raise OnCutError("point on the cut sigma")
        u = p / Fraction(4) + 2 * sheet
        return PolarCoord(rhat * self.child_side, u, sheet)

    def rhat_global(self, x, y):
        """Sup-norm layer coordinate, valid on the whole annulus."""
        rx = abs(x - Fraction(5, 2))
        ry = abs(y - Fraction(5, 2))
        return max(rx, ry) - HALF

    def sigma_segment(self):
        a, b = FACE_SEGMENTS[self.sigma_face]
        return ((Fraction(a[0]), Fraction(a[1])), (Fraction(b[0]), Fraction(b[1])))

    def on_sigma(self, x, y) -> bool:
        (ax, ay), (bx, by) = self.sigma_segment()
        if ax == bx:
            return x == ax and min(ay, by) <= y <= max(ay, by)
        return y == ay and min(ax, bx) <= x <= max(ax, bx)

    def classify_face(self, axis_local: int, fixed, lo, hi) -> str:
        """Gluing class of a face {axis = fixed} x [lo, hi], local frame.

        'glue': collapsed boundary fiber (inner square or outer boundary);
        'sigma': lies on the cut; 'interior': everything else.
        """
        if fixed in (2, 3) and 2 <= lo and hi <= 3:
            return "glue"
        if fixed in (1, 4) and 1 <= lo and hi <= 4:
            return "glue"
        (ax, ay), (bx, by) = self.sigma_segment()
        if ax == bx and axis_local == 0 and fixed == ax:
            if min(ay, by) <= lo and hi <= max(ay, by):
                return "sigma"
        if ay == by and axis_local == 1 and fixed == ay:
            if min(ax, bx) <= lo and hi <= max(ax, bx):
                return "sigma"
        return "interior"

    def sigma_preimage_id(self, ring_rel: int, sheet: int) -> int:
        """Which of the two sigma lifts a cut-adjacent cell touches (0 or 8).

        Crossing the cut anticlockwise from lifted position 8-eps lands at
        8+eps: the '8' lift joins (rel 7, sheet 0) to (rel 0, sheet 1); the
        '0' lift joins (rel 7, sheet 1) to (rel 0, sheet 0).
        """
        if ring_rel == 7:
            return 8 if sheet == 0 else 0
        if ring_rel == 0:
            return 8 if sheet == 1 else 0
        raise ValueError("cell is not adjacent to the cut")

    # -- ring enumeration (prober support) ---------------------------------

    def plateau_ring_range(self, depth: int):
        """Ring layer indices of the inner annulus at `depth` subdivisions."""
        if depth < 1:
            raise ValueError("depth must be >= 1")
        return range(5 ** (depth - 1), 4 * 5 ** (depth - 1))

    def ring_cells(self, depth: int, layer: int):
        """Cells of one concentric ring, cyclically ordered from the cut.

        Returns (lo, hi) local lattice rectangles of side 5^-depth,
        anticlockwise, first cell just past sigma; the first and last cells
        meet along a subsegment of sigma.
        """
        eps = Fraction(1, 5 ** depth)
        w0 = HALF + layer * eps
        lo_lim = Fraction(5, 2) - w0 - eps
        hi_lim = Fraction(5, 2) + w0
        n = int((hi_lim - lo_lim) / eps)
        cells = []
        for t in range(n):
            v = lo_lim + t * eps
            cells.append(((v, lo_lim), (v + eps, lo_lim + eps)))
        for t in range(n):
            v = lo_lim + t * eps
            cells.append(((hi_lim, v), (hi_lim + eps, v + eps)))
        for t in range(n):
            v = hi_lim - t * eps
            cells.append(((v, hi_lim), (v + eps, hi_lim + eps)))
        for t in range(n):
            v = hi_lim - t * eps
            cells.append(((lo_lim, v), (lo_lim + eps, v + eps)))

        def sort_key(rect):
            (x0, y0), (x1, y1) = rect
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            return self.pos8(_RING_INDEX[(int(cx), int(cy))], cx, cy)

        cells.sort(key=sort_key)
        return cells

    def glued_boundary_vertex_pairs(self, depth: int = 0):
        """Fiber pairs of boundary vertices identified by the gluing.

        At depth 0 (the 8-cell ring itself) there are 16 boundary vertices of
        the annulus, each carrying one glued fiber pair.
        """
        eps = Fraction(1, 5 ** depth)
        verts = set()
        lo, hi = Fraction(1), Fraction(4)
        v = lo
        while v <= hi:
            verts.update({(v, lo), (v, hi), (lo, v), (hi, v)})
            v += eps
        lo2, hi2 = Fraction(2), Fraction(3)
        v = lo2
        while v <= hi2:
            verts.update({(v, lo2), (v, hi2), (lo2, v), (hi2, v)})
            v += eps
        return [((p, 0), (p, 1)) for p in sorted(verts)]


def choose_sigma(decomp: AnnulusDecomposition) -> tuple:
    """Deterministic cut: the radial 1-cell at angular position 0."""
    return FACE_SEGMENTS[0]


def sigma_face_from_edge(edge) -> int:
    """Cyclic face index of a proposed 1-cell, validating that it joins the
    two components of the annulus boundary."""
    a, b = tuple(edge[0]), tuple(edge[1])
    for f, seg in FACE_SEGMENTS.items():
        if {a, b} == {seg[0], seg[1]}:
            return f
    raise SigmaChoiceError(
        f"edge {a}-{b} does not join the two components of the annulus boundary")


def build_double_cover(cpx, decomp: AnnulusDecomposition, sigma_edge=None,
                       delta_level: Optional[int] = None) -> CoverRecord:
    """Replace the middle annulus by its two-sheet cover (measure halved).

    Registers the cover on the complex, removes the annulus cells and
    installs the sheet cells.  Total mass is exactly preserved.
    """
    parent = decomp.parent
    if sigma_edge is None:
        sigma_edge = choose_sigma(decomp)
    face = sigma_face_from_edge(sigma_edge)
    k = cpx.k
    plane = decomp.plane
    pc = parent.corner(k)
    corner = (pc[plane[0] - 1], pc[plane[1] - 1])
    cover = CoverRecord(parent=parent, level=parent.depth, corner=corner,
                        side=parent.side, plane=plane, sigma_face=face,
                        delta_level=(parent.depth + 1 if delta_level is None
                                     else delta_level))
    cpx.covers[parent] = cover
    for child in decomp.annulus:
        rec = cpx.cells.pop(child, None)
        if rec is None:
            raise ValueError("annulus child not present in complex")
        for bit in (0, 1):
            sheet_addr = CellAddress(child.root, child.digits,
                                     child.branch + (bit,))
            cpx.cells[sheet_addr] = CellRecord(
                sheet_addr, rec.weight * HALF, ROLE_ANNULUS, sheet=bit)
    return cover


def deck_partner(addr: CellAddress, cpx, cover: CoverRecord) -> CellAddress:
    """Deck transformation: flip the sheet bit of `addr` at `cover`."""
    events = cpx.cover_events(addr)
    for idx, (g, cov, bit) in enumerate(events):
        if cov.parent == cover.parent:
            branch = list(addr.branch)
            branch[idx] = 1 - bit
            return CellAddress(addr.root, addr.digits, tuple(branch))
    raise ValueError("address does not pass through the given cover")


@dataclass
class ShSepCertificate:
    """Outcome of the sheet-separation property check."""

    cover_key: str
    pairs_checked: int = 0
    vacuous_skipped: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.pairs_checked > 0 and not self.violations


def check_shsep(cover: CoverRecord, samples: int = 10000,
                seed: int = 0) -> ShSepCertificate:
    """Sample hypothesis-satisfying pairs and assert the sheet labels differ.

    Pairs straddle the cut at both sigma lifts; the crossing segment gives an
    exact distance certificate <= 5^(-i-3) and the angular gap >= pi is
    exact.  Extra random pairs demonstrate the vacuous case (hypothesis not
    met -> skipped).
    """
    rng = random.Random(seed)
    cs = cover.child_side
    bound2 = (cs / 25) ** 2
    above = cover.start_idx
    below = (cover.start_idx - 1) % 8
    cert = ShSepCertificate(cover_key=cover.parent.key())
    for t in range(samples):
        rhat = Fraction(rng.randrange(1, 200), 200)
        e1 = Fraction(rng.randrange(1, 100), 10000)   # <= 1/100 of a cell side
        e2 = Fraction(rng.randrange(1, 100), 10000)
        if t % 2 == 0:
            sheet_above, sheet_below = 1, 0   # the '8' lift of sigma
        else:
            sheet_above, sheet_below = 0, 1   # the '0' lift
        pa = _ring_point(cover, above, e1, rhat)
        pb = _ring_point(cover, below, 1 - e2, rhat)
        gap_over_pi = abs(cover.pos8(above, *pa) - cover.pos8(below, *pb)) / 4
        d2 = dist2(pa, pb) * cs * cs
        if gap_over_pi * 4 < 4 or d2 > bound2:
            cert.vacuous_skipped += 1
            continue
        cert.pairs_checked += 1
        if sheet_above == sheet_below:
            cert.violations.append({
                "pa": tuple(map(str, pa)), "pb": tuple(map(str, pb)),
                "gap_over_pi": str(gap_over_pi), "dist2": str(d2)})
    for _ in range(min(200, samples)):
        i1, i2 = rng.randrange(8), rng.randrange(8)
        p1 = _ring_point(cover, i1, Fraction(rng.randrange(1, 99), 100),
                         Fraction(rng.randrange(1, 99), 100))
        p2 = _ring_point(cover, i2, Fraction(rng.randrange(1, 99), 100),
                         Fraction(rng.randrange(1, 99), 100))
        gap_over_pi = abs(cover.pos8(i1, *p1) - cover.pos8(i2, *p2)) / 4
        if gap_over_pi < 1 or dist2(p1, p2) * cs * cs > bound2:
            cert.vacuous_skipped += 1
    return cert


def _ring_point(cover: CoverRecord, ring_idx: int, w: Fraction, rhat: Fraction):
    """Local point in ring cell `ring_idx` with chart values (w, rhat)."""
    if ring_idx in _EDGE_CHART:
        wf, rf = _EDGE_CHART[ring_idx]
        return _invert_affine_pair(wf, rf, w, rhat)
    af, bf = _CORNER_CHART[ring_idx]
    if w <= HALF:
        a = rhat
        b = 2 * a * w
    else:
        b = rhat
        a = 2 * b * (1 - w)
    return _invert_affine_pair(af, bf, a, b)


def _invert_affine_pair(f1, f2, v1, v2):
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    det = a1 * b2 - a2 * b1
    x = ((v1 - c1) * b2 - (v2 - c2) * b1) / det
    y = (a1 * (v2 - c2) - a2 * (v1 - c1)) / det
    return (x, y)


@dataclass
class LiftedCoverRecord:
    """Double cover of a k-cube column lifted from its 2-d shadow."""

    base_cell: CellAddress
    plane: tuple
    cover: CoverRecord

    def shadow(self, xy):
        xi, zeta = self.plane
        return (xy[xi - 1], xy[zeta - 1])

    def check_commutation(self, cpx) -> bool:
        """Vertex-exact test of the commuting square: projecting to the
        shadow then down the 2-d cover equals projecting down the lifted
        cover then to the shadow."""
        k = cpx.k
        for addr, rec in cpx.cells.items():
            if rec.sheet is None:
                continue
            events = cpx.cover_events(addr)
            if not any(cov.parent == self.cover.parent for _, cov, _ in events):
                continue
            corner = addr.corner(k)
            side = addr.side
            for vertex in _cube_corners(corner, side, k):
                sh = self.shadow(vertex)
                lx, ly = self.cover.local(vertex)
                if self.cover.to_root_plane(lx, ly) != sh:
                    return False
        return True


def _cube_corners(corner, side, k):
    out = [()]
    for a in range(k):
        out = [c + (corner[a] + bit * side,) for c in out for bit in (0, 1)]
    return out


def lift_cover(cpx, k_cell: CellAddress, plane: tuple,
               sigma_edge=None) -> LiftedCoverRecord:
    """Build the lifted double cover of a k-cube over the given shadow plane.

    For k = 2 and plane (1, 2) this reduces to build_double_cover.
    """
    k = cpx.k
    xi, zeta = plane
    if not (1 <= xi < zeta <= k):
        raise ValueError("plane indices out of range")
    decomp = classify_children(k_cell, k=k, plane=plane)
    cover = build_double_cover(cpx, decomp, sigma_edge=sigma_edge)
    return LiftedCoverRecord(base_cell=k_cell, plane=plane, cover=cover)
