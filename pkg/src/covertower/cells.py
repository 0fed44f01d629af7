"""Combinatorics of 5-adic square and cube complexes.

Cells are addressed by a base-5 digit path from a root cell plus a branch word
recording sheet choices at double-cover events.  All geometry (corners, side
lengths) is exact: sides are powers of 5^-1, measure weights are dyadic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional

from .geometry import Fraction as _F  # noqa: F401  (re-export convenience)

CENTRAL = ((2, 2),)
# anticlockwise ring of middle-annulus children, starting east of the centre
ANNULUS_ORDER = ((3, 2), (3, 3), (2, 3), (1, 3), (1, 2), (1, 1), (2, 1), (3, 1))
ANNULUS_SET = frozenset(ANNULUS_ORDER)
# even indices are edge cells, odd indices corner cells of the ring
CORNER_IDXS = (1, 3, 5, 7)

ROLE_CENTRAL = "central"
ROLE_OUTER = "outer"
ROLE_ANNULUS = "annulus"
ROLE_PLAIN = "plain"


def classify_digit(j1: int, j2: int) -> str:
    """Role of the child with south-west corner (j1, j2) in {0..4}^2."""
    if (j1, j2) == (2, 2):
        return ROLE_CENTRAL
    if j1 in (0, 4) or j2 in (0, 4):
        return ROLE_OUTER
    return ROLE_ANNULUS


@dataclass(frozen=True)
class CellAddress:
    """Base-5 digit path from a root cell plus a cover branch word.

    digits: one k-tuple in {0..4}^k per subdivision level.
    branch: one sheet bit per double-cover event strictly above this cell,
    in path order; which levels carry cover events is owned by the complex.
    """

    root: int = 0
    digits: tuple = ()
    branch: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.digits)

    def child(self, digit: tuple, bit: Optional[int] = None) -> "CellAddress":
        branch = self.branch if bit is None else self.branch + (bit,)
        return CellAddress(self.root, self.digits + (tuple(digit),), branch)

    def ancestor(self, depth: int, branch_len: int) -> "CellAddress":
        return CellAddress(self.root, self.digits[:depth], self.branch[:branch_len])

    def corner(self, k: int) -> tuple:
        """Exact root coordinates of the cell's minimal corner."""
        c = [Fraction(0)] * k
        s = Fraction(1)
        for d in self.digits:
            s /= 5
            for a in range(k):
                c[a] += d[a] * s
        return tuple(c)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 5 ** self.depth)

    def key(self) -> str:
        ds = ",".join("".join(map(str, d)) for d in self.digits)
        bs = "".join(map(str, self.branch))
        return f"{self.root}:{ds}:{bs}"

    @staticmethod
    def from_key(s: str) -> "CellAddress":
        root_s, ds, bs = s.split(":")
        digits = tuple(tuple(int(ch) for ch in grp) for grp in ds.split(",") if grp)
        branch = tuple(int(ch) for ch in bs)
        return CellAddress(int(root_s), digits, branch)


@dataclass(frozen=True)
class CellRecord:
    """Per-cell data kept by a StageComplex."""

    address: CellAddress
    weight: Fraction
    role: str
    sheet: Optional[int] = None       # sheet bit at the cell's own cover level
    skeleton: bool = False

    @property
    def side(self) -> Fraction:
        return self.address.side


def subdivide(cell: CellAddress, times: int, k: int = 2) -> list:
    """All 5^(k*times) descendants of `cell` at `times` extra levels.

    Pure address combinatorics; weights and roles are owned by the complex.
    """
    if times < 1:
        raise ValueError("times must be >= 1")
    out = [cell]
    for _ in range(times):
        nxt = []
        for c in out:
            nxt.extend(c.child(d) for d in _digit_range(k))
        out = nxt
    return out


def _digit_range(k: int) -> Iterator[tuple]:
    if k == 1:
        for j in range(5):
            yield (j,)
        return
    for rest in _digit_range(k - 1):
        for j in range(5):
            yield rest + (j,)


@dataclass
class AnnulusDecomposition:
    """Children of a once-subdivided square grouped central/outer/annulus."""

    parent: CellAddress
    central: list
    outer: list
    annulus: list       # in ANNULUS_ORDER
    plane: tuple = (1, 2)

    def counts(self) -> tuple:
        return len(self.central), len(self.outer), len(self.annulus)


def classify_children(cell: CellAddress, k: int = 2,
                      plane: tuple = (1, 2)) -> AnnulusDecomposition:
    """Partition the 5^k children by the (j1, j2) rule on the shadow plane.

    For k = 2 the plane is forcibly (1, 2).  For k >= 3 classification reads
    the digit entries of the two plane axes; all other entries are free, so
    each group is a union of full columns over its shadow.
    """
    if k == 2:
        plane = (1, 2)
    xi, zeta = plane
    if not (1 <= xi < zeta <= k):
        raise ValueError("plane indices out of range")
    central, outer = [], []
    annulus_cols = {pos: [] for pos in ANNULUS_ORDER}
    for d in _digit_range(k):
        j1, j2 = d[xi - 1], d[zeta - 1]
        role = classify_digit(j1, j2)
        child = cell.child(d)
        if role == ROLE_CENTRAL:
            central.append(child)
        elif role == ROLE_OUTER:
            outer.append(child)
        else:
            annulus_cols[(j1, j2)].append(child)
    annulus = []
    for pos in ANNULUS_ORDER:
        annulus.extend(annulus_cols[pos])
    return AnnulusDecomposition(cell, central, outer, annulus, plane=plane)


def inner_annulus_digits(depth: int = 1) -> list:
    """Grandchild positions of the 8-cell annulus at `depth` subdivisions that
    stay at lattice distance >= one grandchild side from the annulus boundary.

    Positions are returned as exact lattice rectangles (lo, hi) in the local
    [0,5]^2 frame of the covered parent.  depth=1 gives the classical inner
    annulus (the cut-off plateau).
    """
    from .geometry import box_segments_dist2
    eps = Fraction(1, 5 ** depth)
    segs = annulus_boundary_segments()
    out = []
    for (j1, j2) in ANNULUS_ORDER:
        n = 5 ** depth
        for a in range(n):
            for b in range(n):
                lo = (j1 + a * eps, j2 + b * eps)
                hi = (j1 + (a + 1) * eps, j2 + (b + 1) * eps)
                d2 = box_segments_dist2(lo, hi, segs)
                if d2 >= eps * eps:
                    out.append((lo, hi))
    return out


def annulus_boundary_segments() -> list:
    """The two boundary components of the middle annulus, local [0,5]^2 frame."""
    inner = [((2, 2), (3, 2)), ((3, 2), (3, 3)), ((3, 3), (2, 3)), ((2, 3), (2, 2))]
    outer = [((1, 1), (4, 1)), ((4, 1), (4, 4)), ((4, 4), (1, 4)), ((1, 4), (1, 1))]
    segs = []
    for (a, b) in inner + outer:
        segs.append(((Fraction(a[0]), Fraction(a[1])), (Fraction(b[0]), Fraction(b[1]))))
    return segs


class StageComplex:
    """The finite complex X_n: cells, covers, exact measure bookkeeping."""

    def __init__(self, k: int = 2, kind: str = "hilbert"):
        self.k = k
        self.kind = kind
        self.generation = 0
        self.cells: dict = {}
        self.covers: dict = {}      # parent CellAddress -> CoverRecord
        root = CellAddress()
        self.cells[root] = CellRecord(root, Fraction(1), ROLE_PLAIN)

    def total_mass(self) -> Fraction:
        k = self.k
        return sum(rec.weight * rec.side ** k for rec in self.cells.values())

    def cover_events(self, addr: CellAddress):
        """Cover events along the path of `addr`.

        Yields (level, CoverRecord, sheet_bit) where level is the depth of the
        cell entering the cover's annulus.  Raises if the branch word length
        does not match the number of events.
        """
        bit_idx = 0
        events = []
        for g in range(1, addr.depth + 1):
            parent = addr.ancestor(g - 1, bit_idx)
            cover = self.covers.get(parent)
            if cover is None:
                continue
            xi, zeta = cover.plane
            d = addr.digits[g - 1]
            if (d[xi - 1], d[zeta - 1]) in ANNULUS_SET:
                if bit_idx >= len(addr.branch):
                    raise ValueError(f"branch word too short for {addr.key()}")
                events.append((g, cover, addr.branch[bit_idx]))
                bit_idx += 1
        if bit_idx != len(addr.branch):
            raise ValueError(f"branch word too long for {addr.key()}")
        return events
