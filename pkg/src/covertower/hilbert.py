"""The tower of embeddings of the covered square complexes into R^(2n+2).

Stage 0 is the unit square in the first coordinate plane; each later stage
adds, per covered cell, the deformation pair in a fresh coordinate plane.
All vertex coordinates are exact rationals, so diagram commutation and
orthogonality checks are equality tests.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cells import (CellAddress, CellRecord, StageComplex, classify_children,
                    classify_digit, ROLE_PLAIN)
from .cover import build_double_cover, deck_partner, _ring_point
from .maps import psi_jacobian, psi_value
from .schedule import DeltaSchedule

ZERO = Fraction(0)


class CellCeilingError(RuntimeError):
    """Requested stage would exceed the configured cell budget."""

    def __init__(self, count, ceiling):
        super().__init__(f"stage would hold {count} cells, over the ceiling {ceiling}")
        self.count = count
        self.ceiling = ceiling


@dataclass
class HilbertStage:
    """Stage n: the complex X_n with the exact embedding into R^(2n+2)."""

    n: int
    complex: StageComplex
    schedule: DeltaSchedule

    @property
    def ambient_dim(self) -> int:
        return 2 * self.n + 2

    def evaluate(self, addr: CellAddress, xy) -> tuple:
        """Exact embedding value at a point of cell `addr`."""
        coords = [xy[0], xy[1]] + [ZERO] * (2 * self.n)
        for (g, cover, sheet) in self.complex.cover_events(addr):
            ring_idx = cover.ring_index(addr.digits[g - 1])
            lx, ly = cover.local(xy)
            val = psi_value(cover, self.schedule.delta(cover.delta_level),
                            ring_idx, lx, ly, sheet)
            coords[2 * g] += val[0]
            coords[2 * g + 1] += val[1]
        return tuple(coords)

    def jacobian(self, addr: CellAddress, xy):
        """Exact Jacobian rows (ambient_dim x 2) at a generic point."""
        rows = [[Fraction(1), ZERO], [ZERO, Fraction(1)]]
        rows += [[ZERO, ZERO] for _ in range(2 * self.n)]
        for (g, cover, sheet) in self.complex.cover_events(addr):
            ring_idx = cover.ring_index(addr.digits[g - 1])
            lx, ly = cover.local(xy)
            jac = psi_jacobian(cover, self.schedule.delta(cover.delta_level),
                               ring_idx, lx, ly, sheet)
            cs = cover.child_side
            for c in range(2):
                rows[2 * g + c][0] += jac[c][0] / cs
                rows[2 * g + c][1] += jac[c][1] / cs
        return [tuple(r) for r in rows]

    def project_point(self, addr: CellAddress, i: int):
        """pi_{n,i}: the ancestor cell at generation i (same base position)."""
        bits = 0
        for (g, cover, sheet) in self.complex.cover_events(addr):
            if g <= i:
                bits += 1
        return addr.ancestor(i, bits)

    def vertices(self):
        """All (cell, corner) pairs of the stage complex."""
        for addr, rec in self.complex.cells.items():
            c = addr.corner(2)
            s = addr.side
            yield addr, (c[0], c[1])
            yield addr, (c[0] + s, c[1])
            yield addr, (c[0] + s, c[1] + s)
            yield addr, (c[0], c[1] + s)

    def covers_at_stage(self, g: int):
        return [cov for cov in self.complex.covers.values()
                if cov.delta_level == g]


def build_stage_hilbert(n: int, schedule: DeltaSchedule,
                        cell_ceiling: int = 200000) -> list:
    """Build stages 0..n; returns the list of HilbertStage.

    Each step subdivides every cell once and replaces every middle annulus by
    its double cover; the measure is split in half on the covered cells.
    """
    if n < 0:
        raise ValueError("stage must be >= 0")
    stages = [HilbertStage(0, StageComplex(k=2, kind="hilbert"), schedule)]
    for i in range(n):
        stages.append(_next_stage(stages[-1], cell_ceiling))
    return stages


def _next_stage(stage: HilbertStage, cell_ceiling: int) -> HilbertStage:
    prev = stage.complex
    est = len(prev.cells) * 33
    if est > cell_ceiling:
        raise CellCeilingError(est, cell_ceiling)
    nxt = StageComplex(k=2, kind="hilbert")
    nxt.generation = stage.n + 1
    nxt.cells = {}
    nxt.covers = dict(prev.covers)
    for addr, rec in prev.cells.items():
        decomp = classify_children(addr)
        for group in (decomp.central, decomp.outer, decomp.annulus):
            for child in group:
                d = child.digits[-1]
                nxt.cells[child] = CellRecord(child, rec.weight,
                                              classify_digit(d[0], d[1]))
        build_double_cover(nxt, decomp)
    return HilbertStage(stage.n + 1, nxt, stage.schedule)


def project_hilbert(stage: HilbertStage, i: int):
    """Coordinate truncation P_i applied to the stage embedding.

    Returns a callable giving P_i(F_n(point)); raises if i > n.
    """
    if i > stage.n:
        raise ValueError("cannot project to a later stage")
    dim = 2 * i + 2

    def proj(addr, xy):
        return stage.evaluate(addr, xy)[:dim]

    return proj


def diagram_commutation_exact(stages, i: int, j: int) -> bool:
    """P_i . F_j == F_i . pi_{j,i} at every vertex of X_j, exact."""
    sj, si = stages[j], stages[i]
    dim = 2 * i + 2
    for addr, xy in sj.vertices():
        lhs = sj.evaluate(addr, xy)[:dim]
        rhs = si.evaluate(sj.project_point(addr, i), xy)
        if lhs != rhs:
            return False
    return True


def new_coordinate_orthogonality(stages, i: int) -> bool:
    """Coordinates 2i+3, 2i+4 vanish identically before stage i+1 adds them."""
    s = stages[i]
    for addr, xy in s.vertices():
        v = s.evaluate(addr, xy)
        if any(c != 0 for c in v[2 * i + 2:]):
            return False
    return True


@dataclass
class SupMoveCertificate:
    stage: int
    bound: float                 # 56 * delta_{i+1} * 5^(-i-1)
    measured: float              # exact max over vertices, float report
    measured_constant: float     # measured / (delta_{i+1} * 5^(-i-1))

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound


def sup_move_certificate(stages, i: int, samples: int = 4000,
                         seed: int = 0) -> SupMoveCertificate:
    """||F_i . pi - F_{i+1}||_inf over cell centres and sampled points, exact
    per point.

    The difference is exactly the newest deformation pair (it vanishes at the
    cover-generation skeleton, so vertices alone see nothing).
    """
    s = stages[i + 1]
    rng = random.Random(seed)
    delta = s.schedule.delta(i + 1)
    best = ZERO
    cells = list(s.complex.cells.keys())
    half = Fraction(1, 2)
    for t in range(len(cells) + samples):
        if t < len(cells):
            addr = cells[t]
            fx, fy = half, half
        else:
            addr = cells[rng.randrange(len(cells))]
            fx = Fraction(rng.randrange(1, 256), 256)
            fy = Fraction(rng.randrange(1, 256), 256)
        c = addr.corner(2)
        sd = addr.side
        v = s.evaluate(addr, (c[0] + fx * sd, c[1] + fy * sd))
        n2 = v[2 * i + 2] ** 2 + v[2 * i + 3] ** 2
        if n2 > best:
            best = n2
    measured = math.sqrt(float(best))
    unit = float(delta) * 5.0 ** (-(i + 1))
    return SupMoveCertificate(stage=i + 1, bound=56.0 * unit,
                              measured=measured,
                              measured_constant=measured / unit if unit else 0.0)


@dataclass
class LipschitzSample:
    stage: int
    max_ratio: float
    bound_factor: float          # (1 + sum delta^2)^(1/2)
    measured_constant: float     # max_ratio / bound_factor

    def within_budget(self, budget: float = 100.0) -> bool:
        return self.measured_constant <= budget


def sample_stage_lipschitz(stage: HilbertStage, samples: int = 20000,
                           seed: int = 0) -> LipschitzSample:
    """Sampled Lipschitz ratio of F_n over same-cell pairs.

    Straight segments inside one cell are valid paths of the length metric,
    so every ratio is a certified lower bound for glip F_n.
    """
    rng = random.Random(seed)
    cells = list(stage.complex.cells.keys())
    best = 0.0
    for _ in range(samples):
        addr = cells[rng.randrange(len(cells))]
        c = addr.corner(2)
        s = addr.side
        p = (c[0] + Fraction(rng.randrange(1, 256), 256) * s,
             c[1] + Fraction(rng.randrange(1, 256), 256) * s)
        q = (c[0] + Fraction(rng.randrange(1, 256), 256) * s,
             c[1] + Fraction(rng.randrange(1, 256), 256) * s)
        if p == q:
            continue
        vp = stage.evaluate(addr, p)
        vq = stage.evaluate(addr, q)
        num = math.sqrt(sum(float(a - b) ** 2 for a, b in zip(vp, vq)))
        den = math.hypot(float(p[0] - q[0]), float(p[1] - q[1]))
        best = max(best, num / den)
    factor = math.sqrt(1.0 + float(stage.schedule.partial_sum_sq(stage.n)))
    return LipschitzSample(stage=stage.n, max_ratio=best, bound_factor=factor,
                           measured_constant=best / factor)


@dataclass
class InjectivityReport:
    stage: int
    min_ratio: float
    pairs: int


def injectivity_radius_report(stage: HilbertStage, samples: int = 2000,
                              seed: int = 0) -> InjectivityReport:
    """Min over sampled fiber pairs of image distance / domain distance.

    Domain distance uses the radial path through the nearest glued boundary
    (a valid path, hence an upper bound), so each ratio is a certified lower
    bound; positivity witnesses injectivity at this stage and the decay
    across stages quantifies the degradation.
    """
    rng = random.Random(seed)
    cpx = stage.complex
    sheet_cells = [a for a, r in cpx.cells.items() if r.sheet is not None]
    if not sheet_cells:
        return InjectivityReport(stage.n, float("inf"), 0)
    best = None
    pairs = 0
    for _ in range(samples):
        addr = sheet_cells[rng.randrange(len(sheet_cells))]
        events = cpx.cover_events(addr)
        g, cover, sheet = events[-1]
        partner = deck_partner(addr, cpx, cover)
        if partner not in cpx.cells:
            continue
        ring_idx = cover.ring_index(addr.digits[g - 1])
        w = Fraction(rng.randrange(1, 128), 128)
        rhat = Fraction(rng.randrange(1, 128), 128)
        lx, ly = _ring_point(cover, ring_idx, w, rhat)
        xy = cover.to_root_plane(lx, ly)
        _, rr = cover.chart(ring_idx, lx, ly)
        d_ub = 2 * min(rr, 1 - rr) * cover.child_side
        if d_ub == 0:
            continue
        vp = stage.evaluate(addr, xy)
        vq = stage.evaluate(partner, xy)
        num = math.sqrt(sum(float(a - b) ** 2 for a, b in zip(vp, vq)))
        ratio = num / float(d_ub)
        pairs += 1
        if best is None or ratio < best:
            best = ratio
    return InjectivityReport(stage.n, best if best is not None else float("inf"),
                             pairs)
