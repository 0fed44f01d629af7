"""Finite-stage normal currents: oriented cells with dyadic weights.

Mass is exact (dyadic times 5-adic rationals); the boundary chain is computed
combinatorially by face cancellation, with cover gluings identifying sheet
faces against base faces and the two lifts of the cut matched pairwise.
Evaluation against sampled forms integrates pulled-back Jacobian determinants
exactly on affine pieces and by midpoint quadrature with a Richardson error
estimate otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .cells import CellAddress, StageComplex

ZERO = Fraction(0)


@dataclass
class StageCurrent:
    """The canonical current of a stage complex: one oriented cell per record."""

    stage: object                      # a stage with .complex and .evaluate
    dimension: int = 2
    signs: dict = field(default_factory=dict)   # address -> +-1 (default +1)

    @property
    def complex(self) -> StageComplex:
        return self.stage.complex

    def sign(self, addr: CellAddress) -> int:
        return self.signs.get(addr, 1)

    def mass(self) -> Fraction:
        k = self.dimension
        return sum(rec.weight * rec.side ** k for rec in self.complex.cells.values())


class DegreeMismatchError(ValueError):
    """Form degree does not match the current dimension."""


@dataclass(frozen=True)
class LinearForm:
    """Affine functional c . x + c0 on ambient space; exact gradient."""

    coeffs: tuple
    const: Fraction = ZERO

    def value(self, p):
        return sum(c * x for c, x in zip(self.coeffs, p)) + self.const

    def grad(self, p):
        return self.coeffs

    def padded(self, dim: int) -> "LinearForm":
        c = tuple(self.coeffs) + (ZERO,) * (dim - len(self.coeffs))
        return LinearForm(c, self.const)


@dataclass
class SampledForm:
    """f dg_1 ^ ... ^ dg_k with a declared Lipschitz budget.

    Components are LinearForm (exact) or (callable, gradient callable) pairs.
    """

    f: object                     # LinearForm or callable
    gs: tuple
    lipschitz_budget: float = 10.0
    quad_depth: int = 2

    @property
    def degree(self) -> int:
        return len(self.gs)

    def all_linear(self) -> bool:
        return isinstance(self.f, LinearForm) and all(
            isinstance(g, LinearForm) for g in self.gs)

    def padded(self, dim: int) -> "SampledForm":
        f = self.f.padded(dim) if isinstance(self.f, LinearForm) else self.f
        gs = tuple(g.padded(dim) if isinstance(g, LinearForm) else g
                   for g in self.gs)
        return SampledForm(f, gs, self.lipschitz_budget, self.quad_depth)


def coordinate_form(i: int, j: int, dim: int, f=None) -> SampledForm:
    """The form f dx_i ^ dx_j (0-based coordinates) on R^dim."""
    gi = LinearForm(tuple(Fraction(1) if a == i else ZERO for a in range(dim)))
    gj = LinearForm(tuple(Fraction(1) if a == j else ZERO for a in range(dim)))
    if f is None:
        f = LinearForm((ZERO,) * dim, Fraction(1))
    return SampledForm(f, (gi, gj))


def volume_form(k: int, dim: int) -> SampledForm:
    gs = tuple(LinearForm(tuple(Fraction(1) if a == i else ZERO
                                for a in range(dim))) for i in range(k))
    return SampledForm(LinearForm((ZERO,) * dim, Fraction(1)), gs)


def _det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if n == 3:
        a, b, c = rows
        return (a[0] * (b[1] * c[2] - b[2] * c[1])
                - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]))
    # Laplace expansion; degrees stay tiny here
    total = ZERO
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * _det(minor)
    return total


def eval_current(current: StageCurrent, form: SampledForm, stage=None):
    """Evaluate the current against the form; returns (value, error_estimate).

    Exact on cells where the embedding is affine and the form is linear;
    midpoint quadrature with a Richardson estimate elsewhere.
    """
    if form.degree != current.dimension:
        raise DegreeMismatchError(
            f"form degree {form.degree} != current dimension {current.dimension}")
    stage = stage if stage is not None else current.stage
    k = current.dimension
    total_exact = ZERO
    total_float = 0.0
    err = 0.0
    exact = True
    for addr, rec in current.complex.cells.items():
        contrib, e, is_exact = _cell_integral(current, stage, addr, rec, form, k)
        if is_exact and exact:
            total_exact += rec.weight * current.sign(addr) * contrib
        else:
            if exact:
                total_float = float(total_exact)
                exact = False
            total_float += float(rec.weight) * current.sign(addr) * float(contrib)
        err += e
    if exact:
        return total_exact, 0.0
    return total_float + float(total_exact) * 0.0 if False else total_float, err


def _cell_integral(current, stage, addr, rec, form, k):
    affine = _cell_is_affine(stage, addr)
    if affine and form.all_linear():
        # constant Jacobian: integral = f at centre * det * volume
        c = addr.corner(k)
        s = addr.side
        centre = tuple(ci + s / 2 for ci in c)
        rows_J = stage.jacobian(addr, centre)
        det = _pulled_det(form, rows_J, stage.evaluate(addr, centre), exact=True)
        fval = form.f.value(stage.evaluate(addr, centre))
        return fval * det * s ** k, 0.0, True
    q1 = _midpoint_quad(current, stage, addr, form, k, form.quad_depth)
    q2 = _midpoint_quad(current, stage, addr, form, k, form.quad_depth + 1)
    return q2, abs(q2 - q1) / 3.0, False


def _cell_is_affine(stage, addr) -> bool:
    probe = getattr(stage, "cell_is_affine", None)
    if probe is not None:
        return probe(addr)
    return not stage.complex.cover_events(addr)


def _pulled_det(form, rows_J, image_point, exact=False):
    rows = []
    for g in form.gs:
        grad = g.grad(image_point)
        rows.append(tuple(sum(grad[a] * rows_J[a][c] for a in range(len(rows_J)))
                          for c in range(len(rows_J[0]))))
    return _det(rows)


def _midpoint_quad(current, stage, addr, form, k, depth):
    m = 2 ** depth
    c = addr.corner(k)
    s = addr.side
    h = s / m
    vol = float(h) ** k
    total = 0.0
    idx = [0] * k
    while True:
        mid = tuple(c[a] + (2 * idx[a] + 1) * h / 2 for a in range(k))
        img = stage.evaluate(addr, mid)
        rows_J = stage.jacobian(addr, mid)
        det = _pulled_det(form, rows_J, img)
        fv = form.f.value(img) if isinstance(form.f, LinearForm) else form.f(
            tuple(map(float, img)))
        total += float(fv) * float(det) * vol
        a = 0
        while a < k:
            idx[a] += 1
            if idx[a] < m:
                break
            idx[a] = 0
            a += 1
        if a == k:
            break
    return total


# ---------------------------------------------------------------------------
# Boundary chain by combinatorial face cancellation.
# ---------------------------------------------------------------------------

def boundary_chain(current: StageCurrent) -> dict:
    """Net signed weights of all (k-1)-faces after cancellation.

    Face keys identify geometry plus gluing context: faces on a cover's
    collapsed boundary drop the sheet label (matching the base cell's face),
    faces on the cut match across the lap change, interior faces carry the
    sheet bit.
    """
    cpx = current.complex
    k = current.dimension
    chain: dict = {}
    for addr, rec in cpx.cells.items():
        c = addr.corner(k)
        s = addr.side
        events = cpx.cover_events(addr)
        for axis in range(k):
            for hi_side in (0, 1):
                fixed = c[axis] + s * hi_side
                others = tuple((c[b], s) for b in range(k) if b != axis)
                ctx = _face_context(cpx, addr, events, axis, fixed, c, s, k)
                key = (axis, fixed, others, ctx)
                sign = (1 if hi_side else -1) * current.sign(addr)
                chain[key] = chain.get(key, ZERO) + sign * rec.weight
    return {key: w for key, w in chain.items() if w != 0}


def _face_context(cpx, addr, events, axis, fixed, corner, side, k):
    ctx = []
    for (g, cover, sheet) in events:
        xi, zeta = cover.plane
        plane_axes = (xi - 1, zeta - 1)
        cs = cover.child_side
        if axis not in plane_axes:
            ctx.append((cover.parent.key(), "sheet", sheet))
            continue
        axis_local = 0 if axis == plane_axes[0] else 1
        other = plane_axes[1 - axis_local]
        fixed_local = (fixed - cover.corner[axis_local]) / cs
        lo_local = (corner[other] - cover.corner[1 - axis_local]) / cs
        hi_local = lo_local + side / cs
        cls = cover.classify_face(axis_local, fixed_local, lo_local, hi_local)
        if cls == "glue":
            continue
        if cls == "sigma":
            rel = (cover.ring_index(addr.digits[g - 1]) - cover.start_idx) % 8
            ctx.append((cover.parent.key(), "sigma",
                        cover.sigma_preimage_id(rel, sheet)))
        else:
            ctx.append((cover.parent.key(), "sheet", sheet))
    return tuple(ctx)


def boundary_mass(current: StageCurrent) -> Fraction:
    """Mass of the boundary chain after internal face cancellation, exact."""
    k = current.dimension
    total = ZERO
    for (axis, fixed, others, ctx), w in boundary_chain(current).items():
        measure = Fraction(1)
        for (_, length) in others:
            measure *= length
        total += abs(w) * measure
    return total


@dataclass
class PushforwardCertificate:
    i: int
    j: int
    results: list            # (form label, value_i, value_j, |diff|, tol_ok)

    @property
    def ok(self) -> bool:
        return all(r[4] for r in self.results)


def pushforward_check(stages, i: int, j: int, dimension: int = 2,
                      tol: float = 1e-6) -> PushforwardCertificate:
    """Evaluate a battery of coordinate forms at stage i and through the
    stage-j pullback; the composite projection onto stage 0 acts on built
    towers as coordinate truncation on the image.
    """
    if i > j:
        raise ValueError("need i <= j")
    if i != 0 and getattr(stages[i], "truncating_projection", True) is False:
        raise ValueError("composite projection is only a truncation onto stage 0")
    si, sj = stages[i], stages[j]
    dim_i = si.ambient_dim
    dim_j = sj.ambient_dim
    k = dimension
    battery = [("vol", volume_form(k, dim_i))]
    coords = list(range(min(dim_i, k + 2)))
    lin = [LinearForm(tuple(Fraction(1) if a == c else ZERO
                            for a in range(dim_i))) for c in coords]
    for c in coords[:2]:
        vf = volume_form(k, dim_i)
        battery.append((f"x{c}*vol", SampledForm(lin[c], vf.gs)))
    if len(coords) >= 2:
        f = LinearForm(tuple(Fraction(1) if a in (0, 1) else ZERO
                             for a in range(dim_i)), Fraction(1, 3))
        battery.append(("(x0+x1+1/3)*vol", SampledForm(f, volume_form(k, dim_i).gs)))
        f2 = LinearForm(tuple(Fraction(1) if a == 0 else (Fraction(-1) if a == 1 else ZERO)
                              for a in range(dim_i)))
        battery.append(("(x0-x1)*vol", SampledForm(f2, volume_form(k, dim_i).gs)))
    ni = StageCurrent(si, dimension=k)
    nj = StageCurrent(sj, dimension=k)
    results = []
    for label, form in battery:
        vi, ei = eval_current(ni, form, si)
        vj, ej = eval_current(nj, form.padded(dim_j), sj)
        diff = abs(float(vi) - float(vj))
        results.append((label, float(vi), float(vj), diff,
                        diff <= tol + ei + ej))
    return PushforwardCertificate(i=i, j=j, results=results)
