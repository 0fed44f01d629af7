"""Deformation amplitude schedules.

The construction needs delta_n decreasing with a divergent sum (holes at
infinitely many scales) and a summable square sum (Lipschitz embeddings).
Partial sums are exact Fractions; the infinite square sum is bounded by the
integral tail estimate sum_{n>m} 1/(a+n)^2 < 1/(a+m).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

KIND_HILBERT = "hilbert"
KIND_R4 = "r4"


@dataclass(frozen=True)
class DeltaSchedule:
    """delta_n = 1/(offset + n); offset 10 for the Hilbert tower, 10^9 for
    the finite-dimensional towers (shifted to satisfy the projection-claim
    precondition)."""

    kind: str
    offset: int
    custom: Optional[tuple] = None   # test-only: explicit leading terms

    def delta(self, n: int) -> Fraction:
        if n < 1:
            raise ValueError("schedule index starts at 1")
        if self.custom is not None and n <= len(self.custom):
            return self.custom[n - 1]
        return Fraction(1, self.offset + n)

    def partial_sum(self, n: int) -> Fraction:
        return sum(self.delta(j) for j in range(1, n + 1))

    def partial_sum_sq(self, n: int) -> Fraction:
        return sum(self.delta(j) ** 2 for j in range(1, n + 1))

    def sum_sq_upper(self, from_n: int = 1) -> Fraction:
        """Rigorous upper bound on sum_{n >= from_n} delta_n^2."""
        if self.custom is not None:
            head = sum(d * d for d in self.custom[from_n - 1:])
            return head + Fraction(1, self.offset + len(self.custom))
        return Fraction(1, self.offset + from_n - 1)

    def claim_precondition_lhs_upper(self) -> Fraction:
        """Rigorous upper bound on 4*10^3 * (1 + S)^(1/2) * S, S = sum delta^2.

        Uses (1+S)^(1/2) <= 1 + S/2.
        """
        s = self.sum_sq_upper()
        return 4000 * (1 + s / 2) * s

    def claim_precondition_holds(self) -> bool:
        return self.claim_precondition_lhs_upper() < Fraction(1, 8)


def hilbert_schedule() -> DeltaSchedule:
    return DeltaSchedule(KIND_HILBERT, 10)


def r4_schedule() -> DeltaSchedule:
    return DeltaSchedule(KIND_R4, 10 ** 9)


def custom_schedule(deltas, offset: int = 10 ** 6) -> DeltaSchedule:
    """Test-only schedule with explicit leading terms; not CLI-selectable."""
    return DeltaSchedule("custom", offset, tuple(Fraction(d) for d in deltas))
