"""Square/cube complexes with branched double covers, embedding towers,
finite-stage normal currents, and a quantitative unrectifiability prober."""

from .cells import (CellAddress, CellRecord, StageComplex, AnnulusDecomposition,
                    classify_children, subdivide)
from .cover import (CoverRecord, PolarCoord, OnCutError, SigmaChoiceError,
                    build_double_cover, check_shsep, deck_partner, lift_cover)
from .maps import (AffineApproximation, CertificationError, build_affine_approx,
                   fiber_gap_lower, find_min_subdivision, h1, h2, phi_cutoff,
                   psi_point, psi_value)
from .schedule import DeltaSchedule, hilbert_schedule, r4_schedule

__version__ = "0.1.0"
