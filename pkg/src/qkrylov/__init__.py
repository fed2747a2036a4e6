"""Krylov solvers for 2x2 block systems built on the quadratic numerical range.

QFOM and QQGMRES project onto the product space ``K_1 x K_2`` spanned by the
blocks of a Krylov basis (computed with a two-level orthogonal Arnoldi
process), so the projected model keeps any gap of ``W^2(A)`` around 0.
"""
from ._accel import backend
from .blockops import BlockOperator, BlockStructure, BlockVector, apply, load_block_matrix
from .errors import (BadDimensions, BadLevels, BadSplit, DegenerateBlock, DimensionMismatch,
                     EmptySample, MaxIterExceeded, NoStrip, NonSquare, ParseError,
                     QKrylovError, RankDeficientWarning, SingularModel, ZeroRightHandSide)
from .krylov_quad import (interpolate_optimal, qfom_iterate, qqgmres_iterate,
                          restarted_quad_solve, two_level_init, two_level_step)
from .krylov_std import SolveReport, Termination, restarted_solve
from .multigrid import GridHierarchy, SmootherSpec, mg_solve, prolongate, restrict, vcycle
from .problems import extreme_w2, gauge_random, hain_lust, hain_lust_strip, schwinger
from .ranges import gap_estimate, sample_w, sample_w2

__version__ = "0.1.0"
