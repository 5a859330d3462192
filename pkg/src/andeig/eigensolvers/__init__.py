"""Eigensolver strategies for interior eigenpairs of sparse symmetric
indefinite matrices: long unreorthogonalized Lanczos runs with spurious-value
filtering, shift-and-invert Lanczos with implicit restarts, and symmetric
Jacobi-Davidson."""

from .cwi import cwi_identify, cwi_solve
from .jd import jd_solve, make_factor_factory
from .lanczos import LanczosResult, lanczos_run, tridiag_eig, tridiag_eigvec_for_value
from .shift_invert import (
    InnerSolveError,
    ShiftInvertSolver,
    implicit_qr_step,
    implicit_restart,
    si_lanczos_ir,
)
from .types import (
    EigenPair,
    InnerToleranceSchedule,
    SolverConfig,
    SolverStagnationError,
    TridiagMatrix,
    sort_pairs_by_target,
)

__all__ = [
    "EigenPair",
    "InnerSolveError",
    "InnerToleranceSchedule",
    "LanczosResult",
    "ShiftInvertSolver",
    "SolverConfig",
    "SolverStagnationError",
    "TridiagMatrix",
    "cwi_identify",
    "cwi_solve",
    "implicit_qr_step",
    "implicit_restart",
    "jd_solve",
    "lanczos_run",
    "make_factor_factory",
    "si_lanczos_ir",
    "sort_pairs_by_target",
    "tridiag_eig",
    "tridiag_eigvec_for_value",
]
