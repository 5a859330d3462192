"""Interior eigenpairs of large sparse real symmetric indefinite matrices.

The package builds Anderson-model Hamiltonians on the 3D cubic lattice and
computes a few eigenpairs in the interior of their spectrum.  The linear
algebra stack: symmetric weighted matchings rescale and block-order the
matrix, a multilevel incomplete LDL^T factorization with inverse-bounded
1x1/2x2 pivoting preconditions the shifted systems, simplified QMR solves
them, and three eigensolver strategies sit on top (unreorthogonalized
Lanczos with spurious filtering, shift-invert Lanczos with implicit
restarts, and symmetric Jacobi-Davidson).  A self-contained dense
eigensolver serves as the verification oracle throughout.
"""

from .anderson import (
    AndersonConfig,
    Boundary,
    Disorder,
    build_anderson,
    periodic_clean_spectrum,
    site_coords,
    site_index,
    wavefunction_probabilities,
)
from .dense import dense_eig, sym_indef_factor, sym_indef_solve
from .eigensolvers import (
    EigenPair,
    InnerToleranceSchedule,
    ShiftInvertSolver,
    SolverConfig,
    SolverStagnationError,
    TridiagMatrix,
    cwi_identify,
    cwi_solve,
    jd_solve,
    lanczos_run,
    make_factor_factory,
    si_lanczos_ir,
    tridiag_eig,
)
from .krylov import (
    LinearOperator,
    SqmrReport,
    make_jd_operator,
    make_jd_preconditioner,
    sqmr_solve,
)
from .matching import (
    AssignmentResult,
    Block,
    CostMatrix,
    StructurallySingularError,
    SymMatchingResult,
    build_symmetric_permutation,
    compress_graph,
    cycles_of_permutation,
    expand_ordering,
    log_weight_transform,
    scaling_from_duals,
    solve_lap,
    split_cycles,
    symmetric_matching,
)
from .mlildl import (
    FactorBreakdownError,
    FactorParams,
    InvNormEstimator,
    LevelFactor,
    MultilevelFactor,
    PivotChoice,
    aggressive_drop,
    apply_preconditioner,
    choose_pivot,
    estimate_inverse_norm,
    factor_level,
    factorize,
    pivot_d_values,
    preprocess_level,
)
from .ordering import AdjGraph, min_degree_order, symbolic_fill_count
from .sparse import (
    DiagScaling,
    MatrixFormatError,
    Permutation,
    SparseSymMatrix,
    permute_sym,
    read_matrix_market,
    scale_sym,
    sym_matvec,
    to_dense,
    write_matrix_market,
)

__version__ = "0.1.0"
