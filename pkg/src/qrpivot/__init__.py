"""Column-pivoted QR with switchable partial-column-norm downdating.

The package factors A*P = Q*R with column pivoting while maintaining the
running column norms either by the classic downdate-with-recompute-switch
recurrence, a robust working-precision variant of the switch, or exact
recomputation at every step.  Failure injections reproduce two historically
observed ways the classic switch breaks (excess-precision control
arithmetic and recomputing the wrong column), a grid simulator replays
distributed reduction orderings, and diagnostics verify the rank-revealing
structure of the resulting R factors.
"""
from .core import (
    column_norm,
    combine_sumsq,
    eps,
    norm_from_sumsq,
    scaled_sumsq,
    vector_norm,
    working_dtype,
)
from .diagnostics import (
    PivotDivergence,
    StructureReport,
    audit_pivot_dominance,
    check_structure,
    compare_pivots,
    failure_precondition,
    jacobi_singular_values,
    numerical_rank,
    replay_partial,
    residual_metrics,
    row_scaled_condition,
    structure_csv,
)
from .downdating import (
    Decision,
    DowndateEvent,
    EventLog,
    NormTracker,
    Strategy,
    StrategyConfig,
    classic_decide,
    downdate_formula,
    robust_decide,
    tracker_init,
    tracker_step,
)
from .genmat import KahanParams, kahan, random_gaussian, symmetrized_kahan
from .gridsim import GridTopology, distributed_argmax, distributed_norm
from .householder import (
    Reflector,
    reflector_apply,
    reflector_apply_inverse,
    reflector_generate,
)
from .mmio import read_matrix, write_matrix
from .qrcp import (
    PivotedQRResult,
    extract_r,
    factorize,
    form_q,
    permuted_input,
    select_pivot,
)

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "DowndateEvent",
    "EventLog",
    "GridTopology",
    "KahanParams",
    "NormTracker",
    "PivotDivergence",
    "PivotedQRResult",
    "Reflector",
    "Strategy",
    "StrategyConfig",
    "StructureReport",
    "audit_pivot_dominance",
    "check_structure",
    "classic_decide",
    "column_norm",
    "combine_sumsq",
    "compare_pivots",
    "distributed_argmax",
    "distributed_norm",
    "downdate_formula",
    "eps",
    "extract_r",
    "factorize",
    "failure_precondition",
    "form_q",
    "jacobi_singular_values",
    "kahan",
    "norm_from_sumsq",
    "numerical_rank",
    "permuted_input",
    "random_gaussian",
    "read_matrix",
    "reflector_apply",
    "reflector_apply_inverse",
    "reflector_generate",
    "replay_partial",
    "residual_metrics",
    "robust_decide",
    "row_scaled_condition",
    "scaled_sumsq",
    "select_pivot",
    "structure_csv",
    "symmetrized_kahan",
    "tracker_init",
    "tracker_step",
    "vector_norm",
    "working_dtype",
    "write_matrix",
]
