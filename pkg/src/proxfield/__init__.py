"""Blockwise resolvent/prox calculus over weighted direct sums, plus a
primal-dual solver for composite monotone inclusions."""

from .errors import (
    AtomError,
    CapabilityError,
    DomainViolationError,
    OracleError,
    PreconditionError,
    ProxfieldError,
    ShapeError,
)
from .field import (
    AtomicMeasureSpace,
    BlockVector,
    HilbertField,
    axpy,
    inner_product,
    integrate,
    norm,
    random_block,
    zeros,
)
from .operators import (
    DirectIntegralOperator,
    MonotoneAtom,
    di_resolvent,
    di_yosida,
    inverse_resolvent,
    minimal_selection,
    monotonicity_probe,
    regularity_probe,
)
from .functions import (
    ConvexAtom,
    ConvexSetAtom,
    DirectIntegralFunction,
    DirectIntegralSet,
    conjugate_function,
    conjugate_prox,
    di_conjugate,
    di_envelope,
    di_eval,
    di_prox,
    envelope_gradient,
    project,
    recession_estimate,
    subgradient_residual,
    support,
)
from .linear import (
    CompositeFunction,
    LinearFamily,
    adjoint,
    apply,
    composite_eval,
    composite_subgradient,
    cyclic_probe,
    norm_bound,
    norm_estimate,
    prox_mixture,
)
from .solver import (
    KKTPoint,
    PrimalDualProblem,
    SolveReport,
    SolverConfig,
    composite_apply,
    extract_solutions,
    fbf_solve,
    kkt_residual,
    saddle_residual,
)

__version__ = "0.1.0"
