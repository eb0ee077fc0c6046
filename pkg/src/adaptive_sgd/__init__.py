"""SGD with online step size control from estimated smoothness, variance and gradient norm."""

from .errors import (
    ContractError,
    DegenerateDirection,
    InvalidSpec,
    LineSearchError,
    OperatorError,
    OracleUnavailable,
    RunError,
)
from .hilbert import (
    Covector,
    InnerProductOperator,
    Point,
    axpy,
    dual_norm_sq,
    dual_pair,
    primal_norm_sq,
    riesz_inverse,
    riesz_map,
)
from .sop import (
    ParetoSpec,
    QuadraticSopSpec,
    QuarticPairSpec,
    RotationPairSpec,
    SampleStream,
    Sop,
    make_problem,
    pareto_make,
    quadratic_make,
    quartic_pair_make,
    rotation_pair_make,
    single_atom_quadratic,
)
from .optimizer import RunConfig, Trace, run, run_ensemble, sgd_adaptive, sgd_fixed

__version__ = "0.1.0"
