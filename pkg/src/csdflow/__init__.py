"""Constrained surface diffusion flow on closed axisymmetric hypersurfaces.

Simulates the fourth-order normal-velocity flow dX/dt = (lap H + h(t)) nu
on profile-curve surfaces of revolution, monitors local curvature
concentration at a chosen ball radius, and numerically verifies the
geometric and evolution identities the flow satisfies.
"""

from .errors import (
    AxisViolation,
    BadParameter,
    ConfigParse,
    CorruptInput,
    CsdflowError,
    DegenerateGeometry,
    InvalidConfig,
    OutOfRange,
    PoleSlopeError,
    SelfIntersection,
    TooFewExperiments,
    TooFewNodes,
    TooFewSnapshots,
    WindowInvalid,
)
from .geometry import (
    BoundingBall,
    ProfileSurface,
    Topology,
    area,
    build_profile,
    diameter,
    preset,
    resample_arclength,
    rescale,
    volume,
)
from .curvature import (
    CurvatureField,
    ball_integral,
    curvature,
    integrate,
    laplace_beltrami,
    orbit_fraction,
)
from .constraints import (
    ConstraintFunction,
    const,
    evaluate,
    rescale_constraint,
    sup_bound,
    table,
    zero,
)
from .flow import (
    FlowConfig,
    FlowTrajectory,
    Snapshot,
    TerminationCause,
    conservation_diagnostics,
    evolve,
    fixed_step_window,
)
from .identities import (
    ResidualReport,
    ScaleReport,
    composed_a_residual,
    evolution_residuals,
    gauss_intrinsic_residual,
    gauss_residual,
    scale_invariance_check,
    simons_residual,
    trace_residual,
    with_order,
)
from .lifespan import (
    AuditRecord,
    ConcentrationReport,
    CutoffEval,
    CutoffFn,
    FitResult,
    KeyEstimateSeries,
    audit_ms1,
    audit_ms2,
    choose_rho,
    concentration,
    cutoff,
    evaluate_cutoff,
    fit_lifespan_constant,
    keyest1_functional,
    track,
)

__version__ = "0.1.0"
