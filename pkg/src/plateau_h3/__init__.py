"""Numerical asymptotic Plateau problem in the Poincaré ball model of H³."""

from .ball import (
    BallIsometry,
    BallPoint,
    IdealPoint,
    apply_isometry,
    christoffel_contraction,
    conformal_factor,
    hyperbolic_distance,
    mobius_translate,
    random_isometry,
    truncate_ideal,
    truncate_in_frame,
)
from .conformality import (
    ConformalityTrace,
    HopfField,
    MomentReport,
    complex_differential,
    conformality_trace,
    holomorphy_residual,
    hopf_differential,
    moment_report,
    trace_fourier,
)
from .curves import (
    BoundaryCurve,
    CurveFamily,
    Reparametrization,
    compose_boundary,
    corpus,
    curve_derivative,
    curve_from_spec,
    curve_sobolev_norm,
    curve_to_spec,
    equator,
    eval_curve,
    eval_reparam,
    great_circle,
    immersion_margin,
    latitude,
    simplicity_margin,
    three_point_project,
    transformed_curve,
    wavy,
)
from .disk import DiskGrid
from .errors import (
    DegeneracyError,
    ParameterError,
    PlateauError,
    SingularityError,
    SolverError,
    StagnationError,
)
from .harmonic import DiskMap, TensionReport, exact_geodesic_disk, flat_disk, harmonic_extend, tension_residual
from .linearization import (
    ConformalityMap,
    LinearizedOperator,
    SolverConfig,
    SpectrumReport,
    TangentVariation,
    assemble_operator,
    boundary_frame,
    closed_form_derivative_at_identity,
    directional_derivative_k,
    spectrum,
    variation_basis,
)
from .plateau import (
    PlateauProblem,
    SolutionRecord,
    SolutionSet,
    continuation_sweep,
    isolation_trials,
    multistart,
    newton_step,
    solve_adaptive,
    solve_plateau,
    truncated_area,
)
