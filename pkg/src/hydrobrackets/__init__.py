"""Nonlocal hydrodynamic-type brackets: exact verification suites, the
canonical compatible pair and its hierarchy, and a pseudospectral simulator.
"""

from .bracketcore import (
    GeometryReport,
    HydroBracket,
    NonSquareCurvature,
    Tail,
    Violation,
    ViolationReport,
    check_ferapontov_conditions,
    check_poisson,
    classify_geometry,
    mf_bracket,
    sample_points,
)
from .compat import (
    CanonicalData,
    ConstantBracket,
    LiouvilleResult,
    NonConstantGauge,
    NotPoisson,
    PencilWeights,
    PotentialChain,
    build_pencil,
    canonical_bracket,
    check_compatibility,
    check_integrability,
    check_special_liouville,
    reconstruct_potentials,
)
from .exactalg import (
    Jet,
    NotExact,
    Poly,
    SingularMetric,
    eval_jet,
    gradient,
    matrix_inverse_jet,
    one_form_potential,
)
from .hierarchy import (
    FlowSystem,
    HamiltonianDensity,
    NotIntegrable,
    casimir_momentum_involution,
    flow1,
    variational_derivative,
    verify_bihamiltonian,
)
from .simulator import (
    ConservationSeries,
    FieldState,
    Grid,
    NonFinite,
    NonZeroMean,
    SimulationResult,
    apply_p1,
    bracket_quadrature,
    flow_field,
    fourier_state,
    integrate,
    recursion_apply,
    spectral_dx,
    spectral_dx_inv,
)

__version__ = "0.1.0"
