"""Wave equation on the expanding interval (0, ell*t) and its boundary null controls."""

from .characteristics import (
    CharacteristicProfile,
    ControlledCharacteristics,
    build_profile,
    evaluate_homogeneous,
    sharpness_scenario,
    snapshot,
    solve_controlled,
    state_energy,
)
from .control import BoundaryControl
from .diagnostics import (
    IdentityReport,
    ObservabilityReport,
    check_energy_identity,
    direct_inequality_check,
    energy,
    observability_report,
    run_identity_suite,
    trace_integral,
)
from .domain import DomainError, MovingDomain, literature_times, log_coordinate, make_domain
from .hum import (
    HumGramian,
    build_gramian,
    calibrate_duality,
    pairing_vector,
    synthesize_null_control,
    verify_control,
)
from .initialdata import InitialData, bump_profile, odd_extend
from .quadrature import QuadratureRule, integrate
from .spectral import (
    SpectralSolution,
    boundary_trace,
    compute_coefficients,
    evaluate,
    sharp_constant,
    synthesize,
)

__all__ = [
    "BoundaryControl", "CharacteristicProfile", "ControlledCharacteristics", "DomainError",
    "HumGramian", "IdentityReport", "InitialData", "MovingDomain", "ObservabilityReport",
    "QuadratureRule", "SpectralSolution", "boundary_trace", "build_gramian", "build_profile",
    "bump_profile", "calibrate_duality", "check_energy_identity", "compute_coefficients",
    "direct_inequality_check", "energy", "evaluate", "evaluate_homogeneous", "integrate",
    "literature_times", "log_coordinate", "make_domain", "observability_report", "odd_extend",
    "pairing_vector", "run_identity_suite", "sharp_constant", "sharpness_scenario", "snapshot",
    "solve_controlled", "state_energy", "synthesize", "synthesize_null_control", "trace_integral",
    "verify_control",
]
