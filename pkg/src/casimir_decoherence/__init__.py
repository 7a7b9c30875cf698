"""Radiation-pressure master equation for a mirror in the quantum vacuum."""
from .coefficients import (
    CoefficientSeries,
    CoefficientSet,
    QuadratureConfig,
    asymptotic_coefficients,
    coefficient_series,
    coefficients_at,
    d1_t,
    d2_t,
    delta_m2_t,
    gamma_t,
)
from .errors import ConvergenceError, DomainError, IntegrationError, PreconditionError, TruncationError
from .fockdyn import (
    DensityMatrix,
    cat_density,
    coherent_density,
    entropy_rate_check,
    evolve,
    linear_entropy,
    liouville_rhs,
)
from .gaussian import MomentState, entropy_production_avg, evolve_moments, moment_rhs, pointer_argmin
from .phase_space import (
    CatSpec,
    WignerGrid,
    cat_wigner_analytic,
    decoherence_time_fit,
    decoherence_time_formula,
    fringe_amplitude,
    mixture_distance_check,
    wigner_from_rho,
)
from .spectral import PhysicalParams, reflection_amplitude, spectral_density, symmetric_spectral_density, zeta

__version__ = "0.1.0"
