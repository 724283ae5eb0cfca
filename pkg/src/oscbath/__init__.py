"""Collisional thermostat dynamics for linear oscillator networks.

A simulator and numerical-analysis toolkit for networks of coupled harmonic
oscillators in which a single particle exchanges momentum with an external
medium at random times. The package provides the exact free flow, the
collision jump maps, the piecewise-deterministic simulator, the closed
moment ODEs with their Gibbs fixed point, stationarity diagnostics, and the
Krylov-subspace completeness analysis that controls whether the damping
reaches the whole phase space.
"""

from .collisions import (
    ContractiveAffine,
    OneDimElastic,
    TwoDimBall,
    apply_jump,
    two_ball_pair_update,
    verify_contraction,
)
from .covariance import (
    MomentParams,
    beta_from_params,
    covariance_rhs,
    gibbs_covariance,
    integrate_covariance,
    lyapunov_functional,
    mean_dynamics,
)
from .dissipative import DissipativeReport, analyze, l0_invariance_check
from .errors import ConfigError, NumericalAbort
from .laws import (
    Exponential,
    GammaLaw,
    GaussianVelocity,
    IsotropicGaussianVector,
    TwoPointVelocity,
    UniformAngle,
    UniformPositive,
    UniformSymmetricVelocity,
)
from .network import (
    OscillatorNetwork,
    PhaseState,
    chain_stiffness,
    energy,
    flow_matrix,
    generator_matrix,
    propagate,
)
from .pdmp import (
    EmbeddedChain,
    EventSchedule,
    Trajectory,
    drift_estimate,
    empirical_covariance,
    jacobian_rank_probe,
    simulate_continuous,
    simulate_embedded,
    time_average,
)
from .spectral import (
    check_rational_independence,
    decompose,
    krylov_basis,
    random_pd_matrix,
)
from .stationarity import gibbs_sampler, one_step_moment_shift, stationarity_residual

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractiveAffine",
    "DissipativeReport",
    "EmbeddedChain",
    "EventSchedule",
    "Exponential",
    "GammaLaw",
    "GaussianVelocity",
    "IsotropicGaussianVector",
    "MomentParams",
    "NumericalAbort",
    "OneDimElastic",
    "OscillatorNetwork",
    "PhaseState",
    "Trajectory",
    "TwoDimBall",
    "TwoPointVelocity",
    "UniformAngle",
    "UniformPositive",
    "UniformSymmetricVelocity",
    "analyze",
    "apply_jump",
    "beta_from_params",
    "chain_stiffness",
    "check_rational_independence",
    "covariance_rhs",
    "decompose",
    "drift_estimate",
    "empirical_covariance",
    "energy",
    "flow_matrix",
    "generator_matrix",
    "gibbs_covariance",
    "gibbs_sampler",
    "integrate_covariance",
    "jacobian_rank_probe",
    "krylov_basis",
    "l0_invariance_check",
    "lyapunov_functional",
    "mean_dynamics",
    "one_step_moment_shift",
    "propagate",
    "random_pd_matrix",
    "simulate_continuous",
    "simulate_embedded",
    "stationarity_residual",
    "time_average",
    "two_ball_pair_update",
    "verify_contraction",
]
