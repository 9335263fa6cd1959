"""Periodic mild solutions of impulsive delay evolution equations.

Semigroup-based integration (exponential time differencing on a
diagonal spectral operator), construction of omega-periodic orbits by
Picard iteration of the periodic solution operator, hypothesis
certification, and exponential-stability experiments.
"""
from . import _kernels
from .analysis import (
    DecayRecord,
    HypothesisReport,
    build_report,
    decay_experiment,
    gronwall_bound,
    hypothesis_numbers,
)
from .core import (
    AffineDelayForm,
    HistorySegment,
    ImpulseSchedule,
    Nonlinearity,
    SpectralOperator,
    Trajectory,
    growth_exponent,
    history_norm,
    inv_I_minus_T_omega,
    semigroup_apply,
    state_norm,
    windowed_trapz,
)
from .config import RunConfig, emit_config, parse_config
from .errors import (
    ConfigurationError,
    ImpulseDDEError,
    InternalConsistencyError,
    InvalidInputError,
    NonConvergenceError,
    NotExponentiallyStableError,
    NumericFailureError,
    PipelineError,
    UnsupportedConfigurationError,
)
from .heat import HeatConfig, PipelineReport, build_heat_problem, run_heat_pipeline
from .integrate import IntegratorConfig, ProblemSpec, history_at, integrate_ivp
from .periodic import (
    PeriodicSolution,
    linear_periodic,
    picard_periodic,
    poincare_iterate,
)

__version__ = "0.1.0"

kernel_backend = _kernels.BACKEND
