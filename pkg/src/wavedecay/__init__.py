"""wavedecay: a numerical laboratory for the energy decay of waves with
localized (linear or nonlinear) damping and an external force.

The package simulates the damped forced wave equation on an interval or a
rectangle, estimates observability constants from probe ensembles, integrates
the forced comparison ODEs that bound the energy, classifies the decay rate
of the bound, and checks measured energy curves against the envelopes."""

from .geometry import (Grid, DamperProfile, ControlTime, build_damper,
                       control_time_1d, ray_traced_control_time)
from .damping import DampingLaw, HFunction, make_law, make_h, implicit_damp_solve
from .forcing import (ForcingTerm, GammaProfile, ConjugatePair, gamma_linear,
                      gamma_nonlinear, conjugate, window_integral,
                      rho_zero, rho_exponential, rho_polynomial, rho_table)
from .wave_solver import WaveState, EnergyTrace, energy, step, run, cfl_limit
from .decay_bounds import (OdeProblem, BoundCurve, DecayClassification,
                           DominanceResult, LinearRateVerdict, solve_ode,
                           envelope, discrete_iteration, classify,
                           dominance_check, linear_rate_table,
                           power_law_minorant)
from .fitting import FitResult, fit_decay
from .observability import (EnsembleConfig, ObservabilityReport,
                            estimate_linear_constant, estimate_nonlinear_constant,
                            ensemble_traces, ratios_from_trace)
from .harness import (Scenario, ConfigError, PipelineError, VerificationVerdict,
                      load_scenario, run_experiment)

__version__ = "0.1.0"

__all__ = [
    "Grid", "DamperProfile", "ControlTime", "build_damper", "control_time_1d",
    "ray_traced_control_time",
    "DampingLaw", "HFunction", "make_law", "make_h", "implicit_damp_solve",
    "ForcingTerm", "GammaProfile", "ConjugatePair", "gamma_linear",
    "gamma_nonlinear", "conjugate", "window_integral",
    "rho_zero", "rho_exponential", "rho_polynomial", "rho_table",
    "WaveState", "EnergyTrace", "energy", "step", "run", "cfl_limit",
    "OdeProblem", "BoundCurve", "DecayClassification", "DominanceResult",
    "LinearRateVerdict", "solve_ode", "envelope", "discrete_iteration",
    "classify", "dominance_check", "linear_rate_table", "power_law_minorant",
    "FitResult", "fit_decay",
    "EnsembleConfig", "ObservabilityReport", "estimate_linear_constant",
    "estimate_nonlinear_constant", "ensemble_traces", "ratios_from_trace",
    "Scenario", "ConfigError", "PipelineError", "VerificationVerdict",
    "load_scenario", "run_experiment",
    "__version__",
]
