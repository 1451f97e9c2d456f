"""Numerical laboratory for KPP fronts in periodic and close-to-periodic media."""
from .coefficients import (CloseToPeriodic, GeneralPeriodic, PeriodicField, PeriodicLogistic,
                           ReactionModel, check_kpp, evaluate_f, linearization)
from .config import ConfigError, RunConfig, default_config, load_config, parse_config
from .diagnostics import (CrossingSeries, ShiftSeries, half_line_distance, hitting_times,
                          intersection_count, is_steeper, level_crossing, log_corrected_fit,
                          optimal_shift, shift_estimate, speed_estimate)
from .experiments import (ExperimentReport, comparison_suite, steepness_suite,
                          theorem1_periodic, theorem2_ctp_spreading, theorem3_ctp_profile)
from .floquet import (DispersionData, EigenPair, degeneracy_exponent, lambda_roots,
                      minimal_speed, principal_eigen)
from .fronts import FrontProfile, compute_front, periodicity_residual, reanchor, tail_fit
from .solver import (Grid, SchemeConfig, SolutionState, run, stationary_upper, step)

__version__ = "0.1.0"
