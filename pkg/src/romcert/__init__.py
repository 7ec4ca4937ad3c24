"""Balanced truncation / singular perturbation reduction of SISO LTI systems
with certified finite-time L2 error bounds."""

from .bounds import (BoundReport, ErrorGramian, ErrorSystem, FourierApproximation,
                     OfflineBound, SteadyStateData, aposteriori_bound, build_error_system,
                     error_gramian, fourier_approximation, initial_condition_bound,
                     offline_precompute, reduction_error, remainder_norm, steady_state_moments)
from .linalg import schur, shifted_solve, solve_log, solve_lyapunov, solve_sylvester
from .lti import (SampledSignal, StateSpaceModel, TimeGrid, l2_norm, output_l2_norm, simulate,
                  spectral_abscissa)
from .reduction import (BalancedRealization, GramianPair, ReducedModel, balance, gramians,
                        reduce, truncate_bt, truncate_spa)

__version__ = "0.1.0"

__all__ = [
    "StateSpaceModel", "TimeGrid", "SampledSignal", "simulate", "l2_norm", "output_l2_norm",
    "spectral_abscissa",
    "schur", "solve_lyapunov", "solve_sylvester", "shifted_solve", "solve_log",
    "GramianPair", "BalancedRealization", "ReducedModel", "gramians", "balance",
    "truncate_bt", "truncate_spa", "reduce",
    "ErrorSystem", "ErrorGramian", "FourierApproximation", "SteadyStateData", "BoundReport",
    "OfflineBound", "build_error_system", "error_gramian", "initial_condition_bound",
    "fourier_approximation", "remainder_norm", "steady_state_moments", "aposteriori_bound",
    "offline_precompute", "reduction_error",
]
