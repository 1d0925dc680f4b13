"""TWOPHOTON - two-photon two-atom excitation by biphoton states.

This package computes the probability that a photon pair excites two
separate atoms whose transition frequencies only sum to the pair's total
frequency. It compares entangled pure states (atomic cascade, parametric
down-conversion) with their correlated-separable and factorized
counterparts, evaluates the second-order cross correlation maps that
explain the difference, and certifies the numerical approximations the
comparison rests on.
"""

__version__ = '0.1.0'

from twophoton.core import (
    AtomPair, SourceParams, Detunings, FrequencyGrid, ProbabilityResult, EngineSettings,
    DEFAULT_SETTINGS, TwoPhotonError, ConfigError, GridResolutionError, BudgetExceededError,
    RegimeViolationError, StateKindError, CausalityError, CorrelationStructureError,
    SpectralWeightError, make_grid, regime_flags,
)
from twophoton.states import (
    BiphotonState, StateKind, make_uncorrelated, make_cascade, make_spdc, make_custom,
    disentangle, factorize, coherent_lift,
)
from twophoton.engine import prob_quadrature, prob_delta_limit, enhancement_gp, enhancement_g12
from twophoton.correlations import CorrelationMap, g2_time, g2_freq, correlation_widths, emit_figure_grid
from twophoton.validation import delta_check, energy_flow, comparison_certificate
