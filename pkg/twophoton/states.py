#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Biphoton light states for the TWOPHOTON project.

This module builds the catalog of two-photon states as spectral objects on a
mode comb: the uncorrelated pair of single-photon wavepackets, the atomic
cascade pair and the parametric down-conversion pair, together with the two
separable transforms (keep the diagonal of the density matrix, or keep only
the single-photon marginals) and the coherent-state lift.

Pure states keep an analytic amplitude and a normalization constant computed
numerically on their construction grid, so the comb sum of |c|^2 is one.
"""

import math
import logging
from enum import Enum
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Any, Optional, Tuple, Callable

import numpy as np
from scipy.special import erfc

from twophoton.core import (
    TWO_PI, DEFAULT_SETTINGS, EngineSettings, SourceParams, FrequencyGrid,
    ConfigError, GridResolutionError, BudgetExceededError, StateKindError,
    make_grid,
)
from twophoton.utils.numerics import blocked_sum, row_blocks

logger = logging.getLogger(__name__)

AmplitudeFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class StateKind(str, Enum):
    """Kinds of biphoton states."""
    UNCORRELATED_PURE = 'uncorrelated_pure'
    CASCADE_PURE = 'cascade_pure'
    SPDC_PURE = 'spdc_pure'
    CUSTOM_PURE = 'custom_pure'
    DIAGONAL_MIXED = 'diagonal_mixed'
    FACTORIZED_MIXED = 'factorized_mixed'
    COHERENT_LIFT = 'coherent_lift'


PURE_KINDS = frozenset({
    StateKind.UNCORRELATED_PURE,
    StateKind.CASCADE_PURE,
    StateKind.SPDC_PURE,
    StateKind.CUSTOM_PURE,
})


def _uncorrelated_raw(source: SourceParams, wk: np.ndarray, wq: np.ndarray) -> np.ndarray:
    return 1.0 / ((wk - source.omega_alpha + 1j * source.width_alpha)
                  * (wq - source.omega_beta + 1j * source.width_beta))


def _cascade_raw(source: SourceParams, wk: np.ndarray, wq: np.ndarray) -> np.ndarray:
    detuning = wk + wq - source.total_frequency
    return 1.0 / ((detuning + 1j * source.width_alpha)
                  * (wq - source.omega_beta + 1j * source.width_beta))


def _spdc_raw(source: SourceParams, wk: np.ndarray, wq: np.ndarray) -> np.ndarray:
    sigma_a, sigma_b = source.width_alpha, source.width_beta
    detuning = wk + wq - source.total_frequency
    pump = np.exp(-detuning ** 2 / (2.0 * sigma_a ** 2) + 1j * detuning * source.t0)
    direct = np.exp(-((wk - source.omega_alpha) ** 2 + (wq - source.omega_beta) ** 2) / (2.0 * sigma_b ** 2))
    swapped = np.exp(-((wk - source.omega_beta) ** 2 + (wq - source.omega_alpha) ** 2) / (2.0 * sigma_b ** 2))
    return pump * (direct + np.exp(1j * source.phase) * swapped)


def uncorrelated_prefactor(source: SourceParams, T: float) -> float:
    """Analytic product g_alpha*g_beta of the uncorrelated (and cascade) amplitude."""
    return 2.0 * math.sqrt(source.width_alpha * source.width_beta) / T


def spdc_norm_constant(source: SourceParams, T: float) -> float:
    """Analytic normalization constant of the down-conversion amplitude."""
    sigma_a, sigma_b = source.width_alpha, source.width_beta
    area = TWO_PI * sigma_a * sigma_b ** 2 / math.sqrt(sigma_a ** 2 + 2.0 * sigma_b ** 2)
    return math.sqrt(1.0 / ((T / TWO_PI) ** 2 * area))


def spdc_zeta(source: SourceParams) -> float:
    """Width factor of the down-conversion single-photon marginal."""
    sigma_a2, sigma_b2 = source.width_alpha ** 2, source.width_beta ** 2
    return (sigma_a2 + 2.0 * sigma_b2) / (sigma_a2 + sigma_b2)


def closed_marginal(kind: StateKind, source: SourceParams, T: float, axis: int,
                    omegas: np.ndarray) -> np.ndarray:
    """Continuum single-photon marginal of a catalog state, in comb weights.

    Args:
        kind: A catalog pure kind
        source: Emitter parameters
        T: Quantization time
        axis: 0 for the first photon, 1 for the second
        omegas: Frequencies

    Returns:
        Marginal weights at the given frequencies
    """
    omegas = np.asarray(omegas, dtype=float)
    gamma_a, gamma_b = source.width_alpha, source.width_beta

    if kind == StateKind.UNCORRELATED_PURE:
        center, width = (source.omega_alpha, gamma_a) if axis == 0 else (source.omega_beta, gamma_b)
        return (2.0 / T) * width / ((omegas - center) ** 2 + width ** 2)

    if kind == StateKind.CASCADE_PURE:
        if axis == 0:
            width = gamma_a + gamma_b
            return (2.0 / T) * width / ((omegas - source.omega_alpha) ** 2 + width ** 2)
        return (2.0 / T) * gamma_b / ((omegas - source.omega_beta) ** 2 + gamma_b ** 2)

    if kind == StateKind.SPDC_PURE:
        zeta = spdc_zeta(source)
        sigma_b2 = source.width_beta ** 2
        profile = (np.exp(-zeta * (omegas - source.omega_alpha) ** 2 / sigma_b2)
                   + np.exp(-zeta * (omegas - source.omega_beta) ** 2 / sigma_b2))
        return math.sqrt(math.pi * zeta) / (T * source.width_beta) * profile

    raise StateKindError(f"No closed-form marginal for kind '{kind.value}'")


def _window_edges(center: float, grid: FrequencyGrid) -> Tuple[Optional[float], Optional[float]]:
    for start, stop in grid.windows:
        low = grid.omega_min + start * grid.spacing
        high = grid.omega_min + (stop - 1) * grid.spacing
        if low <= center <= high:
            return low, high
    return None, None


def _lorentzian_tail(center: float, width: float, grid: FrequencyGrid) -> float:
    low, high = _window_edges(center, grid)
    if low is None:
        return 1.0
    return (math.pi - math.atan((center - low) / width) - math.atan((high - center) / width)) / math.pi


def _gaussian_tail(center: float, std: float, grid: FrequencyGrid) -> float:
    low, high = _window_edges(center, grid)
    if low is None:
        return 1.0
    scale = math.sqrt(2.0) * std
    return 0.5 * float(erfc((center - low) / scale) + erfc((high - center) / scale))


@dataclass(frozen=True, eq=False)
class BiphotonState:
    """A two-photon state evaluated on a mode comb.

    Attributes:
        kind: State kind
        grid: Construction grid (its quantization time is the state's T)
        source: Emitter parameters, None for custom amplitudes without one
        raw_amplitude: Unnormalized amplitude c(wk, wq) for pure kinds
        norm_const: Factor making the comb sum of |c|^2 equal to one
        parent: Source pure state for transforms and lifts
        alpha: Coherent amplitude of a lift
        switched_on: Whether the pulse lies inside [0, T]; None when unknown
        warnings: Regime warnings collected at construction
        tag: Human-readable provenance
        settings: Budgets used for blocked sums
    """

    kind: StateKind
    grid: FrequencyGrid
    source: Optional[SourceParams] = None
    raw_amplitude: Optional[AmplitudeFunction] = field(default=None, repr=False)
    norm_const: float = 1.0
    parent: Optional['BiphotonState'] = field(default=None, repr=False)
    alpha: complex = 1.0
    switched_on: Optional[bool] = None
    warnings: Tuple[str, ...] = ()
    tag: str = ''
    settings: EngineSettings = field(default=DEFAULT_SETTINGS, repr=False)

    @property
    def T(self) -> float:
        return self.grid.mode_density_time

    @property
    def is_pure(self) -> bool:
        return self.kind in PURE_KINDS

    @property
    def base(self) -> 'BiphotonState':
        """The lifted state for a coherent lift, the state itself otherwise."""
        return self.parent if self.kind == StateKind.COHERENT_LIFT else self

    @property
    def pure_root(self) -> 'BiphotonState':
        return self if self.is_pure else self.parent.pure_root

    @property
    def lift_factor(self) -> float:
        if self.kind == StateKind.COHERENT_LIFT:
            return abs(self.alpha) ** 4
        return 1.0

    def amplitude(self, wk: np.ndarray, wq: np.ndarray) -> np.ndarray:
        """Normalized joint spectral amplitude; pure kinds only."""
        if not self.is_pure:
            raise StateKindError(f"State of kind '{self.kind.value}' has no joint amplitude")
        return self.norm_const * self.raw_amplitude(np.asarray(wk, dtype=float), np.asarray(wq, dtype=float))

    def weights(self, wk: np.ndarray, wq: np.ndarray) -> np.ndarray:
        """Joint spectral weight: |c|^2, p, or the product of marginals.

        A coherent lift returns |alpha|^4 times the weights of its base.
        """
        if self.is_pure:
            values = self.amplitude(wk, wq)
            return values.real ** 2 + values.imag ** 2
        if self.kind == StateKind.DIAGONAL_MIXED:
            return self.parent.weights(wk, wq)
        if self.kind == StateKind.FACTORIZED_MIXED:
            return self.marginal(0, wk) * self.marginal(1, wq)
        return self.lift_factor * self.parent.weights(wk, wq)

    def marginal(self, axis: int, omegas: np.ndarray) -> np.ndarray:
        """Single-photon marginal, the comb sum of |c|^2 over the other photon.

        Every state derived from the same pure state shares the same marginal.
        """
        if axis not in (0, 1):
            raise ValueError(f"axis must be 0 or 1, got {axis}")
        root = self.pure_root
        omegas = np.asarray(omegas, dtype=float)
        unique, inverse = np.unique(omegas.ravel(), return_inverse=True)
        others = root.grid.frequencies
        values = np.empty(unique.size)
        for start, stop in row_blocks(unique.size, others.size, self.settings.block_elements):
            rows = unique[start:stop, None]
            if axis == 0:
                block = root.amplitude(rows, others[None, :])
            else:
                block = root.amplitude(others[None, :], rows)
            values[start:stop] = np.sum(block.real ** 2 + block.imag ** 2, axis=1)
        return values[inverse].reshape(omegas.shape)

    def comb_weight(self, grid: FrequencyGrid) -> float:
        """Weight of one comb point of ``grid`` per axis, in units of this state's comb."""
        return grid.spacing * self.T / TWO_PI

    def norm_check(self, grid: Optional[FrequencyGrid] = None) -> float:
        """Discrete normalization sum of the state on a grid (one for a normalized state)."""
        grid = grid or self.grid
        if self.kind == StateKind.COHERENT_LIFT:
            return self.parent.norm_check(grid)

        freqs = grid.frequencies
        weight = self.comb_weight(grid) ** 2
        if self.kind == StateKind.FACTORIZED_MIXED:
            return float(np.sum(self.marginal(0, freqs)) * np.sum(self.marginal(1, freqs)) * weight)

        _check_pair_budget(freqs.size, self.settings)

        def block_sum(start: int, stop: int) -> float:
            return float(np.sum(self.weights(freqs[start:stop, None], freqs[None, :])))

        total = blocked_sum(block_sum, freqs.size, freqs.size,
                            self.settings.block_elements, self.settings.threads)
        return float(total) * weight

    def tail_mass_bound(self, grid: Optional[FrequencyGrid] = None) -> float:
        """Estimated fraction of the continuum spectral mass outside the grid windows."""
        grid = grid or self.grid
        root = self.pure_root
        source = root.source
        if root.kind == StateKind.UNCORRELATED_PURE:
            return (_lorentzian_tail(source.omega_alpha, source.width_alpha, grid)
                    + _lorentzian_tail(source.omega_beta, source.width_beta, grid))
        if root.kind == StateKind.CASCADE_PURE:
            return (_lorentzian_tail(source.omega_alpha, source.width_alpha + source.width_beta, grid)
                    + _lorentzian_tail(source.omega_beta, source.width_beta, grid))
        if root.kind == StateKind.SPDC_PURE:
            std = source.width_beta / math.sqrt(2.0 * spdc_zeta(source))
            per_axis = 0.5 * (_gaussian_tail(source.omega_alpha, std, grid)
                              + _gaussian_tail(source.omega_beta, std, grid))
            return 2.0 * per_axis
        return 0.0

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'kind': self.kind.value,
            'tag': self.tag,
            'quantization_time': self.T,
            'norm_const': self.norm_const,
            'switched_on': self.switched_on,
            'warnings': list(self.warnings),
        }
        if self.source is not None:
            data['source'] = self.source.to_dict()
        if self.kind == StateKind.COHERENT_LIFT:
            data['alpha'] = [self.alpha.real, self.alpha.imag]
        return data


def _check_pair_budget(n_points: int, settings: EngineSettings) -> None:
    if float(n_points) ** 2 > settings.max_pair_evaluations:
        raise BudgetExceededError(
            f"A {n_points}x{n_points} double sum exceeds the budget of "
            f"{settings.max_pair_evaluations:.3g} evaluations"
        )


def _resolve_grid(source: Optional[SourceParams], T: Optional[float], grid: Optional[FrequencyGrid],
                  coverage: Optional[float], settings: EngineSettings) -> FrequencyGrid:
    if grid is None:
        if T is None:
            raise ConfigError("Either a quantization time T or a grid is required")
        return make_grid(source, None, T, coverage, settings)

    if T is not None and abs(grid.mode_density_time - T) > 1e-9 * T:
        raise ConfigError(f"Grid quantization time {grid.mode_density_time} does not match T = {T}")
    if source is not None:
        limit = source.min_width / settings.resolution_factor
        if grid.spacing > limit * (1.0 + 1e-9):
            raise GridResolutionError(
                f"Grid under-resolved: spacing {grid.spacing:.6g} exceeds {limit:.6g}"
            )
    return grid


def _normalization(raw: AmplitudeFunction, grid: FrequencyGrid, settings: EngineSettings,
                   factors: Optional[Tuple[Callable, Callable]] = None) -> float:
    freqs = grid.frequencies
    if factors is not None:
        first, second = (np.abs(f(freqs)) ** 2 for f in factors)
        total = float(np.sum(first)) * float(np.sum(second))
    else:
        _check_pair_budget(freqs.size, settings)

        def block_sum(start: int, stop: int) -> float:
            values = raw(freqs[start:stop, None], freqs[None, :])
            return float(np.sum(values.real ** 2 + values.imag ** 2))

        total = float(blocked_sum(block_sum, freqs.size, freqs.size,
                                  settings.block_elements, settings.threads))

    if not (math.isfinite(total) and total > 0.0):
        raise ConfigError("State has no spectral weight on its grid")
    return 1.0 / math.sqrt(total)


def make_uncorrelated(source: SourceParams, T: Optional[float] = None,
                      grid: Optional[FrequencyGrid] = None, coverage: Optional[float] = None,
                      settings: EngineSettings = DEFAULT_SETTINGS) -> BiphotonState:
    """Two independent Lorentzian single-photon wavepackets.

    Args:
        source: Central frequencies and widths gamma_alpha, gamma_beta
        T: Quantization time (optional when a grid is given)
        grid: Construction grid (default: make_grid around the source)
        coverage: Grid coverage when the grid is built here
        settings: Engine settings

    Returns:
        Normalized pure state
    """
    grid = _resolve_grid(source, T, grid, coverage, settings)
    factors = (
        lambda w: 1.0 / (w - source.omega_alpha + 1j * source.width_alpha),
        lambda w: 1.0 / (w - source.omega_beta + 1j * source.width_beta),
    )
    raw = partial(_uncorrelated_raw, source)
    norm = _normalization(raw, grid, settings, factors)
    logger.debug(f"Uncorrelated state normalized on {grid.n_active} points per axis")
    return BiphotonState(kind=StateKind.UNCORRELATED_PURE, grid=grid, source=source,
                         raw_amplitude=raw, norm_const=norm, switched_on=True,
                         tag='uncorrelated', settings=settings)


def make_cascade(source: SourceParams, T: Optional[float] = None,
                 grid: Optional[FrequencyGrid] = None, coverage: Optional[float] = None,
                 settings: EngineSettings = DEFAULT_SETTINGS) -> BiphotonState:
    """Photon pair emitted by a three-level atomic cascade excited at t = 0.

    The amplitude has its resonance in the total frequency (width
    gamma_alpha) and in the second photon (width gamma_beta), so the pair is
    anti-correlated in frequency and time-ordered.
    """
    grid = _resolve_grid(source, T, grid, coverage, settings)
    warnings: List[str] = []
    if source.width_alpha >= source.width_beta:
        warnings.append("cascade widths do not satisfy gamma_alpha < gamma_beta")
        logger.warning(f"Cascade state with gamma_alpha={source.width_alpha} >= gamma_beta={source.width_beta}")

    raw = partial(_cascade_raw, source)
    norm = _normalization(raw, grid, settings)
    logger.debug(f"Cascade state normalized on {grid.n_active} points per axis")
    return BiphotonState(kind=StateKind.CASCADE_PURE, grid=grid, source=source,
                         raw_amplitude=raw, norm_const=norm, switched_on=True,
                         warnings=tuple(warnings), tag='cascade', settings=settings)


def spdc_pulse_margin(source: SourceParams) -> float:
    """Time a down-conversion pulse needs on each side of its center."""
    return 1.0 / source.width_alpha + 1.0 / source.width_beta


def make_spdc(source: SourceParams, T: Optional[float] = None,
              grid: Optional[FrequencyGrid] = None, coverage: Optional[float] = None,
              settings: EngineSettings = DEFAULT_SETTINGS) -> BiphotonState:
    """Photon pair from pulsed parametric down-conversion (Gaussian model).

    The pump envelope has width sigma_alpha and is centered at t0 (T/2 when
    the source leaves it unset); the phase-matching function has width
    sigma_beta. The two components carry the relative phase source.phase.
    """
    grid = _resolve_grid(source, T, grid, coverage, settings)
    T = grid.mode_density_time
    if source.t0 is None:
        source = source.with_changes(t0=0.5 * T)

    margin = spdc_pulse_margin(source)
    switched_on = source.t0 >= margin and T - source.t0 >= margin
    warnings: List[str] = []
    if not switched_on:
        warnings.append(f"pulse centered at t0={source.t0:g} is not contained in [0, T={T:g}]")
        logger.warning(f"SPDC pulse at t0={source.t0:g} not contained in [0, {T:g}]")

    raw = partial(_spdc_raw, source)
    norm = _normalization(raw, grid, settings)
    logger.debug(f"SPDC state normalized on {grid.n_active} points per axis")
    return BiphotonState(kind=StateKind.SPDC_PURE, grid=grid, source=source,
                         raw_amplitude=raw, norm_const=norm, switched_on=switched_on,
                         warnings=tuple(warnings), tag='spdc', settings=settings)


def make_custom(amplitude: AmplitudeFunction, grid: FrequencyGrid,
                source: Optional[SourceParams] = None, normalize: bool = True,
                switched_on: Optional[bool] = None, tag: str = 'custom',
                settings: EngineSettings = DEFAULT_SETTINGS) -> BiphotonState:
    """Pure state from a user-supplied joint amplitude c(wk, wq).

    Args:
        amplitude: Vectorized function of two broadcastable frequency arrays
        grid: Construction grid
        source: Optional emitter parameters (used for resolution checks)
        normalize: Rescale so the comb sum of |c|^2 is one
        switched_on: Whether the pulse is known to lie inside [0, T]
        tag: Provenance label
        settings: Engine settings
    """
    grid = _resolve_grid(source, None, grid, None, settings)
    norm = _normalization(amplitude, grid, settings) if normalize else 1.0
    return BiphotonState(kind=StateKind.CUSTOM_PURE, grid=grid, source=source,
                         raw_amplitude=amplitude, norm_const=norm, switched_on=switched_on,
                         tag=tag, settings=settings)


def _require_pure(state: BiphotonState, operation: str) -> None:
    if not state.is_pure:
        raise StateKindError(f"{operation} needs a pure state, got '{state.kind.value}'")


def disentangle(state: BiphotonState) -> BiphotonState:
    """Keep the diagonal of the density matrix: p(wk, wq) = |c(wk, wq)|^2."""
    _require_pure(state, 'disentangle')
    return BiphotonState(kind=StateKind.DIAGONAL_MIXED, grid=state.grid, source=state.source,
                         parent=state, switched_on=state.switched_on, warnings=state.warnings,
                         tag=f"disentangle({state.tag})", settings=state.settings)


def factorize(state: BiphotonState) -> BiphotonState:
    """Keep only the single-photon marginals of a pure state."""
    _require_pure(state, 'factorize')
    return BiphotonState(kind=StateKind.FACTORIZED_MIXED, grid=state.grid, source=state.source,
                         parent=state, switched_on=state.switched_on, warnings=state.warnings,
                         tag=f"factorize({state.tag})", settings=state.settings)


def coherent_lift(state: BiphotonState, alpha: complex) -> BiphotonState:
    """Two-mode coherent superposition built on a pure biphoton state.

    Probabilities and correlation maps of the lift are |alpha|^4 times those
    of the base state; the scaling is reliable only for |alpha| >> 1.
    """
    _require_pure(state, 'coherent_lift')
    alpha = complex(alpha)
    warnings = list(state.warnings)
    if abs(alpha) ** 2 < state.settings.regime_threshold:
        warnings.append(f"coherent lift with |alpha|={abs(alpha):.3g} is outside the |alpha| >> 1 regime")
        logger.warning(f"Coherent lift with |alpha|={abs(alpha):.3g}; |alpha|^4 scaling assumes |alpha| >> 1")
    return BiphotonState(kind=StateKind.COHERENT_LIFT, grid=state.grid, source=state.source,
                         parent=state, alpha=alpha, switched_on=state.switched_on,
                         warnings=tuple(warnings), tag=f"coherent_lift({state.tag})",
                         settings=state.settings)


def apply_transforms(state: BiphotonState, transforms: List[Dict[str, Any]]) -> BiphotonState:
    """Apply a declared list of transforms in order."""
    for transform in transforms:
        kind = transform.get('type', 'none')
        if kind == 'none':
            continue
        if kind == 'disentangle':
            state = disentangle(state)
        elif kind == 'factorize':
            state = factorize(state)
        elif kind == 'coherent_lift':
            alpha = transform.get('alpha', 1.0)
            if isinstance(alpha, (list, tuple)):
                alpha = complex(alpha[0], alpha[1])
            state = coherent_lift(state, alpha)
        else:
            raise ConfigError(f"Unknown transform '{kind}'")
    return state
