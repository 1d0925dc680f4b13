#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Cross second-order correlation functions for the TWOPHOTON project.

This module evaluates the cross correlation g2x of the two photons of a
biphoton state, in time (the squared two-time Fourier transform of the joint
amplitude) and in frequency (the joint spectral weight), and measures the
widths of the correlation ridges that explain the enhancement effect.

Time maps use the convention values[i, j] = g2x(t=axis2[j], tau=axis1[i]),
where tau is the detection time of the first photon and t that of the
second. Frequency maps use values[i, j] = g2x(axis1[i], axis2[j]).
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.signal import peak_widths

from twophoton.core import (
    TWO_PI, DEFAULT_SETTINGS, EngineSettings, ConfigError, BudgetExceededError,
    StateKindError, CorrelationStructureError,
)
from twophoton.states import BiphotonState, StateKind
from twophoton.utils.numerics import map_blocks, row_blocks

logger = logging.getLogger(__name__)

TIME = 'time'
FREQ = 'freq'


@dataclass(frozen=True, eq=False)
class CorrelationMap:
    """A sampled correlation function on a rectangular grid.

    Attributes:
        axis1: First coordinate (tau or omega_k)
        axis2: Second coordinate (t or omega_q)
        values: Non-negative matrix of shape (len(axis1), len(axis2))
        kind: 'time' or 'freq'
        state_tag: Provenance of the state
        normalization_tag: Units of the values
        method: 'closed', 'numeric' or 'exact'
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    kind: str
    state_tag: str
    normalization_tag: str
    method: str = 'numeric'

    def __post_init__(self):
        if self.values.shape != (self.axis1.size, self.axis2.size):
            raise ValueError(f"Map values have shape {self.values.shape}, axes give "
                             f"({self.axis1.size}, {self.axis2.size})")
        if np.any(self.values < 0):
            raise ValueError("Correlation values must be non-negative")

    def to_dataframe(self) -> pd.DataFrame:
        """Row-major long table with columns axis1, axis2, value."""
        first, second = np.meshgrid(self.axis1, self.axis2, indexing='ij')
        return pd.DataFrame({
            'axis1': first.ravel(),
            'axis2': second.ravel(),
            'value': self.values.ravel(),
        })

    def to_dict(self) -> Dict[str, Any]:
        return {
            'state_tag': self.state_tag,
            'kind': self.kind,
            'normalization_tag': self.normalization_tag,
            'method': self.method,
            'axis1': self.axis1.tolist(),
            'axis2': self.axis2.tolist(),
            'values': self.values.tolist(),
        }


def _time_tag(state: BiphotonState) -> str:
    tag = 'comb sum |sum c exp(-i w tau - i w\' t)|^2, mean over [0,T]^2 equals 1'
    return tag + (' x |alpha|^4' if state.kind == StateKind.COHERENT_LIFT else '')


def _freq_tag(state: BiphotonState) -> str:
    tag = 'comb weight, sum over the comb equals 1 (density in units of (2pi/T)^2)'
    return tag + (' x |alpha|^4' if state.kind == StateKind.COHERENT_LIFT else '')


def g2_time_map(state: BiphotonState, taus: np.ndarray, ts: np.ndarray,
                settings: Optional[EngineSettings] = None) -> np.ndarray:
    """Numeric time correlation by direct double Fourier sum on the state's comb.

    Mixed states have no temporal structure: their map is the constant
    total weight. A coherent lift is |alpha|^4 times its base.
    """
    settings = settings or state.settings
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    if state.kind == StateKind.COHERENT_LIFT:
        return state.lift_factor * g2_time_map(state.parent, taus, ts, settings)
    if not state.is_pure:
        return np.full((taus.size, ts.size), state.norm_check())

    freqs = state.grid.frequencies
    n = freqs.size
    if float(n) ** 2 > settings.max_pair_evaluations:
        raise BudgetExceededError(f"Time map on {n} comb points per axis exceeds the budget of "
                                  f"{settings.max_pair_evaluations:.3g} evaluations")

    phase_t = np.exp(-1j * np.outer(freqs, ts))
    phase_tau = np.exp(-1j * np.outer(taus, freqs))

    def block(start: int, stop: int) -> np.ndarray:
        c = state.amplitude(freqs[start:stop, None], freqs[None, :])
        return phase_tau[:, start:stop] @ (c @ phase_t)

    partials = map_blocks(block, row_blocks(n, n, settings.block_elements), settings.threads)
    psi = np.zeros((taus.size, ts.size), dtype=complex)
    for partial in partials:
        psi += partial
    return psi.real ** 2 + psi.imag ** 2


def closed_time_map(state: BiphotonState, taus: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Closed-form time correlation for the catalog states.

    cascade:       4 T^2 ga gb theta(tau) theta(t - tau) exp(-2 ga tau - 2 gb (t - tau))
    uncorrelated:  4 T^2 ga gb theta(tau) theta(t) exp(-2 ga tau - 2 gb t)
    spdc:          T^2 sa sb^2 / (pi sqrt(sa^2 + 2 sb^2)) [1 + cos(phi + w_ba (t - tau))]
                   exp(-sa^2 sb^2 (2 t0 - tau - t)^2 / (2 (sa^2 + 2 sb^2))) exp(-sb^2 (t - tau)^2 / 2)
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))[:, None]
    ts = np.atleast_1d(np.asarray(ts, dtype=float))[None, :]

    if state.kind == StateKind.COHERENT_LIFT:
        return state.lift_factor * closed_time_map(state.parent, taus[:, 0], ts[0, :])
    if state.kind in (StateKind.DIAGONAL_MIXED, StateKind.FACTORIZED_MIXED):
        return np.ones((taus.size, ts.size))

    source = state.source
    T = state.T
    if state.kind == StateKind.CASCADE_PURE:
        ga, gb = source.width_alpha, source.width_beta
        lag = ts - taus
        support = (taus >= 0) & (lag >= 0)
        values = 4.0 * T ** 2 * ga * gb * np.exp(-2.0 * ga * np.maximum(taus, 0.0)
                                                  - 2.0 * gb * np.maximum(lag, 0.0))
        return np.where(support, values, 0.0)

    if state.kind == StateKind.UNCORRELATED_PURE:
        ga, gb = source.width_alpha, source.width_beta
        support = (taus >= 0) & (ts >= 0)
        values = 4.0 * T ** 2 * ga * gb * np.exp(-2.0 * ga * np.maximum(taus, 0.0)
                                                  - 2.0 * gb * np.maximum(ts, 0.0))
        return np.where(support, values, 0.0)

    if state.kind == StateKind.SPDC_PURE:
        sa2, sb2 = source.width_alpha ** 2, source.width_beta ** 2
        spread = sa2 + 2.0 * sb2
        beat = source.omega_beta - source.omega_alpha
        lag = ts - taus
        prefactor = T ** 2 * source.width_alpha * sb2 / (math.pi * math.sqrt(spread))
        fringe = 1.0 + np.cos(source.phase + beat * lag)
        envelope = np.exp(-sa2 * sb2 * (2.0 * source.t0 - taus - ts) ** 2 / (2.0 * spread)
                          - sb2 * lag ** 2 / 2.0)
        return prefactor * fringe * envelope

    raise StateKindError(f"No closed-form time correlation for kind '{state.kind.value}'")


def g2_time(state: BiphotonState, t: float, tau: float) -> float:
    """g2x at detection times tau (first photon) and t (second photon)."""
    return float(g2_time_map(state, np.array([tau]), np.array([t]))[0, 0])


def g2_freq_map(state: BiphotonState, omegas1: np.ndarray, omegas2: np.ndarray) -> np.ndarray:
    """Frequency correlation: |c|^2 for pure, p for diagonal, marginal product for factorized."""
    omegas1 = np.atleast_1d(np.asarray(omegas1, dtype=float))
    omegas2 = np.atleast_1d(np.asarray(omegas2, dtype=float))
    if state.kind == StateKind.FACTORIZED_MIXED:
        return np.outer(state.marginal(0, omegas1), state.marginal(1, omegas2))
    return state.weights(omegas1[:, None], omegas2[None, :])


def g2_freq(state: BiphotonState, omega: float, omega_prime: float) -> float:
    """g2x at the frequency pair (omega, omega_prime)."""
    return float(g2_freq_map(state, np.array([omega]), np.array([omega_prime]))[0, 0])


def _uniform_spacing(axis: np.ndarray, name: str) -> float:
    if axis.size < 2:
        raise ConfigError(f"{name} needs at least two samples")
    steps = np.diff(axis)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise ConfigError(f"{name} is not uniformly sampled")
    return float(steps[0])


def _fwhm_samples(profile: np.ndarray) -> float:
    padded = np.pad(profile, 1)
    peak = int(np.argmax(padded))
    widths, _, _, _ = peak_widths(padded, [peak], rel_height=0.5)
    return float(widths[0])


def ridge_profiles(cmap: CorrelationMap) -> Tuple[np.ndarray, np.ndarray]:
    """Per-bin maxima of the map along the difference and sum lattice directions.

    Returns:
        (difference_profile, sum_profile); the difference coordinate is
        axis2 - axis1, the sum coordinate axis1 + axis2
    """
    values = cmap.values
    n1, n2 = values.shape
    rows, cols = np.indices(values.shape)
    difference = np.zeros(n1 + n2 - 1)
    total = np.zeros(n1 + n2 - 1)
    np.maximum.at(difference, (cols - rows + n1 - 1).ravel(), values.ravel())
    np.maximum.at(total, (rows + cols).ravel(), values.ravel())
    return difference, total


def correlation_widths(cmap: CorrelationMap) -> Tuple[float, float]:
    """FWHM across the main diagonal and across the anti-diagonal.

    The lattice is rotated by 45 degrees: the diagonal width is the FWHM of
    the ridge profile in axis2 - axis1 (e.g. t - tau), the anti-diagonal
    width the FWHM in axis1 + axis2 (e.g. omega_k + omega_q). Both are in
    the units of the map axes.

    Raises:
        CorrelationStructureError: If the map is flat
    """
    spacing1 = _uniform_spacing(cmap.axis1, 'axis1')
    spacing2 = _uniform_spacing(cmap.axis2, 'axis2')
    if not math.isclose(spacing1, spacing2, rel_tol=1e-6):
        raise ConfigError("Width extraction needs equal spacing on both axes")

    values = cmap.values
    peak = float(values.max())
    if peak <= 0.0 or peak - float(values.min()) <= 1e-9 * peak:
        raise CorrelationStructureError("No correlation structure: the map is flat")

    difference, total = ridge_profiles(cmap)
    diagonal = _fwhm_samples(difference) * spacing1
    antidiagonal = _fwhm_samples(total) * spacing1
    logger.debug(f"Widths of {cmap.state_tag} {cmap.kind} map: diagonal {diagonal:.4g}, "
                 f"anti-diagonal {antidiagonal:.4g}")
    return diagonal, antidiagonal


def count_spots(cmap: CorrelationMap, threshold: float = 0.25) -> int:
    """Number of connected regions above threshold*max.

    Diagonal neighbours count as connected, so thin ridges along either
    diagonal stay one region.
    """
    peak = float(cmap.values.max())
    if peak <= 0.0:
        return 0
    _, count = ndimage.label(cmap.values >= threshold * peak, structure=np.ones((3, 3), dtype=int))
    return int(count)


def epr_witness(freq_map: CorrelationMap, time_map: CorrelationMap) -> Dict[str, float]:
    """Product of the frequency anti-diagonal width and the time across-diagonal width.

    An uncorrelated pair cannot make both widths small at once; a product
    well below one signals time-frequency entanglement.
    """
    _, frequency_width = correlation_widths(freq_map)
    time_width, _ = correlation_widths(time_map)
    return {
        'frequency_width': frequency_width,
        'time_width': time_width,
        'product': frequency_width * time_width,
    }


def closed_cascade_widths(width_alpha: float, width_beta: float) -> Dict[str, float]:
    """Ridge widths of the cascade maps: 2*gamma_alpha in frequency, ln2/(2*gamma_beta) in time."""
    frequency_width = 2.0 * width_alpha
    time_width = math.log(2.0) / (2.0 * width_beta)
    return {
        'frequency_width': frequency_width,
        'time_width': time_width,
        'product': frequency_width * time_width,
    }


def _resolution(resolution: Union[int, Sequence[int]]) -> Tuple[int, int]:
    if isinstance(resolution, (int, np.integer)):
        return int(resolution), int(resolution)
    first, second = resolution
    return int(first), int(second)


def emit_figure_grid(state: BiphotonState, kind: str,
                     ranges: Sequence[Sequence[float]],
                     resolution: Union[int, Sequence[int]],
                     method: str = 'auto',
                     settings: Optional[EngineSettings] = None) -> CorrelationMap:
    """Dense correlation map over a rectangular window.

    Args:
        state: Biphoton state
        kind: 'time' or 'freq'
        ranges: ((axis1_min, axis1_max), (axis2_min, axis2_max))
        resolution: Samples per axis, an int or a pair
        method: For time maps 'closed', 'numeric' or 'auto' (closed when available)
        settings: Engine settings (default: the state's)

    Returns:
        The correlation map

    Raises:
        BudgetExceededError: If the map exceeds the sample budget
    """
    settings = settings or state.settings
    n1, n2 = _resolution(resolution)
    if n1 < 1 or n2 < 1:
        raise ConfigError(f"Resolution must be positive, got {resolution}")
    if n1 * n2 > settings.max_map_points:
        raise BudgetExceededError(f"Map of {n1}x{n2} points exceeds the budget of {settings.max_map_points}")
    (low1, high1), (low2, high2) = ranges
    axis1 = np.linspace(low1, high1, n1)
    axis2 = np.linspace(low2, high2, n2)

    if kind == FREQ:
        values = g2_freq_map(state, axis1, axis2)
        return CorrelationMap(axis1, axis2, values, FREQ, state.tag, _freq_tag(state), 'exact')

    if kind != TIME:
        raise ConfigError(f"Map kind must be 'time' or 'freq', got '{kind}'")

    if method == 'auto':
        method = 'numeric' if state.base.kind == StateKind.CUSTOM_PURE else 'closed'
    if method == 'closed':
        values = closed_time_map(state, axis1, axis2)
    elif method == 'numeric':
        values = g2_time_map(state, axis1, axis2, settings)
    else:
        raise ConfigError(f"Unknown map method '{method}'")
    logger.info(f"Computed {n1}x{n2} {kind} map for {state.tag} ({method})")
    return CorrelationMap(axis1, axis2, values, TIME, state.tag, _time_tag(state), method)
