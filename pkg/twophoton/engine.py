#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Excitation probability evaluation for the TWOPHOTON project.

This module computes the probability that two detecting atoms are both
excited by a biphoton state, to lowest order in the atom-field coupling,
three independent ways:

- ``prob_quadrature``: the exact discrete mode sum of the second-order
  amplitude on the state's comb (the numerical oracle)
- closed forms for the uncorrelated, cascade and down-conversion states
- ``prob_delta_limit``: the switched-on long-time limit in which the atomic
  response acts as a delta function

It also provides the enhancement indices G_p and G_12 and a few fitting
helpers for probability sweeps.
"""

import math
import logging
from typing import Dict, List, Any, Optional, Tuple, FrozenSet

import numpy as np
from scipy.optimize import curve_fit
from scipy.stats import linregress

from twophoton.core import (
    TWO_PI, DEFAULT_SETTINGS, EngineSettings, AtomPair, SourceParams, Detunings,
    FrequencyGrid, ProbabilityResult, ConfigError, GridResolutionError,
    BudgetExceededError, StateKindError, SpectralWeightError,
    METHOD_CLOSED, METHOD_QUADRATURE, METHOD_DELTA,
    LONG_TIME, SCALE_SEPARATION, FREQUENCY_SEPARATION, regime_flags,
)
from twophoton.states import BiphotonState, StateKind, disentangle, spdc_zeta
from twophoton.utils.numerics import blocked_sum, response_factor

logger = logging.getLogger(__name__)


def kernel(omega_m: np.ndarray, omega_n: np.ndarray, t: float, atoms: AtomPair,
           T: float, settings: EngineSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Second-order amplitude for absorbing mode m at atom 1 and mode n at atom 2.

    Returns f1*f2 * h1(omega_m) * h2(omega_n) with
    h_i(w) = (1 - exp(-i(w - w_i)t))/(w - w_i), where the coupling product
    f1*f2 = sqrt(p0)/(2T) makes |amplitude|^2 a probability in units of p0.

    Args:
        omega_m: Frequency of the photon absorbed by atom 1
        omega_n: Frequency of the photon absorbed by atom 2
        t: Interaction time (t >= 0)
        atoms: Detecting atoms
        T: Quantization time

    Returns:
        Complex amplitude, broadcast over the inputs
    """
    if t < 0:
        raise ConfigError(f"Interaction time must be non-negative, got {t}")
    first = response_factor(omega_m, atoms.omega1, t, settings.singular_tolerance)
    second = response_factor(omega_n, atoms.omega2, t, settings.singular_tolerance)
    return atoms.coupling(T) * first * second


def _state_flags(state: BiphotonState, atoms: AtomPair, t: Optional[float],
                 settings: EngineSettings) -> FrozenSet[str]:
    source = state.pure_root.source
    if source is None:
        return frozenset()
    return regime_flags(source, atoms, None, t, settings)


def _check_lattice(state: BiphotonState, atoms: AtomPair, grid: FrequencyGrid, t: float,
                   settings: EngineSettings) -> None:
    T = state.T
    if not (t >= 0.0):
        raise ConfigError(f"Interaction time must be non-negative, got {t}")
    if t > T * (1.0 + 1e-12):
        raise GridResolutionError(
            f"Interaction time t={t:g} exceeds the quantization time T={T:g}; "
            f"the comb needs spacing <= {TWO_PI / t:.6g}"
        )
    if grid.spacing > (TWO_PI / T) * (1.0 + 1e-9):
        raise GridResolutionError(
            f"Grid spacing {grid.spacing:.6g} is coarser than the state's comb spacing {TWO_PI / T:.6g}"
        )
    source = state.pure_root.source
    if source is not None:
        limit = source.min_width / settings.resolution_factor
        if grid.spacing > limit * (1.0 + 1e-9):
            raise GridResolutionError(
                f"Grid under-resolved: spacing {grid.spacing:.6g} exceeds required {limit:.6g}"
            )
    covered = [(grid.omega_min + start * grid.spacing, grid.omega_min + (stop - 1) * grid.spacing)
               for start, stop in grid.windows]
    for omega in (atoms.omega1, atoms.omega2):
        if not any(low <= omega <= high for low, high in covered):
            raise GridResolutionError(f"Grid does not cover the atomic frequency {omega:g}")
    if state.kind != StateKind.FACTORIZED_MIXED and float(grid.n_active) ** 2 > settings.max_pair_evaluations:
        raise BudgetExceededError(
            f"Quadrature on {grid.n_active} points per axis exceeds the budget of "
            f"{settings.max_pair_evaluations:.3g} evaluations"
        )


def _lattice_probability(state: BiphotonState, atoms: AtomPair, grid: FrequencyGrid, t: float,
                         settings: EngineSettings) -> float:
    freqs = grid.frequencies
    n = freqs.size
    weight = state.comb_weight(grid)
    coupling = atoms.coupling(state.T)
    h1 = response_factor(freqs, atoms.omega1, t, settings.singular_tolerance)
    h2 = response_factor(freqs, atoms.omega2, t, settings.singular_tolerance)

    if state.kind == StateKind.FACTORIZED_MIXED:
        mu_k = state.marginal(0, freqs)
        mu_q = state.marginal(1, freqs)
        a11 = math.fsum(mu_k * np.abs(h1) ** 2)
        a22 = math.fsum(mu_k * np.abs(h2) ** 2)
        b11 = math.fsum(mu_q * np.abs(h1) ** 2)
        b22 = math.fsum(mu_q * np.abs(h2) ** 2)
        cross_k = mu_k * h1 * np.conj(h2)
        cross_q = mu_q * h2 * np.conj(h1)
        x = complex(math.fsum(cross_k.real), math.fsum(cross_k.imag))
        y = complex(math.fsum(cross_q.real), math.fsum(cross_q.imag))
        total = a11 * b22 + a22 * b11 + 2.0 * (x * y).real
        return max(0.0, coupling ** 2 * weight ** 2 * total)

    if state.is_pure:
        def block_amplitude(start: int, stop: int) -> complex:
            c = state.amplitude(freqs[start:stop, None], freqs[None, :])
            k = h1[start:stop, None] * h2[None, :] + h2[start:stop, None] * h1[None, :]
            return complex(np.sum(c * k))

        amplitude = blocked_sum(block_amplitude, n, n, settings.block_elements, settings.threads)
        return coupling ** 2 * weight ** 4 * abs(amplitude) ** 2

    def block_probability(start: int, stop: int) -> float:
        p = state.weights(freqs[start:stop, None], freqs[None, :])
        k = h1[start:stop, None] * h2[None, :] + h2[start:stop, None] * h1[None, :]
        return float(np.sum(p * (k.real ** 2 + k.imag ** 2)))

    total = blocked_sum(block_probability, n, n, settings.block_elements, settings.threads)
    return max(0.0, coupling ** 2 * weight ** 2 * float(total))


def prob_quadrature(state: BiphotonState, atoms: AtomPair, grid: Optional[FrequencyGrid] = None,
                    t: Optional[float] = None,
                    settings: Optional[EngineSettings] = None) -> ProbabilityResult:
    """Excitation probability from the exact discrete mode sum.

    Pure states sum the amplitude c_mn*(A_mn + A_nm) before squaring; mixed
    states sum p_mn*|A_mn + A_nm|^2; factorized states use exact separable
    one-dimensional sums; a coherent lift scales its base by |alpha|^4.
    Partial sums are combined in a fixed order, so the value does not depend
    on the number of worker threads.

    The error estimate is the larger of the relative change against the
    comb refined twofold over the same range and the spectral mass of the
    state lying outside the grid.

    Args:
        state: Biphoton state
        atoms: Detecting atoms
        grid: Evaluation grid (default: the state's construction grid)
        t: Interaction time, 0 <= t <= T (default: T)
        settings: Engine settings (default: the state's)

    Returns:
        Quadrature result with error estimate

    Raises:
        GridResolutionError: If the grid cannot resolve the lines, t or the atoms
        BudgetExceededError: If the double sum exceeds the budget
    """
    settings = settings or state.settings
    grid = grid or state.grid
    t = state.T if t is None else float(t)

    if state.kind == StateKind.COHERENT_LIFT:
        base = prob_quadrature(state.parent, atoms, grid, t, settings)
        return base.scaled(state.lift_factor, lift_factor=state.lift_factor)

    _check_lattice(state, atoms, grid, t, settings)
    value = _lattice_probability(state, atoms, grid, t, settings)

    warnings = list(state.warnings)
    details: Dict[str, float] = {'n_points': float(grid.n_active)}
    tail = state.tail_mass_bound(grid)
    details['tail_mass_bound'] = tail
    estimate = tail

    if settings.refine_check:
        fine = grid.refined(2)
        if state.kind == StateKind.FACTORIZED_MIXED or float(fine.n_active) ** 2 <= settings.max_pair_evaluations:
            refined_value = _lattice_probability(state, atoms, fine, t, settings)
            change = abs(refined_value - value) / value if value > 0 else abs(refined_value)
            details['refined_value'] = refined_value
            details['refinement_change'] = change
            estimate = max(estimate, change)
        else:
            warnings.append("refinement check skipped: refined grid exceeds the evaluation budget")
            logger.info("Skipping refinement check, refined lattice exceeds the budget")

    logger.debug(f"Quadrature for {state.tag} at t={t:g}: {value:.6e} (error estimate {estimate:.2e})")
    return ProbabilityResult(
        value=value,
        method=METHOD_QUADRATURE,
        time=t,
        regime_flags=tuple(_state_flags(state, atoms, t, settings)),
        error_estimate=estimate,
        warnings=tuple(warnings),
        details=details,
    )


def _detunings(source: SourceParams, atoms: AtomPair, d: Optional[Detunings]) -> Detunings:
    return d if d is not None else Detunings.from_frequencies(source, atoms)


def _closed(value: float, source: SourceParams, atoms: AtomPair, d: Detunings,
            time: Optional[float] = None, warnings: Tuple[str, ...] = (),
            **details: float) -> ProbabilityResult:
    return ProbabilityResult(
        value=value,
        method=METHOD_CLOSED,
        time=time,
        regime_flags=tuple(regime_flags(source, atoms, d, time)),
        warnings=warnings,
        details=details,
    )


def closed_p11(source: SourceParams, atoms: AtomPair,
               d: Optional[Detunings] = None) -> ProbabilityResult:
    """Long-time probability for the uncorrelated pair (dominant term).

    details carries the value keeping both photon orderings and the
    dominance ratio |swap|/|direct| of the two amplitudes.
    """
    d = _detunings(source, atoms, d)
    gamma_a, gamma_b = source.width_alpha, source.width_beta
    value = atoms.p0 * gamma_a * gamma_b / (
        ((atoms.omega1 - source.omega_alpha) ** 2 + gamma_a ** 2)
        * ((atoms.omega2 - source.omega_beta) ** 2 + gamma_b ** 2)
    )
    direct = 1.0 / ((atoms.omega1 - source.omega_alpha + 1j * gamma_a)
                    * (atoms.omega2 - source.omega_beta + 1j * gamma_b))
    swap = 1.0 / ((atoms.omega2 - source.omega_alpha + 1j * gamma_a)
                  * (atoms.omega1 - source.omega_beta + 1j * gamma_b))
    return _closed(value, source, atoms, d,
                   two_term_value=atoms.p0 * gamma_a * gamma_b * abs(direct + swap) ** 2,
                   dominance_ratio=abs(swap) / abs(direct))


def closed_p11_dr(source: SourceParams, atoms: AtomPair) -> float:
    """Double-resonance value p0/(gamma_alpha*gamma_beta)."""
    return atoms.p0 / (source.width_alpha * source.width_beta)


def closed_p11_mixed(source: SourceParams, atoms: AtomPair, t: float, T: float,
                     d: Optional[Detunings] = None) -> ProbabilityResult:
    """Uncorrelated pair after disentangling or factorizing.

    The pair is a product state, so both mixed states coincide:
    p0*ga*gb*(t/T)^2*(|direct|^2 + |swap|^2).
    """
    d = _detunings(source, atoms, d)
    gamma_a, gamma_b = source.width_alpha, source.width_beta
    direct = 1.0 / abs((atoms.omega1 - source.omega_alpha + 1j * gamma_a)
                       * (atoms.omega2 - source.omega_beta + 1j * gamma_b)) ** 2
    swap = 1.0 / abs((atoms.omega2 - source.omega_alpha + 1j * gamma_a)
                     * (atoms.omega1 - source.omega_beta + 1j * gamma_b)) ** 2
    value = atoms.p0 * gamma_a * gamma_b * (t / T) ** 2 * (direct + swap)
    return _closed(value, source, atoms, d, time=t)


def closed_p11_2p2a(source: SourceParams, atoms: AtomPair,
                    d: Optional[Detunings] = None) -> ProbabilityResult:
    """Uncorrelated pair on the single-photon wings: p0*gamma_alpha*gamma_beta/Delta^4."""
    d = _detunings(source, atoms, d)
    if d.Delta == 0:
        raise ConfigError("The wing form needs a non-zero single-photon mismatch Delta")
    value = atoms.p0 * source.width_alpha * source.width_beta / d.Delta ** 4
    return _closed(value, source, atoms, d)


def closed_p11_dr_estimate(atoms: AtomPair, source: SourceParams) -> float:
    """Absolute double-resonance probability for a diffraction-limited beam.

    Uses the beam section S = 4*pi^2/(omega1*omega2) (c = 1), which gives
    9*gamma1*gamma2/(4*pi^2*gamma_alpha*gamma_beta).
    """
    section = 4.0 * math.pi ** 2 / (atoms.omega1 * atoms.omega2)
    p0 = AtomPair.coupling_from_section(atoms.omega1, atoms.omega2, atoms.gamma1, atoms.gamma2, section)
    return p0 / (source.width_alpha * source.width_beta)


def _cascade_orderings(source: SourceParams, atoms: AtomPair) -> Tuple[complex, complex, complex]:
    """Common resonance factor and the two second-photon factors of the cascade."""
    delta = source.total_frequency - atoms.omega1 - atoms.omega2
    common = 1.0 / (-delta + 1j * source.width_alpha)
    direct = 1.0 / (atoms.omega2 - source.omega_beta + 1j * source.width_beta)
    swap = 1.0 / (atoms.omega1 - source.omega_beta + 1j * source.width_beta)
    return common, direct, swap


def closed_cascade_long_time(source: SourceParams, atoms: AtomPair,
                             d: Optional[Detunings] = None) -> ProbabilityResult:
    """Long-time cascade probability, dominant ordering.

    p0*gamma_alpha*gamma_beta / [(delta^2 + gamma_alpha^2)((omega2 - omega_beta)^2 + gamma_beta^2)]
    """
    d = _detunings(source, atoms, d)
    common, direct, swap = _cascade_orderings(source, atoms)
    scale = atoms.p0 * source.width_alpha * source.width_beta
    value = scale * abs(common * direct) ** 2
    return _closed(value, source, atoms, d,
                   two_term_value=scale * abs(common * (direct + swap)) ** 2,
                   dominance_ratio=abs(swap) / abs(direct))


def closed_cascade_dr(source: SourceParams, atoms: AtomPair) -> float:
    """Cascade at double resonance: p0/(gamma_alpha*gamma_beta), as for the uncorrelated pair."""
    return atoms.p0 / (source.width_alpha * source.width_beta)


def closed_cascade_2p2a(source: SourceParams, atoms: AtomPair,
                        d: Optional[Detunings] = None) -> ProbabilityResult:
    """Cascade 2P2A resonance: p0*gamma_alpha*gamma_beta/[(delta^2 + gamma_alpha^2)(omega2 - omega_beta)^2].

    Outside the scale-separated regime the form is replaced by the long-time
    expression and a warning is attached.
    """
    d = _detunings(source, atoms, d)
    flags = regime_flags(source, atoms, d, None)
    mismatch = atoms.omega2 - source.omega_beta
    if SCALE_SEPARATION not in flags or mismatch == 0:
        fallback = closed_cascade_long_time(source, atoms, d)
        return ProbabilityResult(
            value=fallback.value, method=METHOD_CLOSED, time=None,
            regime_flags=fallback.regime_flags,
            warnings=("2P2A form needs scale separation; long-time form used",),
            details=fallback.details,
        )
    value = (atoms.p0 * source.width_alpha * source.width_beta
             / ((d.delta ** 2 + source.width_alpha ** 2) * mismatch ** 2))
    return _closed(value, source, atoms, d,
                   dr_value=closed_cascade_dr(source, atoms),
                   suppression=(source.width_beta / d.Delta) ** 2 if d.Delta else 1.0)


def _expm1_ratio(z: complex, t: float) -> complex:
    """(exp(z t) - 1)/z, with the limit t at z = 0."""
    if z == 0:
        return complex(t)
    return complex(np.expm1(z * t) / z)


def _ordered_amplitude(a: complex, b: complex, t: float) -> complex:
    """Time integral of exp(a*t2) * (exp(b*t2) - 1)/b over [0, t]."""
    if abs(b) * t < 1e-6:
        return complex((t * a * np.exp(a * t) - np.expm1(a * t)) / a ** 2)
    return (_expm1_ratio(a + b, t) - _expm1_ratio(a, t)) / b


def cascade_amplitude_exact(source: SourceParams, atoms: AtomPair, t: float,
                            d: Optional[Detunings] = None) -> complex:
    """Time-dependent cascade excitation amplitude, both photon orderings.

    The first photon (width gamma_alpha) is emitted first; each ordering is
    the integral over 0 <= t1 <= t2 <= t of the emission history against
    the atomic phases. The amplitude is normalized so that its modulus
    squared is the probability in units of p0.
    """
    if t < 0:
        raise ConfigError(f"Interaction time must be non-negative, got {t}")
    gamma_a, gamma_b = source.width_alpha, source.width_beta
    a = 1j * (atoms.omega2 - source.omega_beta) - gamma_b
    b = 1j * (atoms.omega1 - source.omega_alpha) + gamma_b - gamma_a
    a_swap = 1j * (atoms.omega1 - source.omega_beta) - gamma_b
    b_swap = 1j * (atoms.omega2 - source.omega_alpha) + gamma_b - gamma_a
    total = _ordered_amplitude(a, b, t) + _ordered_amplitude(a_swap, b_swap, t)
    return math.sqrt(atoms.p0 * gamma_a * gamma_b) * total


def cascade_amplitude_compact(source: SourceParams, atoms: AtomPair,
                              d: Optional[Detunings] = None) -> complex:
    """Long-time limit of ``cascade_amplitude_exact``."""
    gamma_a, gamma_b = source.width_alpha, source.width_beta
    a = 1j * (atoms.omega2 - source.omega_beta) - gamma_b
    a_swap = 1j * (atoms.omega1 - source.omega_beta) - gamma_b
    total_rate = 1j * (atoms.omega1 + atoms.omega2 - source.total_frequency) - gamma_a
    return math.sqrt(atoms.p0 * gamma_a * gamma_b) / total_rate * (1.0 / a + 1.0 / a_swap)


def closed_cascade_rho1_rho2(source: SourceParams, atoms: AtomPair, t: float, T: float,
                             d: Optional[Detunings] = None) -> Tuple[ProbabilityResult, ProbabilityResult]:
    """Probabilities for the diagonal (P1) and factorized (P2) cascade states at time t.

    P1 = p0*ga*gb/(delta^2 + ga^2) * [1/(w1 - wb)^2 + 1/(w2 - wb)^2] * (t/T)^2
    P2 = p0*gb*(ga + gb) * [1/(w1 - wb)^4 + 1/(w2 - wb)^4] * (t/T)^2

    Both forms hold on the single-photon wings. Without scale separation the
    Lorentzian denominators are kept in full and a warning is attached.
    """
    d = _detunings(source, atoms, d)
    gamma_a, gamma_b = source.width_alpha, source.width_beta
    scale = (t / T) ** 2
    flags = regime_flags(source, atoms, d, t)
    m1 = atoms.omega1 - source.omega_beta
    m2 = atoms.omega2 - source.omega_beta
    resonance = 1.0 / (d.delta ** 2 + gamma_a ** 2)

    # full Lorentzian forms, regular at double resonance
    sum_width = gamma_a + gamma_b
    p1_full = atoms.p0 * gamma_a * gamma_b * resonance * (
        1.0 / (m2 ** 2 + gamma_b ** 2) + 1.0 / (m1 ** 2 + gamma_b ** 2)) * scale
    p2_full = atoms.p0 * gamma_b * sum_width * (
        1.0 / (((atoms.omega1 - source.omega_alpha) ** 2 + sum_width ** 2) * (m2 ** 2 + gamma_b ** 2))
        + 1.0 / (((atoms.omega2 - source.omega_alpha) ** 2 + sum_width ** 2) * (m1 ** 2 + gamma_b ** 2))
    ) * scale

    if SCALE_SEPARATION in flags and m1 != 0 and m2 != 0:
        p1 = atoms.p0 * gamma_a * gamma_b * resonance * (1.0 / m1 ** 2 + 1.0 / m2 ** 2) * scale
        p2 = atoms.p0 * gamma_b * sum_width * (1.0 / m1 ** 4 + 1.0 / m2 ** 4) * scale
        warnings: Tuple[str, ...] = ()
    else:
        p1, p2 = p1_full, p2_full
        warnings = ("wing forms need scale separation; full Lorentzian forms used",)

    return (
        _closed(p1, source, atoms, d, time=t, warnings=warnings, full_value=p1_full),
        _closed(p2, source, atoms, d, time=t, warnings=warnings, full_value=p2_full),
    )


def _spdc_overlaps(source: SourceParams, atoms: AtomPair) -> Tuple[float, float]:
    two_sigma_b2 = 2.0 * source.width_beta ** 2
    e1 = math.exp(-((atoms.omega1 - source.omega_alpha) ** 2
                    + (atoms.omega2 - source.omega_beta) ** 2) / two_sigma_b2)
    e2 = math.exp(-((atoms.omega2 - source.omega_alpha) ** 2
                    + (atoms.omega1 - source.omega_beta) ** 2) / two_sigma_b2)
    return e1, e2


def _spdc_scale(source: SourceParams, atoms: AtomPair) -> float:
    sigma_a, sigma_b = source.width_alpha, source.width_beta
    return math.pi * atoms.p0 * math.sqrt(sigma_a ** 2 + 2.0 * sigma_b ** 2) / (sigma_a * sigma_b ** 2)


def _spdc_profile(source: SourceParams, omega: float) -> float:
    zeta = spdc_zeta(source)
    sigma_b2 = source.width_beta ** 2
    return (math.exp(-zeta * (omega - source.omega_alpha) ** 2 / sigma_b2)
            + math.exp(-zeta * (omega - source.omega_beta) ** 2 / sigma_b2))


def closed_spdc_family(source: SourceParams, atoms: AtomPair, t: float, T: float,
                       d: Optional[Detunings] = None) -> Tuple[ProbabilityResult, ProbabilityResult, ProbabilityResult]:
    """Down-conversion probabilities for the pure, diagonal and factorized states.

    Returns:
        (P_pdc, P1_pdc, P2_pdc); the pure value is a long-time value, the
        mixed values grow as (t/T)^2
    """
    d = _detunings(source, atoms, d)
    phi = source.phase
    sigma_a, sigma_b = source.width_alpha, source.width_beta
    e1, e2 = _spdc_overlaps(source, atoms)
    pump = math.exp(-d.delta ** 2 / sigma_a ** 2)
    scale = _spdc_scale(source, atoms)
    ratio = (t / T) ** 2

    p_pure = scale * (1.0 + math.cos(phi)) * pump * (e1 + e2) ** 2
    p_diag = scale * ratio * pump * (e1 ** 2 + e2 ** 2 + 2.0 * e1 * e2 * math.cos(phi))
    zeta = spdc_zeta(source)
    p_fact = (0.5 * math.pi * atoms.p0 * zeta / sigma_b ** 2
              * _spdc_profile(source, atoms.omega1) * _spdc_profile(source, atoms.omega2) * ratio)

    dominance = e2 / e1 if e1 > 0 else math.inf
    return (
        _closed(p_pure, source, atoms, d, dominance_ratio=dominance, zeta=zeta),
        _closed(p_diag, source, atoms, d, time=t, zeta=zeta),
        _closed(p_fact, source, atoms, d, time=t, zeta=zeta),
    )


def closed_spdc_limits(source: SourceParams, Delta: float, p0: float = 1.0) -> Dict[str, float]:
    """Double-resonance and wing limits of the down-conversion family.

    Returns:
        Dictionary with the double-resonance value 'dr' (relative phase
        included) and the wing values 'pdc_2p2a', 'rho1_2p2a', 'rho2_2p2a'
        at delta = 0 and t = T
    """
    sigma_a, sigma_b = source.width_alpha, source.width_beta
    zeta = spdc_zeta(source)
    scale = math.pi * p0 * math.sqrt(sigma_a ** 2 + 2.0 * sigma_b ** 2) / (sigma_a * sigma_b ** 2)
    dr = scale * (1.0 + math.cos(source.phase))
    wing = math.exp(-2.0 * Delta ** 2 / sigma_b ** 2)
    return {
        'dr': dr,
        'pdc_2p2a': dr * wing,
        'rho1_2p2a': scale * wing,
        'rho2_2p2a': scale * (1.0 + 2.0 * sigma_b ** 2 / sigma_a ** 2) ** -0.5
        * math.exp(-2.0 * zeta * Delta ** 2 / sigma_b ** 2),
    }


def _atomic_amplitudes(state: BiphotonState, atoms: AtomPair) -> Tuple[complex, complex]:
    pure = state.base
    if not pure.is_pure:
        raise StateKindError(f"Operation needs a pure state, got '{state.kind.value}'")
    c12 = complex(pure.amplitude(atoms.omega1, atoms.omega2))
    c21 = complex(pure.amplitude(atoms.omega2, atoms.omega1))
    return c12, c21


def prob_delta_limit(state: BiphotonState, atoms: AtomPair, t: Optional[float] = None,
                     settings: Optional[EngineSettings] = None) -> ProbabilityResult:
    """Switched-on long-time probability, with the atomic response as a delta function.

    pure:        (p0/4) T^2 |c12 + c21|^2
    diagonal:    (p0/4) t^2 (|c12|^2 + |c21|^2)
    factorized:  (p0/4) t^2 [mu_k(w1) mu_q(w2) + mu_k(w2) mu_q(w1)]

    The limit assumes the pulse lies inside [0, t]; when that cannot be
    confirmed the result carries a warning.
    """
    settings = settings or state.settings
    T = state.T
    t = T if t is None else float(t)
    if t < 0:
        raise ConfigError(f"Interaction time must be non-negative, got {t}")

    if state.kind == StateKind.COHERENT_LIFT:
        base = prob_delta_limit(state.parent, atoms, t, settings)
        return base.scaled(state.lift_factor, lift_factor=state.lift_factor)

    warnings = list(state.warnings)
    if state.switched_on is None:
        warnings.append("switched-on condition cannot be verified for this state")
        logger.warning(f"Delta limit on {state.tag}: switched-on condition unverifiable")
    elif not state.switched_on:
        warnings.append("pulse is not contained in [0, T]; delta limit is not valid")
        logger.warning(f"Delta limit on {state.tag}: pulse outside [0, T]")

    omegas = np.array([atoms.omega1, atoms.omega2])
    details: Dict[str, float] = {}
    if state.is_pure:
        c12, c21 = _atomic_amplitudes(state, atoms)
        value = 0.25 * atoms.p0 * T ** 2 * abs(c12 + c21) ** 2
        details.update(abs_c12=abs(c12), abs_c21=abs(c21))
    elif state.kind == StateKind.DIAGONAL_MIXED:
        p12 = float(state.weights(atoms.omega1, atoms.omega2))
        p21 = float(state.weights(atoms.omega2, atoms.omega1))
        value = 0.25 * atoms.p0 * t ** 2 * (p12 + p21)
    else:
        mu_k = state.marginal(0, omegas)
        mu_q = state.marginal(1, omegas)
        value = 0.25 * atoms.p0 * t ** 2 * float(mu_k[0] * mu_q[1] + mu_k[1] * mu_q[0])

    return ProbabilityResult(
        value=value,
        method=METHOD_DELTA,
        time=t,
        regime_flags=tuple(_state_flags(state, atoms, t, settings)),
        warnings=tuple(warnings),
        details=details,
    )


def cauchy_schwarz_bound(state: BiphotonState, atoms: AtomPair) -> Tuple[float, float]:
    """Return (P_pure, 2*P_diagonal) in the delta limit; the first never exceeds the second."""
    pure = state.base
    p_pure = prob_delta_limit(pure, atoms).value
    p_diag = prob_delta_limit(disentangle(pure), atoms, t=pure.T).value
    return p_pure, 2.0 * p_diag


def enhancement_gp(state: BiphotonState, atoms: AtomPair,
                   settings: Optional[EngineSettings] = None) -> float:
    """G_p = |c12 + c21|^2/(|c12|^2 + |c21|^2), in [0, 2].

    Returns 1 when both amplitudes are below the degenerate threshold.
    """
    settings = settings or state.settings
    c12, c21 = _atomic_amplitudes(state, atoms)
    if abs(c12) < settings.degenerate_amplitude and abs(c21) < settings.degenerate_amplitude:
        logger.warning("G_p requested where both atomic amplitudes vanish; returning 1")
        return 1.0
    return abs(c12 + c21) ** 2 / (abs(c12) ** 2 + abs(c21) ** 2)


def _grid_marginal(state: BiphotonState, axis: int, omegas: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    others = grid.frequencies
    weight = state.comb_weight(grid)
    rows = np.asarray(omegas, dtype=float)[:, None]
    if axis == 0:
        block = state.amplitude(rows, others[None, :])
    else:
        block = state.amplitude(others[None, :], rows)
    return weight * np.sum(block.real ** 2 + block.imag ** 2, axis=1)


def enhancement_g12(state: BiphotonState, atoms: AtomPair,
                    grid: Optional[FrequencyGrid] = None) -> float:
    """G_12 = (|c12|^2 + |c21|^2) / [mu_k(w1) mu_q(w2) + mu_k(w2) mu_q(w1)].

    The marginals are comb sums over ``grid`` (default: the state's grid)
    carrying the comb measure, so the ratio converges with the grid.

    Raises:
        SpectralWeightError: If the marginals vanish at the atomic frequencies
    """
    pure = state.base
    c12, c21 = _atomic_amplitudes(state, atoms)
    omegas = np.array([atoms.omega1, atoms.omega2])
    if grid is None:
        mu_k = pure.marginal(0, omegas)
        mu_q = pure.marginal(1, omegas)
    else:
        mu_k = _grid_marginal(pure, 0, omegas, grid)
        mu_q = _grid_marginal(pure, 1, omegas, grid)
    denominator = float(mu_k[0] * mu_q[1] + mu_k[1] * mu_q[0])
    if not denominator > 0.0:
        raise SpectralWeightError("No spectral weight at atomic frequencies")
    return (abs(c12) ** 2 + abs(c21) ** 2) / denominator


def dominance_ratio(state: BiphotonState, atoms: AtomPair) -> float:
    """|c21|/|c12|: weight of the swapped photon ordering at the atoms."""
    c12, c21 = _atomic_amplitudes(state, atoms)
    if abs(c12) == 0.0:
        return math.inf if abs(c21) > 0 else 1.0
    return abs(c21) / abs(c12)


def effective_spectral_area(state: BiphotonState) -> float:
    """Spectral area S with P_DR = p0/S at double resonance.

    S = 4/(T^2 |c(w_alpha, w_beta) + c(w_beta, w_alpha)|^2); it equals
    gamma_alpha*gamma_beta for the Lorentzian states and serves to match the
    widths of different states.
    """
    pure = state.base
    source = pure.source
    if source is None:
        raise StateKindError("Effective area needs a state with emitter parameters")
    c = complex(pure.amplitude(source.omega_alpha, source.omega_beta)
                + pure.amplitude(source.omega_beta, source.omega_alpha))
    if abs(c) == 0.0:
        raise SpectralWeightError("No spectral weight at the double-resonance point")
    return 4.0 / (pure.T ** 2 * abs(c) ** 2)


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    residual = float(np.sum((y - fitted) ** 2))
    total = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - residual / total if total > 0 else 1.0


def _lorentzian(x, amplitude, center, half_width):
    return amplitude / ((x - center) ** 2 + half_width ** 2)


def _gaussian(x, amplitude, center, width):
    return amplitude * np.exp(-((x - center) / width) ** 2)


def fit_lorentzian_fwhm(x: np.ndarray, y: np.ndarray) -> Dict[str, float]:
    """Fit a / ((x - x0)^2 + w^2) to a resonance curve.

    Returns:
        Dictionary with center, fwhm (= 2w), amplitude and r_squared
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peak = int(np.argmax(y))
    above = x[y >= 0.5 * y[peak]]
    guess_width = max(0.5 * (above.max() - above.min()), np.min(np.diff(np.sort(x))))
    p0 = (y[peak] * guess_width ** 2, x[peak], guess_width)
    params, _ = curve_fit(_lorentzian, x, y, p0=p0, maxfev=20000)
    fitted = _lorentzian(x, *params)
    return {
        'center': float(params[1]),
        'fwhm': float(2.0 * abs(params[2])),
        'amplitude': float(params[0]),
        'r_squared': _r_squared(y, fitted),
    }


def fit_gaussian_width(x: np.ndarray, y: np.ndarray) -> Dict[str, float]:
    """Fit a * exp(-((x - x0)/w)^2); w is the 1/e half-width."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peak = int(np.argmax(y))
    above = x[y >= y[peak] / math.e]
    guess_width = max(0.5 * (above.max() - above.min()), np.min(np.diff(np.sort(x))))
    params, _ = curve_fit(_gaussian, x, y, p0=(y[peak], x[peak], guess_width), maxfev=20000)
    fitted = _gaussian(x, *params)
    return {
        'center': float(params[1]),
        'width': float(abs(params[2])),
        'amplitude': float(params[0]),
        'r_squared': _r_squared(y, fitted),
    }


def loglog_slope(x: np.ndarray, y: np.ndarray) -> Dict[str, float]:
    """Least-squares slope of log(y) against log(x)."""
    fit = linregress(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))
    return {'slope': float(fit.slope), 'intercept': float(fit.intercept),
            'r_squared': float(fit.rvalue ** 2)}


def required_flags(kind: StateKind) -> FrozenSet[str]:
    """Regime flags a closed form for ``kind`` relies on."""
    if kind in (StateKind.CASCADE_PURE, StateKind.SPDC_PURE):
        return frozenset({LONG_TIME, FREQUENCY_SEPARATION})
    if kind == StateKind.UNCORRELATED_PURE:
        return frozenset({LONG_TIME})
    return frozenset({FREQUENCY_SEPARATION})
