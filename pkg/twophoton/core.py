#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Core types for the TWOPHOTON project.

This module holds the units convention, the physical parameter bundles
(detecting atoms, emitting source, detunings), the frequency comb on which
every state and every probability is evaluated, the result container shared
by all evaluation methods, and the exception hierarchy used across the
package.

All frequencies, widths and detunings are angular frequencies in one internal
unit (rad/us). The speed of light is set to 1, so the quantization length L
only enters through the quantization time T = L/c, and the mode comb has
spacing 2*pi/T.
"""

import math
import logging
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Any, Optional, Tuple, FrozenSet, Iterable

import numpy as np

from twophoton.utils.validation import validate_finite, validate_positive, validate_in_range

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Regime flag names
LONG_TIME = 'long_time'
SCALE_SEPARATION = 'scale_separation'
SMALL_DETUNING = 'small_detuning'
FREQUENCY_SEPARATION = 'frequency_separation'
WIDTH_HIERARCHY = 'width_hierarchy'

METHOD_CLOSED = 'closed_form'
METHOD_QUADRATURE = 'quadrature'
METHOD_DELTA = 'delta_limit'
METHODS = (METHOD_CLOSED, METHOD_QUADRATURE, METHOD_DELTA)


class TwoPhotonError(Exception):
    """Base class for all domain errors raised by the package."""


class ConfigError(TwoPhotonError):
    """Invalid parameter or malformed configuration."""


class GridResolutionError(TwoPhotonError):
    """The frequency comb cannot resolve the requested lineshapes or time."""


class BudgetExceededError(TwoPhotonError):
    """A grid, map or double sum would exceed the configured budget."""


class RegimeViolationError(TwoPhotonError):
    """A closed form was requested strictly outside its asymptotic regime."""


class StateKindError(TwoPhotonError):
    """An operation was given a state of the wrong kind."""


class CausalityError(TwoPhotonError):
    """A test function is not causal or not absolutely integrable."""


class CorrelationStructureError(TwoPhotonError):
    """A correlation map has no detectable ridge."""


class SpectralWeightError(TwoPhotonError):
    """The state carries no spectral weight at the atomic frequencies."""


@dataclass(frozen=True)
class EngineSettings:
    """Tunable thresholds and budgets shared by the evaluators.

    Attributes:
        regime_threshold: Numeric value standing in for "much greater than"
        coverage: Default grid half-width in units of the largest source width
        min_coverage: Smallest accepted coverage
        resolution_factor: Comb spacing must not exceed min(width)/resolution_factor
        max_grid_points: Budget on active comb points per axis
        max_pair_evaluations: Budget on terms of a double sum
        max_map_points: Budget on correlation map samples
        block_elements: Target number of lattice elements evaluated per block
        threads: Worker threads for block evaluation (speed only)
        refine_check: Compare quadrature against the 2x refined comb
        energy_extension: Comb extension factor used by the energy flow
        degenerate_amplitude: Amplitudes below this are treated as zero
        singular_tolerance: |x|*t below this uses the removable-singularity limit
    """

    regime_threshold: float = 20.0
    coverage: float = 40.0
    min_coverage: float = 10.0
    resolution_factor: float = 5.0
    max_grid_points: int = 40000
    max_pair_evaluations: float = 4.0e8
    max_map_points: int = 1000000
    block_elements: int = 1 << 20
    threads: int = 1
    refine_check: bool = True
    energy_extension: int = 3
    degenerate_amplitude: float = 1e-30
    singular_tolerance: float = 1e-9

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.min_coverage <= 0 or self.resolution_factor <= 0:
            raise ConfigError("min_coverage and resolution_factor must be positive")
        if self.energy_extension < 2:
            raise ConfigError(f"energy_extension must be >= 2, got {self.energy_extension}")
        is_valid, message = validate_in_range(self.singular_tolerance, 0.0, 1.0, "singular_tolerance")
        if not is_valid:
            raise ConfigError(message)

    def replace(self, **changes: Any) -> 'EngineSettings':
        values = asdict(self)
        unknown = set(changes) - set(values)
        if unknown:
            raise ConfigError(f"Unknown engine settings: {', '.join(sorted(unknown))}")
        values.update(changes)
        return EngineSettings(**values)


DEFAULT_SETTINGS = EngineSettings()


@dataclass(frozen=True)
class UnitsConvention:
    """Units bookkeeping for one quantization box.

    Attributes:
        quantization_time: T = L/c, the box length in time units
        frequency_unit: Name of the internal angular frequency unit
        time_unit: Name of the matching time unit
        c_normalization: Speed of light in internal units
    """

    quantization_time: float
    frequency_unit: str = 'rad/us'
    time_unit: str = 'us'
    c_normalization: float = 1.0

    def __post_init__(self):
        if not self.quantization_time > 0:
            raise ConfigError(f"Quantization time T must be positive, got {self.quantization_time}")

    @classmethod
    def from_length(cls, length: float, c: float = 1.0) -> 'UnitsConvention':
        return cls(quantization_time=length / c, c_normalization=c)

    @property
    def mode_spacing(self) -> float:
        return TWO_PI / self.quantization_time

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        is_valid, message = validate_positive(value, name)
        if not is_valid:
            raise ConfigError(message)


@dataclass(frozen=True)
class AtomPair:
    """The two detecting atoms.

    Attributes:
        omega1: Transition frequency of atom 1
        omega2: Transition frequency of atom 2
        gamma1: Natural width of atom 1 (enters only through p0)
        gamma2: Natural width of atom 2 (enters only through p0)
        p0: Dimensionless coupling scale; probabilities are reported in its units
    """

    omega1: float
    omega2: float
    gamma1: float = 1e-3
    gamma2: float = 1e-3
    p0: float = 1.0

    def __post_init__(self):
        _require_positive(omega1=self.omega1, omega2=self.omega2,
                          gamma1=self.gamma1, gamma2=self.gamma2, p0=self.p0)
        if self.omega1 == self.omega2:
            raise ConfigError("Atomic transition frequencies must differ (omega1 == omega2)")

    @staticmethod
    def coupling_from_section(omega1: float, omega2: float, gamma1: float,
                              gamma2: float, section: float) -> float:
        """Coupling scale p0 for a beam of cross section S (c = 1)."""
        _require_positive(section=section)
        return 36.0 * math.pi ** 2 * gamma1 * gamma2 / (omega1 ** 2 * omega2 ** 2 * section ** 2)

    @classmethod
    def from_beam_section(cls, omega1: float, omega2: float, gamma1: float,
                          gamma2: float, section: float) -> 'AtomPair':
        p0 = cls.coupling_from_section(omega1, omega2, gamma1, gamma2, section)
        return cls(omega1, omega2, gamma1, gamma2, p0)

    @classmethod
    def symmetric(cls, source: 'SourceParams', Delta: float, delta: float = 0.0,
                  gamma1: float = 1e-3, gamma2: float = 1e-3,
                  p0: float = 1.0) -> 'AtomPair':
        """Place the atoms a mismatch Delta inside the emitter lines.

        Atom 1 sits above omega_alpha and atom 2 below omega_beta, each moved
        down by delta/2 so that omega_alpha + omega_beta - omega1 - omega2 = delta.
        """
        omega1 = source.omega_alpha + Delta - 0.5 * delta
        omega2 = source.omega_beta - Delta - 0.5 * delta
        return cls(omega1, omega2, gamma1, gamma2, p0)

    def coupling(self, T: float) -> float:
        """Product f1*f2 of the atom-field couplings for a box of time T."""
        return math.sqrt(self.p0) / (2.0 * T)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SourceParams:
    """Emitter parameters shared by every state in the catalog.

    Attributes:
        omega_alpha: Central frequency of the first photon
        omega_beta: Central frequency of the second photon
        width_alpha: gamma_alpha (Lorentzian states) or sigma_alpha (SPDC)
        width_beta: gamma_beta (Lorentzian states) or sigma_beta (SPDC)
        t0: Pump pulse center time (SPDC only, None means T/2)
        phase: Relative phase of the two SPDC components
    """

    omega_alpha: float
    omega_beta: float
    width_alpha: float
    width_beta: float
    t0: Optional[float] = None
    phase: float = 0.5 * math.pi

    def __post_init__(self):
        _require_positive(width_alpha=self.width_alpha, width_beta=self.width_beta)
        for name in ('omega_alpha', 'omega_beta', 'phase', 't0'):
            value = getattr(self, name)
            if value is None:
                continue
            is_valid, message = validate_finite(value, name)
            if not is_valid:
                raise ConfigError(message)

    @property
    def widths(self) -> Tuple[float, float]:
        return (self.width_alpha, self.width_beta)

    @property
    def min_width(self) -> float:
        return min(self.width_alpha, self.width_beta)

    @property
    def max_width(self) -> float:
        return max(self.width_alpha, self.width_beta)

    @property
    def total_frequency(self) -> float:
        return self.omega_alpha + self.omega_beta

    def with_changes(self, **changes: Any) -> 'SourceParams':
        values = asdict(self)
        values.update(changes)
        return SourceParams(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Detunings:
    """2P2A detuning delta and single-photon mismatch Delta."""

    delta: float
    Delta: float

    @classmethod
    def from_frequencies(cls, source: SourceParams, atoms: AtomPair) -> 'Detunings':
        delta = source.omega_alpha + source.omega_beta - atoms.omega1 - atoms.omega2
        Delta = min(abs(source.omega_alpha - atoms.omega1), abs(atoms.omega2 - source.omega_beta))
        return cls(delta=delta, Delta=Delta)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FrequencyGrid:
    """A finite piece of the quantization box's mode comb.

    The comb points are omega_min + k*spacing for k in [0, n_points). Only
    the index ranges listed in ``windows`` are active; the hull between
    separated windows carries no spectral weight and is skipped.

    Attributes:
        omega_min: First comb point of the hull
        omega_max: Last comb point of the hull
        n_points: Number of comb points in the hull
        spacing: Mode spacing, equal to 2*pi/T
        mode_density_time: The quantization time T
        windows: Active half-open index ranges, sorted and disjoint
    """

    omega_min: float
    omega_max: float
    n_points: int
    spacing: float
    mode_density_time: float
    windows: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_points < 1:
            raise ConfigError(f"A grid needs at least one point, got {self.n_points}")
        if not self.mode_density_time > 0:
            raise ConfigError(f"Quantization time must be positive, got {self.mode_density_time}")
        if not self.windows:
            object.__setattr__(self, 'windows', ((0, self.n_points),))
        previous_end = 0
        for start, stop in self.windows:
            if start < previous_end or stop <= start or stop > self.n_points:
                raise ConfigError(f"Invalid grid windows {self.windows}")
            previous_end = stop

    @classmethod
    def uniform(cls, omega_min: float, T: float, n_points: int,
                windows: Optional[Iterable[Tuple[int, int]]] = None) -> 'FrequencyGrid':
        """Build a comb of n_points starting at omega_min for a box of time T."""
        spacing = TWO_PI / T
        return cls(
            omega_min=float(omega_min),
            omega_max=float(omega_min + (n_points - 1) * spacing),
            n_points=int(n_points),
            spacing=spacing,
            mode_density_time=float(T),
            windows=tuple(tuple(w) for w in windows) if windows else (),
        )

    @property
    def T(self) -> float:
        return self.mode_density_time

    @property
    def units(self) -> UnitsConvention:
        return UnitsConvention(quantization_time=self.mode_density_time)

    @property
    def indices(self) -> np.ndarray:
        return np.concatenate([np.arange(start, stop) for start, stop in self.windows])

    @property
    def frequencies(self) -> np.ndarray:
        return self.omega_min + self.indices * self.spacing

    @property
    def n_active(self) -> int:
        return int(sum(stop - start for start, stop in self.windows))

    def refined(self, factor: int = 2) -> 'FrequencyGrid':
        """Same frequency range with the spacing divided by ``factor``.

        The refined comb belongs to a box of time factor*T. Callers that keep
        the original box weight each refined point by 1/factor per axis.
        """
        windows = tuple((start * factor, (stop - 1) * factor + 1) for start, stop in self.windows)
        return FrequencyGrid.uniform(self.omega_min, self.mode_density_time * factor,
                                     factor * (self.n_points - 1) + 1, windows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'omega_min': self.omega_min,
            'omega_max': self.omega_max,
            'n_points': self.n_points,
            'n_active': self.n_active,
            'spacing': self.spacing,
            'mode_density_time': self.mode_density_time,
            'windows': [list(w) for w in self.windows],
        }


@dataclass(frozen=True)
class ProbabilityResult:
    """A 2P2A probability together with how it was obtained.

    Attributes:
        value: Probability in units of p0 (or absolute when p0 is physical)
        method: One of closed_form, quadrature, delta_limit
        time: Evaluation time, None for long-time closed forms
        regime_flags: Asymptotic conditions that hold for the inputs
        error_estimate: Relative convergence estimate, quadrature only
        warnings: Regime or validity warnings
        details: Auxiliary numbers (dominance ratio, two-term value, ...)
    """

    value: float
    method: str
    time: Optional[float] = None
    regime_flags: Tuple[str, ...] = ()
    error_estimate: Optional[float] = None
    warnings: Tuple[str, ...] = ()
    details: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Unknown method '{self.method}'")
        if not (self.value >= 0.0):
            raise ValueError(f"Probability must be non-negative, got {self.value}")
        if (self.error_estimate is not None) != (self.method == METHOD_QUADRATURE):
            raise ValueError("error_estimate must be present exactly for quadrature results")
        object.__setattr__(self, 'regime_flags', tuple(sorted(self.regime_flags)))
        object.__setattr__(self, 'warnings', tuple(self.warnings))

    def scaled(self, factor: float, **extra_details: float) -> 'ProbabilityResult':
        details = dict(self.details)
        details.update(extra_details)
        return ProbabilityResult(
            value=self.value * factor,
            method=self.method,
            time=self.time,
            regime_flags=self.regime_flags,
            error_estimate=self.error_estimate,
            warnings=self.warnings,
            details=details,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'value': self.value,
            'time': self.time,
            'regime_flags': list(self.regime_flags),
            'error_estimate': self.error_estimate,
            'warnings': list(self.warnings),
            'details': dict(sorted(self.details.items())),
        }


def make_grid(source: SourceParams, atoms: Optional[AtomPair], T: float,
              coverage: Optional[float] = None,
              settings: EngineSettings = DEFAULT_SETTINGS,
              extra_frequencies: Iterable[float] = ()) -> FrequencyGrid:
    """Build the comb window that supports a source and a pair of atoms.

    Each central frequency and each atomic frequency gets a window of
    half-width coverage*max(width); overlapping windows are merged and the
    comb spacing is 2*pi/T.

    Args:
        source: Emitter parameters
        atoms: Detecting atoms, or None for a state-only grid
        T: Quantization time
        coverage: Window half-width in units of the largest width
        settings: Engine thresholds and budgets
        extra_frequencies: Further frequencies to cover (sweeps)

    Returns:
        The frequency grid

    Raises:
        ConfigError: If T or coverage is invalid
        GridResolutionError: If the spacing under-resolves the narrowest line
        BudgetExceededError: If the grid exceeds the point budget
    """
    coverage = settings.coverage if coverage is None else float(coverage)
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ConfigError(f"Quantization time T must be positive, got {T!r}")
    if coverage < settings.min_coverage:
        raise ConfigError(f"coverage must be >= {settings.min_coverage}, got {coverage}")

    spacing = TWO_PI / T
    limit = source.min_width / settings.resolution_factor
    if spacing > limit * (1.0 + 1e-9):
        raise GridResolutionError(
            f"Grid under-resolved: spacing {spacing:.6g} exceeds min(width)/"
            f"{settings.resolution_factor:g} = {limit:.6g}; need T >= {TWO_PI / limit:.6g}"
        )

    half_width = coverage * source.max_width
    centers = [source.omega_alpha, source.omega_beta]
    if atoms is not None:
        centers.extend([atoms.omega1, atoms.omega2])
    centers.extend(float(w) for w in extra_frequencies)
    intervals = sorted((c - half_width, c + half_width) for c in centers)

    omega_min = intervals[0][0]
    omega_max = max(stop for _, stop in intervals)
    n_points = int(math.ceil((omega_max - omega_min) / spacing - 1e-9)) + 1

    windows: List[List[int]] = []
    for start, stop in intervals:
        first = max(0, int(math.floor((start - omega_min) / spacing + 1e-9)))
        last = min(n_points, int(math.ceil((stop - omega_min) / spacing - 1e-9)) + 1)
        if windows and first <= windows[-1][1]:
            windows[-1][1] = max(windows[-1][1], last)
        else:
            windows.append([first, last])

    grid = FrequencyGrid.uniform(omega_min, T, n_points, [tuple(w) for w in windows])
    if grid.n_active > settings.max_grid_points:
        raise BudgetExceededError(
            f"Grid needs {grid.n_active} points per axis, budget is {settings.max_grid_points}"
        )
    logger.debug(f"Built grid with {grid.n_active} active points in {len(grid.windows)} window(s), "
                 f"spacing {spacing:.4g}")
    return grid


def auto_quantization_time(source: SourceParams,
                           settings: EngineSettings = DEFAULT_SETTINGS,
                           oversampling: float = 1.0) -> float:
    """Smallest quantization time whose comb resolves the narrowest line."""
    spacing = source.min_width / (settings.resolution_factor * oversampling)
    return TWO_PI / spacing


def regime_flags(source: SourceParams, atoms: AtomPair, d: Optional[Detunings] = None,
                 t: Optional[float] = None,
                 settings: EngineSettings = DEFAULT_SETTINGS) -> FrozenSet[str]:
    """Return the asymptotic conditions that hold for the given inputs.

    long_time: t*min(width) >= threshold. scale_separation: Delta/max(width)
    >= threshold. small_detuning: |delta| <= width_alpha.
    frequency_separation: |omega_alpha - omega_beta|/max(width) >= threshold.
    width_hierarchy: width_alpha < width_beta.
    """
    d = d if d is not None else Detunings.from_frequencies(source, atoms)
    threshold = settings.regime_threshold
    flags = set()
    if t is not None and t * source.min_width >= threshold:
        flags.add(LONG_TIME)
    if d.Delta / source.max_width >= threshold:
        flags.add(SCALE_SEPARATION)
    if abs(d.delta) <= source.width_alpha:
        flags.add(SMALL_DETUNING)
    if abs(source.omega_alpha - source.omega_beta) / source.max_width >= threshold:
        flags.add(FREQUENCY_SEPARATION)
    if source.width_alpha < source.width_beta:
        flags.add(WIDTH_HIERARCHY)
    return frozenset(flags)
