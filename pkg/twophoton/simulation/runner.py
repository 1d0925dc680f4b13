#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Scenario execution for the TWOPHOTON project.

This module turns a scenario configuration into emitter parameters, atoms,
a grid and a state, and runs the probability, sweep, correlation-map,
enhancement and certificate computations behind the command-line
subcommands.
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from twophoton.core import (
    TWO_PI, AtomPair, SourceParams, Detunings, FrequencyGrid, ProbabilityResult,
    EngineSettings, ConfigError, RegimeViolationError, make_grid, auto_quantization_time,
    regime_flags,
)
from twophoton.states import (
    BiphotonState, StateKind, make_uncorrelated, make_cascade, make_spdc,
    apply_transforms, coherent_lift,
)
from twophoton import engine
from twophoton.correlations import (
    CorrelationMap, emit_figure_grid, correlation_widths, closed_cascade_widths, FREQ,
)
from twophoton.validation import (
    BUILTIN_FUNCTIONS, CertificateReport, comparison_certificate, delta_certificate, get_test_function,
)
from twophoton.simulation.config import ScenarioConfig, SweepConfig, load_preset

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['variable', 'value_closed', 'value_quadrature', 'ratio']
ENERGY_PRESETS = ('cert-cascade', 'cert-spdc')

_STATE_BUILDERS = {
    'uncorrelated': make_uncorrelated,
    'cascade': make_cascade,
    'spdc': make_spdc,
}


@dataclass
class BuiltScenario:
    """Objects built from a scenario configuration."""

    source: SourceParams
    atoms: AtomPair
    grid: FrequencyGrid
    pure_state: BiphotonState
    state: BiphotonState
    time: float

    @property
    def T(self) -> float:
        return self.grid.mode_density_time

    @property
    def detunings(self) -> Detunings:
        return Detunings.from_frequencies(self.source, self.atoms)


def build_source(state: Dict[str, Any], T: Optional[float] = None) -> SourceParams:
    """Emitter parameters from the 'state' section; t0_over_T needs T."""
    t0 = state.get('t0')
    if t0 is None and state.get('t0_over_T') is not None:
        if T is None:
            raise ConfigError("t0_over_T needs the quantization time")
        t0 = state['t0_over_T'] * T
    return SourceParams(
        omega_alpha=float(state['omega_alpha']),
        omega_beta=float(state['omega_beta']),
        width_alpha=float(state['width_alpha']),
        width_beta=float(state['width_beta']),
        t0=None if t0 is None else float(t0),
        phase=float(state.get('phase', math.pi / 2.0)),
    )


def width_source(state: Dict[str, Any]) -> SourceParams:
    """Emitter parameters with the pulse timing left unresolved, for grid sizing."""
    return build_source({**state, 't0': None, 't0_over_T': None})


def build_atoms(atoms: Dict[str, Any], source: SourceParams,
                Delta: Optional[float] = None, delta: Optional[float] = None) -> AtomPair:
    """Atom pair from the 'atoms' section, optionally overriding the symmetric placement."""
    gamma1 = float(atoms.get('gamma1', 1e-3))
    gamma2 = float(atoms.get('gamma2', 1e-3))
    p0 = float(atoms.get('p0', 1.0))
    if 'symmetric' in atoms:
        placement = atoms['symmetric']
        Delta = float(placement['Delta']) if Delta is None else Delta
        delta = float(placement.get('delta', 0.0)) if delta is None else delta
        pair = AtomPair.symmetric(source, Delta, delta, gamma1, gamma2, p0)
    else:
        pair = AtomPair(float(atoms['omega1']), float(atoms['omega2']), gamma1, gamma2, p0)
    if atoms.get('section') is not None:
        pair = AtomPair.from_beam_section(pair.omega1, pair.omega2, gamma1, gamma2, float(atoms['section']))
    return pair


def _grid_options(config: ScenarioConfig) -> Dict[str, Any]:
    return config.grid if isinstance(config.grid, dict) else {}


def quantization_time(config: ScenarioConfig, source: SourceParams, settings: EngineSettings) -> float:
    """T from the grid section: explicit T, explicit spacing, or the auto rule."""
    options = _grid_options(config)
    if options.get('T') is not None:
        return float(options['T'])
    if options.get('spacing') is not None:
        return TWO_PI / float(options['spacing'])
    return auto_quantization_time(source, settings, float(options.get('oversampling', 1.0)))


def closed_probability(state: BiphotonState, atoms: AtomPair, t: float,
                       d: Optional[Detunings] = None) -> Optional[ProbabilityResult]:
    """Closed-form probability for a catalog state and its transforms; None for custom states."""
    if state.kind == StateKind.COHERENT_LIFT:
        base = closed_probability(state.parent, atoms, t, d)
        return None if base is None else base.scaled(state.lift_factor, lift_factor=state.lift_factor)

    root = state.pure_root
    source, T = root.source, state.T
    if root.kind == StateKind.UNCORRELATED_PURE:
        if state.is_pure:
            return engine.closed_p11(source, atoms, d)
        return engine.closed_p11_mixed(source, atoms, t, T, d)
    if root.kind == StateKind.CASCADE_PURE:
        if state.is_pure:
            return engine.closed_cascade_long_time(source, atoms, d)
        p1, p2 = engine.closed_cascade_rho1_rho2(source, atoms, t, T, d)
        return p1 if state.kind == StateKind.DIAGONAL_MIXED else p2
    if root.kind == StateKind.SPDC_PURE:
        pure, diagonal, factorized = engine.closed_spdc_family(source, atoms, t, T, d)
        if state.is_pure:
            return pure
        return diagonal if state.kind == StateKind.DIAGONAL_MIXED else factorized
    return None


def check_regime(state: BiphotonState, atoms: AtomPair, t: float, settings: EngineSettings) -> None:
    """Raise RegimeViolationError when a closed form's asymptotic conditions fail."""
    base = state.base
    kind = base.pure_root.kind if base.is_pure else base.kind
    required = engine.required_flags(kind)
    present = regime_flags(base.pure_root.source, atoms, None, t, settings)
    missing = sorted(required - present)
    if missing:
        raise RegimeViolationError(
            f"Closed form for {state.tag} requires {', '.join(missing)}, which does not hold"
        )


class ScenarioRunner:
    """Runs the computations of one scenario.

    Attributes:
        config: Scenario configuration
        settings: Engine settings with the scenario overrides
        logger: Logger instance
    """

    def __init__(self, config: ScenarioConfig, threads: Optional[int] = None):
        self.config = config
        self.settings = config.settings(threads)
        self.logger = logging.getLogger(__name__)

    def build(self, source: Optional[SourceParams] = None, atoms: Optional[AtomPair] = None,
              T: Optional[float] = None, extra_frequencies: Sequence[float] = ()) -> BuiltScenario:
        """Construct source, atoms, grid and state.

        Args:
            source: Emitter parameters replacing the configured ones
            atoms: Atom pair replacing the configured one
            T: Quantization time replacing the configured rule
            extra_frequencies: Frequencies the grid must also cover
        """
        config = self.config
        if T is None:
            T = quantization_time(config, source or width_source(config.state), self.settings)
        if source is None:
            source = build_source(config.state, T)
        atoms = atoms or build_atoms(config.atoms, source)

        grid = make_grid(source, atoms, T, _grid_options(config).get('coverage'), self.settings,
                         extra_frequencies)
        builder = _STATE_BUILDERS[config.state['kind']]
        pure = builder(source, grid=grid, settings=self.settings)
        state = apply_transforms(pure, config.transforms)
        time = T if config.time == 'T' else float(config.time)
        self.logger.info(f"Built {state.tag} on {grid.n_active} points per axis (T={T:g}, t={time:g})")
        return BuiltScenario(source=pure.source, atoms=atoms, grid=grid, pure_state=pure,
                             state=state, time=time)

    def _methods(self) -> List[str]:
        method = self.config.method
        return ['closed', 'quadrature', 'delta'] if method == 'all' else [method]

    def probabilities(self, strict: bool = False,
                      built: Optional[BuiltScenario] = None) -> List[Dict[str, Any]]:
        """One record per requested method.

        Raises:
            RegimeViolationError: With ``strict`` when a closed form's flags are unset
        """
        built = built or self.build()
        records: List[Dict[str, Any]] = []
        for method in self._methods():
            if method == 'closed':
                if strict:
                    check_regime(built.state, built.atoms, built.time, self.settings)
                result = closed_probability(built.state, built.atoms, built.time)
                if result is None:
                    self.logger.warning(f"No closed form for {built.state.tag}; record skipped")
                    continue
            elif method == 'quadrature':
                result = engine.prob_quadrature(built.state, built.atoms, t=built.time, settings=self.settings)
            else:
                result = engine.prob_delta_limit(built.state, built.atoms, built.time, self.settings)
            record = result.to_dict()
            record['state'] = built.state.tag
            records.append(record)
            self.logger.info(f"{method}: P = {result.value:.6e}")
        return records

    def correlation_map(self, kind: Optional[str] = None,
                        ranges: Optional[Sequence[Sequence[float]]] = None,
                        resolution: Any = None, method: Optional[str] = None,
                        built: Optional[BuiltScenario] = None) -> CorrelationMap:
        """Correlation map from the scenario's 'map' section or explicit arguments."""
        request = dict(self.config.map or {})
        kind = kind or request.get('kind')
        ranges = ranges or request.get('ranges')
        resolution = resolution or request.get('resolution', 201)
        method = method or request.get('method', 'auto')
        if kind is None or ranges is None:
            raise ConfigError("A correlation map needs a kind and ranges")
        built = built or self.build()
        return emit_figure_grid(built.state, kind, ranges, resolution, method, self.settings)

    def enhancement(self, built: Optional[BuiltScenario] = None, resolution: int = 401) -> Dict[str, Any]:
        """G_p, G_12, dominance ratio and the anti-diagonal width of the frequency map."""
        built = built or self.build()
        pure, atoms, source = built.pure_state, built.atoms, built.source
        half = 8.0 * source.max_width
        ranges = ((source.omega_alpha - half, source.omega_alpha + half),
                  (source.omega_beta - half, source.omega_beta + half))
        cmap = emit_figure_grid(pure, FREQ, ranges, resolution, settings=self.settings)
        diagonal_width, antidiagonal_width = correlation_widths(cmap)
        report: Dict[str, Any] = {
            'G_p': engine.enhancement_gp(pure, atoms, self.settings),
            'G_12': engine.enhancement_g12(pure, atoms),
            'dominance_ratio': engine.dominance_ratio(pure, atoms),
            'antidiagonal_width': antidiagonal_width,
            'diagonal_width': diagonal_width,
            'state': pure.tag,
        }
        if pure.kind == StateKind.CASCADE_PURE:
            report['reference_widths'] = closed_cascade_widths(source.width_alpha, source.width_beta)
        self.logger.info(f"Enhancement of {pure.tag}: G_p={report['G_p']:.4f}, G_12={report['G_12']:.4g}")
        return report


class SweepRunner:
    """Evaluates a scenario along one varied parameter."""

    def __init__(self, config: SweepConfig, threads: Optional[int] = None):
        self.config = config
        self.runner = ScenarioRunner(config.base, threads)
        self.settings = self.runner.settings
        self.logger = logging.getLogger(__name__)
        method = config.base.method
        if method == 'delta':
            raise ConfigError("Sweeps compare closed and quadrature values; method 'delta' is not supported")
        self.want_closed = method in ('closed', 'all')
        self.want_quadrature = method in ('quadrature', 'all')

    def _evaluate(self, state: BiphotonState, atoms: AtomPair, t: float) -> Tuple[float, float]:
        closed = math.nan
        quadrature = math.nan
        if self.want_closed:
            result = closed_probability(state, atoms, t)
            closed = math.nan if result is None else result.value
        if self.want_quadrature:
            quadrature = engine.prob_quadrature(state, atoms, t=t, settings=self.settings).value
        return closed, quadrature

    def _detuning_sweep(self, values: np.ndarray) -> List[Tuple[float, float]]:
        base = self.config.base
        T = quantization_time(base, width_source(base.state), self.settings)
        source = build_source(base.state, T)
        name = self.config.variable
        pairs = [build_atoms(base.atoms, source, **{name: float(v)}) for v in values]
        extra = [omega for pair in pairs for omega in (pair.omega1, pair.omega2)]
        built = self.runner.build(source=source, atoms=pairs[0], T=T, extra_frequencies=extra)
        return [self._evaluate(built.state, pair, built.time) for pair in pairs]

    def _width_sweep(self, values: np.ndarray) -> List[Tuple[float, float]]:
        base = self.config.base
        name = self.config.variable
        narrowest = width_source({**base.state, name: float(np.min(values))})
        T = quantization_time(base, narrowest, self.settings)
        results = []
        for value in values:
            source = build_source({**base.state, name: float(value)}, T)
            built = self.runner.build(source=source, T=T)
            results.append(self._evaluate(built.state, built.atoms, built.time))
        return results

    def _lift_sweep(self, values: np.ndarray) -> List[Tuple[float, float]]:
        built = self.runner.build()
        if not built.state.is_pure:
            raise ConfigError("alpha_mag sweeps lift the pure state; remove other transforms")
        closed, quadrature = self._evaluate(built.state, built.atoms, built.time)
        results = []
        for value in values:
            factor = coherent_lift(built.state, float(value)).lift_factor
            results.append((closed * factor, quadrature * factor))
        return results

    def _time_sweep(self, values: np.ndarray) -> List[Tuple[float, float]]:
        built = self.runner.build()
        scale = built.T if self.config.relative else 1.0
        return [self._evaluate(built.state, built.atoms, float(v) * scale) for v in values]

    def run(self) -> pd.DataFrame:
        """Sweep table with columns variable, value_closed, value_quadrature, ratio."""
        values = self.config.values()
        variable = self.config.variable
        self.logger.info(f"Sweeping {variable} over {values.size} values")
        if variable in ('delta', 'Delta'):
            pairs = self._detuning_sweep(values)
        elif variable in ('width_alpha', 'width_beta'):
            pairs = self._width_sweep(values)
        elif variable == 'alpha_mag':
            pairs = self._lift_sweep(values)
        else:
            pairs = self._time_sweep(values)

        closed = np.array([pair[0] for pair in pairs], dtype=float)
        quadrature = np.array([pair[1] for pair in pairs], dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(closed > 0, quadrature / closed, np.nan)
        return pd.DataFrame({'variable': values, 'value_closed': closed,
                             'value_quadrature': quadrature, 'ratio': ratio}, columns=SWEEP_COLUMNS)


def analyze_sweep(table: pd.DataFrame, variable: str) -> Dict[str, float]:
    """Lorentzian and Gaussian resonance widths for detuning sweeps, log-log slope for time sweeps.

    Uses the quadrature column when it is filled, the closed column otherwise.
    """
    column = 'value_quadrature' if table['value_quadrature'].notna().all() else 'value_closed'
    x = table['variable'].to_numpy(dtype=float)
    y = table[column].to_numpy(dtype=float)
    if not np.all(np.isfinite(y)) or not np.any(y > 0):
        return {}
    if variable in ('delta', 'Delta'):
        analysis = {'relative_variation': float((y.max() - y.min()) / y.max())}
        try:
            analysis.update(engine.fit_lorentzian_fwhm(x, y))
        except (RuntimeError, ValueError) as e:
            logger.warning(f"Lorentzian fit failed: {e}")
        try:
            gaussian = engine.fit_gaussian_width(x, y)
            analysis['gaussian_width'] = gaussian['width']
            analysis['gaussian_r_squared'] = gaussian['r_squared']
        except (RuntimeError, ValueError) as e:
            logger.warning(f"Gaussian fit failed: {e}")
        return analysis
    if variable == 't' and np.all(x > 0):
        return engine.loglog_slope(x, y)
    return {}


def run_certificates(which: str, functions: Optional[Sequence[str]] = None,
                     presets: Sequence[str] = ENERGY_PRESETS,
                     threads: Optional[int] = None) -> List[CertificateReport]:
    """Delta-function and energy-flow certificates.

    Args:
        which: 'delta', 'energy' or 'all'
        functions: Test function names (default: the built-in causal set)
        presets: Scenario presets whose pure states get an energy certificate
        threads: Worker threads

    Raises:
        CausalityError: If a requested test function is refused
    """
    if which not in ('delta', 'energy', 'all'):
        raise ConfigError(f"Unknown certificate set '{which}'")
    reports: List[CertificateReport] = []
    if which in ('delta', 'all'):
        for name in functions or sorted(BUILTIN_FUNCTIONS):
            reports.append(delta_certificate(get_test_function(name)))
    if which in ('energy', 'all'):
        for name in presets:
            config = load_preset(name)
            if isinstance(config, SweepConfig):
                raise ConfigError(f"Preset '{name}' is a sweep, not a scenario")
            built = ScenarioRunner(config, threads).build()
            report = comparison_certificate(built.pure_state)
            report.provenance['preset'] = name
            reports.append(report)
    for report in reports:
        logger.info(f"Certificate {report.name}: {'pass' if report.passed else 'FAIL'}")
    return reports
