#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Scenario configuration for the TWOPHOTON project.

A scenario is one JSON document naming a biphoton state, the transforms
applied to it, the atom pair, the grid, the evaluation time and the method.
Sweeps wrap a scenario with one varied parameter. Named presets bundle the
parameter sets used throughout the tests and the figure reproductions.
"""

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional, Union

import numpy as np

from twophoton.core import ConfigError, EngineSettings, DEFAULT_SETTINGS
from twophoton.utils.validation import validate_scenario_dict, validate_choice, validate_positive
from twophoton.utils.file_utils import load_json, save_json

logger = logging.getLogger(__name__)

SWEEP_VARIABLES = ('delta', 'Delta', 'width_alpha', 'width_beta', 'alpha_mag', 't')
SWEEP_SCALES = ('linear', 'log')
OUTPUT_FORMATS = ('csv', 'json')


@dataclass
class ScenarioConfig:
    """Configuration of a single scenario.

    Attributes:
        state: State kind and emitter parameters
        atoms: Explicit atom frequencies, or a 'symmetric' placement {Delta, delta}
        transforms: Transforms applied in order to the pure state
        grid: 'auto' or {T | spacing, coverage, oversampling}
        time: Evaluation time, or 'T' for the quantization time
        method: closed, quadrature, delta or all
        engine: Overrides of the engine settings
        map: Correlation map request {kind, ranges, resolution, method}
        output: Output path and format
        name: Scenario label used in records
    """

    state: Dict[str, Any]
    atoms: Dict[str, Any]
    transforms: List[Dict[str, Any]] = field(default_factory=list)
    grid: Union[str, Dict[str, Any]] = 'auto'
    time: Union[str, float] = 'T'
    method: str = 'all'
    engine: Dict[str, Any] = field(default_factory=dict)
    map: Optional[Dict[str, Any]] = None
    output: Dict[str, Any] = field(default_factory=dict)
    name: str = 'scenario'

    def __post_init__(self):
        is_valid, message = validate_scenario_dict(self.to_dict())
        if not is_valid:
            raise ConfigError(message)
        if self.output.get('format') is not None:
            is_valid, message = validate_choice(self.output['format'], OUTPUT_FORMATS, 'output.format')
            if not is_valid:
                raise ConfigError(message)
        if self.map is not None:
            self._validate_map()
        # unknown engine keys fail here rather than mid-run
        self.settings()

    def _validate_map(self) -> None:
        is_valid, message = validate_choice(self.map.get('kind'), ('time', 'freq'), 'map.kind')
        if not is_valid:
            raise ConfigError(message)
        ranges = self.map.get('ranges')
        if (not isinstance(ranges, list) or len(ranges) != 2
                or any(not isinstance(r, list) or len(r) != 2 for r in ranges)):
            raise ConfigError("map.ranges must be [[min1, max1], [min2, max2]]")

    def settings(self, threads: Optional[int] = None) -> EngineSettings:
        """Engine settings with this scenario's overrides (and an optional thread count)."""
        overrides = dict(self.engine)
        if threads is not None:
            overrides['threads'] = int(threads)
        return DEFAULT_SETTINGS.replace(**overrides) if overrides else DEFAULT_SETTINGS

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'name': self.name,
            'state': self.state,
            'transforms': self.transforms,
            'atoms': self.atoms,
            'grid': self.grid,
            'time': self.time,
            'method': self.method,
            'engine': self.engine,
            'output': self.output,
        }
        if self.map is not None:
            data['map'] = self.map
        return data

    def save(self, filepath: str) -> None:
        save_json(self.to_dict(), filepath)

    @classmethod
    def from_dict(cls, data: Any) -> 'ScenarioConfig':
        is_valid, message = validate_scenario_dict(data)
        if not is_valid:
            raise ConfigError(message)
        known = {'name', 'state', 'transforms', 'atoms', 'grid', 'time', 'method', 'engine', 'map', 'output'}
        unknown = set(data) - known - {'sweep'}
        if unknown:
            raise ConfigError(f"Unknown scenario keys: {', '.join(sorted(unknown))}")
        return cls(**{key: copy.deepcopy(value) for key, value in data.items() if key in known})

    @classmethod
    def load(cls, filepath: str) -> 'ScenarioConfig':
        """Load a scenario from a JSON file.

        Raises:
            ConfigError: If the file is missing, malformed or invalid
        """
        return cls.from_dict(read_document(filepath))


@dataclass
class SweepConfig:
    """A scenario with one parameter varied over a range.

    Attributes:
        base: Scenario at the start of the sweep
        variable: Varied parameter
        start: First value
        stop: Last value
        steps: Number of values (at least 2)
        scale: 'linear' or 'log' spacing
        relative: For 't', values are fractions of the quantization time
    """

    base: ScenarioConfig
    variable: str
    start: float
    stop: float
    steps: int = 21
    scale: str = 'linear'
    relative: bool = False

    def __post_init__(self):
        for check in (validate_choice(self.variable, SWEEP_VARIABLES, 'sweep.variable'),
                      validate_choice(self.scale, SWEEP_SCALES, 'sweep.scale')):
            if not check[0]:
                raise ConfigError(check[1])
        if not isinstance(self.steps, int) or self.steps < 2:
            raise ConfigError(f"sweep.steps must be an integer >= 2, got {self.steps}")
        for value, name in ((self.start, 'sweep.from'), (self.stop, 'sweep.to')):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ConfigError(f"{name} must be a finite number")
        if self.scale == 'log' or self.variable in ('width_alpha', 'width_beta'):
            for value, name in ((self.start, 'sweep.from'), (self.stop, 'sweep.to')):
                is_valid, message = validate_positive(value, name)
                if not is_valid:
                    raise ConfigError(message)
        if self.variable in ('alpha_mag', 't') and min(self.start, self.stop) < 0:
            raise ConfigError(f"sweep over {self.variable} needs non-negative values")
        if self.variable in ('delta', 'Delta') and 'symmetric' not in self.base.atoms:
            raise ConfigError(f"sweep over {self.variable} needs a symmetric atom placement")

    def values(self) -> np.ndarray:
        if self.scale == 'log':
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)

    def to_dict(self) -> Dict[str, Any]:
        data = self.base.to_dict()
        data['sweep'] = {'variable': self.variable, 'from': self.start, 'to': self.stop,
                         'steps': self.steps, 'scale': self.scale, 'relative': self.relative}
        return data

    def save(self, filepath: str) -> None:
        save_json(self.to_dict(), filepath)

    @classmethod
    def from_dict(cls, data: Any) -> 'SweepConfig':
        if not isinstance(data, dict) or not isinstance(data.get('sweep'), dict):
            raise ConfigError("Sweep document needs a 'sweep' object")
        sweep = data['sweep']
        for key in ('variable', 'from', 'to'):
            if key not in sweep:
                raise ConfigError(f"sweep.{key} is required")
        return cls(base=ScenarioConfig.from_dict(data), variable=sweep['variable'],
                   start=sweep['from'], stop=sweep['to'], steps=sweep.get('steps', 21),
                   scale=sweep.get('scale', 'linear'), relative=bool(sweep.get('relative', False)))

    @classmethod
    def load(cls, filepath: str) -> 'SweepConfig':
        return cls.from_dict(read_document(filepath))


def read_document(filepath: str) -> Dict[str, Any]:
    """Read a JSON configuration document, mapping I/O and syntax errors to ConfigError."""
    try:
        return load_json(filepath)
    except FileNotFoundError:
        raise ConfigError(f"Configuration file not found: {filepath}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {filepath}: {e}")


def _cascade_state(width_alpha: float, width_beta: float, omega_alpha: float, omega_beta: float) -> Dict[str, Any]:
    return {'kind': 'cascade', 'omega_alpha': omega_alpha, 'omega_beta': omega_beta,
            'width_alpha': width_alpha, 'width_beta': width_beta}


def _spdc_state(width_alpha: float, width_beta: float, omega_alpha: float, omega_beta: float,
                **extra: float) -> Dict[str, Any]:
    state = {'kind': 'spdc', 'omega_alpha': omega_alpha, 'omega_beta': omega_beta,
             'width_alpha': width_alpha, 'width_beta': width_beta}
    state.update(extra)
    return state


# Figure parameters are raw internal-unit values (rad/us, us)
_FIG_WIDTHS = (0.05, 0.5)
_FIG_FREQUENCIES = (1.5, 3.5)
_FIG_ATOMS = {'symmetric': {'Delta': 0.0}}
_FIG_GRID = {'coverage': 10}
_FIG2_RANGES = [[0.0, 5.0], [0.0, 5.0]]

SCENARIO_PRESETS: Dict[str, Dict[str, Any]] = {
    'cascade-default': {
        'state': _cascade_state(0.05, 0.5, 100.0, 5000.0),
        'atoms': {'symmetric': {'Delta': 10.0, 'delta': 0.0}},
        'grid': {'coverage': 20},
    },
    'uncorrelated-dr': {
        'state': {'kind': 'uncorrelated', 'omega_alpha': 10.0, 'omega_beta': 50.0,
                  'width_alpha': 0.1, 'width_beta': 0.1},
        'atoms': {'symmetric': {'Delta': 0.0, 'delta': 0.0}},
        'grid': {'coverage': 40},
    },
    'spdc-default': {
        'state': _spdc_state(0.5, 1.0, 20.0, 40.0),
        'atoms': {'symmetric': {'Delta': 2.0, 'delta': 0.0}},
        'grid': {'coverage': 20},
    },
    'spdc-late': {
        'state': _spdc_state(0.5, 1.0, 20.0, 40.0, t0_over_T=2.0),
        'atoms': {'symmetric': {'Delta': 2.0, 'delta': 0.0}},
        'grid': {'coverage': 20},
    },
    'cert-cascade': {
        'state': _cascade_state(0.1, 0.5, 1.0, 3.0),
        'atoms': {'symmetric': {'Delta': 0.0, 'delta': 0.0}},
        'grid': {'T': 400.0, 'coverage': 40},
        'engine': {'energy_extension': 2},
    },
    'cert-spdc': {
        'state': _spdc_state(0.5, 1.0, 20.0, 40.0),
        'atoms': {'symmetric': {'Delta': 0.0, 'delta': 0.0}},
        'grid': {'coverage': 20},
    },
    'fig1-cascade': {
        'state': _cascade_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES),
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'time', 'ranges': [[0.0, 40.0], [0.0, 40.0]], 'resolution': [201, 201]},
    },
    'fig1-spdc': {
        'state': _spdc_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES, t0=30.0),
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'time', 'ranges': [[0.0, 60.0], [0.0, 60.0]], 'resolution': [201, 201]},
    },
    'fig2-a': {
        'state': _cascade_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES),
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'freq', 'ranges': _FIG2_RANGES, 'resolution': [201, 201]},
    },
    'fig2-b': {
        'state': _cascade_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES),
        'transforms': [{'type': 'factorize'}],
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'freq', 'ranges': _FIG2_RANGES, 'resolution': [201, 201]},
    },
    'fig2-c': {
        'state': _spdc_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES),
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'freq', 'ranges': _FIG2_RANGES, 'resolution': [201, 201]},
    },
    'fig2-d': {
        'state': _spdc_state(*_FIG_WIDTHS, *_FIG_FREQUENCIES),
        'transforms': [{'type': 'factorize'}],
        'atoms': _FIG_ATOMS,
        'grid': _FIG_GRID,
        'map': {'kind': 'freq', 'ranges': _FIG2_RANGES, 'resolution': [201, 201]},
    },
}

SWEEP_PRESETS: Dict[str, Dict[str, Any]] = {
    'sweep-cascade-delta': {
        'base': 'cascade-default',
        'sweep': {'variable': 'delta', 'from': -0.5, 'to': 0.5, 'steps': 41},
        'engine': {'refine_check': False},
    },
    'sweep-uncorrelated-delta': {
        'base': 'uncorrelated-dr',
        'sweep': {'variable': 'delta', 'from': -1.0, 'to': 1.0, 'steps': 21},
        'atoms': {'symmetric': {'Delta': 10.0, 'delta': 0.0}},
        'engine': {'refine_check': False},
    },
    'sweep-spdc-delta': {
        'base': 'spdc-default',
        'sweep': {'variable': 'delta', 'from': -1.0, 'to': 1.0, 'steps': 41},
        'engine': {'refine_check': False},
    },
    'sweep-rho1-t': {
        'base': 'cascade-default',
        'transforms': [{'type': 'disentangle'}],
        'method': 'quadrature',
        'sweep': {'variable': 't', 'from': 0.5, 'to': 1.0, 'steps': 6, 'scale': 'log', 'relative': True},
        'engine': {'refine_check': False},
    },
}

PRESETS = sorted(SCENARIO_PRESETS) + sorted(SWEEP_PRESETS)


def preset_document(name: str) -> Dict[str, Any]:
    """Full scenario (or sweep) document for a named preset."""
    if name in SCENARIO_PRESETS:
        document = copy.deepcopy(SCENARIO_PRESETS[name])
        document['name'] = name
        return document
    if name in SWEEP_PRESETS:
        sweep = copy.deepcopy(SWEEP_PRESETS[name])
        document = preset_document(sweep.pop('base'))
        document.update(sweep)
        document['name'] = name
        return document
    raise ConfigError(f"Unknown preset '{name}'. Known: {', '.join(PRESETS)}")


def load_preset(name: str) -> Union[ScenarioConfig, SweepConfig]:
    """Load a named preset as a scenario or sweep configuration."""
    document = preset_document(name)
    if 'sweep' in document:
        return SweepConfig.from_dict(document)
    return ScenarioConfig.from_dict(document)
