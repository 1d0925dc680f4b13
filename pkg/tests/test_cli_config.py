#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Test script for the TWOPHOTON configuration layer and command-line interface.

This module contains tests for scenario and sweep documents, the presets,
the sweep runner and the exit codes of the command-line entry point.
"""

import unittest
import os
import sys
import json
import logging
import tempfile
import numpy as np
import pandas as pd

# Add the parent directory to the path so we can import the twophoton package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from twophoton.core import (
    TwoPhotonError, ConfigError, GridResolutionError, BudgetExceededError, RegimeViolationError,
    StateKindError, CausalityError, CorrelationStructureError, SpectralWeightError,
)
from twophoton.simulation.config import (
    ScenarioConfig, SweepConfig, PRESETS, SCENARIO_PRESETS, preset_document, load_preset, read_document,
)
from twophoton.simulation.runner import SweepRunner, analyze_sweep, build_atoms, build_source
from twophoton.run_simulation import (
    main, exit_code, EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_RESOURCE, EXIT_REGIME,
)


def small_cascade_document():
    """A cascade scenario small enough for quick quadrature runs."""
    return {
        'name': 'small-cascade',
        'state': {'kind': 'cascade', 'omega_alpha': 10.0, 'omega_beta': 30.0,
                  'width_alpha': 0.2, 'width_beta': 0.4},
        'atoms': {'symmetric': {'Delta': 1.0, 'delta': 0.1}},
        'grid': {'coverage': 20},
        'method': 'quadrature',
        'engine': {'refine_check': False, 'block_elements': 1 << 14},
    }


class TestScenarioConfig(unittest.TestCase):
    """Test cases for scenario and sweep documents."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_presets_load(self):
        """Test that every preset loads as a scenario or a sweep."""
        for name in PRESETS:
            config = load_preset(name)
            if name in SCENARIO_PRESETS:
                self.assertIsInstance(config, ScenarioConfig)
                self.assertEqual(config.name, name)
            else:
                self.assertIsInstance(config, SweepConfig)
        with self.assertRaises(ConfigError):
            preset_document('fig9')

    def test_cascade_default_widths(self):
        """Test that the default cascade uses gamma_alpha = 0.05 and gamma_beta = 0.5."""
        state = load_preset('cascade-default').state
        self.assertEqual((state['width_alpha'], state['width_beta']), (0.05, 0.5))
        self.assertEqual(load_preset('sweep-cascade-delta').base.state['width_alpha'], 0.05)

    def test_save_and_load(self):
        """Test that a saved scenario loads back unchanged."""
        config = ScenarioConfig.from_dict(small_cascade_document())
        path = os.path.join(self.temp_dir.name, 'scenario.json')
        config.save(path)
        self.assertEqual(ScenarioConfig.load(path).to_dict(), config.to_dict())

    def test_invalid_scenarios(self):
        """Test that invalid scenario documents are refused."""
        document = small_cascade_document()
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, colour='blue'))
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, engine={'warp': 9}))
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, method='guess'))
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, map={'kind': 'phase', 'ranges': [[0, 1], [0, 1]]}))
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, map={'kind': 'time', 'ranges': [0, 1]}))
        with self.assertRaises(ConfigError):
            ScenarioConfig.from_dict(dict(document, output={'format': 'xml'}))

    def test_read_document_errors(self):
        """Test that missing and malformed files map to ConfigError."""
        with self.assertRaises(ConfigError):
            read_document(os.path.join(self.temp_dir.name, 'missing.json'))
        path = os.path.join(self.temp_dir.name, 'broken.json')
        with open(path, 'w') as f:
            f.write('{"state": ')
        with self.assertRaises(ConfigError):
            ScenarioConfig.load(path)

    def test_sweep_validation(self):
        """Test that sweeps check their variable, range and placement."""
        base = ScenarioConfig.from_dict(small_cascade_document())
        sweep = SweepConfig(base=base, variable='t', start=1.0, stop=100.0, steps=3, scale='log')
        np.testing.assert_allclose(sweep.values(), [1.0, 10.0, 100.0])
        with self.assertRaises(ConfigError):
            SweepConfig(base=base, variable='pressure', start=0.0, stop=1.0)
        with self.assertRaises(ConfigError):
            SweepConfig(base=base, variable='delta', start=-1.0, stop=1.0, steps=1)
        with self.assertRaises(ConfigError):
            SweepConfig(base=base, variable='delta', start=-1.0, stop=1.0, scale='log')
        with self.assertRaises(ConfigError):
            SweepConfig(base=base, variable='t', start=-1.0, stop=1.0)

        explicit = ScenarioConfig.from_dict(dict(small_cascade_document(),
                                                 atoms={'omega1': 11.0, 'omega2': 29.0}))
        with self.assertRaises(ConfigError):
            SweepConfig(base=explicit, variable='Delta', start=0.0, stop=1.0)
        with self.assertRaises(ConfigError):
            SweepConfig.from_dict(small_cascade_document())

    def test_builders(self):
        """Test the source and atom builders."""
        document = small_cascade_document()
        source = build_source(dict(document['state'], t0_over_T=0.25), T=100.0)
        self.assertEqual(source.t0, 25.0)
        with self.assertRaises(ConfigError):
            build_source(dict(document['state'], t0_over_T=0.25))
        atoms = build_atoms(document['atoms'], source, delta=0.0)
        self.assertAlmostEqual(atoms.omega1, 11.0)
        self.assertAlmostEqual(atoms.omega2, 29.0)


class TestSweeps(unittest.TestCase):
    """Test cases for closed-form sweeps and their analysis."""

    def run_closed(self, name):
        document = preset_document(name)
        document['method'] = 'closed'
        config = SweepConfig.from_dict(document)
        table = SweepRunner(config).run()
        self.assertEqual(list(table.columns), ['variable', 'value_closed', 'value_quadrature', 'ratio'])
        self.assertEqual(len(table), config.steps)
        self.assertTrue(table['value_quadrature'].isna().all())
        return table, analyze_sweep(table, config.variable)

    def test_cascade_resonance_width(self):
        """Test that the cascade resonance in delta has width 2*gamma_alpha."""
        _, analysis = self.run_closed('sweep-cascade-delta')
        self.assertAlmostEqual(analysis['fwhm'] / 0.1, 1.0, delta=0.1)
        self.assertAlmostEqual(analysis['center'], 0.0, delta=0.02)

    def test_spdc_resonance_width(self):
        """Test the Gaussian resonance of the down-conversion pair in delta."""
        _, analysis = self.run_closed('sweep-spdc-delta')
        self.assertAlmostEqual(analysis['gaussian_width'] / 0.5, 1.0, delta=0.1)
        self.assertGreater(analysis['gaussian_r_squared'], 0.999)

    def test_uncorrelated_flat(self):
        """Test that the uncorrelated pair does not resonate in delta."""
        _, analysis = self.run_closed('sweep-uncorrelated-delta')
        self.assertLess(analysis['relative_variation'], 0.01)

    def test_diagonal_time_growth(self):
        """Test the t^2 growth of the diagonal cascade state."""
        table, analysis = self.run_closed('sweep-rho1-t')
        self.assertAlmostEqual(analysis['slope'], 2.0, places=9)
        self.assertTrue(np.all(np.diff(table['value_closed'].to_numpy()) > 0))

    def test_delta_method_refused(self):
        """Test that sweeps refuse the delta-limit method."""
        document = preset_document('sweep-cascade-delta')
        document['method'] = 'delta'
        with self.assertRaises(ConfigError):
            SweepRunner(SweepConfig.from_dict(document))


class TestCommandLine(unittest.TestCase):
    """Test cases for the command-line entry point."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        root_logger = logging.getLogger()
        for handler in root_logger.handlers[:]:
            handler.close()
            root_logger.removeHandler(handler)
        self.temp_dir.cleanup()

    def path(self, name):
        return os.path.join(self.temp_dir.name, name)

    def write_config(self, name, document):
        path = self.path(name)
        with open(path, 'w') as f:
            json.dump(document, f)
        return path

    def run_main(self, *args):
        return main(['--no-log-file', *args])

    def test_exit_codes(self):
        """Test the exit status of every error class."""
        expected = {
            ConfigError: EXIT_CONFIG,
            StateKindError: EXIT_CONFIG,
            CausalityError: EXIT_CONFIG,
            CorrelationStructureError: EXIT_CONFIG,
            SpectralWeightError: EXIT_CONFIG,
            GridResolutionError: EXIT_RESOURCE,
            BudgetExceededError: EXIT_RESOURCE,
            RegimeViolationError: EXIT_REGIME,
            TwoPhotonError: EXIT_FAILURE,
        }
        for error_class, code in expected.items():
            self.assertEqual(exit_code(error_class('boom')), code, msg=error_class.__name__)

    def test_malformed_config(self):
        """Test that a malformed document exits with the configuration code and writes nothing."""
        path = self.path('broken.json')
        with open(path, 'w') as f:
            f.write('{not json')
        out = self.path('out.json')
        self.assertEqual(self.run_main('prob', '--config', path, '--out', out), EXIT_CONFIG)
        self.assertFalse(os.path.exists(out))
        self.assertEqual(self.run_main('prob', '--preset', 'fig9'), EXIT_CONFIG)

    def test_validate_delta(self):
        """Test the delta certificate document."""
        out = self.path('validate.json')
        status = self.run_main('validate', 'delta', '--function', 'gamma_t_exp', '--out', out)
        self.assertEqual(status, EXIT_OK)
        with open(out) as f:
            document = json.load(f)
        self.assertEqual(document['schema'], 'twophoton/validate/1')
        self.assertTrue(document['passed'])
        self.assertEqual(len(document['certificates']), 1)

    def test_validate_refused_function(self):
        """Test that a non-causal test function is a configuration error."""
        status = self.run_main('validate', 'delta', '--function', 'two_sided_exp',
                               '--out', self.path('validate.json'))
        self.assertEqual(status, EXIT_CONFIG)

    def test_strict_regime(self):
        """Test that a closed form outside its regime is refused under --strict."""
        document = preset_document('uncorrelated-dr')
        document['time'] = 1.0
        document['method'] = 'closed'
        path = self.write_config('short.json', document)
        out = self.path('prob.json')
        self.assertEqual(self.run_main('prob', '--config', path, '--strict', '--out', out), EXIT_REGIME)
        self.assertEqual(self.run_main('prob', '--config', path, '--out', out), EXIT_OK)
        with open(out) as f:
            document = json.load(f)
        self.assertEqual(document['records'][0]['method'], 'closed_form')

    def test_grid_budget(self):
        """Test that a grid over the point budget exits with the resource code."""
        document = preset_document('uncorrelated-dr')
        document['engine'] = {'max_grid_points': 100}
        path = self.write_config('budget.json', document)
        self.assertEqual(self.run_main('prob', '--config', path, '--out', self.path('prob.json')),
                         EXIT_RESOURCE)

    def test_g2_window(self):
        """Test a correlation map with explicit ranges and resolution."""
        out = self.path('g2.csv')
        status = self.run_main('g2', '--preset', 'fig2-a', '--ranges', '1', '2', '3', '4',
                               '--resolution', '2', '--out', out)
        self.assertEqual(status, EXIT_OK)
        table = pd.read_csv(out)
        self.assertEqual(list(table.columns), ['axis1', 'axis2', 'value'])
        self.assertEqual(len(table), 4)
        self.assertEqual(table['axis1'].tolist(), [1.0, 1.0, 2.0, 2.0])
        self.assertEqual(table['axis2'].tolist(), [3.0, 4.0, 3.0, 4.0])

    def test_sweep_needs_sweep_document(self):
        """Test that the sweep command refuses a plain scenario."""
        self.assertEqual(self.run_main('sweep', '--preset', 'fig2-a'), EXIT_CONFIG)

    def test_thread_determinism(self):
        """Test that the thread count does not change the output bytes."""
        path = self.write_config('small.json', small_cascade_document())
        outputs = []
        for threads in ('1', '4'):
            out = self.path(f'prob_{threads}.json')
            self.assertEqual(self.run_main('prob', '--config', path, '--threads', threads, '--out', out),
                             EXIT_OK)
            with open(out, 'rb') as f:
                outputs.append(f.read())
        self.assertEqual(outputs[0], outputs[1])


if __name__ == '__main__':
    unittest.main()
