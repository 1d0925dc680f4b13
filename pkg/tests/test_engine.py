#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Test script for the TWOPHOTON probability engine.

This module contains tests for the excitation kernel, the closed forms,
the lattice quadrature, the delta limit and the enhancement indices.
"""

import unittest
import os
import sys
import math
import numpy as np

# Add the parent directory to the path so we can import the twophoton package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from twophoton.core import (
    TWO_PI, AtomPair, SourceParams, FrequencyGrid, EngineSettings, ConfigError,
    GridResolutionError, BudgetExceededError, StateKindError, auto_quantization_time,
    LONG_TIME, FREQUENCY_SEPARATION,
)
from twophoton.states import (
    StateKind, make_uncorrelated, make_cascade, make_spdc, make_custom,
    disentangle, factorize, coherent_lift,
)
from twophoton.engine import (
    kernel, prob_quadrature, prob_delta_limit, cauchy_schwarz_bound,
    closed_p11, closed_p11_dr, closed_p11_mixed, closed_p11_2p2a, closed_p11_dr_estimate,
    closed_cascade_long_time, closed_cascade_dr, closed_cascade_2p2a,
    cascade_amplitude_exact, cascade_amplitude_compact, closed_cascade_rho1_rho2,
    closed_spdc_family, closed_spdc_limits,
    enhancement_gp, enhancement_g12, dominance_ratio, effective_spectral_area,
    fit_lorentzian_fwhm, fit_gaussian_width, loglog_slope, required_flags,
)

FAST = EngineSettings(refine_check=False)


class TestKernel(unittest.TestCase):
    """Test cases for the second-order excitation kernel."""

    def setUp(self):
        self.atoms = AtomPair(omega1=10.0, omega2=20.0, p0=4.0)

    def test_resonant_limit(self):
        """Test the removable singularity at the atomic frequencies."""
        value = kernel(np.array([10.0]), np.array([20.0]), 3.0, self.atoms, T=5.0)
        # coupling sqrt(4)/(2*5) times (i*3)^2
        self.assertAlmostEqual(complex(value[0]), -9.0 * 0.2, places=12)

    def test_zero_time(self):
        """Test that nothing is absorbed at t = 0."""
        value = kernel(np.array([9.0, 10.0]), np.array([20.0, 21.0]), 0.0, self.atoms, T=5.0)
        np.testing.assert_array_equal(value, np.zeros(2))

    def test_continuity_at_singular_tolerance(self):
        """Test that the resonant limit joins the general formula smoothly."""
        t = 100.0
        tolerance = FAST.singular_tolerance
        # |w - w1|*t just below and just above the tolerance
        inside = kernel(np.array([10.0 + 0.5 * tolerance / t]), np.array([20.0]), t, self.atoms, T=t)
        outside = kernel(np.array([10.0 + 2.0 * tolerance / t]), np.array([20.0]), t, self.atoms, T=t)
        self.assertAlmostEqual(complex(inside[0]), -0.01 * t * t, places=9)
        np.testing.assert_allclose(outside, inside, rtol=1e-6)

        far = kernel(np.array([10.0 + 1e-4]), np.array([20.0]), t, self.atoms, T=t)
        np.testing.assert_allclose(far, inside, rtol=1e-2)

    def test_reflection_symmetry(self):
        """Test that |kernel| is even in the detuning of the first photon."""
        t = 7.0
        offsets = np.array([-2.0, -0.5, 0.0, 0.5, 2.0]) * 0.3
        omega_n = np.array([19.5, 20.0, 20.3, 20.7, 21.0])
        values = np.abs(kernel(10.0 + offsets, omega_n, t, self.atoms, T=10.0))
        reflected = np.abs(kernel(2.0 * 10.0 - (10.0 + offsets), omega_n, t, self.atoms, T=10.0))
        np.testing.assert_allclose(values, reflected, rtol=1e-12)

    def test_negative_time(self):
        """Test that a negative time is refused."""
        with self.assertRaises(ConfigError):
            kernel(np.array([10.0]), np.array([20.0]), -1.0, self.atoms, T=5.0)


class TestUncorrelatedClosedForms(unittest.TestCase):
    """Test cases for the uncorrelated pair closed forms."""

    def setUp(self):
        self.source = SourceParams(omega_alpha=100.0, omega_beta=1000.0, width_alpha=0.05, width_beta=0.5)

    def test_double_resonance(self):
        """Test the double-resonance value and its two-term correction."""
        atoms = AtomPair.symmetric(self.source, Delta=0.0)
        result = closed_p11(self.source, atoms)
        self.assertAlmostEqual(result.value, closed_p11_dr(self.source, atoms), delta=1e-9)
        self.assertAlmostEqual(result.value, 40.0, delta=1e-9)
        self.assertAlmostEqual(result.details['two_term_value'] / result.value, 1.0, delta=1e-4)
        self.assertLess(result.details['dominance_ratio'], 1e-3)

    def test_absolute_estimate(self):
        """Test the diffraction-limited double-resonance estimate."""
        atoms = AtomPair(omega1=100.0, omega2=200.0, gamma1=1e-3, gamma2=1e-3)
        source = SourceParams(100.0, 200.0, 1.0, 1.0)
        self.assertAlmostEqual(closed_p11_dr_estimate(atoms, source), 9e-6 / (4.0 * math.pi ** 2), delta=1e-12)

    def test_wing_form(self):
        """Test the single-photon wing form and its validity."""
        atoms = AtomPair.symmetric(self.source, Delta=10.0)
        wing = closed_p11_2p2a(self.source, atoms)
        self.assertAlmostEqual(wing.value, 0.05 * 0.5 / 1e4, delta=1e-15)
        full = closed_p11(self.source, atoms)
        self.assertAlmostEqual(full.value / wing.value, 1.0, delta=0.01)
        with self.assertRaises(ConfigError):
            closed_p11_2p2a(self.source, AtomPair.symmetric(self.source, Delta=0.0))

    def test_mixed_states(self):
        """Test that the product pair loses nothing to the separable transforms."""
        atoms = AtomPair.symmetric(self.source, Delta=0.0)
        mixed = closed_p11_mixed(self.source, atoms, t=10.0, T=10.0)
        pure = closed_p11(self.source, atoms)
        self.assertAlmostEqual(mixed.value / pure.details['two_term_value'], 1.0, delta=1e-3)
        half = closed_p11_mixed(self.source, atoms, t=5.0, T=10.0)
        self.assertAlmostEqual(mixed.value / half.value, 4.0, places=12)

    def test_detuning_flatness(self):
        """Test that the uncorrelated pair on the wings is flat in delta."""
        values = [closed_p11(self.source, AtomPair.symmetric(self.source, Delta=10.0, delta=delta)).value
                  for delta in np.linspace(-1.0, 1.0, 11)]
        self.assertLess((max(values) - min(values)) / max(values), 0.01)


class TestCascadeClosedForms(unittest.TestCase):
    """Test cases for the cascade closed forms and amplitudes."""

    def setUp(self):
        self.source = SourceParams(omega_alpha=100.0, omega_beta=1000.0, width_alpha=0.05, width_beta=0.5)
        self.atoms = AtomPair.symmetric(self.source, Delta=10.0)

    def test_resonance_enhancement(self):
        """Test the cascade to uncorrelated ratio (Delta/gamma_alpha)^2 on the wings."""
        cascade = closed_cascade_2p2a(self.source, self.atoms)
        uncorrelated = closed_p11_2p2a(self.source, self.atoms)
        self.assertAlmostEqual(cascade.value / uncorrelated.value, 4.0e4, delta=4.0e4 * 1e-9)
        self.assertEqual(cascade.warnings, ())
        # wing value is the double-resonance value times (gamma_beta/Delta)^2
        self.assertAlmostEqual(cascade.details['suppression'], 2.5e-3, places=12)
        self.assertAlmostEqual(cascade.value, cascade.details['dr_value'] * 2.5e-3, delta=1e-9)

    def test_wing_fallback(self):
        """Test that the wing form falls back without scale separation."""
        atoms = AtomPair.symmetric(self.source, Delta=1.0)
        result = closed_cascade_2p2a(self.source, atoms)
        self.assertEqual(len(result.warnings), 1)
        self.assertAlmostEqual(result.value, closed_cascade_long_time(self.source, atoms).value, places=12)

    def test_double_resonance(self):
        """Test that the cascade at double resonance equals the uncorrelated pair."""
        atoms = AtomPair.symmetric(self.source, Delta=0.0)
        self.assertAlmostEqual(closed_cascade_long_time(self.source, atoms).value,
                               closed_cascade_dr(self.source, atoms), delta=1e-9)
        self.assertEqual(closed_cascade_dr(self.source, atoms), closed_p11_dr(self.source, atoms))

    def test_amplitude_limits(self):
        """Test the time-dependent amplitude at zero and long times."""
        self.assertEqual(abs(cascade_amplitude_exact(self.source, self.atoms, 0.0)), 0.0)
        exact = cascade_amplitude_exact(self.source, self.atoms, 2000.0)
        compact = cascade_amplitude_compact(self.source, self.atoms)
        self.assertAlmostEqual(abs(exact) / abs(compact), 1.0, delta=1e-6)
        long_time = closed_cascade_long_time(self.source, self.atoms)
        self.assertAlmostEqual(abs(compact) ** 2 / long_time.details['two_term_value'], 1.0, delta=1e-10)
        with self.assertRaises(ConfigError):
            cascade_amplitude_exact(self.source, self.atoms, -1.0)

    def test_rho1_rho2(self):
        """Test the diagonal and factorized cascade probabilities."""
        T = 100.0
        p1, p2 = closed_cascade_rho1_rho2(self.source, self.atoms, t=T, T=T)
        m1 = self.atoms.omega1 - 1000.0
        expected = (0.5 / 0.05) * (1.0 / m1 ** 2 + 1e-2) / (0.5 * 0.55 * (1.0 / m1 ** 4 + 1e-4))
        self.assertAlmostEqual(p1.value / p2.value, expected, delta=expected * 1e-9)
        self.assertGreater(p1.value / p2.value, 3600.0)
        self.assertEqual(p1.warnings, ())

        half, _ = closed_cascade_rho1_rho2(self.source, self.atoms, t=T / 2.0, T=T)
        self.assertAlmostEqual(p1.value / half.value, 4.0, places=12)

    def test_rho1_rho2_fallback(self):
        """Test that P1 and P2 keep full Lorentzians near double resonance."""
        atoms = AtomPair.symmetric(self.source, Delta=0.0)
        p1, p2 = closed_cascade_rho1_rho2(self.source, atoms, t=10.0, T=10.0)
        self.assertTrue(p1.warnings)
        self.assertTrue(math.isfinite(p1.value) and math.isfinite(p2.value))
        self.assertEqual(p1.value, p1.details['full_value'])


class TestSpdcClosedForms(unittest.TestCase):
    """Test cases for the down-conversion closed forms."""

    def setUp(self):
        self.source = SourceParams(omega_alpha=20.0, omega_beta=40.0, width_alpha=0.5, width_beta=5.0)

    def test_detuning_slope(self):
        """Test that ln P is linear in delta^2 with the pump width as slope."""
        deltas = np.linspace(-1.0, 1.0, 21)
        values = [closed_spdc_family(self.source, AtomPair.symmetric(self.source, 0.0, delta), 1.0, 1.0)[0].value
                  for delta in deltas]
        slope = loglog_slope(np.exp(deltas ** 2), values)
        self.assertAlmostEqual(slope['slope'], -(4.0 + 0.5 / 25.0), delta=1e-9)
        self.assertAlmostEqual(slope['slope'], -4.0, delta=0.2)
        self.assertGreater(slope['r_squared'], 0.999)

    def test_diagonal_at_resonance(self):
        """Test that the diagonal state matches the pure state at delta = 0."""
        atoms = AtomPair.symmetric(self.source, Delta=2.0)
        pure, diag, _ = closed_spdc_family(self.source, atoms, t=1.0, T=1.0)
        self.assertAlmostEqual(diag.value / pure.value, 1.0, delta=1e-4)

    def test_factorized_suppression(self):
        """Test the lower bound on the pure to factorized ratio on the wings."""
        source = SourceParams(omega_alpha=20.0, omega_beta=40.0, width_alpha=0.05, width_beta=0.5)
        for ratio in (2.0, 3.0):
            Delta = ratio * source.width_beta
            atoms = AtomPair.symmetric(source, Delta=Delta)
            pure, _, fact = closed_spdc_family(source, atoms, t=1.0, T=1.0)
            bound = math.exp(2.0 * Delta ** 2 / (0.05 ** 2 + 0.5 ** 2))
            self.assertGreaterEqual(pure.value / fact.value, bound)

            limits = closed_spdc_limits(source, Delta)
            self.assertAlmostEqual(limits['pdc_2p2a'] / pure.value, 1.0, delta=1e-9)
            self.assertAlmostEqual(limits['rho2_2p2a'] / fact.value, 1.0, delta=0.01)

    def test_double_resonance_limit(self):
        """Test the down-conversion double-resonance value."""
        atoms = AtomPair.symmetric(self.source, Delta=0.0)
        pure, _, _ = closed_spdc_family(self.source, atoms, t=1.0, T=1.0)
        self.assertAlmostEqual(closed_spdc_limits(self.source, 0.0)['dr'] / pure.value, 1.0, delta=1e-6)


class TestQuadrature(unittest.TestCase):
    """Test cases for the lattice quadrature against closed forms."""

    def test_uncorrelated_double_resonance(self):
        """Test the uncorrelated pair at double resonance."""
        source = SourceParams(omega_alpha=10.0, omega_beta=30.0, width_alpha=0.1, width_beta=0.1)
        atoms = AtomPair.symmetric(source, Delta=0.0)
        state = make_uncorrelated(source, T=auto_quantization_time(source), coverage=200)
        result = prob_quadrature(state, atoms)
        self.assertAlmostEqual(result.value / closed_p11_dr(source, atoms), 1.0, delta=0.02)
        self.assertEqual(result.method, 'quadrature')
        self.assertEqual(result.time, state.T)
        self.assertIn('refined_value', result.details)
        self.assertLess(result.error_estimate, 0.02)

    def test_cascade_double_resonance(self):
        """Test the cascade pair at double resonance."""
        source = SourceParams(omega_alpha=10.0, omega_beta=60.0, width_alpha=0.2, width_beta=0.4)
        atoms = AtomPair.symmetric(source, Delta=0.0)
        state = make_cascade(source, T=auto_quantization_time(source), coverage=100, settings=FAST)
        result = prob_quadrature(state, atoms)
        self.assertAlmostEqual(result.value / closed_cascade_dr(source, atoms), 1.0, delta=0.02)

    def test_spdc_double_resonance(self):
        """Test the down-conversion pair at double resonance."""
        source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        atoms = AtomPair.symmetric(source, Delta=0.0)
        state = make_spdc(source, T=auto_quantization_time(source), settings=FAST)
        result = prob_quadrature(state, atoms)
        dr = closed_spdc_limits(source, 0.0)['dr']
        self.assertAlmostEqual(dr, math.pi * 1.5 / 0.5, delta=1e-9)
        self.assertAlmostEqual(result.value / dr, 1.0, delta=0.02)

    def test_matched_widths(self):
        """Test that width-matched states give the same double-resonance probability."""
        lorentz = SourceParams(omega_alpha=20.0, omega_beta=40.0, width_alpha=0.1, width_beta=0.1)
        sigma = 0.1 * math.sqrt(math.pi * math.sqrt(3.0))
        gauss = SourceParams(omega_alpha=20.0, omega_beta=40.0, width_alpha=sigma, width_beta=sigma)
        uncorrelated = make_uncorrelated(lorentz, T=auto_quantization_time(lorentz), coverage=100, settings=FAST)
        spdc = make_spdc(gauss, T=auto_quantization_time(gauss), settings=FAST)

        p_u = prob_quadrature(uncorrelated, AtomPair.symmetric(lorentz, 0.0)).value
        p_s = prob_quadrature(spdc, AtomPair.symmetric(gauss, 0.0)).value
        self.assertAlmostEqual(closed_spdc_limits(gauss, 0.0)['dr'], 100.0, delta=1e-6)
        self.assertAlmostEqual(p_s / p_u, 1.0, delta=0.05)

        self.assertAlmostEqual(effective_spectral_area(spdc), 0.01, delta=1e-5)
        self.assertAlmostEqual(effective_spectral_area(uncorrelated) / 0.01, 1.0, delta=0.02)

    def test_refined_normalization(self):
        """Test that the state stays normalized on the twofold refined comb."""
        source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        state = make_spdc(source, T=auto_quantization_time(source), coverage=10)
        fine = state.grid.refined(2)
        self.assertAlmostEqual(state.comb_weight(fine), 0.5, places=12)
        self.assertAlmostEqual(state.norm_check(), 1.0, delta=1e-12)
        self.assertAlmostEqual(state.norm_check(fine), 1.0, delta=1e-6)

        result = prob_quadrature(state, AtomPair.symmetric(source, 0.0))
        self.assertIn('refinement_change', result.details)
        self.assertGreaterEqual(result.error_estimate, result.details['refinement_change'])

    def test_exact_cascade_amplitude(self):
        """Test the time-dependent cascade amplitude against the lattice sum."""
        source = SourceParams(omega_alpha=10.0, omega_beta=60.0, width_alpha=0.2, width_beta=0.4)
        atoms = AtomPair.symmetric(source, Delta=0.0)
        state = make_cascade(source, T=auto_quantization_time(source), coverage=100, settings=FAST)
        quadrature = prob_quadrature(state, atoms).value
        exact = abs(cascade_amplitude_exact(source, atoms, state.T)) ** 2
        self.assertAlmostEqual(exact / quadrature, 1.0, delta=0.05)

    def test_cascade_versus_uncorrelated_wings(self):
        """Test the cascade gain over the uncorrelated pair by quadrature."""
        source = SourceParams(omega_alpha=100.0, omega_beta=1000.0, width_alpha=0.05, width_beta=0.5)
        atoms = AtomPair.symmetric(source, Delta=10.0)
        T = auto_quantization_time(source)
        cascade = prob_quadrature(make_cascade(source, T=T, coverage=20, settings=FAST), atoms).value
        uncorrelated = prob_quadrature(make_uncorrelated(source, T=T, coverage=20, settings=FAST), atoms).value
        self.assertAlmostEqual(cascade / uncorrelated / 4.0e4, 1.0, delta=0.1)

    def test_cascade_separable_states(self):
        """Test that the diagonal cascade state excites as well as the entangled one."""
        source = SourceParams(omega_alpha=100.0, omega_beta=5000.0, width_alpha=0.1, width_beta=0.5)
        atoms = AtomPair.symmetric(source, Delta=10.0)
        state = make_cascade(source, T=auto_quantization_time(source), coverage=20, settings=FAST)
        pure = prob_quadrature(state, atoms).value
        rho1 = prob_quadrature(disentangle(state), atoms).value
        rho2 = prob_quadrature(factorize(state), atoms).value
        self.assertAlmostEqual(rho1 / pure, 1.0, delta=0.1)
        self.assertGreaterEqual(rho1 / rho2, 100.0)

        p1, p2 = closed_cascade_rho1_rho2(source, atoms, state.T, state.T)
        self.assertGreaterEqual(p1.value / p2.value, 100.0)

    def test_diagonal_time_scaling(self):
        """Test that the diagonal state grows as t^2 once t*gamma_alpha is large."""
        source = SourceParams(omega_alpha=10.0, omega_beta=2000.0, width_alpha=0.1, width_beta=0.2)
        atoms = AtomPair.symmetric(source, Delta=2.0)
        T = TWO_PI / 0.005
        state = disentangle(make_cascade(source, T=T, coverage=10, settings=FAST))
        short = prob_quadrature(state, atoms, t=300.0).value
        long = prob_quadrature(state, atoms, t=600.0).value
        self.assertAlmostEqual(long / short / 4.0, 1.0, delta=0.05)

    def test_delta_limit_agreement(self):
        """Test that the delta limit agrees with quadrature at t = T."""
        cascade_source = SourceParams(omega_alpha=10.0, omega_beta=60.0, width_alpha=0.2, width_beta=0.4)
        spdc_source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        cases = [
            (make_cascade(cascade_source, T=auto_quantization_time(cascade_source), settings=FAST),
             AtomPair.symmetric(cascade_source, 0.0)),
            (make_spdc(spdc_source, T=auto_quantization_time(spdc_source), settings=FAST),
             AtomPair.symmetric(spdc_source, 0.0)),
        ]
        for state, atoms in cases:
            quadrature = prob_quadrature(state, atoms).value
            delta = prob_delta_limit(state, atoms)
            self.assertAlmostEqual(delta.value / quadrature, 1.0, delta=0.05)
            self.assertEqual(delta.method, 'delta_limit')
            self.assertEqual(delta.warnings, ())

    def test_coherent_lift_scaling(self):
        """Test the |alpha|^4 scaling of a coherent lift."""
        source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        atoms = AtomPair.symmetric(source, 0.0)
        state = make_spdc(source, T=auto_quantization_time(source), coverage=10, settings=FAST)
        base = prob_quadrature(state, atoms).value
        for alpha in (0.0, 1.0, 2.0, 1 + 1j):
            lifted = prob_quadrature(coherent_lift(state, alpha), atoms)
            self.assertAlmostEqual(lifted.value, base * abs(alpha) ** 4, delta=1e-12 * base * 4.0)
            delta = prob_delta_limit(coherent_lift(state, alpha), atoms)
            self.assertAlmostEqual(delta.details['lift_factor'], abs(alpha) ** 4, places=12)

    def test_thread_determinism(self):
        """Test that the quadrature does not depend on the number of threads."""
        source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        atoms = AtomPair.symmetric(source, 1.0)
        serial = EngineSettings(refine_check=False, block_elements=1 << 14, threads=1)
        state = make_spdc(source, T=auto_quantization_time(source), coverage=10, settings=serial)
        first = prob_quadrature(state, atoms, settings=serial).value
        second = prob_quadrature(state, atoms, settings=serial.replace(threads=4)).value
        self.assertEqual(first, second)

    def test_refusals(self):
        """Test the refusals of the quadrature."""
        source = SourceParams(omega_alpha=20.0, omega_beta=30.0, width_alpha=0.5, width_beta=1.0)
        state = make_spdc(source, T=auto_quantization_time(source), coverage=10, settings=FAST)
        atoms = AtomPair.symmetric(source, 0.0)
        with self.assertRaises(GridResolutionError):
            prob_quadrature(state, atoms, t=2.0 * state.T)
        with self.assertRaises(ConfigError):
            prob_quadrature(state, atoms, t=-1.0)
        with self.assertRaises(GridResolutionError):
            prob_quadrature(state, AtomPair(omega1=20.0, omega2=100.0))
        with self.assertRaises(BudgetExceededError):
            prob_quadrature(state, atoms, settings=FAST.replace(max_pair_evaluations=1e4))


class TestEnhancementIndices(unittest.TestCase):
    """Test cases for the delta limit bounds and enhancement indices."""

    def setUp(self):
        self.grid = FrequencyGrid.uniform(0.0, TWO_PI / 0.1, 81)
        self.atoms = AtomPair(omega1=3.0, omega2=5.0)

    def _blobs(self, weight, phase):
        def amplitude(wk, wq, weight=weight, phase=phase):
            return (np.exp(-((wk - 3.0) ** 2 + (wq - 5.0) ** 2))
                    + weight * np.exp(1j * phase) * np.exp(-((wk - 5.0) ** 2 + (wq - 3.0) ** 2)))
        return make_custom(amplitude, self.grid, switched_on=True)

    def test_cauchy_schwarz(self):
        """Test that the pure state never exceeds twice its diagonal state."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            state = self._blobs(rng.uniform(0.0, 2.0), rng.uniform(0.0, TWO_PI))
            pure, bound = cauchy_schwarz_bound(state, self.atoms)
            self.assertLessEqual(pure, bound * (1.0 + 1e-12))
            gp = enhancement_gp(state, self.atoms)
            self.assertGreaterEqual(gp, 0.0)
            self.assertLessEqual(gp, 2.0 + 1e-12)

    def test_symmetric_amplitude(self):
        """Test that a symmetric amplitude doubles the probability."""
        state = self._blobs(1.0, 0.0)
        self.assertAlmostEqual(enhancement_gp(state, self.atoms), 2.0, places=12)
        pure, bound = cauchy_schwarz_bound(state, self.atoms)
        self.assertAlmostEqual(pure / bound, 1.0, places=12)

    def test_degenerate_amplitude(self):
        """Test that G_p is one where both amplitudes vanish."""
        far = make_custom(lambda wk, wq: np.exp(-((wk - 30.0) ** 2 + (wq - 30.0) ** 2)) + 0j,
                          self.grid, normalize=False)
        self.assertEqual(enhancement_gp(far, self.atoms), 1.0)

    def test_catalog_gp(self):
        """Test G_p for the catalog states at their lines."""
        source = SourceParams(omega_alpha=20.0, omega_beta=40.0, width_alpha=0.5, width_beta=1.0)
        spdc = make_spdc(source, T=auto_quantization_time(source), coverage=10, settings=FAST)
        self.assertAlmostEqual(enhancement_gp(spdc, AtomPair.symmetric(source, 0.0)), 1.0, delta=1e-9)

        source = SourceParams(omega_alpha=10.0, omega_beta=60.0, width_alpha=0.2, width_beta=0.4)
        cascade = make_cascade(source, T=auto_quantization_time(source), coverage=20, settings=FAST)
        atoms = AtomPair.symmetric(source, 0.0)
        self.assertAlmostEqual(enhancement_gp(cascade, atoms), 1.0, delta=0.1)
        self.assertLess(dominance_ratio(cascade, atoms), 0.05)

    def test_g12_matches_rho_ratio(self):
        """Test that G_12 reproduces the diagonal to factorized cascade ratio."""
        source = SourceParams(omega_alpha=10.0, omega_beta=2000.0, width_alpha=0.1, width_beta=0.5)
        atoms = AtomPair.symmetric(source, Delta=10.0)
        state = make_cascade(source, T=auto_quantization_time(source), settings=FAST)
        g12 = enhancement_g12(state, atoms)
        p1, p2 = closed_cascade_rho1_rho2(source, atoms, state.T, state.T)
        self.assertGreater(g12, 100.0)
        self.assertAlmostEqual(g12 / (p1.value / p2.value), 1.0, delta=0.1)
        self.assertEqual(enhancement_g12(coherent_lift(state, 5.0), atoms), g12)
        with self.assertRaises(StateKindError):
            enhancement_g12(disentangle(state), atoms)

    def test_antisymmetric_amplitude(self):
        """Test that c12 = -c21 cancels the pure state but not its diagonal."""
        def amplitude(wk, wq):
            return (np.exp(-((wk - 3.0) ** 2 + (wq - 5.0) ** 2))
                    - np.exp(-((wk - 5.0) ** 2 + (wq - 3.0) ** 2))) + 0j
        state = make_custom(amplitude, self.grid, switched_on=True)

        pure = prob_delta_limit(state, self.atoms)
        self.assertEqual(pure.value, 0.0)
        self.assertEqual(pure.details['abs_c12'], pure.details['abs_c21'])
        self.assertGreater(prob_delta_limit(disentangle(state), self.atoms).value, 0.0)
        self.assertEqual(enhancement_gp(state, self.atoms), 0.0)

    def test_g12_grid_convergence(self):
        """Test that G_12 is stable when the marginal comb is refined."""
        source = SourceParams(omega_alpha=10.0, omega_beta=2000.0, width_alpha=0.1, width_beta=0.5)
        atoms = AtomPair.symmetric(source, Delta=10.0)
        state = make_cascade(source, T=auto_quantization_time(source), settings=FAST)
        native = enhancement_g12(state, atoms)
        self.assertAlmostEqual(enhancement_g12(state, atoms, grid=state.grid) / native, 1.0, places=10)
        refined = enhancement_g12(state, atoms, grid=state.grid.refined(2))
        self.assertLess(abs(refined / native - 1.0), 0.01)

    def test_product_state_g12(self):
        """Test that a product amplitude has no two-photon enhancement."""
        state = make_custom(lambda wk, wq: np.exp(-(wk - 3.0) ** 2) * np.exp(-0.5 * (wq - 5.0) ** 2) + 0j,
                            self.grid)
        self.assertAlmostEqual(enhancement_g12(state, self.atoms), 1.0, places=10)

    def test_pure_state_required(self):
        """Test that indices need a pure state behind the input."""
        with self.assertRaises(StateKindError):
            enhancement_gp(disentangle(self._blobs(1.0, 0.0)), self.atoms)


class TestFits(unittest.TestCase):
    """Test cases for the sweep fitting helpers."""

    def test_lorentzian_fit(self):
        """Test the FWHM of a clean Lorentzian."""
        x = np.linspace(-1.0, 1.0, 41)
        fit = fit_lorentzian_fwhm(x, 3.0 / ((x - 0.1) ** 2 + 0.01))
        self.assertAlmostEqual(fit['fwhm'], 0.2, delta=1e-6)
        self.assertAlmostEqual(fit['center'], 0.1, delta=1e-6)
        self.assertGreater(fit['r_squared'], 0.9999)

    def test_gaussian_fit(self):
        """Test the 1/e half-width of a clean Gaussian."""
        x = np.linspace(-2.0, 2.0, 41)
        fit = fit_gaussian_width(x, 2.0 * np.exp(-(x / 0.5) ** 2))
        self.assertAlmostEqual(fit['width'], 0.5, delta=1e-6)

    def test_loglog_slope(self):
        """Test the power-law slope."""
        t = np.array([1.0, 2.0, 4.0, 8.0])
        fit = loglog_slope(t, 3.0 * t ** 2)
        self.assertAlmostEqual(fit['slope'], 2.0, places=10)

    def test_required_flags(self):
        """Test the flags the closed forms rely on."""
        self.assertEqual(required_flags(StateKind.CASCADE_PURE), frozenset({LONG_TIME, FREQUENCY_SEPARATION}))
        self.assertEqual(required_flags(StateKind.UNCORRELATED_PURE), frozenset({LONG_TIME}))


if __name__ == '__main__':
    unittest.main()
