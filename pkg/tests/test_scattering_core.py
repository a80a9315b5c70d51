# tests/test_scattering_core.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from util.scattering_core import (SCAN_COLUMNS, closed_form_slopes, closed_forms, first_sigma_peaks, make_well,
                                  make_well_from_alpha, phase_resonant, radius_extended, radius_profile,
                                  reaction_function, s_matrix, scan, scatter_sample, sigma_peak_positions,
                                  traversal_distance_alt, traversal_distance_from_reaction,
                                  trapping_probability_quadrature, unwrap_resonant_phase, wavefunction,
                                  zero_energy_traversal_ratio)
from util.utils import DomainError

WELL_I = make_well(2.4, 10.0)
WELL_II = make_well(12.0, 10.0)
WELL_III = make_well(12.0, 0.4)
WELL_V = make_well_from_alpha(8.7766, 39.2505)


class TestPotentialWell(unittest.TestCase):
    """测试势阱的构造。"""

    def test_strength_and_bound_estimate(self):
        self.assertAlmostEqual(WELL_I.alpha, math.sqrt(115.2), places=12)
        self.assertAlmostEqual(WELL_I.qb, 3.91, delta=0.01)
        self.assertEqual(WELL_I.bound_state_estimate, 3)
        self.assertAlmostEqual(WELL_II.qb, 17.58, delta=0.01)
        self.assertAlmostEqual(WELL_III.alpha, WELL_I.alpha, places=12)

    def test_from_alpha(self):
        well = make_well_from_alpha(8.7326, 39.0535)
        self.assertAlmostEqual(well.alpha, 39.0535, places=10)
        self.assertAlmostEqual(well.v0, 10.0, delta=1e-3)
        self.assertAlmostEqual(well.qb, 12.931, delta=1e-3)

    def test_invalid_parameters(self):
        for a, v0 in [(0.0, 10.0), (-1.0, 10.0), (2.4, 0.0), (2.4, -3.0), (float('nan'), 1.0)]:
            with self.assertRaises(DomainError):
                make_well(a, v0)
        with self.assertRaises(DomainError):
            make_well_from_alpha(1.0, 0.0)

    def test_domain_error_is_value_error(self):
        with self.assertRaises(ValueError):
            make_well(-1.0, 1.0)


class TestClosedForms(unittest.TestCase):
    """测试闭式散射函数与各恒等式。"""

    def test_nonpositive_k(self):
        for k in (0.0, -0.5):
            with self.assertRaises(DomainError):
                closed_forms(WELL_I, k)
            with self.assertRaises(DomainError):
                scatter_sample(WELL_I, k)

    def test_unitary_limit_at_sigma_peak(self):
        """Well I 第一个 σ_φ 峰 k ≈ 0.99501 处 σ_φ = 4。"""
        sample = scatter_sample(WELL_I, 0.99501)
        self.assertAlmostEqual(sample.sigma_phi, 4.0, places=6)
        self.assertAlmostEqual(math.fmod(sample.phi, math.pi), 0.5 * math.pi, places=3)

    def test_s_matrix_unitary(self):
        ks = np.linspace(1e-3, 10.0, 997)
        for well in (WELL_I, WELL_II, WELL_V):
            assert_allclose(np.abs(s_matrix(well, ks)), 1.0, atol=1e-12)

    def test_s_matrix_matches_phase_shift(self):
        ks = np.linspace(0.05, 3.0, 301)
        frame = scan(WELL_I, ks)
        expected = -np.exp(2j * frame['theta'].to_numpy())
        assert_allclose(s_matrix(WELL_I, ks), expected, atol=1e-10)

    def test_trapping_identity(self):
        """a·P = l - sin(2φ)/k 在随机 k 上成立。"""
        rng = np.random.default_rng(20240917)
        ks = rng.uniform(1e-3, 10.0, 10_000)
        for well in (WELL_I, WELL_II, WELL_V):
            frame = scan(well, ks)
            residual = (well.a * frame['p_trap'] - frame['ell'] + np.sin(2.0 * frame['phi']) / frame['k']).abs()
            self.assertLess(residual.max(), 1e-10, msg=f"alpha={well.alpha}")

    def test_alternative_traversal_forms(self):
        ks = np.linspace(0.01, 3.5, 700)
        forms = closed_forms(WELL_I, ks)
        assert_allclose(traversal_distance_alt(WELL_I, ks), forms['ell'], rtol=1e-10, atol=1e-12)
        # 避开 cos(qa) = 0 附近 R0 的极点
        keep = np.abs(forms['cos']) > 1e-3
        ell, a_p = traversal_distance_from_reaction(WELL_I, ks[keep])
        assert_allclose(ell, forms['ell'][keep], rtol=1e-10, atol=1e-12)
        assert_allclose(a_p, WELL_I.a * forms['p_trap'][keep], rtol=1e-10, atol=1e-12)

    def test_reaction_function_gives_phase(self):
        ks = np.linspace(0.05, 2.0, 100)
        r0, _ = reaction_function(WELL_I, ks)
        phi = unwrap_resonant_phase(WELL_I, ks)
        keep = np.abs(np.cos(phi)) > 1e-3
        assert_allclose(np.tan(phi[keep]), ks[keep] * r0[keep], rtol=1e-9, atol=1e-12)

    def test_exact_zero_at_sigma_peaks(self):
        """σ_φ 的解析峰处 τ = 0 且 l = 2a。"""
        for well in (WELL_I, WELL_II, WELL_III):
            peaks = sigma_peak_positions(well, 3.5)
            self.assertGreater(len(peaks), 0)
            forms = closed_forms(well, peaks)
            self.assertLess(np.max(np.abs(forms['tau'])), 1e-8)
            self.assertLess(np.max(np.abs(forms['ell'] - 2.0 * well.a)), 1e-8)
            assert_allclose(forms['sigma_phi'], 4.0, atol=1e-12)

    def test_sigma_peak_positions(self):
        self.assertAlmostEqual(sigma_peak_positions(WELL_I, 1.5)[0], 0.9950, delta=5e-5)
        self.assertAlmostEqual(first_sigma_peaks(WELL_V, 1)[0], 0.1406, delta=1e-4)
        self.assertEqual(len(sigma_peak_positions(WELL_I, 0.5)), 0)

    def test_derivative_of_phase(self):
        """l 与 2·dφ/dk 的中心差分（h = 1e-6）一致。"""
        h = 1e-6
        ks = np.linspace(0.05, 3.0, 200)
        plus = unwrap_resonant_phase(WELL_I, ks + h)
        minus = unwrap_resonant_phase(WELL_I, ks - h)
        numeric = 2.0 * (plus - minus) / (2.0 * h)
        assert_allclose(closed_forms(WELL_I, ks)["ell"], numeric, rtol=1e-5, atol=1e-8)

    def test_slopes_match_finite_differences(self):
        h = 1e-6
        ks = np.linspace(0.1, 3.0, 60)
        slopes = closed_form_slopes(WELL_I, ks)
        upper, lower = closed_forms(WELL_I, ks + h), closed_forms(WELL_I, ks - h)
        for name in ('a2', 'ell', 'tau', 'p_trap', 'sigma_phi'):
            numeric = (upper[name] - lower[name]) / (2.0 * h)
            assert_allclose(slopes[name], numeric, rtol=1e-5, atol=1e-6, err_msg=name)

    def test_zero_energy_limit(self):
        forms = closed_forms(WELL_I, 1e-6)
        self.assertAlmostEqual(float(forms['ell']) / (2.0 * WELL_I.a), zero_energy_traversal_ratio(WELL_I), places=6)
        self.assertGreater(zero_energy_traversal_ratio(WELL_V), 1.0)


class TestPhaseUnwrap(unittest.TestCase):
    """测试共振相位的连续展开。"""

    def test_tangent_relation(self):
        for k in (0.3, 0.9, 1.7):
            forms = closed_forms(WELL_I, k)
            expected = k * math.tan(float(forms['qa'])) / float(forms['q'])
            self.assertAlmostEqual(math.tan(phase_resonant(WELL_I, k)), expected, places=9)

    def test_continuity_and_anchor(self):
        ks = np.linspace(1e-6, 3.5, 20_000)
        phi = unwrap_resonant_phase(WELL_II, ks)
        self.assertLess(abs(phi[0]), 1e-3)
        self.assertLess(np.max(np.abs(np.diff(phi))), 0.5 * math.pi)

    def test_order_preserved(self):
        ks = np.array([2.0, 0.4, 1.1, 0.9, 3.0])
        phi = unwrap_resonant_phase(WELL_I, ks)
        sorted_phi = unwrap_resonant_phase(WELL_I, np.sort(ks))
        assert_allclose(phi[np.argsort(ks)], sorted_phi, atol=1e-12)

    def test_phase_grows_through_resonances(self):
        """每越过一个 σ_φ 峰，φ 增加约 π。"""
        peaks = sigma_peak_positions(WELL_I, 3.5)
        phi = unwrap_resonant_phase(WELL_I, peaks)
        assert_allclose(np.diff(phi), math.pi, atol=1e-6)


class TestScan(unittest.TestCase):
    """测试向量化扫描。"""

    def test_columns_and_order(self):
        ks = [1.5, 0.2, 0.8]
        frame = scan(WELL_I, ks)
        self.assertEqual(list(frame.columns), SCAN_COLUMNS)
        assert_allclose(frame['k'], ks)

    def test_consistency_with_sample(self):
        frame = scan(WELL_I, [0.7])
        sample = scatter_sample(WELL_I, 0.7)
        self.assertAlmostEqual(frame['ell'].iloc[0], sample.ell, places=12)
        self.assertAlmostEqual(sample.sigma, math.pi * sample.sigma_theta / (0.7 ** 2), places=10)
        self.assertAlmostEqual(sample.theta, -0.7 * WELL_I.a + sample.phi, places=12)
        self.assertAlmostEqual(sample.tau, (sample.ell - 2.0 * WELL_I.a) / 0.7, places=10)

    def test_mod_pi_range(self):
        frame = scan(WELL_II, np.linspace(0.01, 2.0, 500))
        for column in ('theta_mod_pi', 'phi_mod_pi'):
            self.assertTrue(((frame[column] >= 0) & (frame[column] < math.pi)).all())


class TestTrappingProbability(unittest.TestCase):
    """测试俘获概率的闭式与求积。"""

    def test_closed_form_matches_quadrature(self):
        for well in (WELL_I, WELL_II, WELL_V):
            for k in np.linspace(0.02, 3.0, 1000):
                closed = float(closed_forms(well, k)['p_trap'])
                self.assertAlmostEqual(trapping_probability_quadrature(well, k), closed, delta=1e-9)

    def test_radius_extension_matches_quadrature(self):
        for k in (0.3, 0.8983, 1.4):
            for r in (2.4, 3.0, 7.5):
                sample = radius_extended(WELL_I, k, r)
                self.assertAlmostEqual(sample.p_r, trapping_probability_quadrature(WELL_I, k, r=r), delta=1e-9)

    def test_radius_extension_at_a_is_identity(self):
        sample = scatter_sample(WELL_I, 0.5)
        extended = radius_extended(WELL_I, 0.5, WELL_I.a)
        self.assertAlmostEqual(extended.ell_r, sample.ell, places=12)
        self.assertAlmostEqual(extended.p_r, sample.p_trap, places=12)
        self.assertAlmostEqual(extended.phi_r, sample.phi, places=12)

    def test_radius_profile(self):
        ks = np.linspace(0.1, 2.0, 50)
        profile = radius_profile(WELL_I, 5.0, ks)
        self.assertEqual(list(profile.columns), ['k', 'phi_r_mod_pi', 'ell_r', 'p_r'])
        assert_allclose(profile['ell_r'], closed_forms(WELL_I, ks)['ell'] + 2.0 * (5.0 - WELL_I.a))
        self.assertAlmostEqual(profile['p_r'].iloc[10], radius_extended(WELL_I, ks[10], 5.0).p_r, places=12)

    def test_invalid_arguments(self):
        with self.assertRaises(DomainError):
            trapping_probability_quadrature(WELL_I, 0.5, n_points=8)
        with self.assertRaises(DomainError):
            trapping_probability_quadrature(WELL_I, 0.5, r=1.0)
        with self.assertRaises(DomainError):
            radius_extended(WELL_I, 0.5, 1.0)
        with self.assertRaises(DomainError):
            wavefunction(WELL_I, 0.5, -0.1)

    def test_wavefunction_continuous_at_edge(self):
        """阱内 A·sin(qa) 与阱外 e^{-ika} + S·e^{ika} 在 r = a 处相差 < 1e-12。"""
        for well in (WELL_I, WELL_II, WELL_V):
            for k in np.linspace(0.01, 3.0, 300):
                inside = wavefunction(well, k, well.a)
                outside = np.exp(-1j * k * well.a) + complex(s_matrix(well, k)) * np.exp(1j * k * well.a)
                self.assertLess(abs(inside - outside), 1e-12, msg=f"alpha={well.alpha} k={k}")
        nearby = wavefunction(WELL_I, 0.7, WELL_I.a + 1e-12)
        self.assertLess(abs(wavefunction(WELL_I, 0.7, WELL_I.a) - nearby), 1e-10)

    def test_boundary_density_equals_sigma_phi(self):
        """|ψ(k; a)|² = σ_φ(k)。"""
        for well in (WELL_I, WELL_II, WELL_V):
            ks = np.linspace(1e-3, 3.5, 2000)
            density = np.array([abs(wavefunction(well, k, well.a)) ** 2 for k in ks])
            assert_allclose(density, closed_forms(well, ks)['sigma_phi'], rtol=0, atol=1e-12)


if __name__ == '__main__':
    unittest.main()
