# tests/test_peak_finder.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
import unittest

import numpy as np

from util.peak_finder import (KGrid, Peak, first_traversal_maximum, golden_section_max, local_maxima, quantity,
                              resonance_report, scan_grid)
from util.scattering_core import (closed_forms, first_sigma_peaks, make_well, make_well_from_alpha,
                                  sigma_peak_positions)
from util.utils import DomainError

WELL_I = make_well(2.4, 10.0)
WELL_II = make_well(12.0, 10.0)
WELL_IV = make_well_from_alpha(8.7326, 39.0535)
WELL_V = make_well_from_alpha(8.7766, 39.2505)
WELL_VII = make_well_from_alpha(8.7987, 39.3489)

# α 只印到小数点后四位；V 号阱贴近阈值，l(k*)/2a 对 α 的斜率约 33，
# 末位 ±5e-5 对应约 ±1.7e-3，所以这一格只能核对到三位小数
WELL_V_RATIO_DELTA = 2e-3


def interior(peaks):
    return [p for p in peaks if not p.boundary]


class TestKGrid(unittest.TestCase):
    """测试采样网格的校验。"""

    def test_too_few_samples(self):
        with self.assertRaises(DomainError):
            KGrid(ks=[0.1, 0.2], values=[1.0, 2.0])

    def test_not_increasing(self):
        with self.assertRaises(DomainError):
            KGrid(ks=[0.1, 0.3, 0.2], values=[1.0, 2.0, 3.0])

    def test_samples(self):
        grid = KGrid(ks=[0.1, 0.2, 0.3], values=[1.0, 3.0, 2.0])
        self.assertEqual(grid.samples, [(0.1, 1.0), (0.2, 3.0), (0.3, 2.0)])
        self.assertEqual((grid.k_min, grid.k_max), (0.1, 0.3))


class TestLocalMaxima(unittest.TestCase):
    """测试局部极大的定位与细化。"""

    def test_golden_section(self):
        k, value = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
        self.assertAlmostEqual(k, 0.3, delta=1e-9)
        self.assertAlmostEqual(value, 0.0, places=12)

    def test_monotone_has_no_interior_maximum(self):
        ks = np.linspace(0.1, 1.0, 50)
        peaks = local_maxima(KGrid(ks=ks, values=ks ** 2))
        self.assertEqual(interior(peaks), [])
        self.assertEqual(peaks, [Peak(1.0, 1.0, True)])

    def test_lower_boundary_flag(self):
        ks = np.linspace(0.1, 1.0, 50)
        peaks = local_maxima(KGrid(ks=ks, values=-ks))
        self.assertEqual(len(peaks), 1)
        self.assertTrue(peaks[0].boundary)
        self.assertEqual(peaks[0].k, 0.1)

    def test_sigma_peak_of_well_i(self):
        peaks = interior(local_maxima(scan_grid(WELL_I, 'sigma_phi', 0.01, 1.5)))
        self.assertAlmostEqual(peaks[0].k, 0.9950, delta=5e-4)
        self.assertAlmostEqual(peaks[0].value, 4.0, places=10)

    def test_tau_peak_of_well_i(self):
        peaks = interior(local_maxima(scan_grid(WELL_I, 'tau', 0.01, 1.5)))
        self.assertAlmostEqual(peaks[0].k, 0.8934, delta=5e-4)

    def test_sigma_peaks_match_analytic_roots(self):
        """细化后的 σ_φ 峰与 cos(qa) = 0 的解析根相差 < 1e-8，且该处 τ = 0。"""
        for well in (WELL_I, WELL_II):
            found = np.array([p.k for p in interior(local_maxima(scan_grid(well, 'sigma_phi', 0.01, 3.5)))])
            exact = sigma_peak_positions(well, 3.5)
            self.assertEqual(len(found), len(exact))
            np.testing.assert_allclose(found, exact, atol=1e-8)
            self.assertLess(np.max(np.abs(closed_forms(well, found)['tau'])), 1e-8)

    def test_unknown_quantity(self):
        with self.assertRaises(DomainError):
            quantity(WELL_I, 'width')

    def test_scan_range_checks(self):
        with self.assertRaises(DomainError):
            scan_grid(WELL_I, 'ell', 0.0, 1.0)
        with self.assertRaises(DomainError):
            scan_grid(WELL_I, 'ell', 1.0, 0.5)


class TestResonanceReport(unittest.TestCase):
    """测试共振记录的组装。"""

    def test_well_i(self):
        record = resonance_report(WELL_I, 3.5)[0]
        self.assertEqual(record.n, 1)
        self.assertAlmostEqual(record.k_star, 0.8983, delta=5e-4)
        self.assertAlmostEqual(record.k_tau, 0.8934, delta=5e-4)
        self.assertAlmostEqual(record.k_p, 0.9990, delta=5e-4)
        self.assertAlmostEqual(record.k_sigma, 0.9950, delta=5e-4)
        self.assertAlmostEqual(record.ell_ratio, 1.0486, delta=5e-4)
        self.assertAlmostEqual(record.phi_at_kstar, 1.33, delta=1e-2)
        self.assertFalse(record.tau_boundary)

    def test_well_v_boundary_tau(self):
        record = resonance_report(WELL_V, 0.6)[0]
        self.assertTrue(record.tau_boundary)
        self.assertEqual(record.k_tau, 0.0)
        self.assertAlmostEqual(record.k_sigma, 0.1406, delta=5e-4)
        self.assertAlmostEqual(record.ell_ratio, 1.352, delta=WELL_V_RATIO_DELTA)

    def test_well_vii(self):
        record = resonance_report(WELL_VII, 2.2)[0]
        self.assertAlmostEqual(record.k_star, 1.7948, delta=5e-4)
        self.assertAlmostEqual(record.k_sigma, 1.7985, delta=5e-4)
        self.assertAlmostEqual(record.phi_at_kstar, 1.54, delta=1e-2)

    def test_broad_bump_below_2a_is_not_a_resonance(self):
        """VII 号阱刚越过束缚态阈值，k ≈ 0.586 处 l 有一个 l < 2a 的宽鼓包，不能当作第一个共振。"""
        grid = scan_grid(WELL_VII, 'ell', 0.01, 1.2)
        bumps = interior(local_maxima(grid))
        self.assertTrue(any(abs(p.k - 0.5857) < 1e-3 and p.value < 2.0 * WELL_VII.a for p in bumps))
        record = resonance_report(WELL_VII, 2.2)[0]
        self.assertAlmostEqual(record.k_star, 1.7948, delta=5e-4)
        self.assertGreaterEqual(record.ell_ratio, 1.0)
        self.assertLessEqual(record.k_star, record.k_sigma)

    def test_records_are_ordered(self):
        records = resonance_report(WELL_I, 4.2)
        self.assertGreaterEqual(len(records), 2)
        self.assertEqual([r.n for r in records], list(range(1, len(records) + 1)))
        for record in records:
            self.assertTrue(0.0 <= record.phi_at_kstar < math.pi)
            if not math.isnan(record.k_sigma):
                self.assertLessEqual(record.k_star, record.k_sigma)


class TestFirstTraversalMaximum(unittest.TestCase):
    """测试 α 扫描所用的第一个 l 极大。"""

    def test_table_values(self):
        cases = ((WELL_IV, 1.0153, 5e-4), (WELL_V, 1.352, WELL_V_RATIO_DELTA), (WELL_VII, 1.0009, 5e-4))
        for well, ratio, delta in cases:
            peak = first_traversal_maximum(well)
            self.assertAlmostEqual(peak.value / (2.0 * well.a), ratio, delta=delta)

    def test_well_v_interior(self):
        peak = first_traversal_maximum(WELL_V)
        self.assertFalse(peak.boundary)
        self.assertAlmostEqual(peak.k, 0.0585, delta=5e-4)

    def test_skips_bump_of_well_vii(self):
        peak = first_traversal_maximum(WELL_VII)
        self.assertFalse(peak.boundary)
        self.assertAlmostEqual(peak.k, 1.7948, delta=5e-4)

    def test_just_above_thresholds(self):
        """α 刚越过 (N - 1/2)π 时第一个极大仍满足 l >= 2a，且位于第一个 σ_φ 峰之前。"""
        for n in (3, 8, 13, 19):
            for excess in (1e-3, 0.02, 0.2):
                well = make_well_from_alpha(1.0, (n - 0.5) * math.pi + excess)
                peak = first_traversal_maximum(well)
                self.assertGreaterEqual(peak.value / (2.0 * well.a), 1.0, msg=f"alpha={well.alpha}")
                self.assertLess(peak.k, first_sigma_peaks(well, 1)[0], msg=f"alpha={well.alpha}")


if __name__ == '__main__':
    unittest.main()
