"""
Jacobi zeta 函数测试
"""

import sys
import unittest
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from models.exceptions import OutsideStrip
from models.expansion_types import ZetaRoute
from models.lattice import LatticeParameter
from models.verification_report import MeasurementKind
from services.trig_coefficients import coefficients_closed_form
from services.zeta import (
    fit_prefactor, half_period, prefactor_fits, zeta, zeta_addition_residual,
    zeta_consistency_report,
)
from utils.complex_core import relative_deviation


class TestZetaRoutes(unittest.TestCase):
    """各求值路线测试"""

    def setUp(self):
        self.lat = LatticeParameter.from_nome(0.1)
        self.K = half_period(self.lat)
        self.table = coefficients_closed_form(self.lat, 40)
        self.points = [0.4, 1.1, 0.7 + 0.15j, 2.0]

    def test_zero_and_oddness(self):
        self.assertEqual(zeta(0, self.lat), 0j)
        for z in self.points:
            self.assertLess(abs(zeta(-z, self.lat) + zeta(z, self.lat)), 1e-13)

    def test_period_2K(self):
        for z in self.points:
            self.assertLess(abs(zeta(z + 2 * self.K, self.lat) - zeta(z, self.lat)), 1e-12)

    def test_rational_form(self):
        for z in self.points:
            reference = zeta(z, self.lat)
            self.assertLess(abs(zeta(z, self.lat, ZetaRoute.RATIONAL_FORM) - reference), 1e-10)

    def test_double_sum_canonical(self):
        for z in self.points:
            reference = zeta(z, self.lat)
            with_table = zeta(z, self.lat, ZetaRoute.THEOREM6_CANONICAL, self.table)
            direct = zeta(z, self.lat, ZetaRoute.THEOREM6_CANONICAL)
            self.assertLess(abs(with_table - reference), 1e-9)
            self.assertLess(abs(direct - reference), 1e-9)

    def test_double_sum_literal_deviates(self):
        z = 0.6
        literal = zeta(z, self.lat, ZetaRoute.THEOREM6_LITERAL)
        self.assertGreater(relative_deviation(literal, zeta(z, self.lat)), 1e-3)

    def test_log_derivative(self):
        for z in self.points:
            reference = zeta(z, self.lat)
            self.assertLess(abs(zeta(z, self.lat, ZetaRoute.LOG_DERIVATIVE) - reference), 1e-7)

    def test_addition_theorem(self):
        for u, w in ((0.3, 0.5), (1.2, 2.7), (0.25, 3.9)):
            self.assertLess(abs(zeta_addition_residual(u, w, self.lat)), 1e-10)

    def test_degenerate_lattice(self):
        lat = LatticeParameter(None)
        self.assertEqual(zeta(0.7, lat), 0j)
        self.assertEqual(zeta_addition_residual(0.3, 0.4, lat), 0j)

    def test_outside_strip(self):
        z = 2 * self.K * 0.6j * self.lat.tau_im
        with self.assertRaises(OutsideStrip):
            zeta(z, self.lat)


class TestPrefactorFits(unittest.TestCase):
    """对数导数读法的比例系数测试"""

    def setUp(self):
        self.lat = LatticeParameter.from_nome(0.1)
        self.K = half_period(self.lat)
        self.grid = [2 * self.K * (j + 0.5) / 8 for j in range(8)]

    def test_fit_prefactor(self):
        self.assertEqual(fit_prefactor([2.0, 4.0], [1.0, 2.0]), 2.0)
        self.assertEqual(fit_prefactor([1.0], [0.0]), 0j)

    def test_readings(self):
        fits = prefactor_fits(self.lat, self.grid)
        chain_scale, chain_residual = fits["chain_rule"]
        self.assertLess(abs(chain_scale - 1), 1e-6)
        self.assertLess(chain_residual, 1e-7)
        literal_scale, _ = fits["literal_one_over_2K"]
        self.assertLess(relative_deviation(literal_scale, 2 * self.K), 1e-6)
        _, theta3_residual = fits["theta3_squared_argument"]
        self.assertGreater(theta3_residual, 1e-4)

    def test_consistency_report(self):
        table = coefficients_closed_form(self.lat, 40)
        report = zeta_consistency_report(self.lat, self.grid, table, n_pairs=5)
        self.assertEqual(report.title, "zeta_consistency")
        self.assertEqual(report.failures, ())
        self.assertIs(report.find("theorem6_literal").kind, MeasurementKind.PRINTED_FORM)
        self.assertEqual(len(report.discrepancies), 1)
        self.assertIn("prefactor_fits", report.parameters)
        self.assertEqual(report.parameters["reference_route"], "fourier")
        pairing = report.find("log_derivative_vs_rational")
        self.assertEqual((pairing.route_a, pairing.route_b), ("log_derivative", "rational_form"))
        self.assertTrue(pairing.within_tolerance)
        self.assertTrue(report.find("canonical_vs_rational").within_tolerance)


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(TestZetaRoutes))
    suite.addTests(loader.loadTestsFromTestCase(TestPrefactorFits))
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_all_tests()
    sys.exit(0 if success else 1)
