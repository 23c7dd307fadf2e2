"""
θ函数经典级数与三角-指数展开测试
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from models.exceptions import (
    DegenerateModulus, DomainError, NonConvergence, OutsideConvergenceRegion, OutsideStrip,
)
from models.expansion_types import ExponentSummation, FormVariant
from models.lattice import LatticeParameter, TruncationPolicy
from models.verification_report import MeasurementKind, Verdict
from services.theta_classical import (
    agm_K, lattice_from_modulus, lattice_moduli, modular_K_prime, theta_constants, theta_series,
)
from services.theta_expansion import (
    classical_product, expansion_measurements, theta1_prime_identity, theta4_double_sum,
    theta_product_formula, theta_ratio_expansion, theta_via_expansion, theta_with_route,
    truncation_deviation,
)
from services.trig_coefficients import coefficients_closed_form
from utils.complex_core import relative_deviation, sum_until_negligible


class TestThetaClassical(unittest.TestCase):
    """经典 q 级数测试"""

    def setUp(self):
        self.lat = LatticeParameter.from_nome(0.1)

    def test_constants_at_q_0_1(self):
        """θ3(0) = 1 + 2(q + q⁴ + q⁹ + …)"""
        self.assertAlmostEqual(theta_series(3, 0, self.lat).real, 1.2002000020, places=10)
        self.assertAlmostEqual(theta_series(4, 0, self.lat).real, 0.8001999980, places=10)
        self.assertEqual(theta_series(1, 0, self.lat), 0j)

    def test_jacobi_identity(self):
        """θ3⁴ = θ2⁴ + θ4⁴"""
        for q in (0.05, 0.1, 0.3):
            consts = theta_constants(LatticeParameter.from_nome(q))
            residual = consts.theta3_0 ** 4 - consts.theta2_0 ** 4 - consts.theta4_0 ** 4
            self.assertLess(abs(residual), 1e-13)

    def test_theta1_derivative(self):
        """θ1'(0) = π θ2(0) θ3(0) θ4(0)"""
        consts = theta_constants(self.lat)
        expected = math.pi * consts.theta2_0 * consts.theta3_0 * consts.theta4_0
        self.assertLess(relative_deviation(consts.theta1_d_0, expected), 1e-13)

    def test_quasi_periodicity(self):
        """θ4(v + τ/2) = i q^{-1/4} e^{-iπv} θ1(v)"""
        v = 0.23 + 0.05j
        lhs = theta_series(4, v + self.lat.tau / 2, self.lat)
        rhs = 1j * self.lat.nome_power(-0.25) * np.exp(-1j * math.pi * v) * theta_series(1, v, self.lat)
        self.assertLess(abs(lhs - rhs), 1e-13)

    def test_degenerate_lattice(self):
        lat = LatticeParameter(None)
        self.assertEqual(theta_series(3, 0.3, lat), complex(1.0))
        self.assertEqual(theta_series(4, 0.3, lat), complex(1.0))
        self.assertEqual(theta_series(1, 0.3, lat), 0j)

    def test_invalid_index(self):
        with self.assertRaises(DomainError):
            theta_series(5, 0.1, self.lat)

    def test_moduli(self):
        moduli = lattice_moduli(self.lat)
        self.assertAlmostEqual(abs(moduli.k ** 2 + moduli.k_prime ** 2), 1.0, places=13)
        self.assertLess(relative_deviation(agm_K(moduli.k), moduli.K), 1e-12)
        self.assertLess(relative_deviation(modular_K_prime(self.lat), moduli.K_prime), 1e-10)
        self.assertAlmostEqual(agm_K(0).real, math.pi / 2, places=15)
        with self.assertRaises(DegenerateModulus):
            agm_K(1.0)

    def test_lattice_from_modulus(self):
        for k in (0.1, 0.6, 0.95):
            lat = lattice_from_modulus(k)
            self.assertAlmostEqual(lattice_moduli(lat).k.real, k, places=12)
        self.assertTrue(lattice_from_modulus(0.0).is_degenerate)


class TestThetaExpansion(unittest.TestCase):
    """三角-指数展开测试"""

    def setUp(self):
        self.lat = LatticeParameter.from_nome(0.1)
        self.table = coefficients_closed_form(self.lat, 40)

    def test_expansion_matches_classical(self):
        points = [0.0, 0.13, 0.37, 0.5, 0.81, 0.21 + 0.2j, 0.64 - 0.3j]
        for which in (1, 2, 3, 4):
            for v in points:
                value = theta_via_expansion(which, v, self.lat, self.table)
                reference = theta_series(which, v, self.lat)
                self.assertLess(relative_deviation(value, reference), 1e-9, f"θ{which}({v})")

    def test_printed_theta1_phase(self):
        """印刷形式的 θ1 等于 i·θ1"""
        v = 0.27
        printed = theta_via_expansion(1, v, self.lat, self.table, variant=FormVariant.PAPER_LITERAL)
        self.assertLess(abs(printed - 1j * theta_series(1, v, self.lat)), 1e-9)

    def test_outside_strip(self):
        v = 0.3 + 0.6 * self.lat.tau_im * 1j
        with self.assertRaises(OutsideStrip):
            theta_via_expansion(4, v, self.lat, self.table)

    def test_table_lattice_mismatch(self):
        other = coefficients_closed_form(LatticeParameter.from_nome(0.2), 10)
        with self.assertRaises(ValueError):
            theta_via_expansion(4, 0.2, self.lat, other)

    def test_summation_routes(self):
        """收敛盘内取幂级数, 盘外自动改用乘积"""
        _, route = theta_with_route(4, 0.25, self.lat, self.table)
        self.assertIs(route, ExponentSummation.POWER_SERIES)
        lat = LatticeParameter.from_nome(0.3)
        table = coefficients_closed_form(lat, 40)
        value, route = theta_with_route(4, 0.5, lat, table)
        self.assertIs(route, ExponentSummation.PRODUCT)
        self.assertLess(relative_deviation(value, theta_series(4, 0.5, lat)), 1e-9)
        with self.assertRaises(OutsideConvergenceRegion):
            theta_with_route(4, 0.5, lat, table, summation=ExponentSummation.POWER_SERIES)

    def test_ratio_expansions(self):
        for v in (0.12, 0.4 + 0.1j):
            ratio = theta_ratio_expansion(3, 4, v, self.lat, self.table)
            expected = theta_series(3, v, self.lat) / theta_series(4, v, self.lat)
            self.assertLess(relative_deviation(ratio, expected), 1e-9)
            ratio = theta_ratio_expansion(1, 2, v, self.lat, self.table)
            expected = theta_series(1, v, self.lat) / theta_series(2, v, self.lat)
            self.assertLess(relative_deviation(ratio, expected), 1e-9)

    def test_double_sum(self):
        for v in (0.1, 0.25, 0.5):
            value = theta4_double_sum(v, self.lat)
            self.assertLess(relative_deviation(value, theta_series(4, v, self.lat)), 1e-10)
        with self.assertRaises(OutsideConvergenceRegion):
            theta4_double_sum(0.5, LatticeParameter.from_nome(0.3))

    def test_product_formula(self):
        for v in (0.15, 0.33 + 0.1j):
            value = theta_product_formula(v, self.lat, self.table)
            self.assertLess(relative_deviation(value, classical_product(v, self.lat)), 1e-9)
            printed = theta_product_formula(v, self.lat, self.table, printed_prefactor=True)
            self.assertGreater(relative_deviation(printed, classical_product(v, self.lat)), 1e-3)

    def test_theta1_prime_identity(self):
        report = theta1_prime_identity(self.lat, self.table)
        self.assertTrue(report.find("theta1_prime_identity").within_tolerance)
        self.assertIs(report.find("theta1_prime_cos_power_series").kind, MeasurementKind.PRINTED_FORM)
        self.assertNotEqual(report.verdict, Verdict.FAIL)

    def test_expansion_measurements(self):
        rng = np.random.default_rng(7)
        real_points = list(rng.uniform(0.0, 1.0, 10))
        complex_points = {which: [complex(a, b) for a, b in zip(rng.uniform(0, 1, 5),
                                                              rng.uniform(-0.3, 0.3, 5))]
                          for which in (1, 2, 3, 4)}
        measurements, routes = expansion_measurements(self.lat, self.table, real_points, complex_points)
        self.assertEqual(len(measurements), 5)
        self.assertTrue(all(m.within_tolerance for m in measurements))
        self.assertEqual(set(routes), {"theta1", "theta2", "theta3", "theta4"})

    def test_expansion_across_nomes(self):
        rng = np.random.default_rng(20240601)
        for q in (0.05, 0.1, 0.2, 0.3):
            lat = LatticeParameter.from_nome(q)
            table = coefficients_closed_form(lat, 40)
            real_points = list(rng.uniform(0.0, 1.0, 8))
            width = 0.45 * lat.tau_im
            complex_points = {which: [complex(a, b) for a, b in zip(rng.uniform(0, 1, 4),
                                                                  rng.uniform(-width, width, 4))]
                              for which in (1, 2, 3, 4)}
            measurements, _ = expansion_measurements(lat, table, real_points, complex_points)
            for m in measurements:
                self.assertTrue(m.within_tolerance, f"q={q}: {m.name} {m.governing_deviation:.3e}")


class TestThetaInvariants(unittest.TestCase):
    """周期性、半周期平移与截断不变性"""

    def setUp(self):
        self.lat = LatticeParameter.from_nome(0.1)
        self.points = [0.0, 0.17, 0.42, 0.3 + 0.1j, 0.71 - 0.05j]

    def test_unit_period(self):
        """θ3、θ4 以 1 为周期, θ1、θ2 在平移 1 后变号"""
        for v in self.points:
            for which, sign in ((1, -1), (2, -1), (3, 1), (4, 1)):
                shifted = theta_series(which, v + 1, self.lat)
                expected = sign * theta_series(which, v, self.lat)
                self.assertLess(abs(shifted - expected), 1e-13, f"θ{which}({v}+1)")

    def test_half_period_shifts(self):
        """θ2(v) = θ1(v+½), θ3(v) = θ4(v+½)"""
        for v in self.points:
            self.assertLess(abs(theta_series(1, v + 0.5, self.lat) - theta_series(2, v, self.lat)), 1e-13)
            self.assertLess(abs(theta_series(4, v + 0.5, self.lat) - theta_series(3, v, self.lat)), 1e-13)

    def test_doubling_term_cap_is_invisible(self):
        base = TruncationPolicy(max_terms=400)
        doubled = TruncationPolicy(max_terms=800)
        table = coefficients_closed_form(self.lat, 40)
        for which in (1, 2, 3, 4):
            for v in self.points:
                self.assertEqual(theta_series(which, v, self.lat, base),
                                 theta_series(which, v, self.lat, doubled))
                self.assertEqual(theta_via_expansion(which, v, self.lat, table, base),
                                 theta_via_expansion(which, v, self.lat, table, doubled))

    def test_doubling_order_never_worsens_truncation(self):
        table = coefficients_closed_form(self.lat, 32)
        points = [0.1, 0.25, 0.4]
        deviations = [truncation_deviation(4, points, self.lat, table.truncated(P))
                      for P in (4, 8, 16, 32)]
        for coarse, fine in zip(deviations, deviations[1:]):
            self.assertLessEqual(fine, coarse)
        self.assertLess(deviations[-1], 1e-9)
        self.assertGreater(deviations[0], deviations[-1])

    def test_appending_zero_terms(self):
        policy = TruncationPolicy()
        geometric = [0.5 ** n for n in range(60)]
        self.assertEqual(sum_until_negligible(geometric + [0.0] * 5, policy),
                         sum_until_negligible(geometric, policy))
        ending = [1.0, 0.25, 1e-20]
        self.assertEqual(sum_until_negligible(ending + [0.0, 0.0, 0.0], policy),
                         sum_until_negligible(ending, policy))
        # 末项不可忽略的有限序列在补零后才可判定收敛
        with self.assertRaises(NonConvergence):
            sum_until_negligible([1.0, 0.5], policy)
        self.assertEqual(sum_until_negligible([1.0, 0.5, 0.0, 0.0, 0.0], policy), 1.5 + 0j)


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(TestThetaClassical))
    suite.addTests(loader.loadTestsFromTestCase(TestThetaExpansion))
    suite.addTests(loader.loadTestsFromTestCase(TestThetaInvariants))
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_all_tests()
    sys.exit(0 if success else 1)
