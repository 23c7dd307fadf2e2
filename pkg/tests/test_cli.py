"""
命令行界面与验证管理器测试
"""

import copy
import io
import json
import logging
import math
import os
import shutil
import sys
import tempfile
import unittest
from argparse import ArgumentTypeError
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import yaml

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config.config_manager import DEFAULT_CONFIG, ConfigManager
from models.exceptions import NonConvergence
from models.lattice import LatticeParameter
from models.verification_report import Measurement, MeasurementKind, Verdict, VerificationReport
from services.verification_manager import VerificationManager
from ui.cli_interface import (
    EXIT_COMPUTATION, EXIT_CONFIGURATION, EXIT_OK, format_number, main, parse_complex,
)


class _TempConfigMixin:
    """临时配置文件, 日志写到临时目录"""

    def make_config(self, truncation=None, **verification):
        self.temp_dir = tempfile.mkdtemp()
        config = copy.deepcopy(DEFAULT_CONFIG)
        config['logging']['file_path'] = os.path.join(self.temp_dir, 'logs', 'test.log')
        config['verification']['theta']['points_per_theta'] = 20
        config['verification'].update(verification)
        config['truncation'].update(truncation or {})
        self.config_file = os.path.join(self.temp_dir, 'config.yaml')
        with open(self.config_file, 'w', encoding='utf-8') as f:
            yaml.dump(config, f, allow_unicode=True)

    def cleanup(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            handler.close()
            root.removeHandler(handler)
        shutil.rmtree(self.temp_dir)


class TestParsing(unittest.TestCase):
    """参数解析与数值格式测试"""

    def test_parse_complex(self):
        self.assertEqual(parse_complex("0.25"), 0.25 + 0j)
        self.assertEqual(parse_complex("0.3, -0.1"), complex(0.3, -0.1))
        for bad in ("", "a", "1,2,3", "1,"):
            with self.assertRaises(ArgumentTypeError):
                parse_complex(bad)

    def test_format_number(self):
        self.assertEqual(format_number(1.2002000020), "1.2002000020")
        self.assertEqual(format_number(complex(-0.0, 1e-20)), "0.0000000000")
        self.assertEqual(format_number(complex(0.5, -0.25)), "0.5000000000-0.2500000000i")


class TestCommands(_TempConfigMixin, unittest.TestCase):
    """子命令测试"""

    def setUp(self):
        self.make_config()

    def tearDown(self):
        self.cleanup()

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(list(argv) + ["--config", self.config_file])
        return code, stdout.getvalue(), stderr.getvalue()

    def test_eval_theta3(self):
        code, out, _ = self.run_cli("eval", "theta3", "0", "--q", "0.1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out, "1.2002000020\n")

    def test_eval_zeros(self):
        for function in ("sn", "zeta", "theta1"):
            code, out, _ = self.run_cli("eval", function, "0", "--q", "0.1")
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(out, "0.0000000000\n", function)

    def test_eval_routes_agree(self):
        values = {}
        for route in ("classical", "expansion", "double_sum"):
            code, out, _ = self.run_cli("eval", "theta4", "0.25", "--q", "0.1", "--route", route,
                                        "--format", "json")
            self.assertEqual(code, EXIT_OK)
            row = json.loads(out)[0]
            self.assertEqual(row["route"], route)
            values[route] = float(row["value_re"])
        self.assertAlmostEqual(values["expansion"], values["classical"], places=12)
        self.assertAlmostEqual(values["double_sum"], values["classical"], places=12)

    def test_eval_tau_im(self):
        code, out, _ = self.run_cli("eval", "theta3", "0", "--tau-im", "1.0")
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(float(out), 1 + 2 * (math.exp(-math.pi) + math.exp(-4 * math.pi)),
                               places=9)

    def test_eval_outside_strip(self):
        code, out, err = self.run_cli("eval", "theta4", "0.3,2.0", "--q", "0.1", "--route", "expansion")
        self.assertEqual(code, EXIT_COMPUTATION)
        self.assertEqual(out, "")
        self.assertIn("OutsideStrip", err)

    def test_eval_route_not_applicable(self):
        code, _, _ = self.run_cli("eval", "theta1", "0.2", "--q", "0.1", "--route", "double_sum")
        self.assertEqual(code, EXIT_CONFIGURATION)
        code, _, _ = self.run_cli("eval", "sn", "0.2", "--q", "0.1", "--route", "fourier")
        self.assertEqual(code, EXIT_CONFIGURATION)

    def test_invalid_nome(self):
        code, _, _ = self.run_cli("eval", "theta3", "0", "--q", "1.5")
        self.assertEqual(code, EXIT_CONFIGURATION)
        code, _, _ = self.run_cli("eval", "theta3", "0", "--tau-im", "-1")
        self.assertEqual(code, EXIT_CONFIGURATION)

    def test_lattice_options_exclusive(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["eval", "theta3", "0", "--q", "0.1", "--tau-im", "1.0"])
        self.assertEqual(ctx.exception.code, 2)

    def test_coeffs(self):
        code, out, _ = self.run_cli("coeffs", "--q", "0.1", "--P", "2", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        rows = json.loads(out)
        self.assertEqual([row["order"] for row in rows], [2, 4])
        self.assertAlmostEqual(float(rows[0]["c_closed_form"]), 0.4978756, delta=1e-6)
        self.assertAlmostEqual(float(rows[1]["c_closed_form"]), -0.1219407, delta=1e-6)

    def test_coeffs_degenerate(self):
        code, out, _ = self.run_cli("coeffs", "--q", "0", "--P", "3", "--format", "csv")
        self.assertEqual(code, EXIT_OK)
        lines = out.splitlines()
        self.assertEqual(lines[0], "order,c_closed_form")
        self.assertEqual(lines[1:], ["2,0.0000000000", "4,0.0000000000", "6,0.0000000000"])

    def test_coeffs_compare(self):
        code, out, _ = self.run_cli("coeffs", "--q", "0.1", "--P", "4", "--compare", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        rows = json.loads(out)
        self.assertEqual(rows[0]["flag"], "")
        self.assertEqual(rows[1]["flag"], "discrepancy")
        self.assertEqual(rows[2]["c_printed_seed"], "")
        self.assertAlmostEqual(float(rows[0]["c_oracle"]), float(rows[0]["c_closed_form"]), places=8)

    def test_output_file(self):
        out_path = os.path.join(self.temp_dir, 'value.txt')
        code, out, _ = self.run_cli("eval", "theta3", "0", "--q", "0.1", "--out", out_path)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out, "")
        with open(out_path, encoding='utf-8') as f:
            self.assertEqual(f.read(), "1.2002000020\n")

    def test_verify_outside_range(self):
        code, out, err = self.run_cli("verify", "theta", "--q", "0.99", "--format", "json")
        self.assertEqual(code, EXIT_COMPUTATION)
        report = json.loads(out)
        self.assertEqual(report["verdict"], "fail")
        self.assertEqual(report["measurements"][0]["name"], "nome_range_guard")
        self.assertIn("❌", err)

    def test_verify_theta(self):
        code, out, err = self.run_cli("verify", "theta", "--q", "0.1", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertEqual(report["verdict"], "pass")
        self.assertEqual(report["parameters"]["n_real"], 10)
        self.assertIn("✅", err)

    def test_verify_coefficients(self):
        code, out, err = self.run_cli("verify", "coefficients", "--q", "0.1", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertEqual(report["verdict"], "documented_discrepancy")
        names = {m["name"]: m for m in report["measurements"]}
        self.assertEqual(names["seed_c4"]["kind"], "printed_form")
        self.assertIn("calibrate_recurrence/fitted_c0_vs_printed_c0", names)
        self.assertIn("⚠️", err)

    def test_eval_zeta_canonical_route(self):
        values = {}
        for route in ("fourier", "theorem6_canonical", "rational_form"):
            code, out, _ = self.run_cli("eval", "zeta", "0.3", "--q", "0.1", "--route", route,
                                        "--format", "json")
            self.assertEqual(code, EXIT_OK, route)
            row = json.loads(out)[0]
            self.assertEqual(row["route"], route)
            values[route] = float(row["value_re"])
        self.assertAlmostEqual(values["theorem6_canonical"], values["fourier"], places=9)
        self.assertAlmostEqual(values["rational_form"], values["fourier"], places=9)

    def test_verify_all_is_reproducible(self):
        first = self.run_cli("verify", "all", "--q", "0.1", "--format", "json")
        second = self.run_cli("verify", "all", "--q", "0.1", "--format", "json")
        self.assertEqual(first[0], second[0])
        self.assertEqual(first[1], second[1])
        self.assertEqual(json.loads(first[1])["title"], "all")

    def test_verify_coefficients_at_larger_nome(self):
        code, out, _ = self.run_cli("verify", "coefficients", "--q", "0.3", "--format", "json")
        self.assertIn(code, (EXIT_OK, EXIT_COMPUTATION))

        def reject(token):
            raise ValueError(f"非标准 JSON 常量: {token}")

        report = json.loads(out, parse_constant=reject)
        names = {m["name"]: m for m in report["measurements"]}
        self.assertNotIn("suite_error", names)
        self.assertEqual(names["recurrence_table_printed_seeds"]["kind"], "info")


class TestInvalidConfig(_TempConfigMixin, unittest.TestCase):
    """无效配置测试"""

    def setUp(self):
        self.make_config(nome_min=0.3, nome_max=0.2)

    def tearDown(self):
        self.cleanup()

    def test_exit_code(self):
        with redirect_stdout(io.StringIO()), redirect_stderr(io.StringIO()) as err:
            code = main(["eval", "theta3", "0", "--q", "0.1", "--config", self.config_file])
        self.assertEqual(code, EXIT_CONFIGURATION)
        self.assertIn("nome", err.getvalue())


class TestInvalidTruncation(_TempConfigMixin, unittest.TestCase):
    """截断参数越界的配置"""

    def tearDown(self):
        self.cleanup()

    def run_with(self, **truncation):
        self.make_config(truncation=truncation)
        with redirect_stdout(io.StringIO()) as out, redirect_stderr(io.StringIO()) as err:
            code = main(["eval", "theta3", "0", "--q", "0.1", "--config", self.config_file])
        return code, out.getvalue(), err.getvalue()

    def test_too_few_terms(self):
        code, out, err = self.run_with(max_terms=5)
        self.assertEqual(code, EXIT_CONFIGURATION)
        self.assertEqual(out, "")
        self.assertIn("max_terms", err)
        self.assertNotIn("Traceback", err)

    def test_order_below_minimum(self):
        code, _, err = self.run_with(max_order_P=2)
        self.assertEqual(code, EXIT_CONFIGURATION)
        self.assertIn("max_order_P", err)


class TestVerificationManager(_TempConfigMixin, unittest.TestCase):
    """验证管理器调度测试"""

    def setUp(self):
        self.make_config()
        self.config_manager = ConfigManager(self.config_file)

    def tearDown(self):
        self.cleanup()

    @staticmethod
    def _report(title, name):
        measurement = Measurement(name, "a", "b", 0.0, 0.0, 1, tolerance=1e-9)
        return VerificationReport.build(title, [f"{title} ref"], {"q": 0.1}, [measurement])

    def _stubbed(self, q=0.1, force=False):
        manager = VerificationManager(self.config_manager, LatticeParameter.from_nome(q), force)

        def failing():
            raise NonConvergence("级数未收敛")

        manager._suites = {
            "theta": lambda: self._report("theta", "a"),
            "zeta": lambda: self._report("zeta", "b"),
            "heat": failing,
        }
        return manager

    def test_unknown_suite(self):
        with self.assertRaises(ValueError):
            self._stubbed().run("bogus")

    def test_suite_error_becomes_failure(self):
        report = self._stubbed().run("heat")
        self.assertIs(report.verdict, Verdict.FAIL)
        self.assertEqual(report.find("suite_error").route_b, "NonConvergence")
        self.assertEqual(report.parameters["error"], "级数未收敛")

    def test_run_all_order_and_prefixes(self):
        report = self._stubbed().run_all(("zeta", "theta", "heat"))
        self.assertEqual(report.title, "all")
        self.assertEqual([m.name for m in report.measurements],
                         ["zeta/b", "theta/a", "heat/suite_error"])
        self.assertIs(report.verdict, Verdict.FAIL)

    def test_range_guard_and_force(self):
        self.assertFalse(self._stubbed(q=0.0).in_supported_range())
        guarded = self._stubbed(q=0.7).run("theta")
        self.assertEqual(guarded.find("nome_range_guard").max_abs_deviation, math.inf)
        forced = self._stubbed(q=0.7, force=True).run("theta")
        self.assertIs(forced.verdict, Verdict.PASS)

    def test_numeric_error_becomes_failure(self):
        manager = self._stubbed()

        def overflowing():
            raise OverflowError("(34, 'Numerical result out of range')")

        manager._suites["coefficients"] = overflowing
        report = manager.run("coefficients")
        self.assertIs(report.verdict, Verdict.FAIL)
        self.assertEqual(report.find("suite_error").route_b, "OverflowError")

    def test_coefficients_suite_at_larger_nome(self):
        manager = VerificationManager(self.config_manager, LatticeParameter.from_nome(0.3))
        report = manager.run("coefficients")
        self.assertEqual(report.title, "coefficients")
        recurrence = report.find("recurrence_table_printed_seeds")
        self.assertIs(recurrence.kind, MeasurementKind.INFO)
        self.assertIs(recurrence.verdict, Verdict.PASS)


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for case in (TestParsing, TestCommands, TestInvalidConfig, TestInvalidTruncation,
                 TestVerificationManager):
        suite.addTests(loader.loadTestsFromTestCase(case))
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_all_tests()
    sys.exit(0 if success else 1)
