"""
验证管理器
按套件组织交叉验证、nome 范围保护与并发执行
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config.config_manager import ConfigManager
from models.exceptions import NumericOverflow, ThetaComputationError
from models.expansion_types import FormVariant, expansion_form
from models.lattice import LatticeParameter, TruncationPolicy
from models.pde_types import BoundaryCondition, GridSpec1D
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services import applications_verify as pde
from services import elliptic
from services.report_io import aggregate_reports
from services.theta_classical import lattice_moduli, theta_constants, theta_series
from services.theta_expansion import (
    expansion_measurements, printed_expansion_measurements, theta1_prime_identity,
    theta4_double_sum, theta_ratio_expansion,
)
from services.trig_coefficients import (
    calibrate_recurrence, closed_form_representations, coefficients_closed_form,
    convergence_radius, extract_coefficients_oracle, printed_seeds, recurrence_table,
    system_S_residual,
)
from services.zeta import half_period, zeta_consistency_report
from utils.complex_core import relative_deviation
from utils.logger import PerformanceLogger, VerificationLogger

logger = logging.getLogger(__name__)

SUITES = ("theta", "coefficients", "elliptic", "zeta", "heat", "nls")

# 套件内的数值异常都记为失败报告
SUITE_ERRORS = (ThetaComputationError, ArithmeticError, np.linalg.LinAlgError)


def _worst(pairs: Iterable) -> tuple:
    worst_abs = 0.0
    worst_rel = 0.0
    count = 0
    for value, reference in pairs:
        worst_abs = max(worst_abs, abs(value - reference))
        worst_rel = max(worst_rel, relative_deviation(value, reference))
        count += 1
    return worst_abs, worst_rel, count


def merge_reports(title: str, reports: Sequence[VerificationReport],
                  measurements: Sequence[Measurement] = (), parameters: Optional[dict] = None,
                  subject_refs: Sequence[str] = (), artifact_version: str = "") -> VerificationReport:
    """子报告的测量按子报告标题加前缀后并入套件报告"""
    merged = list(measurements)
    refs = list(subject_refs)
    params = dict(parameters or {})
    for report in reports:
        merged.extend(m.renamed(report.title) for m in report.measurements)
        refs.extend(r for r in report.subject_refs if r not in refs)
        params[report.title] = report.parameters
    return VerificationReport.build(title, refs, params, merged, artifact_version)


class VerificationManager:
    """验证套件管理器"""

    def __init__(self, config_manager: ConfigManager, lat: LatticeParameter,
                 force: bool = False, policy: Optional[TruncationPolicy] = None):
        self.config = config_manager
        self.lat = lat
        self.force = force
        self.policy = policy or config_manager.get_truncation_policy()
        self.seed = config_manager.get_random_seed()
        self.version = config_manager.get_artifact_version()
        self.events = VerificationLogger(__name__)
        self.performance = PerformanceLogger("verification")
        self._suites: Dict[str, Callable[[], VerificationReport]] = {
            "theta": self.run_theta_suite,
            "coefficients": self.run_coefficients_suite,
            "elliptic": self.run_elliptic_suite,
            "zeta": self.run_zeta_suite,
            "heat": self.run_heat_suite,
            "nls": self.run_nls_suite,
        }

    def tol(self, name: str) -> float:
        return self.config.get_tolerance(name)

    def in_supported_range(self) -> bool:
        nome_min, nome_max = self.config.get_nome_range()
        q = abs(self.lat.nome)
        return nome_min < q <= nome_max

    def range_guard_report(self, suite: str) -> VerificationReport:
        """nome 超出支持范围且未指定 --force 时的失败报告"""
        nome_min, nome_max = self.config.get_nome_range()
        measurement = Measurement("nome_range_guard", "q", "supported_range", math.inf, math.inf, 1,
                                  tolerance=0.0)
        logger.warning(f"|q|={abs(self.lat.nome):.6g} 超出支持范围 ({nome_min}, {nome_max}]")
        return VerificationReport.build(
            suite, ["supported nome range"],
            {"q": self.lat.nome, "nome_min": nome_min, "nome_max": nome_max, "force": False},
            [measurement], self.version)

    def run(self, suite: str) -> VerificationReport:
        """运行单个套件或 all"""
        if suite != "all" and suite not in self._suites:
            raise ValueError(f"未知验证套件: {suite}")
        if not self.force and not self.in_supported_range():
            return self.range_guard_report(suite)
        if suite == "all":
            return self.run_all()
        return self._run_guarded(suite)

    def run_all(self, suites: Sequence[str] = SUITES) -> VerificationReport:
        """各套件并发执行, 按套件顺序汇总"""
        workers = max(1, self.config.get_max_workers())
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(self._run_guarded, name) for name in suites]
            reports = [future.result() for future in futures]
        return aggregate_reports(reports, "all", self.version)

    def _run_guarded(self, suite: str) -> VerificationReport:
        self.events.suite_started(suite, self.lat.nome)
        timing = self.performance.start_timing(f"suite {suite}")
        try:
            report = self._suites[suite]()
        except SUITE_ERRORS as e:
            self.events.suite_failed(suite, str(e))
            failure = Measurement("suite_error", suite, type(e).__name__, math.inf, math.inf, 1,
                                  tolerance=0.0)
            report = VerificationReport.build(suite, [], {"q": self.lat.nome, "error": str(e)},
                                              [failure], self.version)
        self.performance.end_timing(timing)
        for m in report.measurements:
            self.events.measurement_recorded(m.name, m.governing_deviation, m.tolerance)
        for m in report.discrepancies:
            self.events.discrepancy_found(suite, m.name, m.governing_deviation)
        self.events.suite_finished(suite, report.verdict.value, len(report.measurements))
        return report

    # 采样点

    def _rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def theta_points(self, count: int) -> tuple:
        """实数点与各θ带内复数点各 count/2 个"""
        rng = self._rng()
        half = max(1, count // 2)
        real_points = [float(v) for v in rng.uniform(0.0, 1.0, half)]
        complex_points = {}
        for which in (1, 2, 3, 4):
            width = 0.9 * expansion_form(which).strip.half_width_factor * self.lat.tau_im
            if self.lat.is_degenerate:
                width = 0.5
            re = rng.uniform(0.0, 1.0, half)
            im = rng.uniform(-width, width, half)
            complex_points[which] = [complex(a, b) for a, b in zip(re, im)]
        return real_points, complex_points

    # 套件

    def run_theta_suite(self) -> VerificationReport:
        lat, policy = self.lat, self.policy
        settings = self.config.get_suite_settings("theta")
        tolerance = self.tol("theta_expansion")
        table = coefficients_closed_form(lat, policy.max_order_P, policy)
        real_points, complex_points = self.theta_points(int(settings["points_per_theta"]))
        measurements, route_counts = expansion_measurements(
            lat, table, real_points, complex_points, policy, tolerance)
        for context, counts in route_counts.items():
            self.events.route_fallback(context, counts)

        half_strip_points = list(real_points) + list(complex_points[4])
        ratio_34 = [(theta_ratio_expansion(3, 4, v, lat, table, policy),
                     theta_series(3, v, lat, policy) / theta_series(4, v, lat, policy))
                    for v in half_strip_points]
        worst_abs, worst_rel, n = _worst(ratio_34)
        measurements.append(Measurement("theta3_over_theta4_expansion", "expansion_ratio",
                                        "classical_ratio", worst_abs, worst_rel, n,
                                        tolerance=tolerance, governing="rel"))
        if not lat.is_degenerate:
            ratio_12 = [(theta_ratio_expansion(1, 2, v, lat, table, policy),
                         theta_series(1, v, lat, policy) / theta_series(2, v, lat, policy))
                        for v in complex_points[2]]
            worst_abs, worst_rel, n = _worst(ratio_12)
            measurements.append(Measurement("theta1_over_theta2_expansion", "expansion_ratio",
                                            "classical_ratio", worst_abs, worst_rel, n,
                                            tolerance=tolerance, governing="rel"))

        radius = convergence_radius(lat, policy)
        inside = [v for v in real_points if math.sin(math.pi * v) ** 2 < 0.9 * radius]
        if inside:
            worst_abs, worst_rel, n = _worst(
                (theta4_double_sum(v, lat, policy), theta_series(4, v, lat, policy)) for v in inside)
            measurements.append(Measurement("theta4_double_sum", "double_sum", "classical_series",
                                            worst_abs, worst_rel, n, tolerance=tolerance,
                                            governing="rel"))
        parameters = {"q": lat.nome, "P": table.max_order_P, "seed": self.seed,
                      "n_real": len(real_points), "n_complex_per_theta": len(complex_points[1]),
                      "summation_routes": route_counts, "double_sum_points": len(inside)}
        return VerificationReport.build(
            "theta", ["θ1-θ4 trigonometric-exponential expansion", "θ2θ3θ4 product formula",
                      "closed-form coefficients"],
            parameters, measurements, self.version)

    def run_coefficients_suite(self) -> VerificationReport:
        lat, policy = self.lat, self.policy
        settings = self.config.get_suite_settings("coefficients")
        P = policy.max_order_P
        extraction_P = min(int(settings["extraction_P"]), P)
        closed = coefficients_closed_form(lat, P, policy)
        oracle = extract_coefficients_oracle(lat, extraction_P, policy)
        measurements = []

        worst_abs, worst_rel, n = _worst(zip(closed.values[:extraction_P], oracle.values))
        measurements.append(Measurement("closed_form_vs_oracle", "closed_form", "extracted_oracle",
                                        worst_abs, worst_rel, n,
                                        tolerance=self.tol("coefficient_extraction")))
        q_form, sine_form = closed_form_representations(lat, P, policy)
        worst_abs, worst_rel, n = _worst(zip(q_form, sine_form))
        measurements.append(Measurement("closed_form_representations", "q_form", "sine_form",
                                        worst_abs, worst_rel, n, governing="rel",
                                        tolerance=self.tol("coefficient_representations")))

        seed_c0, seed_c2, seed_c4 = printed_seeds(theta_constants(lat, policy))
        seed_tol = self.tol("seed_c2")
        measurements.append(Measurement(
            "seed_c2", "printed_seed", "closed_form", abs(seed_c2 - closed.c(1)),
            relative_deviation(seed_c2, closed.c(1)), 1, tolerance=seed_tol, governing="rel"))
        measurements.append(Measurement(
            "seed_c4", "printed_seed", "closed_form", abs(seed_c4 - closed.c(2)),
            relative_deviation(seed_c4, closed.c(2)), 1, tolerance=seed_tol, governing="rel",
            kind=MeasurementKind.PRINTED_FORM))

        for calibrated, name in ((False, "recurrence_table_printed_seeds"),
                                 (True, "recurrence_table_calibrated")):
            try:
                table = recurrence_table(lat, extraction_P, policy, calibrated=calibrated)
                worst_abs, worst_rel, n = _worst(zip(table.values, closed.values[:extraction_P]))
            except NumericOverflow as e:
                # 正向递推误差逐步放大
                logger.info(f"{name} 溢出: {e}")
                worst_abs, worst_rel, n = math.inf, math.inf, extraction_P
            measurements.append(Measurement(name, "forward_recurrence", "closed_form",
                                            worst_abs, worst_rel, n, kind=MeasurementKind.INFO))

        orders = int(settings["system_orders"])
        step = float(settings["system_step"])
        system_tol = self.tol("system_s")
        for variant, kind in ((FormVariant.PAPER_LITERAL, MeasurementKind.PRINTED_FORM),
                              (FormVariant.CANONICAL_DERIVED, MeasurementKind.CHECK)):
            residuals = [abs(system_S_residual(lat, orders + 1, p, policy, step, variant,
                                               richardson=True))
                         for p in range(1, orders + 1)]
            worst = max(residuals)
            measurements.append(Measurement(f"system_S_{variant.value}", "fd_tau_derivative",
                                            "coefficient_polynomial", worst, worst, len(residuals),
                                            tolerance=system_tol, kind=kind))

        real_points = [(j + 0.5) / 20 for j in range(20)]
        measurements.extend(printed_expansion_measurements(
            lat, closed, real_points, policy, self.tol("theta_expansion")))

        reports = [
            calibrate_recurrence(lat, extraction_P, policy, self.tol("coefficient_extraction"),
                                 self.version),
            theta1_prime_identity(lat, closed, policy, self.tol("theta1_prime"), self.version),
        ]
        parameters = {"q": lat.nome, "P": P, "extraction_P": extraction_P,
                      "closed_form": closed.to_dict()["c"][:extraction_P],
                      "printed_seeds": {"c0": seed_c0, "c2": seed_c2, "c4": seed_c4},
                      "system_orders": orders, "system_step": step}
        return merge_reports("coefficients", reports, measurements, parameters,
                             ["closed-form coefficients", "printed seeds c0, c2, c4",
                              "system (S)", "recurrence (A)"], self.version)

    def elliptic_grid(self) -> List[complex]:
        points = int(self.config.get_suite_settings("elliptic")["grid_points"])
        K = lattice_moduli(self.lat, self.policy).K
        return [4 * K * j / points for j in range(points)]

    def run_elliptic_suite(self) -> VerificationReport:
        lat, policy = self.lat, self.policy
        settings = self.config.get_suite_settings("elliptic")
        grid = self.elliptic_grid()
        table = coefficients_closed_form(lat, policy.max_order_P, policy)
        reports = [
            elliptic.identity_suite_algebraic(lat, grid, policy, self.tol("elliptic_algebraic"),
                                              self.version),
            elliptic.identity_suite_derivative(lat, grid, float(settings["derivative_step"]), policy,
                                               self.tol("elliptic_derivative"), self.version),
            elliptic.moduli_report(lat, policy, self.tol("moduli"), self.version),
            elliptic.limits_report(policy, hyperbolic_tolerance=self.tol("hyperbolic_limit"),
                                   artifact_version=self.version),
        ]
        measurements = elliptic.expansion_measurements(lat, grid, table, policy,
                                                       self.tol("elliptic_expansion"))
        parameters = {"q": lat.nome, "n_points": len(grid), "P": table.max_order_P}
        return merge_reports("elliptic", reports, measurements, parameters,
                             ["sn, cn, dn theta ratios", "sn, cn, dn expansions"], self.version)

    def run_zeta_suite(self) -> VerificationReport:
        lat, policy = self.lat, self.policy
        settings = self.config.get_suite_settings("zeta")
        points = int(settings["grid_points"])
        K = half_period(lat, policy)
        grid = [2 * K * (j + 0.5) / points for j in range(points)]
        table = coefficients_closed_form(lat, policy.max_order_P, policy)
        tolerances = {
            "rational_form": self.tol("zeta_rational"),
            "theorem6_canonical": self.tol("zeta_canonical"),
            "canonical_vs_rational": self.tol("zeta_canonical_vs_rational"),
            "theorem6_literal": self.tol("zeta_canonical"),
            "log_derivative": self.tol("zeta_log_derivative"),
            "addition": self.tol("zeta_addition"),
            "period": self.tol("zeta_period"),
            "oddness": self.tol("zeta_period"),
        }
        report = zeta_consistency_report(
            lat, grid, table, policy, tolerances, int(settings["addition_pairs"]), self.seed,
            float(settings["log_derivative_step"]), self.version)
        return merge_reports("zeta", [report], parameters={"q": lat.nome},
                             artifact_version=self.version)

    def run_heat_suite(self) -> VerificationReport:
        lat, policy = self.lat, self.policy
        settings = self.config.get_suite_settings("heat")
        n_points = int(settings["sample_points"])
        points = [(j + 0.5) / n_points for j in range(n_points)]
        grid = GridSpec1D(0.0, 1.0, int(settings["bvp_points"]))
        reports = [pde.heat_theta_report(lat, points, float(settings["step"]), policy,
                                         self.tol("heat_fd_residual"), self.tol("heat_mode"),
                                         self.version)]
        for boundary in BoundaryCondition:
            reports.append(pde.heat_bvp_fd_compare(
                grid, float(settings["kappa"]), float(settings["t_final"]), float(settings["dt"]),
                boundary, policy, self.tol("heat_bvp"), self.version))
        return merge_reports("heat", reports, parameters={"q": lat.nome},
                             artifact_version=self.version)

    def run_nls_suite(self) -> VerificationReport:
        policy = self.policy
        s = self.config.get_suite_settings("nls")
        r, p_wave, k = float(s["r"]), float(s["p_wave"]), float(s["k"])
        grid = pde.nls_default_grid(r, k, int(s["grid_points"]))
        search = pde.nls_convention_search(
            r, p_wave, k, grid, float(s["t_sample"]), policy, self.tol("nls_residual"),
            self.tol("nls_separation"), artifact_version=self.version)
        plane_k = float(s["plane_wave_k"])
        plane = pde.nls_plane_wave_check(r, plane_k, pde.nls_default_grid(r, plane_k, int(s["grid_points"])),
                                         float(s["t_sample"]), policy, self.tol("nls_plane_wave"))
        return merge_reports("nls", [search], [plane], {"plane_wave_k": plane_k},
                             artifact_version=self.version)
