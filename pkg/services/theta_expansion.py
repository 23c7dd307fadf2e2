"""
θ函数三角展开服务
θ_j(v) = θ4(0)·exp(phase + Σ c_{2p} basis^{2p}) 形式的求值、乘积公式与 θ1'(0) 恒等式
"""

import logging
import math
from typing import Sequence, Tuple

from models.coefficient_table import CoefficientTable
from models.exceptions import (
    DomainError, NonConvergence, NumericOverflow, OutsideConvergenceRegion, OutsideStrip,
)
from models.expansion_types import ExponentSummation, FormVariant, expansion_form
from models.lattice import HALF_STRIP, LatticeParameter, StripDomain, TruncationPolicy
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services.theta_classical import in_strip, theta_constants, theta_series
from services.trig_coefficients import convergence_radius, inverse_sine_squares
from utils.complex_core import (
    DEFAULT_POLICY, complex_cos, complex_exp, complex_power, complex_sin, ensure_finite,
    relative_deviation, sum_until_negligible,
)

logger = logging.getLogger(__name__)


def _require_strip(v: complex, lat: LatticeParameter, strip: StripDomain, label: str) -> None:
    if not in_strip(v, lat, strip):
        raise OutsideStrip(
            f"{label}: v={v} 不在有效带 |Im v| < {strip.half_width_factor}·Im τ = "
            f"{strip.half_width_factor * lat.tau_im:.6g} 内")


def _require_table(table: CoefficientTable, lat: LatticeParameter) -> None:
    if table.lat != lat:
        raise ValueError(f"系数表格点 τ={table.lat.tau} 与求值格点 τ={lat.tau} 不一致")


def _is_integer(v: complex) -> bool:
    v = complex(v)
    return v.imag == 0.0 and float(v.real).is_integer()


def _power_series_factor(table: CoefficientTable, x: complex,
                         policy: TruncationPolicy) -> complex:
    radius = convergence_radius(table.lat, policy)
    if abs(x) >= radius:
        raise OutsideConvergenceRegion(f"|x|={abs(x):.6g} 不小于收敛半径 {radius:.6g}")
    exponent = sum_until_negligible(
        (c * complex_power(x, p) for p, c in enumerate(table.values, start=1)), policy)
    return complex_exp(exponent)


def _truncated_factor(table: CoefficientTable, x: complex) -> complex:
    exponent = sum(c * complex_power(x, p) for p, c in enumerate(table.values, start=1))
    return complex_exp(ensure_finite(exponent, "截断指数和"))


def _product_factor(lat: LatticeParameter, x: complex, policy: TruncationPolicy) -> complex:
    """exp(Σ_p c_{2p} x^p) 的解析延拓 Π_k (1 - x·w_k)"""
    value = complex(1.0)
    run = 0
    for w in inverse_sine_squares(lat, policy):
        term = x * w
        value *= 1 - term
        if abs(term) < policy.term_tolerance or term == 0:
            run += 1
            if run >= 3:
                break
        else:
            run = 0
    return ensure_finite(value, "乘积延拓")


def factor_with_route(table: CoefficientTable, x: complex,
                      policy: TruncationPolicy = DEFAULT_POLICY,
                      summation: ExponentSummation = ExponentSummation.AUTO
                      ) -> Tuple[complex, ExponentSummation]:
    """计算 F(x) = exp(Σ_p c_{2p} x^p), 同时返回实际使用的求和方式"""
    x = complex(x)
    if x == 0:
        return complex(1.0), ExponentSummation.POWER_SERIES
    if table.lat.is_degenerate:
        return complex(1.0), ExponentSummation.POWER_SERIES
    if summation is ExponentSummation.TRUNCATED:
        return _truncated_factor(table, x), summation
    if summation is ExponentSummation.PRODUCT:
        return _product_factor(table.lat, x, policy), summation
    try:
        return _power_series_factor(table, x, policy), ExponentSummation.POWER_SERIES
    except (OutsideConvergenceRegion, NonConvergence, NumericOverflow) as e:
        if summation is ExponentSummation.POWER_SERIES:
            raise
        logger.debug(f"幂级数不可用, 回退到乘积延拓: x={x}, 原因: {e}")
        return _product_factor(table.lat, x, policy), ExponentSummation.PRODUCT


def exponential_factor(table: CoefficientTable, x: complex,
                       policy: TruncationPolicy = DEFAULT_POLICY,
                       summation: ExponentSummation = ExponentSummation.AUTO) -> complex:
    return factor_with_route(table, x, policy, summation)[0]


def theta_with_route(which: int, v: complex, lat: LatticeParameter, table: CoefficientTable,
                     policy: TruncationPolicy = DEFAULT_POLICY,
                     summation: ExponentSummation = ExponentSummation.AUTO,
                     variant: FormVariant = FormVariant.CANONICAL_DERIVED
                     ) -> Tuple[complex, ExponentSummation]:
    """θ_which(v) 的展开值及求和方式"""
    form = expansion_form(which)
    v = complex(v)
    _require_table(table, lat)
    _require_strip(v, lat, form.strip, f"θ{which} 展开")
    if lat.is_degenerate:
        return theta_series(which, v, lat, policy), ExponentSummation.POWER_SERIES
    if which == 1 and _is_integer(v):
        # θ1 在整数点的单零点
        return 0j, ExponentSummation.POWER_SERIES

    argument = math.pi * (v + form.argument_shift(lat))
    base = complex_sin(argument) if form.basis.value == "sin" else complex_cos(argument)
    factor, route = factor_with_route(table, base * base, policy, summation)
    theta4_0 = theta_constants(lat, policy).theta4_0
    value = theta4_0 * complex_exp(form.phase_exponent(v, lat)) * factor
    if which == 1 and variant is FormVariant.CANONICAL_DERIVED:
        value *= -1j
    return ensure_finite(value, f"θ{which} 展开"), route


def theta_via_expansion(which: int, v: complex, lat: LatticeParameter, table: CoefficientTable,
                        policy: TruncationPolicy = DEFAULT_POLICY,
                        summation: ExponentSummation = ExponentSummation.AUTO,
                        variant: FormVariant = FormVariant.CANONICAL_DERIVED) -> complex:
    """θ1-θ4 的三角-指数展开

    θ4: θ4(0)·F(sin²πv)            θ3: θ4(0)·F(cos²πv)
    θ1: -i·θ4(0)·e^{iπ(v+τ/4)}·F(sin²π(v+τ/2))
    θ2:    θ4(0)·e^{iπ(v+τ/4)}·F(cos²π(v+τ/2))
    印刷形式的 θ1 不含因子 -i。
    """
    return theta_with_route(which, v, lat, table, policy, summation, variant)[0]


def theta_ratio_expansion(numerator: int, denominator: int, v: complex,
                          lat: LatticeParameter, table: CoefficientTable,
                          policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ1/θ2 = -i·F(sin²π(v+τ/2))/F(cos²π(v+τ/2)), θ3/θ4 = F(cos²πv)/F(sin²πv)"""
    v = complex(v)
    _require_table(table, lat)
    _require_strip(v, lat, HALF_STRIP, f"θ{numerator}/θ{denominator} 展开")
    if (numerator, denominator) == (3, 4):
        s = complex_sin(math.pi * v)
        c = complex_cos(math.pi * v)
        return exponential_factor(table, c * c, policy) / exponential_factor(table, s * s, policy)
    if (numerator, denominator) == (1, 2):
        if lat.is_degenerate:
            raise DomainError("退化格点上 θ1/θ2 无展开形式")
        if _is_integer(v):
            return 0j
        w = math.pi * (v + lat.tau / 2)
        s = complex_sin(w)
        c = complex_cos(w)
        return -1j * exponential_factor(table, s * s, policy) / exponential_factor(table, c * c, policy)
    raise DomainError(f"不支持的比值 θ{numerator}/θ{denominator}")


def theta4_double_sum(v: complex, lat: LatticeParameter,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ4(v) = θ4(0)·exp[-Σ_p Σ_k (1/p)(sin πv / sin((k+½)πτ))^{2p}], 逐项直接求和"""
    v = complex(v)
    _require_strip(v, lat, HALF_STRIP, "θ4 二重和")
    if lat.is_degenerate:
        return complex(1.0)
    s = complex_sin(math.pi * v)
    x = s * s
    radius = convergence_radius(lat, policy)
    if abs(x) >= radius:
        raise OutsideConvergenceRegion(f"|sin²πv|={abs(x):.6g} 不小于收敛半径 {radius:.6g}")
    weights = inverse_sine_squares(lat, policy)

    def order_terms():
        for p in range(1, policy.max_terms + 1):
            yield -sum(complex_power(x * w, p) for w in weights) / p

    exponent = sum_until_negligible(order_terms(), policy)
    return theta_constants(lat, policy).theta4_0 * complex_exp(exponent)


def theta_product_formula(v: complex, lat: LatticeParameter, table: CoefficientTable,
                          policy: TruncationPolicy = DEFAULT_POLICY,
                          printed_prefactor: bool = False) -> complex:
    """θ2θ3θ4/θ4³(0) = e^{iπ(v+τ/4)}·F(sin²πv)·F(cos²πv)·F(cos²π(v+τ/2))

    printed_prefactor=True 时按印刷形式使用 e^{v+τ/4}。
    """
    v = complex(v)
    _require_table(table, lat)
    _require_strip(v, lat, HALF_STRIP, "乘积公式")
    if lat.is_degenerate:
        raise DomainError("q = 0 时乘积公式两侧均退化")
    s = complex_sin(math.pi * v)
    c = complex_cos(math.pi * v)
    shifted = complex_cos(math.pi * (v + lat.tau / 2))
    exponent = v + lat.tau / 4 if printed_prefactor else 1j * math.pi * (v + lat.tau / 4)
    value = (complex_exp(exponent) * exponential_factor(table, s * s, policy)
             * exponential_factor(table, c * c, policy)
             * exponential_factor(table, shifted * shifted, policy))
    return ensure_finite(value, "乘积公式")


def classical_product(v: complex, lat: LatticeParameter,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """由经典级数计算 θ2(v)θ3(v)θ4(v)/θ4³(0)"""
    theta4_0 = theta_constants(lat, policy).theta4_0
    return (theta_series(2, v, lat, policy) * theta_series(3, v, lat, policy)
            * theta_series(4, v, lat, policy) / theta4_0 ** 3)


def theta1_prime_rhs(lat: LatticeParameter, table: CoefficientTable,
                     policy: TruncationPolicy = DEFAULT_POLICY,
                     summation: ExponentSummation = ExponentSummation.AUTO) -> complex:
    """π·θ4³(0)·q^{¼}·exp[Σ c_{2p}(1 + cos^{2p}(πτ/2))]"""
    if lat.is_degenerate:
        return 0j
    theta4_0 = theta_constants(lat, policy).theta4_0
    c_half = complex_cos(math.pi * lat.tau / 2)
    return (math.pi * theta4_0 ** 3 * lat.quarter_nome
            * exponential_factor(table, 1.0, policy, summation)
            * exponential_factor(table, c_half * c_half, policy, summation))


def theta1_prime_identity(lat: LatticeParameter, table: CoefficientTable,
                          policy: TruncationPolicy = DEFAULT_POLICY,
                          tolerance: float = 1e-9,
                          artifact_version: str = "") -> VerificationReport:
    """θ1'(0) 恒等式: 展开右端 vs 逐项求导的经典值"""
    _require_table(table, lat)
    classical = theta_constants(lat, policy).theta1_d_0
    continued = theta1_prime_rhs(lat, table, policy)
    try:
        truncated = theta1_prime_rhs(lat, table, policy, ExponentSummation.TRUNCATED)
    except NumericOverflow:
        truncated = complex(math.inf)
    measurements = [
        Measurement("theta1_prime_identity", "expansion_continued", "classical_series",
                    abs(continued - classical), _ratio_deviation(continued, classical), 1,
                    tolerance=tolerance, governing="rel"),
        Measurement("theta1_prime_cos_power_series", "expansion_truncated_P", "classical_series",
                    abs(truncated - classical), _ratio_deviation(truncated, classical), 1,
                    tolerance=tolerance, governing="rel", kind=MeasurementKind.PRINTED_FORM),
    ]
    c_half = complex_cos(math.pi * lat.tau / 2) if not lat.is_degenerate else 0j
    divergence_ratio = abs(c_half * c_half) / convergence_radius(lat, policy)
    parameters = {
        "q": lat.nome,
        "P": table.max_order_P,
        "cos_half_tau_over_radius": divergence_ratio,
    }
    return VerificationReport.build(
        "theta1_prime_identity", ["θ1'(0) identity", "θ1 series derivative"],
        parameters, measurements, artifact_version)


def _ratio_deviation(value: complex, reference: complex) -> float:
    if reference == 0:
        return abs(value)
    return abs(value - reference) / abs(reference)


def expansion_accuracy(which: int, points: Sequence[complex], lat: LatticeParameter,
                       table: CoefficientTable, policy: TruncationPolicy = DEFAULT_POLICY,
                       summation: ExponentSummation = ExponentSummation.AUTO,
                       variant: FormVariant = FormVariant.CANONICAL_DERIVED
                       ) -> Tuple[float, float, dict]:
    """在给定点上比较展开与经典级数, 返回 (最大绝对偏差, 最大相对偏差, 求和方式计数)"""
    worst_abs = 0.0
    worst_rel = 0.0
    routes = {route.value: 0 for route in ExponentSummation}
    for v in points:
        value, route = theta_with_route(which, v, lat, table, policy, summation, variant)
        reference = theta_series(which, v, lat, policy)
        routes[route.value] += 1
        worst_abs = max(worst_abs, abs(value - reference))
        worst_rel = max(worst_rel, relative_deviation(value, reference))
    return worst_abs, worst_rel, routes


def product_formula_deviation(points: Sequence[complex], lat: LatticeParameter,
                              table: CoefficientTable, policy: TruncationPolicy = DEFAULT_POLICY,
                              printed_prefactor: bool = False) -> Tuple[float, float]:
    worst_abs = 0.0
    worst_rel = 0.0
    for v in points:
        value = theta_product_formula(v, lat, table, policy, printed_prefactor)
        reference = classical_product(v, lat, policy)
        worst_abs = max(worst_abs, abs(value - reference))
        worst_rel = max(worst_rel, relative_deviation(value, reference))
    return worst_abs, worst_rel


def expansion_measurements(lat: LatticeParameter, table: CoefficientTable,
                           real_points: Sequence[float], complex_points: dict,
                           policy: TruncationPolicy = DEFAULT_POLICY,
                           tolerance: float = 1e-9) -> Tuple[list, dict]:
    """四个θ函数展开与乘积公式的测量及各自的求和方式计数

    complex_points 按 θ 编号给出带内复数点。
    """
    measurements = []
    route_counts = {}
    for which in (1, 2, 3, 4):
        points = list(real_points) + list(complex_points.get(which, ()))
        worst_abs, worst_rel, routes = expansion_accuracy(which, points, lat, table, policy)
        measurements.append(Measurement(
            f"theta{which}_expansion", "expansion_canonical", "classical_series",
            worst_abs, worst_rel, len(points), tolerance=tolerance, governing="rel"))
        route_counts[f"theta{which}"] = routes
        logger.debug(f"θ{which} 展开求和方式计数: {routes}")
    product_points = list(real_points) + list(complex_points.get(4, ()))
    worst_abs, worst_rel = product_formula_deviation(product_points, lat, table, policy)
    measurements.append(Measurement(
        "product_formula", "expansion_composed_prefactor", "classical_product",
        worst_abs, worst_rel, len(product_points), tolerance=tolerance, governing="rel"))
    return measurements, route_counts


def printed_expansion_measurements(lat: LatticeParameter, table: CoefficientTable,
                                   points: Sequence[complex],
                                   policy: TruncationPolicy = DEFAULT_POLICY,
                                   tolerance: float = 1e-9) -> list:
    """印刷形式: θ1 缺 -i 因子、乘积公式前因子 e^{v+τ/4}"""
    nonzero = [v for v in points if not _is_integer(v)]
    worst_abs, worst_rel, _ = expansion_accuracy(
        1, nonzero, lat, table, policy, variant=FormVariant.PAPER_LITERAL)
    measurements = [Measurement(
        "theta1_expansion_printed_phase", "expansion_printed", "classical_series",
        worst_abs, worst_rel, len(nonzero), tolerance=tolerance, governing="rel",
        kind=MeasurementKind.PRINTED_FORM)]
    worst_abs, worst_rel = product_formula_deviation(points, lat, table, policy, printed_prefactor=True)
    measurements.append(Measurement(
        "product_formula_printed_prefactor", "expansion_printed_prefactor", "classical_product",
        worst_abs, worst_rel, len(points), tolerance=tolerance, governing="rel",
        kind=MeasurementKind.PRINTED_FORM))
    return measurements


def truncation_deviation(which: int, points: Sequence[complex], lat: LatticeParameter,
                         table: CoefficientTable,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """按截断的 P 项幂级数求值时与经典值的最大相对偏差"""
    _, worst_rel, _ = expansion_accuracy(which, points, lat, table, policy,
                                         summation=ExponentSummation.TRUNCATED)
    return worst_rel

