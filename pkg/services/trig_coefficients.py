"""
三角展开系数服务
闭式系数 c_{2p}、log θ4 采样反解、印刷种子、递推关系 (A) 与 τ 微分方程组的残差
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from models.coefficient_table import CoefficientMethod, CoefficientTable
from models.exceptions import DomainError, IllConditioned
from models.expansion_types import FormVariant
from models.lattice import LatticeParameter, ThetaConstants, TruncationPolicy
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services.theta_classical import theta4_series, theta_constants
from utils.complex_core import (
    DEFAULT_POLICY, complex_log_principal, complex_power, complex_sin, ensure_finite,
    sum_until_negligible,
)

logger = logging.getLogger(__name__)

# 圆周采样反解的默认规模
ORACLE_NODES = 64
ORACLE_UNKNOWNS = 48
ORACLE_RADIUS_FRACTION = 0.5
ORACLE_RESIDUAL_LIMIT = 1e-8


@lru_cache(maxsize=256)
def inverse_sine_squares(lat: LatticeParameter,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> Tuple[complex, ...]:
    """w_k = 1/sin²((k+½)πτ) = -4q^{2k+1}/(1-q^{2k+1})², 截断到可忽略为止"""
    if lat.is_degenerate:
        return ()
    weights: List[complex] = []
    run = 0
    for k in range(policy.max_terms):
        qk = lat.nome_power(2 * k + 1)
        w = -4 * qk / (1 - qk) ** 2
        weights.append(w)
        if abs(w) < policy.term_tolerance or w == 0:
            run += 1
            if run >= 3:
                break
        else:
            run = 0
    return tuple(weights)


def convergence_radius(lat: LatticeParameter,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Σ_p c_{2p} x^p 的收敛半径 |sin²(πτ/2)| = 1/|w_0|"""
    weights = inverse_sine_squares(lat, policy)
    if not weights:
        return math.inf
    return 1.0 / abs(weights[0])


def closed_form_representations(lat: LatticeParameter, P: int,
                                policy: TruncationPolicy = DEFAULT_POLICY
                                ) -> Tuple[np.ndarray, np.ndarray]:
    """闭式系数的 q 形式与正弦形式, 各 P 项"""
    if P < 1:
        raise ValueError(f"P 必须为正: {P}")
    if lat.is_degenerate:
        zeros = np.zeros(P, dtype=complex)
        return zeros, zeros.copy()
    weights = np.array(inverse_sine_squares(lat, policy), dtype=complex)
    q_form = np.empty(P, dtype=complex)
    sine_form = np.empty(P, dtype=complex)
    for p in range(1, P + 1):
        q_form[p - 1] = -sum_until_negligible(iter(weights ** p), policy) / p

        def sine_terms(power=p):
            for k in range(len(weights)):
                s = complex_sin((k + 0.5) * math.pi * lat.tau)
                yield complex_power(1.0 / s, 2 * power)

        sine_form[p - 1] = -sum_until_negligible(sine_terms(), policy) / p
    return q_form, sine_form


def coefficients_closed_form(lat: LatticeParameter, P: int,
                             policy: TruncationPolicy = DEFAULT_POLICY) -> CoefficientTable:
    """c_{2p} = -(1/p) Σ_k w_k^p"""
    q_form, sine_form = closed_form_representations(lat, P, policy)
    scale = np.maximum(np.abs(q_form), np.finfo(float).tiny)
    mismatch = float(np.max(np.abs(q_form - sine_form) / scale)) if P else 0.0
    if mismatch > 1e-13:
        logger.warning(f"闭式系数两种表示不一致: τ={lat.tau}, 最大相对偏差 {mismatch:.3e}")
    return CoefficientTable(lat, P, tuple(q_form), CoefficientMethod.CLOSED_FORM)


def _oracle_real_nodes(lat: LatticeParameter, P: int,
                       policy: TruncationPolicy) -> np.ndarray:
    theta4_0 = theta4_series(0, lat, policy)
    v = np.arange(1, P + 1) / (2.0 * (P + 1))
    x = np.sin(np.pi * v) ** 2
    y = np.array([complex_log_principal(theta4_series(vj, lat, policy) / theta4_0) for vj in v])
    matrix = np.vander(x, P + 1, increasing=True)[:, 1:].astype(complex)
    solution, *_ = np.linalg.lstsq(matrix, y, rcond=None)
    residual = float(np.max(np.abs(matrix @ solution - y)))
    if residual > ORACLE_RESIDUAL_LIMIT:
        raise IllConditioned(f"实轴采样反解残差 {residual:.3e} 超过 {ORACLE_RESIDUAL_LIMIT:.0e}")
    return solution


def _oracle_circle_nodes(lat: LatticeParameter, P: int,
                         policy: TruncationPolicy) -> np.ndarray:
    unknowns = max(ORACLE_UNKNOWNS, P)
    nodes = max(ORACLE_NODES, unknowns + 16)
    radius = ORACLE_RADIUS_FRACTION * convergence_radius(lat, policy)
    theta4_0 = theta4_series(0, lat, policy)
    angles = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    x = radius * angles
    # θ4 是 sin²πv 的整函数, 任取满足 sin²πv = x 的 v 即可
    v = np.arcsin(np.sqrt(x)) / np.pi
    y = np.array([complex_log_principal(theta4_series(vj, lat, policy) / theta4_0) for vj in v])
    matrix = np.vander(angles, unknowns + 1, increasing=True)[:, 1:]
    scaled, *_ = np.linalg.lstsq(matrix, y, rcond=None)
    residual = float(np.max(np.abs(matrix @ scaled - y)))
    if residual > ORACLE_RESIDUAL_LIMIT:
        raise IllConditioned(f"圆周采样反解残差 {residual:.3e} 超过 {ORACLE_RESIDUAL_LIMIT:.0e}")
    powers = radius ** np.arange(1, unknowns + 1)
    return (scaled / powers)[:P]


def extract_coefficients_oracle(lat: LatticeParameter, P: int,
                                policy: TruncationPolicy = DEFAULT_POLICY,
                                nodes: str = "circle") -> CoefficientTable:
    """由 log(θ4(v)/θ4(0)) 采样在 (sin πv)^{2p} 基下反解系数, 与闭式无关"""
    if P < 1:
        raise ValueError(f"P 必须为正: {P}")
    if lat.is_degenerate:
        return CoefficientTable(lat, P, (0j,) * P, CoefficientMethod.EXTRACTED_ORACLE)
    if nodes == "real":
        if not lat.is_real_nome:
            raise DomainError("实轴采样反解要求实 nome")
        solution = _oracle_real_nodes(lat, P, policy)
    elif nodes == "circle":
        solution = _oracle_circle_nodes(lat, P, policy)
    else:
        raise ValueError(f"未知采样方式: {nodes}")
    values = tuple(complex(c) for c in solution)
    if lat.is_real_nome:
        values = tuple(complex(c.real, 0.0) for c in values)
    return CoefficientTable(lat, P, values, CoefficientMethod.EXTRACTED_ORACLE)


def printed_seeds(consts: ThetaConstants) -> Tuple[complex, complex, complex]:
    """印刷种子 c_0 = -4[θ2⁴+θ3⁴], c_2 = θ4''/(2π²θ4), c_4 = ⅓θ2⁴θ3⁴ + ⅓c_2"""
    theta2_4 = consts.theta2_0 ** 4
    theta3_4 = consts.theta3_0 ** 4
    c0 = -4 * (theta2_4 + theta3_4)
    c2 = consts.theta4_dd_0 / (2 * math.pi ** 2 * consts.theta4_0)
    c4 = theta2_4 * theta3_4 / 3 + c2 / 3
    return complex(c0), complex(c2), complex(c4)


def _recurrence_denominator(p: int) -> int:
    # 4!·C(2p+4, 4)
    return (2 * p + 4) * (2 * p + 3) * (2 * p + 2) * (2 * p + 1)


def _recurrence_numerator(values: Dict[int, complex], c0: complex, p: int) -> complex:
    c_next = values[p + 1]
    c_here = values[p]
    bracket = ((2 * p + 1) * (2 * p + 2) * c_next - 2 * values[1]
               - sum(2 * k * values[k] for k in range(1, p + 1)))
    return ((2 * p + 1) * (2 * p + 2) * ((2 * p + 2) * (2 * p + 3) + 4 * p * p - c0) * c_next
            + (2 * p) ** 2 * (c0 - (2 * p) ** 2) * c_here
            - 6 * complex_power(bracket, 2))


def recurrence_step_A(c_table: CoefficientTable, seed_c0: complex, p: int) -> complex:
    """按关系 (A) 的印刷形式由 c_2 … c_{2p+2} 给出 c_{2p+4}"""
    if p < 1:
        raise ValueError(f"p 必须为正整数: {p}")
    if c_table.max_order_P < p + 1:
        raise ValueError(f"系数表需包含到 c_{2 * p + 2}, 当前 P={c_table.max_order_P}")
    values = {k: c_table.c(k) for k in range(1, p + 2)}
    return ensure_finite(_recurrence_numerator(values, complex(seed_c0), p) / _recurrence_denominator(p),
                         "递推关系 (A)")


def recurrence_residual(values: Dict[int, complex], c0: complex, p: int) -> complex:
    """(A) 的残差 denom·c_{2p+4} - numerator, 需 values 含到 c_{2p+4}"""
    return _recurrence_denominator(p) * values[p + 2] - _recurrence_numerator(values, c0, p)


def fit_recurrence_c0(values: Dict[int, complex], orders: List[int]) -> Optional[complex]:
    """残差关于 c_0 为仿射 R = a + b·c_0, 最小二乘拟合 c_0"""
    a = np.array([recurrence_residual(values, 0j, p) for p in orders], dtype=complex)
    b = np.array([(2 * p + 1) * (2 * p + 2) * values[p + 1] - (2 * p) ** 2 * values[p]
                  for p in orders], dtype=complex)
    norm = float(np.sum(np.abs(b) ** 2))
    if norm == 0.0:
        return None
    return complex(-np.sum(np.conj(b) * a) / norm)


def recurrence_table(lat: LatticeParameter, P: int,
                     policy: TruncationPolicy = DEFAULT_POLICY,
                     calibrated: bool = False) -> CoefficientTable:
    """由种子正向迭代 (A) 得到 c_2 … c_{2P}"""
    if P < 2:
        raise ValueError(f"正向递推至少需要 P=2: {P}")
    closed = coefficients_closed_form(lat, P, policy)
    if calibrated:
        values = {k: closed.c(k) for k in range(1, P + 1)}
        c0 = fit_recurrence_c0(values, list(range(1, P - 1))) if P >= 3 else None
        c0 = 0j if c0 is None else c0
        seeds = [closed.c(1), closed.c(2)]
        method = CoefficientMethod.RECURRENCE_CALIBRATED
    else:
        c0, c2, c4 = printed_seeds(theta_constants(lat, policy))
        seeds = [c2, c4]
        method = CoefficientMethod.RECURRENCE_PAPER_SEEDS
    entries = list(seeds)
    for p in range(1, P - 1):
        partial = CoefficientTable(lat, len(entries), tuple(entries), method, c0)
        entries.append(recurrence_step_A(partial, c0, p))
    return CoefficientTable(lat, P, tuple(entries[:P]), method, c0)


def calibrate_recurrence(lat: LatticeParameter, P: int,
                         policy: TruncationPolicy = DEFAULT_POLICY,
                         tolerance: float = 1e-8, artifact_version: str = "") -> VerificationReport:
    """用闭式系数检验关系 (A): (i) 印刷 c_0, c_4; (ii) 最小二乘拟合 c_0"""
    if P < 3:
        raise ValueError(f"校准至少需要 P=3: {P}")
    closed = coefficients_closed_form(lat, P, policy)
    printed_c0, _, printed_c4 = printed_seeds(theta_constants(lat, policy))
    exact = {k: closed.c(k) for k in range(1, P + 1)}
    with_printed = dict(exact)
    with_printed[2] = printed_c4
    orders = list(range(1, P - 1))
    fitted_c0 = fit_recurrence_c0(exact, orders)

    measurements = []
    printed_residuals = []
    fitted_residuals = []
    for p in orders:
        r_printed = recurrence_residual(with_printed, printed_c0, p)
        r_fitted = recurrence_residual(exact, fitted_c0 if fitted_c0 is not None else 0j, p)
        printed_residuals.append(abs(r_printed))
        fitted_residuals.append(abs(r_fitted))
        scale = max(1.0, _recurrence_denominator(p) * abs(exact[p + 2]))
        measurements.append(Measurement(
            f"recurrence_A_p{p}_printed_seeds", "closed_form+printed_c0_c4", "zero",
            abs(r_printed), abs(r_printed) / scale, 1, kind=MeasurementKind.INFO))
        measurements.append(Measurement(
            f"recurrence_A_p{p}_fitted_c0", "closed_form+fitted_c0", "zero",
            abs(r_fitted), abs(r_fitted) / scale, 1, kind=MeasurementKind.INFO))

    c0_gap = abs(fitted_c0 - printed_c0) if fitted_c0 is not None else 0.0
    measurements.append(Measurement(
        "fitted_c0_vs_printed_c0", "least_squares_c0", "printed_c0",
        c0_gap, c0_gap / max(1.0, abs(printed_c0)), 1,
        tolerance=tolerance, governing="rel", kind=MeasurementKind.PRINTED_FORM))
    worst_fit = max(fitted_residuals, default=0.0)
    measurements.append(Measurement(
        "recurrence_A_fitted_residual", "closed_form+fitted_c0", "zero",
        worst_fit, worst_fit, len(orders),
        tolerance=tolerance, governing="abs", kind=MeasurementKind.PRINTED_FORM))

    parameters = {
        "q": lat.nome,
        "P": P,
        "printed_c0": printed_c0,
        "printed_c4": printed_c4,
        "fitted_c0": fitted_c0,
        "max_residual_printed_seeds": max(printed_residuals, default=0.0),
        "max_residual_fitted_c0": worst_fit,
    }
    logger.info(f"递推关系 (A) 校准: q={lat.nome.real:.4g}, 拟合 c0={fitted_c0}, 印刷 c0={printed_c0}")
    return VerificationReport.build(
        "calibrate_recurrence", ["recurrence (A)", "closed-form coefficients"],
        parameters, measurements, artifact_version)


def _closed_form_entry(lat: LatticeParameter, p: int, policy: TruncationPolicy) -> complex:
    return coefficients_closed_form(lat, p, policy).c(p)


def tau_derivative(lat: LatticeParameter, p: int, h: float,
                   policy: TruncationPolicy = DEFAULT_POLICY,
                   richardson: bool = False) -> complex:
    """dc_{2p}/dτ, 沿虚轴中心差分 (c(τ+ih) - c(τ-ih)) / (2ih)"""
    if lat.is_degenerate:
        return 0j

    def derivative(step: float) -> complex:
        upper = _closed_form_entry(lat.shifted(1j * step), p, policy)
        lower = _closed_form_entry(lat.shifted(-1j * step), p, policy)
        return (upper - lower) / (2j * step)

    coarse = derivative(h)
    if not richardson:
        return coarse
    return (4 * derivative(h / 2) - coarse) / 3


def system_S_residual(lat: LatticeParameter, P: int, p: int,
                      policy: TruncationPolicy = DEFAULT_POLICY, h: float = 1e-4,
                      variant: FormVariant = FormVariant.PAPER_LITERAL,
                      richardson: bool = False) -> complex:
    """微分方程组 (S) 第 p 式的残差 LHS - RHS

    paper_literal: (4/π)c' = (2p+2)(2p+1)c_{2p+2} - 4p²c_{2p} - 4Σ_{m<p} m c_{2m}[…]
    canonical_derived: (4i/π)c' = … + 4Σ_{a+b=p+1} ab c_{2a}c_{2b} - 4Σ_{a+b=p} ab c_{2a}c_{2b}
    """
    if not 1 <= p <= P - 1:
        raise ValueError(f"要求 1 ≤ p ≤ P-1: p={p}, P={P}")
    if lat.is_degenerate:
        return 0j
    if not lat.is_real_nome:
        logger.debug(f"(S) 残差在复 τ={lat.tau} 上计算")
    if h >= lat.tau_im / 10:
        raise DomainError(f"差分步长 h={h} 须小于 Im τ / 10 = {lat.tau_im / 10:.3g}")
    table = coefficients_closed_form(lat, P, policy)
    c = {k: table.c(k) for k in range(1, P + 1)}
    derivative = tau_derivative(lat, p, h, policy, richardson)
    linear = (2 * p + 2) * (2 * p + 1) * c[p + 1] - 4 * p * p * c[p]

    if variant is FormVariant.PAPER_LITERAL:
        lhs = 4 / math.pi * derivative
        quadratic = sum(m * c[m] * ((p - m) * c[p - m] - (p - m + 1) * c[p - m + 1])
                        for m in range(1, p))
        rhs = linear - 4 * quadratic
    else:
        lhs = 4j / math.pi * derivative
        upper = sum(a * (p + 1 - a) * c[a] * c[p + 1 - a] for a in range(1, p + 1))
        lower = sum(a * (p - a) * c[a] * c[p - a] for a in range(1, p))
        rhs = linear + 4 * upper - 4 * lower
    return ensure_finite(lhs - rhs, "(S) 残差")
