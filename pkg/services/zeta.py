"""
Jacobi zeta 函数服务
Fourier 展开、有理分式形式、双重和形式与对数导数定义, 以及加法定理检验
"""

import logging
import math
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from models.coefficient_table import CoefficientTable
from models.exceptions import NonConvergence, OutsideConvergenceRegion, PoleEncountered
from models.expansion_types import ZetaRoute
from models.lattice import HALF_STRIP, LatticeParameter, TruncationPolicy
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services.elliptic import elliptic_point, sn_theta
from services.theta_classical import elliptic_moduli, theta4_series, theta_constants
from services.theta_expansion import _require_strip, _require_table
from services.trig_coefficients import inverse_sine_squares
from utils.complex_core import (
    DEFAULT_POLICY, complex_power, complex_sin, ensure_finite, relative_deviation,
    sum_until_negligible,
)

logger = logging.getLogger(__name__)

# 对数导数的默认差分步长
LOG_DERIVATIVE_STEP = 1e-5
# |s·w_k - 1| 低于此值视为极点
POLE_GUARD = 1e-13


def half_period(lat: LatticeParameter, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """K = (π/2)·θ3²(0)"""
    return math.pi / 2 * theta_constants(lat, policy).theta3_0 ** 2


def _fourier(z: complex, lat: LatticeParameter, K: complex, policy: TruncationPolicy) -> complex:
    """(2π/K) Σ q^n/(1-q^{2n}) sin(nπz/K)"""

    def terms() -> Iterator[complex]:
        for n in range(1, policy.max_terms + 1):
            qn = lat.nome_power(n)
            yield qn / (1 - qn * qn) * complex_sin(n * math.pi * z / K)

    return 2 * math.pi / K * sum_until_negligible(terms(), policy)


def _rational_form(v: complex, lat: LatticeParameter, K: complex,
                   policy: TruncationPolicy) -> complex:
    """(π/2K) sin 2πv Σ_k 1/(sin²πv - sin²((k+½)πτ)), 以 w_k 写成 w_k/(s·w_k - 1)"""
    s = complex_sin(math.pi * v) ** 2
    total = 0j
    for k, w in enumerate(inverse_sine_squares(lat, policy)):
        denominator = s * w - 1
        if abs(denominator) < POLE_GUARD:
            raise PoleEncountered(f"有理分式第 {k} 项分母为零: v={v}")
        total += w / denominator
    return math.pi / (2 * K) * complex_sin(2 * math.pi * v) * total


def _require_geometric(s: complex, lat: LatticeParameter, policy: TruncationPolicy) -> None:
    weights = inverse_sine_squares(lat, policy)
    if weights and abs(s * weights[0]) >= 1:
        raise OutsideConvergenceRegion(
            f"|sin²πv · w_0| = {abs(s * weights[0]):.6g} ≥ 1, 双重和发散")


def _double_sum(s: complex, lat: LatticeParameter, policy: TruncationPolicy,
                term: Callable[[complex, int], complex]) -> complex:
    _require_geometric(s, lat, policy)
    total = 0j
    for w in inverse_sine_squares(lat, policy):
        total += sum_until_negligible(
            (term(w, p) for p in range(1, policy.max_terms + 1)), policy)
    return total


def _double_sum_literal(v: complex, lat: LatticeParameter, K: complex,
                        policy: TruncationPolicy) -> complex:
    """印刷形式 (π/2K) sin 2πv Σ_k Σ_p (sin πv / sin((k+½)πτ))^{2p}"""
    s = complex_sin(math.pi * v) ** 2
    total = _double_sum(s, lat, policy, lambda w, p: complex_power(s * w, p))
    return math.pi / (2 * K) * complex_sin(2 * math.pi * v) * total


def _double_sum_canonical(v: complex, lat: LatticeParameter, K: complex,
                          table: Optional[CoefficientTable], policy: TruncationPolicy) -> complex:
    """-(π/2K) sin 2πv Σ_k Σ_p sin^{2p-2}πv / sin^{2p}((k+½)πτ)

    有系数表时先用 Σ_p p·c_{2p}·sin^{2p-2}πv, 表长不足以收敛时回退到直接双重和。
    """
    s = complex_sin(math.pi * v) ** 2
    prefactor = math.pi / (2 * K) * complex_sin(2 * math.pi * v)
    if table is not None:
        _require_geometric(s, lat, policy)
        try:
            total = sum_until_negligible(
                (p * c * complex_power(s, p - 1) for p, c in enumerate(table.values, start=1)), policy)
            return prefactor * total
        except NonConvergence as e:
            logger.debug(f"系数表 P={table.max_order_P} 不足, 改用直接双重和: v={v}, {e}")
    total = _double_sum(s, lat, policy, lambda w, p: complex_power(s, p - 1) * complex_power(w, p))
    return -prefactor * total


def _log_derivative(z: complex, lat: LatticeParameter, K: complex, h: float,
                    policy: TruncationPolicy) -> complex:
    """d/dz log θ4(z/(2K)) 的中心差分"""

    def theta4_at(x: complex) -> complex:
        return theta4_series(x / (2 * K), lat, policy)

    centre = theta4_at(z)
    if abs(centre) < POLE_GUARD:
        raise PoleEncountered(f"θ4 在 z={z} 处为零, 对数导数无定义")
    return (theta4_at(z + h) - theta4_at(z - h)) / (2 * h * centre)


def zeta(z: complex, lat: LatticeParameter, route: ZetaRoute = ZetaRoute.FOURIER,
         table: Optional[CoefficientTable] = None,
         policy: TruncationPolicy = DEFAULT_POLICY,
         h: float = LOG_DERIVATIVE_STEP) -> complex:
    """Zn(z), v = z/(2K); Fourier 展开为基准路线"""
    z = complex(z)
    route = ZetaRoute(route)
    if lat.is_degenerate or z == 0:
        return 0j
    K = half_period(lat, policy)
    v = z / (2 * K)
    if route is ZetaRoute.FOURIER:
        _require_strip(v, lat, HALF_STRIP, "zeta Fourier 展开")
        value = _fourier(z, lat, K, policy)
    elif route is ZetaRoute.LOG_DERIVATIVE:
        value = _log_derivative(z, lat, K, h, policy)
    else:
        _require_strip(v, lat, HALF_STRIP, f"zeta {route.value}")
        if table is not None:
            _require_table(table, lat)
        if route is ZetaRoute.RATIONAL_FORM:
            value = _rational_form(v, lat, K, policy)
        elif route is ZetaRoute.THEOREM6_LITERAL:
            value = _double_sum_literal(v, lat, K, policy)
        else:
            value = _double_sum_canonical(v, lat, K, table, policy)
    return ensure_finite(value, f"zeta {route.value}")


def zeta_addition_residual(u: complex, w: complex, lat: LatticeParameter,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Z(u+w) - Z(u) - Z(w) + k²·sn u·sn w·sn(u+w)"""
    if lat.is_degenerate:
        return 0j
    k2 = elliptic_moduli(theta_constants(lat, policy)).k ** 2
    u, w = complex(u), complex(w)

    def sn(x: complex) -> complex:
        return sn_theta(elliptic_point(x, lat, policy), policy)

    return (zeta(u + w, lat, policy=policy) - zeta(u, lat, policy=policy)
            - zeta(w, lat, policy=policy) + k2 * sn(u) * sn(w) * sn(u + w))


def _deviation(pairs: Sequence[Tuple[complex, complex]]) -> Tuple[float, float]:
    worst_abs = 0.0
    worst_rel = 0.0
    for value, reference in pairs:
        worst_abs = max(worst_abs, abs(value - reference))
        worst_rel = max(worst_rel, relative_deviation(value, reference))
    return worst_abs, worst_rel


def fit_prefactor(reference: Sequence[complex], reading: Sequence[complex]) -> complex:
    """最小二乘标量 λ, 使 reference ≈ λ·reading"""
    reference = np.asarray(reference, dtype=complex)
    reading = np.asarray(reading, dtype=complex)
    norm = float(np.sum(np.abs(reading) ** 2))
    if norm == 0.0:
        return 0j
    return complex(np.sum(np.conj(reading) * reference) / norm)


def prefactor_fits(lat: LatticeParameter, z_grid: Sequence[complex],
                   policy: TruncationPolicy = DEFAULT_POLICY,
                   h: float = LOG_DERIVATIVE_STEP) -> Dict[str, Tuple[complex, float]]:
    """Fourier 值与三种对数导数读法之间的比例系数及拟合残差

    chain_rule: d/dz log θ4(z/2K), 期望 λ = 1
    literal_one_over_2K: (1/2K)·d/dz log θ4(z/2K), 期望 λ = 2K
    theta3_squared_argument: d/du log θ4(u/θ3²(0)), 不是标量倍数, 残差非零
    """
    K = half_period(lat, policy)
    theta3_sq = theta_constants(lat, policy).theta3_0 ** 2
    reference = [zeta(z, lat, ZetaRoute.FOURIER, policy=policy) for z in z_grid]
    chain = [zeta(z, lat, ZetaRoute.LOG_DERIVATIVE, policy=policy, h=h) for z in z_grid]

    def theta3_reading(u: complex) -> complex:
        def theta4_at(x: complex) -> complex:
            return theta4_series(x / theta3_sq, lat, policy)
        return (theta4_at(u + h) - theta4_at(u - h)) / (2 * h * theta4_at(u))

    readings = {
        "chain_rule": chain,
        "literal_one_over_2K": [value / (2 * K) for value in chain],
        "theta3_squared_argument": [theta3_reading(complex(z)) for z in z_grid],
    }
    fits = {}
    for name, reading in readings.items():
        scale = fit_prefactor(reference, reading)
        residual = max((abs(f - scale * r) for f, r in zip(reference, reading)), default=0.0)
        fits[name] = (scale, residual)
    return fits


def zeta_consistency_report(lat: LatticeParameter, z_grid: Sequence[complex],
                            table: Optional[CoefficientTable] = None,
                            policy: TruncationPolicy = DEFAULT_POLICY,
                            tolerances: Optional[Dict[str, float]] = None,
                            n_pairs: int = 50, seed: int = 20240601,
                            h: float = LOG_DERIVATIVE_STEP,
                            artifact_version: str = "") -> VerificationReport:
    """以 Fourier 展开为参考路线的交叉验证, 另加有理形式与其余路线的配对、周期性、奇性与加法定理"""
    tol = {"rational_form": 1e-10, "theorem6_canonical": 1e-9, "canonical_vs_rational": 1e-12,
           "theorem6_literal": 1e-9, "log_derivative": 1e-7, "addition": 1e-10,
           "period": 1e-12, "oddness": 1e-12}
    tol.update(tolerances or {})
    tol.setdefault("log_derivative_vs_rational", tol["log_derivative"] + tol["rational_form"])
    K = half_period(lat, policy)
    grid = [complex(z) for z in z_grid]
    fourier = {z: zeta(z, lat, ZetaRoute.FOURIER, policy=policy) for z in grid}

    def route_pairs(route: ZetaRoute, reference: Dict[complex, complex]) -> List[Tuple[complex, complex]]:
        pairs = []
        for z in grid:
            try:
                pairs.append((zeta(z, lat, route, table, policy, h), reference[z]))
            except (OutsideConvergenceRegion, NonConvergence) as e:
                logger.debug(f"zeta {route.value} 在 z={z} 处不可用: {e}")
        return pairs

    measurements = []
    skipped: Dict[str, int] = {}
    rational = {z: zeta(z, lat, ZetaRoute.RATIONAL_FORM, table, policy) for z in grid}
    for route, reference, name, label, kind in (
            (ZetaRoute.RATIONAL_FORM, fourier, "rational_form", "fourier", MeasurementKind.CHECK),
            (ZetaRoute.THEOREM6_CANONICAL, fourier, "theorem6_canonical", "fourier",
             MeasurementKind.CHECK),
            (ZetaRoute.THEOREM6_CANONICAL, rational, "canonical_vs_rational", "rational_form",
             MeasurementKind.CHECK),
            (ZetaRoute.THEOREM6_LITERAL, fourier, "theorem6_literal", "fourier",
             MeasurementKind.PRINTED_FORM),
            (ZetaRoute.LOG_DERIVATIVE, fourier, "log_derivative", "fourier", MeasurementKind.CHECK),
            (ZetaRoute.LOG_DERIVATIVE, rational, "log_derivative_vs_rational", "rational_form",
             MeasurementKind.CHECK)):
        pairs = route_pairs(route, reference)
        skipped[name] = len(grid) - len(pairs)
        if not pairs:
            logger.warning(f"zeta {name}: 网格上没有可用点")
            continue
        worst_abs, worst_rel = _deviation(pairs)
        measurements.append(Measurement(name, route.value, label, worst_abs, worst_rel,
                                        len(pairs), tolerance=tol[name], kind=kind))

    period_pairs = [(zeta(z + 2 * K, lat, policy=policy), fourier[z]) for z in grid]
    odd_pairs = [(-zeta(-z, lat, policy=policy), fourier[z]) for z in grid]
    for name, pairs, label in (("period_2K", period_pairs, "Z(z+2K)"),
                               ("oddness", odd_pairs, "-Z(-z)")):
        worst_abs, worst_rel = _deviation(pairs)
        measurements.append(Measurement(name, label, "Z(z)", worst_abs, worst_rel, len(pairs),
                                        tolerance=tol["period" if name == "period_2K" else "oddness"]))

    rng = np.random.default_rng(seed)
    arguments = rng.uniform(0.0, 2.0, size=(n_pairs, 2)) * K.real
    residuals = [abs(zeta_addition_residual(complex(u), complex(w), lat, policy))
                 for u, w in arguments]
    if residuals:
        worst = max(residuals)
        measurements.append(Measurement("addition_theorem", "Z(u+w)", "Z(u)+Z(w)-k²sn·sn·sn",
                                        worst, worst, len(residuals), tolerance=tol["addition"]))

    fits = prefactor_fits(lat, grid, policy, h)
    for name, (scale, residual) in fits.items():
        measurements.append(Measurement(f"prefactor_fit_{name}", "fourier", name, residual,
                                        residual, len(grid), kind=MeasurementKind.INFO))
    parameters = {
        "q": lat.nome, "K": K, "n_points": len(grid), "n_pairs": n_pairs, "seed": seed, "h": h,
        "reference_route": ZetaRoute.FOURIER.value,
        "prefactor_fits": {name: scale for name, (scale, _) in fits.items()},
        "skipped_points": skipped,
        "coefficient_table_P": table.max_order_P if table is not None else 0,
    }
    return VerificationReport.build(
        "zeta_consistency",
        ["Zn Fourier expansion", "Zn rational form", "Zn double sum", "Zn logarithmic derivative",
         "zeta addition theorem"],
        parameters, measurements, artifact_version)
