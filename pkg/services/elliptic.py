"""
Jacobi 椭圆函数服务
θ比值定义的 sn/cn/dn、三角-指数展开 (印刷形式与组合推导形式) 以及恒等式检验
"""

import logging
import math
from typing import Callable, Dict, Sequence, Tuple

from models.coefficient_table import CoefficientTable
from models.exceptions import NearZeroOfNumerator, PoleEncountered
from models.expansion_types import EllipticPoint, FormVariant
from models.lattice import HALF_STRIP, LatticeParameter, TruncationPolicy
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services.theta_classical import (
    agm_K, complementary_modulus, elliptic_moduli, lattice_from_modulus, modular_K_prime,
    theta_constants, theta_series,
)
from services.theta_expansion import _is_integer, _require_strip, _require_table, exponential_factor
from utils.complex_core import (
    DEFAULT_POLICY, complex_cos, complex_exp, complex_sin, ensure_finite, relative_deviation,
)

logger = logging.getLogger(__name__)

# |θ4(v)| 低于此比例视为极点
POLE_GUARD = 1e-13


def elliptic_point(u: complex, lat: LatticeParameter,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> EllipticPoint:
    """由椭圆自变量 u 构造 v = u/(2K)"""
    K = elliptic_moduli(theta_constants(lat, policy)).K
    return EllipticPoint.from_u(u, lat, K)


def _theta_ratio(pt: EllipticPoint, numerator: int, scale: complex,
                 policy: TruncationPolicy) -> complex:
    theta4_v = theta_series(4, pt.v, pt.lat, policy)
    theta_num = theta_series(numerator, pt.v, pt.lat, policy)
    if abs(theta4_v) < POLE_GUARD * max(1.0, abs(theta_num)):
        raise PoleEncountered(f"θ4(v) 在 v={pt.v} 处接近零")
    return ensure_finite(scale * theta_num / theta4_v, "θ比值")


def sn_theta(pt: EllipticPoint, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """sn u = θ3(0)θ1(v) / (θ2(0)θ4(v))"""
    if pt.lat.is_degenerate:
        return complex_sin(math.pi * pt.v)
    consts = theta_constants(pt.lat, policy)
    return _theta_ratio(pt, 1, consts.theta3_0 / consts.theta2_0, policy)


def cn_theta(pt: EllipticPoint, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """cn u = θ4(0)θ2(v) / (θ2(0)θ4(v))"""
    if pt.lat.is_degenerate:
        return complex_cos(math.pi * pt.v)
    consts = theta_constants(pt.lat, policy)
    return _theta_ratio(pt, 2, consts.theta4_0 / consts.theta2_0, policy)


def dn_theta(pt: EllipticPoint, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """dn u = θ4(0)θ3(v) / (θ3(0)θ4(v))"""
    if pt.lat.is_degenerate:
        return complex(1.0)
    consts = theta_constants(pt.lat, policy)
    return _theta_ratio(pt, 3, consts.theta4_0 / consts.theta3_0, policy)


class _Factors:
    """展开式中反复出现的 F(x) = exp(Σ c_{2p} x^p) 取值"""

    def __init__(self, pt: EllipticPoint, table: CoefficientTable, policy: TruncationPolicy):
        lat = pt.lat
        _require_table(table, lat)
        _require_strip(pt.v, lat, HALF_STRIP, "椭圆函数展开")
        self.v = pt.v
        self.table = table
        self.policy = policy
        self.phase = complex_exp(1j * math.pi * pt.v)
        shifted = math.pi * (pt.v + lat.tau / 2)
        half_tau = complex_cos(math.pi * lat.tau / 2)
        s = complex_sin(math.pi * pt.v)
        c = complex_cos(math.pi * pt.v)
        self.sin_shift = self._f(complex_sin(shifted) ** 2)    # F(sin²π(v+τ/2))
        self.cos_shift = self._f(complex_cos(shifted) ** 2)    # F(cos²π(v+τ/2))
        self.sin_v = self._f(s * s)                            # F(sin²πv)
        self.cos_v = self._f(c * c)                            # F(cos²πv)
        self.cos_half_tau = self._f(half_tau * half_tau)       # F(cos²(πτ/2))
        self.one = self._f(1.0)                                # F(1)
        self.nome = lat.nome

    def _f(self, x: complex) -> complex:
        return exponential_factor(self.table, x, self.policy)


def _guard_denominator(value: complex, label: str) -> complex:
    if value == 0 or not math.isfinite(abs(value)):
        raise PoleEncountered(f"{label}: 展开式分母为零")
    return value


def sn_expansion(pt: EllipticPoint, table: CoefficientTable,
                 form: FormVariant = FormVariant.CANONICAL_DERIVED,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """canonical: -i·e^{iπv}·F(1)F(sin²π(v+τ/2)) / (F(cos²πτ/2)F(sin²πv))
    printed:   e^{iπv}·F(sin²π(v+τ/2))F(sin²πv)F(1) / F(cos²πτ/2)
    """
    if _is_integer(pt.v) and not pt.lat.is_degenerate:
        _Factors(pt, table, policy)
        return 0j
    if pt.lat.is_degenerate:
        return complex_sin(math.pi * pt.v)
    f = _Factors(pt, table, policy)
    if form is FormVariant.PAPER_LITERAL:
        value = f.phase * f.sin_shift * f.sin_v * f.one / _guard_denominator(f.cos_half_tau, "sn")
    else:
        value = -1j * f.phase * f.one * f.sin_shift / _guard_denominator(f.cos_half_tau * f.sin_v, "sn")
    return ensure_finite(value, "sn 展开")


def cn_expansion(pt: EllipticPoint, table: CoefficientTable,
                 form: FormVariant = FormVariant.CANONICAL_DERIVED,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """canonical: e^{iπv}·F(cos²π(v+τ/2)) / (F(cos²πτ/2)F(sin²πv))
    printed:   e^{-iπv}·F(sin²πv) / (F(cos²π(v+τ/2))F(cos²πτ/2))
    """
    if pt.lat.is_degenerate:
        return complex_cos(math.pi * pt.v)
    f = _Factors(pt, table, policy)
    if form is FormVariant.PAPER_LITERAL:
        value = f.sin_v / (f.phase * _guard_denominator(f.cos_shift * f.cos_half_tau, "cn"))
    else:
        value = f.phase * f.cos_shift / _guard_denominator(f.cos_half_tau * f.sin_v, "cn")
    return ensure_finite(value, "cn 展开")


def dn_expansion(pt: EllipticPoint, table: CoefficientTable,
                 form: FormVariant = FormVariant.CANONICAL_DERIVED,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """dn = F(cos²πv) / (F(sin²πv)F(1)), 两种形式相同"""
    if pt.lat.is_degenerate:
        return complex(1.0)
    f = _Factors(pt, table, policy)
    return ensure_finite(f.cos_v / _guard_denominator(f.sin_v * f.one, "dn"), "dn 展开")


def sn_over_cn_expansion(pt: EllipticPoint, table: CoefficientTable,
                         form: FormVariant = FormVariant.CANONICAL_DERIVED,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """canonical: -i·F(1)F(sin²π(v+τ/2)) / F(cos²π(v+τ/2)); printed 不含 -i"""
    if _is_integer(pt.v):
        raise NearZeroOfNumerator(f"sn/cn 在 v={pt.v} 处为零, 指数形式无法取到")
    if pt.lat.is_degenerate:
        return complex_sin(math.pi * pt.v) / complex_cos(math.pi * pt.v)
    f = _Factors(pt, table, policy)
    value = f.one * f.sin_shift / _guard_denominator(f.cos_shift, "sn/cn")
    if form is FormVariant.CANONICAL_DERIVED:
        value *= -1j
    return ensure_finite(value, "sn/cn 展开")


def sn_derivative_expansion(pt: EllipticPoint, table: CoefficientTable,
                            form: FormVariant = FormVariant.CANONICAL_DERIVED,
                            policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """∂sn/∂u
    canonical: e^{iπv}·F(cos²π(v+τ/2))F(cos²πv) / (F(cos²πτ/2)F(1)F(sin²πv)²)
    printed:   e^{-iπv}·F(cos²πv) / (F(cos²π(v+τ/2))F(cos²πτ/2)F(1))
    """
    if pt.lat.is_degenerate:
        return complex_cos(math.pi * pt.v)
    f = _Factors(pt, table, policy)
    if form is FormVariant.PAPER_LITERAL:
        value = f.cos_v / (f.phase * _guard_denominator(f.cos_shift * f.cos_half_tau * f.one, "sn'"))
    else:
        value = (f.phase * f.cos_shift * f.cos_v
                 / _guard_denominator(f.cos_half_tau * f.one * f.sin_v ** 2, "sn'"))
    return ensure_finite(value, "sn' 展开")


def cn_derivative_expansion(pt: EllipticPoint, table: CoefficientTable,
                            policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """∂cn/∂u = -sn·dn = i·e^{iπv}·F(sin²π(v+τ/2))F(cos²πv) / (F(cos²πτ/2)F(sin²πv)²)"""
    if pt.lat.is_degenerate:
        return -complex_sin(math.pi * pt.v)
    f = _Factors(pt, table, policy)
    value = (1j * f.phase * f.sin_shift * f.cos_v
             / _guard_denominator(f.cos_half_tau * f.sin_v ** 2, "cn'"))
    return ensure_finite(value, "cn' 展开")


def dn_derivative_expansion(pt: EllipticPoint, table: CoefficientTable,
                            policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """∂dn/∂u = -k²·sn·cn, k² = q·F(cos²πτ/2)⁴/F(1)⁴"""
    if pt.lat.is_degenerate:
        return 0j
    f = _Factors(pt, table, policy)
    value = (1j * f.nome * f.phase ** 2 * f.cos_half_tau ** 2 * f.sin_shift * f.cos_shift
             / _guard_denominator(f.one ** 3 * f.sin_v ** 2, "dn'"))
    return ensure_finite(value, "dn' 展开")


def _max_deviation(pairs: Sequence[Tuple[complex, complex]]) -> Tuple[float, float]:
    worst_abs = 0.0
    worst_rel = 0.0
    for value, reference in pairs:
        worst_abs = max(worst_abs, abs(value - reference))
        worst_rel = max(worst_rel, relative_deviation(value, reference))
    return worst_abs, worst_rel


def identity_suite_algebraic(lat: LatticeParameter, u_grid: Sequence[complex],
                             policy: TruncationPolicy = DEFAULT_POLICY,
                             tolerance: float = 1e-11,
                             artifact_version: str = "") -> VerificationReport:
    """sn²+cn²=1, dn²+k²sn²=1, k²cn²+k'²=dn²"""
    moduli = elliptic_moduli(theta_constants(lat, policy))
    k2 = moduli.k ** 2
    kp2 = moduli.k_prime ** 2
    residuals: Dict[str, list] = {"sn2_plus_cn2": [], "dn2_plus_k2sn2": [], "k2cn2_plus_kp2": []}
    for u in u_grid:
        pt = EllipticPoint.from_u(u, lat, moduli.K)
        sn, cn, dn = sn_theta(pt, policy), cn_theta(pt, policy), dn_theta(pt, policy)
        residuals["sn2_plus_cn2"].append((sn * sn + cn * cn, 1.0))
        residuals["dn2_plus_k2sn2"].append((dn * dn + k2 * sn * sn, 1.0))
        residuals["k2cn2_plus_kp2"].append((k2 * cn * cn + kp2, dn * dn))
    measurements = []
    for name, pairs in residuals.items():
        worst_abs, worst_rel = _max_deviation(pairs)
        measurements.append(Measurement(name, "theta_ratio", "identity", worst_abs, worst_rel,
                                        len(pairs), tolerance=tolerance))
    return VerificationReport.build(
        "identity_suite_algebraic", ["sn²+cn²=1", "dn²+k²sn²=1", "k²cn²+k'²=dn²"],
        {"q": lat.nome, "n_points": len(u_grid)}, measurements, artifact_version)


def identity_suite_derivative(lat: LatticeParameter, u_grid: Sequence[complex], h: float = 1e-5,
                              policy: TruncationPolicy = DEFAULT_POLICY,
                              tolerance: float = 1e-8,
                              artifact_version: str = "") -> VerificationReport:
    """sn' = cn·dn, cn' = -sn·dn, dn' = -k²·sn·cn, 导数用中心差分"""
    moduli = elliptic_moduli(theta_constants(lat, policy))
    k2 = moduli.k ** 2

    def at(func: Callable, u: complex) -> complex:
        return func(EllipticPoint.from_u(u, lat, moduli.K), policy)

    def fd(func: Callable, u: complex) -> complex:
        return (at(func, u + h) - at(func, u - h)) / (2 * h)

    pairs: Dict[str, list] = {"sn_prime": [], "cn_prime": [], "dn_prime": []}
    for u in u_grid:
        sn, cn, dn = at(sn_theta, u), at(cn_theta, u), at(dn_theta, u)
        pairs["sn_prime"].append((fd(sn_theta, u), cn * dn))
        pairs["cn_prime"].append((fd(cn_theta, u), -sn * dn))
        pairs["dn_prime"].append((fd(dn_theta, u), -k2 * sn * cn))
    measurements = []
    for name, values in pairs.items():
        worst_abs, worst_rel = _max_deviation(values)
        measurements.append(Measurement(name, "central_difference", "product_form",
                                        worst_abs, worst_rel, len(values), tolerance=tolerance))
    return VerificationReport.build(
        "identity_suite_derivative", ["sn'=cn·dn", "cn'=-sn·dn", "dn'=-k²sn·cn"],
        {"q": lat.nome, "h": h, "n_points": len(u_grid)}, measurements, artifact_version)


def expansion_measurements(lat: LatticeParameter, u_grid: Sequence[complex],
                           table: CoefficientTable, policy: TruncationPolicy = DEFAULT_POLICY,
                           tolerance: float = 1e-9) -> list:
    """椭圆函数展开与θ比值定义的比较, 组合推导形式判定, 印刷形式记录差异"""
    moduli = elliptic_moduli(theta_constants(lat, policy))
    k2 = moduli.k ** 2
    points = [EllipticPoint.from_u(u, lat, moduli.K) for u in u_grid]
    # sn/cn 在 v 为整数 (零点) 与半整数 (极点) 处除外
    regular = [pt for pt in points
               if abs(2 * pt.v - round((2 * pt.v).real)) > 1e-9]
    references = {}
    for pt in points:
        references[pt.u] = (sn_theta(pt, policy), cn_theta(pt, policy), dn_theta(pt, policy))

    def sn_ref(pt):
        return references[pt.u][0]

    def cn_ref(pt):
        return references[pt.u][1]

    def dn_ref(pt):
        return references[pt.u][2]

    canonical = FormVariant.CANONICAL_DERIVED
    printed = FormVariant.PAPER_LITERAL
    cases = [
        ("sn_expansion", points, lambda pt, f: sn_expansion(pt, table, f, policy), sn_ref, True),
        ("cn_expansion", points, lambda pt, f: cn_expansion(pt, table, f, policy), cn_ref, True),
        ("dn_expansion", points, lambda pt, f: dn_expansion(pt, table, f, policy), dn_ref, True),
        ("sn_over_cn_expansion", regular,
         lambda pt, f: sn_over_cn_expansion(pt, table, f, policy),
         lambda pt: sn_ref(pt) / cn_ref(pt), True),
        ("sn_derivative_expansion", points,
         lambda pt, f: sn_derivative_expansion(pt, table, f, policy),
         lambda pt: cn_ref(pt) * dn_ref(pt), True),
        ("cn_derivative_expansion", points,
         lambda pt, f: cn_derivative_expansion(pt, table, policy),
         lambda pt: -sn_ref(pt) * dn_ref(pt), False),
        ("dn_derivative_expansion", points,
         lambda pt, f: dn_derivative_expansion(pt, table, policy),
         lambda pt: -k2 * sn_ref(pt) * cn_ref(pt), False),
    ]
    measurements = []
    for name, pts, evaluate, reference, has_printed in cases:
        worst_abs, worst_rel = _max_deviation([(evaluate(pt, canonical), reference(pt)) for pt in pts])
        measurements.append(Measurement(f"{name}_canonical", "expansion_canonical", "theta_ratio",
                                        worst_abs, worst_rel, len(pts),
                                        tolerance=tolerance, governing="rel"))
        if has_printed and name != "dn_expansion":
            worst_abs, worst_rel = _max_deviation([(evaluate(pt, printed), reference(pt)) for pt in pts])
            measurements.append(Measurement(f"{name}_printed", "expansion_printed", "theta_ratio",
                                            worst_abs, worst_rel, len(pts), tolerance=tolerance,
                                            governing="rel", kind=MeasurementKind.PRINTED_FORM))
    return measurements


def moduli_report(lat: LatticeParameter, policy: TruncationPolicy = DEFAULT_POLICY,
                  tolerance: float = 1e-10, artifact_version: str = "") -> VerificationReport:
    """K 的各种求法与印刷约定 (K 前的因子 2、K'(k)=K(1-k)、u=θ3²(0)v)"""
    consts = theta_constants(lat, policy)
    moduli = elliptic_moduli(consts)
    K_agm = agm_K(moduli.k)
    measurements = [
        Measurement("K_agm_vs_theta3", "agm", "half_pi_theta3_squared",
                    abs(K_agm - moduli.K), abs(K_agm - moduli.K) / abs(moduli.K), 1,
                    tolerance=tolerance, governing="rel"),
        Measurement("K_at_zero_modulus", "agm", "half_pi", abs(agm_K(0.0) - math.pi / 2),
                    abs(agm_K(0.0) - math.pi / 2) / (math.pi / 2), 1,
                    tolerance=1e-12, governing="rel"),
        Measurement("modulus_pythagoras", "k2_plus_kprime2", "one",
                    abs(moduli.k ** 2 + moduli.k_prime ** 2 - 1),
                    abs(moduli.k ** 2 + moduli.k_prime ** 2 - 1), 1, tolerance=1e-12),
    ]
    if moduli.K_prime is not None:
        K_dual = modular_K_prime(lat, policy)
        measurements.append(Measurement(
            "K_prime_agm_vs_modular", "agm_complement", "half_pi_theta3_squared_dual",
            abs(moduli.K_prime - K_dual), abs(moduli.K_prime - K_dual) / abs(moduli.K_prime), 1,
            tolerance=tolerance, governing="rel"))
        printed_complement = agm_K(1 - moduli.k)
        measurements.append(Measurement(
            "K_prime_printed_one_minus_k", "K(1-k)", "K(k')",
            abs(printed_complement - moduli.K_prime),
            abs(printed_complement - moduli.K_prime) / abs(moduli.K_prime), 1,
            tolerance=tolerance, governing="rel", kind=MeasurementKind.PRINTED_FORM))
    printed_K = 2 * K_agm
    measurements.append(Measurement(
        "K_printed_factor_two", "2·integral", "agm", abs(printed_K - K_agm),
        abs(printed_K - K_agm) / abs(K_agm), 1,
        tolerance=tolerance, governing="rel", kind=MeasurementKind.PRINTED_FORM))

    # u = θ3²(0)·v 与 v = u/(2K) 两种读法在 sn 上的差别
    pairs = []
    for v in (0.1, 0.2, 0.3):
        u_printed = consts.theta3_0 ** 2 * v
        ratio_value = sn_theta(EllipticPoint(u=u_printed, v=complex(v), lat=lat), policy)
        pairs.append((sn_theta(EllipticPoint.from_u(u_printed, lat, moduli.K), policy), ratio_value))
    worst_abs, worst_rel = _max_deviation(pairs)
    measurements.append(Measurement(
        "argument_theta3_squared", "sn(u=θ3²v)", "theta_ratio(v)", worst_abs, worst_rel, len(pairs),
        tolerance=tolerance, governing="rel", kind=MeasurementKind.PRINTED_FORM))
    parameters = {"q": lat.nome, "k": moduli.k, "K": moduli.K, "K_prime": moduli.K_prime}
    return VerificationReport.build(
        "moduli", ["modulus k, k'", "complete elliptic integral K"], parameters,
        measurements, artifact_version)


def limits_report(policy: TruncationPolicy = DEFAULT_POLICY, small_k: float = 1e-3,
                  near_one_k: float = 1 - 1e-6, n_points: int = 21,
                  hyperbolic_tolerance: float = 1e-2,
                  artifact_version: str = "") -> VerificationReport:
    """k→0: sn→sin, cn→cos, dn→1; k→1: sn→tanh, cn,dn→sech"""
    u_values = [i / (n_points - 1) for i in range(n_points)]
    measurements = []

    small_lat = lattice_from_modulus(small_k)
    envelope = 5 * small_k ** 2
    for name, func, limit in (("sn", sn_theta, math.sin), ("cn", cn_theta, math.cos),
                              ("dn", dn_theta, lambda u: 1.0)):
        pairs = [(func(elliptic_point(u, small_lat, policy), policy), limit(u)) for u in u_values]
        worst_abs, worst_rel = _max_deviation(pairs)
        measurements.append(Measurement(f"{name}_small_modulus", f"{name}_theta", "trig_limit",
                                        worst_abs, worst_rel, len(pairs), tolerance=envelope))

    near_lat = lattice_from_modulus(near_one_k)
    for name, func, limit in (("sn", sn_theta, math.tanh),
                              ("cn", cn_theta, lambda u: 1 / math.cosh(u)),
                              ("dn", dn_theta, lambda u: 1 / math.cosh(u))):
        pairs = [(func(elliptic_point(u, near_lat, policy), policy), limit(u)) for u in u_values]
        worst_abs, worst_rel = _max_deviation(pairs)
        measurements.append(Measurement(f"{name}_near_unit_modulus", f"{name}_theta",
                                        "hyperbolic_limit", worst_abs, worst_rel, len(pairs),
                                        tolerance=hyperbolic_tolerance))
    k_prime = complementary_modulus(near_one_k)
    parameters = {"small_k": small_k, "near_one_k": near_one_k,
                  "near_one_k_prime": k_prime.real, "q_small": small_lat.nome.real,
                  "q_near_one": near_lat.nome.real}
    return VerificationReport.build(
        "elliptic_limits", ["sn(u,0)=sin u", "sn(u,1)=tanh u", "K(0)=π/2"], parameters,
        measurements, artifact_version)
