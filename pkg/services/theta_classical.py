"""
经典θ级数服务
由 q 级数计算 θ1-θ4、θ常数、椭圆模数与完全椭圆积分, 作为所有展开式的基准
"""

import cmath
import logging
import math
from functools import lru_cache
from typing import Callable, Dict, Iterator

from models.exceptions import DegenerateModulus, DomainError, NonConvergence
from models.lattice import (
    ComplexValue, EllipticModuli, LatticeParameter, StripDomain, ThetaConstants,
    TruncationPolicy,
)
from utils.complex_core import (
    DEFAULT_POLICY, complex_cos, complex_sin, complex_sqrt, ensure_finite,
    sum_until_negligible,
)

logger = logging.getLogger(__name__)

# AGM 迭代上限
AGM_MAX_ITERATIONS = 64


def _nome_weight(lat: LatticeParameter, exponent: float) -> complex:
    """q^exponent, 指数很大时下溢为 0"""
    return lat.nome_power(exponent)


def _odd_terms(v: ComplexValue, lat: LatticeParameter, policy: TruncationPolicy,
               trig: Callable[[complex], complex], alternating: bool) -> Iterator[complex]:
    for n in range(policy.max_terms):
        sign = -1 if (alternating and n % 2) else 1
        yield 2 * sign * _nome_weight(lat, (n + 0.5) ** 2) * trig((2 * n + 1) * math.pi * v)


def _even_terms(v: ComplexValue, lat: LatticeParameter, policy: TruncationPolicy,
                alternating: bool) -> Iterator[complex]:
    yield 1.0
    for n in range(1, policy.max_terms):
        sign = -1 if (alternating and n % 2) else 1
        yield 2 * sign * _nome_weight(lat, n * n) * complex_cos(2 * n * math.pi * v)


def theta1_series(v: ComplexValue, lat: LatticeParameter,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ1(v,τ) = 2 Σ (-1)ⁿ q^{(n+½)²} sin((2n+1)πv)"""
    if lat.is_degenerate:
        return 0j
    return sum_until_negligible(_odd_terms(v, lat, policy, complex_sin, True), policy)


def theta2_series(v: ComplexValue, lat: LatticeParameter,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ2(v,τ) = 2 Σ q^{(n+½)²} cos((2n+1)πv)"""
    if lat.is_degenerate:
        return 0j
    return sum_until_negligible(_odd_terms(v, lat, policy, complex_cos, False), policy)


def theta3_series(v: ComplexValue, lat: LatticeParameter,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ3(v,τ) = 1 + 2 Σ q^{n²} cos(2nπv)"""
    if lat.is_degenerate:
        return complex(1.0)
    return sum_until_negligible(_even_terms(v, lat, policy, False), policy)


def theta4_series(v: ComplexValue, lat: LatticeParameter,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """θ4(v,τ) = 1 + 2 Σ (-1)ⁿ q^{n²} cos(2nπv)"""
    if lat.is_degenerate:
        return complex(1.0)
    return sum_until_negligible(_even_terms(v, lat, policy, True), policy)


THETA_SERIES: Dict[int, Callable[..., complex]] = {
    1: theta1_series,
    2: theta2_series,
    3: theta3_series,
    4: theta4_series,
}


def theta_series(which: int, v: ComplexValue, lat: LatticeParameter,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """按编号计算 θ_which(v,τ)"""
    try:
        series = THETA_SERIES[int(which)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(f"θ函数编号必须为 1-4: {which}")
    return series(v, lat, policy)


@lru_cache(maxsize=256)
def theta_constants(lat: LatticeParameter,
                    policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaConstants:
    """θ常数, θ4''(0) 与 θ1'(0) 由逐项求导得到"""
    if lat.is_degenerate:
        return ThetaConstants(0j, complex(1.0), complex(1.0), 0j, 0j)

    def theta4_dd_terms():
        for n in range(1, policy.max_terms):
            sign = -1 if n % 2 else 1
            yield sign * n * n * _nome_weight(lat, n * n)

    def theta1_d_terms():
        for n in range(policy.max_terms):
            sign = -1 if n % 2 else 1
            yield sign * (2 * n + 1) * _nome_weight(lat, (n + 0.5) ** 2)

    constants = ThetaConstants(
        theta2_0=theta2_series(0, lat, policy),
        theta3_0=theta3_series(0, lat, policy),
        theta4_0=theta4_series(0, lat, policy),
        theta4_dd_0=-8 * math.pi ** 2 * sum_until_negligible(theta4_dd_terms(), policy),
        theta1_d_0=2 * math.pi * sum_until_negligible(theta1_d_terms(), policy),
    )
    logger.debug(f"θ常数 τ={lat.tau}: θ2={constants.theta2_0}, θ3={constants.theta3_0}, θ4={constants.theta4_0}")
    return constants


def complementary_modulus(k: ComplexValue) -> complex:
    """k' = √((1-k)(1+k)), 主值分支"""
    k = complex(k)
    return complex_sqrt((1 - k) * (1 + k))


def agm(a: ComplexValue, b: ComplexValue) -> complex:
    """算术几何平均, 复数时取满足 |a'-b'| ≤ |a'+b'| 的平方根分支"""
    a, b = complex(a), complex(b)
    for _ in range(AGM_MAX_ITERATIONS):
        if abs(a - b) <= 1e-16 * abs(a):
            return a
        a_next = (a + b) / 2
        b_next = cmath.sqrt(a * b)
        if abs(a_next - b_next) > abs(a_next + b_next):
            b_next = -b_next
        a, b = a_next, b_next
    if abs(a - b) <= 1e-14 * abs(a):
        return a
    raise NonConvergence(f"AGM 在 {AGM_MAX_ITERATIONS} 次迭代内未收敛: a={a}, b={b}")


def agm_K(k: ComplexValue) -> complex:
    """第一类完全椭圆积分 K(k) = π / (2·agm(1, k'))"""
    k = complex(k)
    if k == 1 or k == -1:
        raise DegenerateModulus(f"K({k.real:g}) 发散")
    k_prime = complementary_modulus(k)
    mean = agm(1.0, k_prime)
    if mean == 0:
        raise DegenerateModulus(f"agm(1, k') = 0, k={k}")
    return ensure_finite(math.pi / (2 * mean), "K")


def elliptic_moduli(consts: ThetaConstants) -> EllipticModuli:
    """k = θ2²/θ3², k' = θ4²/θ3², K = (π/2)θ3², K' = K(k')"""
    if consts.theta3_0 == 0:
        raise DomainError("θ3(0) = 0, 模数无定义")
    theta3_sq = consts.theta3_0 ** 2
    k = consts.theta2_0 ** 2 / theta3_sq
    k_prime = consts.theta4_0 ** 2 / theta3_sq
    if k_prime == 0 or abs(k_prime) < 1e-15:
        raise DegenerateModulus(f"k' = {k_prime}, 模数已退化到 k = 1")
    K = math.pi / 2 * theta3_sq
    # K' = K(k') = π / (2·agm(1, k)); k = 0 时 K' 为无穷, 以 None 表示
    K_prime = None if k == 0 else ensure_finite(math.pi / (2 * agm(1.0, k)), "K'")
    return EllipticModuli(k=k, k_prime=k_prime, K=K, K_prime=K_prime)


def lattice_moduli(lat: LatticeParameter,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> EllipticModuli:
    return elliptic_moduli(theta_constants(lat, policy))


def modular_K_prime(lat: LatticeParameter,
                    policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """K' = (π/2)·θ3²(0, -1/τ), 用于与 AGM 结果交叉验证"""
    if lat.is_degenerate:
        raise DomainError("退化格点没有有限的 K'")
    dual = LatticeParameter(-1 / lat.tau)
    return math.pi / 2 * theta3_series(0, dual, policy) ** 2


def lattice_from_modulus(k: float) -> LatticeParameter:
    """由实模数 k ∈ [0,1) 构造格点 τ = iK'/K, 即 q = exp(-πK'/K)"""
    if not 0.0 <= k < 1.0:
        raise DegenerateModulus(f"实模数必须位于 [0, 1): {k}")
    if k == 0.0:
        return LatticeParameter(None)
    K = agm_K(k).real
    K_prime = math.pi / (2 * agm(1.0, k).real)
    lat = LatticeParameter.from_tau_im(K_prime / K)
    logger.debug(f"模数 k={k} 对应 q={lat.nome.real:.6e}")
    return lat


def in_strip(v: ComplexValue, lat: LatticeParameter, strip: StripDomain) -> bool:
    """|Im(v - shift)| < factor·Im τ"""
    if lat.is_degenerate:
        return True
    return abs((complex(v) - strip.shift).imag) < strip.half_width_factor * lat.tau_im
