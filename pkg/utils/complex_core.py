"""
复数运算核心
级数截断求和与带溢出检查的初等复函数
"""

import cmath
import math
from typing import Iterable, Callable

from models.exceptions import NonConvergence, DomainError, NumericOverflow
from models.lattice import TruncationPolicy, ComplexValue


DEFAULT_POLICY = TruncationPolicy()

# 连续多少个可忽略项之后才停止
NEGLIGIBLE_RUN = 3


def ensure_finite(value: ComplexValue, context: str = "") -> ComplexValue:
    """检查实部虚部均有限, 否则抛出 NumericOverflow"""
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NumericOverflow(f"{context or '运算'}结果非有限: {value}")
    return value


def sum_until_negligible(terms: Iterable[ComplexValue],
                         policy: TruncationPolicy = DEFAULT_POLICY) -> ComplexValue:
    """逐项求和, 连续观察到 3 个可忽略项后停止

    可忽略指 |项| < term_tolerance (精确为零的项同样计入)。
    """
    total = 0j
    run = 0
    last_magnitude = 0.0
    count = 0
    for term in terms:
        term = complex(term)
        total += term
        count += 1
        last_magnitude = abs(term)
        if last_magnitude < policy.term_tolerance or last_magnitude == 0.0:
            run += 1
            if run >= NEGLIGIBLE_RUN:
                return ensure_finite(total, "级数求和")
        else:
            run = 0
        if count >= policy.max_terms:
            break
    if count >= policy.max_terms and run < NEGLIGIBLE_RUN:
        if not (last_magnitude < policy.term_tolerance or last_magnitude == 0.0):
            raise NonConvergence(
                f"{policy.max_terms} 项后末项模长 {last_magnitude:.3e} 仍未低于 {policy.term_tolerance:.1e}")
    elif run == 0 and count > 0:
        raise NonConvergence(f"有限序列在第 {count} 项结束时末项模长 {last_magnitude:.3e} 仍不可忽略")
    return ensure_finite(total, "级数求和")


def _guarded(func: Callable[[complex], complex], name: str, z: ComplexValue) -> ComplexValue:
    try:
        return ensure_finite(func(complex(z)), name)
    except OverflowError as e:
        raise NumericOverflow(f"{name}({z}) 溢出: {e}")


def complex_sin(z: ComplexValue) -> ComplexValue:
    return _guarded(cmath.sin, "sin", z)


def complex_cos(z: ComplexValue) -> ComplexValue:
    return _guarded(cmath.cos, "cos", z)


def complex_exp(z: ComplexValue) -> ComplexValue:
    return _guarded(cmath.exp, "exp", z)


def complex_sqrt(z: ComplexValue) -> ComplexValue:
    return _guarded(cmath.sqrt, "sqrt", z)


def complex_power(z: ComplexValue, n: int) -> ComplexValue:
    """整数次幂 z**n, 溢出时抛出 NumericOverflow"""
    try:
        return ensure_finite(complex(z) ** n, f"幂 {n}")
    except OverflowError as e:
        raise NumericOverflow(f"({z})**{n} 溢出: {e}")


def complex_log_principal(z: ComplexValue) -> ComplexValue:
    """主值对数, 虚部位于 (-π, π]"""
    z = complex(z)
    if z == 0:
        raise DomainError("log(0) 无定义")
    return _guarded(cmath.log, "log", z)


def relative_deviation(value: ComplexValue, reference: ComplexValue) -> float:
    """|value - reference| / max(1, |reference|)"""
    return abs(value - reference) / max(1.0, abs(reference))


def central_difference(func: Callable[[complex], complex], z: ComplexValue,
                       h: float) -> ComplexValue:
    """二阶中心差分 f'(z)"""
    return (func(z + h) - func(z - h)) / (2 * h)


def second_difference(func: Callable[[complex], complex], z: ComplexValue,
                      h: float) -> ComplexValue:
    """二阶中心差分 f''(z)"""
    return (func(z + h) - 2 * func(z) + func(z - h)) / (h * h)
