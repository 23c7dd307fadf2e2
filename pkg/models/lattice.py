"""
格点参数数据模型
定义半周期比 τ、截断策略、θ常数与椭圆模数等核心数据结构
"""

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Dict, Any

from models.exceptions import DomainError


# 复数值直接使用 Python 内建 complex
ComplexValue = complex

# 截断策略的下限
MIN_MAX_TERMS = 8
MIN_ORDER_P = 4


@dataclass(frozen=True)
class TruncationPolicy:
    """无穷级数截断策略"""

    term_tolerance: float = 1e-16     # 项模长低于此值视为可忽略
    max_terms: int = 400              # 单个级数的最大项数
    max_order_P: int = 40             # Σ_p 求和中 p 的上限

    def __post_init__(self):
        if not (0.0 <= self.term_tolerance < 1.0):
            raise ValueError(f"term_tolerance 必须位于 [0, 1): {self.term_tolerance}")
        if self.max_terms < MIN_MAX_TERMS:
            raise ValueError(f"max_terms 至少为 {MIN_MAX_TERMS}: {self.max_terms}")
        if self.max_order_P < MIN_ORDER_P:
            raise ValueError(f"max_order_P 至少为 {MIN_ORDER_P}: {self.max_order_P}")

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "term_tolerance": self.term_tolerance,
            "max_terms": self.max_terms,
            "max_order_P": self.max_order_P,
        }


@dataclass(frozen=True)
class LatticeParameter:
    """半周期比 τ (Im τ > 0)

    tau 为 None 表示退化格点 q = 0 (τ → i∞)。
    """

    tau: Optional[complex]

    def __post_init__(self):
        if self.tau is None:
            return
        tau = complex(self.tau)
        if not (math.isfinite(tau.real) and math.isfinite(tau.imag)):
            raise DomainError(f"τ 必须有限: {self.tau}")
        if tau.imag <= 0:
            raise DomainError(f"要求 Im τ > 0, 实际为 {tau.imag}")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_nome(cls, q: complex) -> 'LatticeParameter':
        """由 nome q 构造 (|q| < 1, q = 0 为退化格点)"""
        q = complex(q)
        if q == 0:
            return cls(None)
        if abs(q) >= 1:
            raise DomainError(f"要求 |q| < 1, 实际为 {abs(q)}")
        return cls(cmath.log(q) / (1j * math.pi))

    @classmethod
    def from_tau_im(cls, tau_im: float) -> 'LatticeParameter':
        """由纯虚 τ = i·tau_im 构造"""
        return cls(complex(0.0, tau_im))

    @property
    def is_degenerate(self) -> bool:
        return self.tau is None

    @property
    def is_real_nome(self) -> bool:
        """τ 纯虚(或退化)时 q 为实数"""
        return self.tau is None or self.tau.real == 0.0

    @property
    def tau_im(self) -> float:
        return math.inf if self.tau is None else self.tau.imag

    @property
    def nome(self) -> complex:
        return self.nome_power(1.0)

    @property
    def quarter_nome(self) -> complex:
        """q^{1/4} = e^{iπτ/4}"""
        return self.nome_power(0.25)

    def nome_power(self, exponent: float) -> complex:
        """q^e = e^{iπτe}, 与主值分支一致"""
        if self.tau is None:
            return 0j if exponent > 0 else complex(1.0)
        return cmath.exp(1j * math.pi * self.tau * exponent)

    def shifted(self, delta: complex) -> 'LatticeParameter':
        """返回 τ + delta 对应的格点"""
        if self.tau is None:
            raise DomainError("退化格点无法平移")
        return LatticeParameter(self.tau + delta)


@dataclass(frozen=True)
class StripDomain:
    """展开式有效带 |Im(v - shift)| < factor·Im τ"""

    half_width_factor: float
    shift: complex = 0j

    def __post_init__(self):
        if self.half_width_factor not in (0.5, 1.0):
            raise ValueError(f"带宽因子只能为 1/2 或 1: {self.half_width_factor}")


HALF_STRIP = StripDomain(0.5)
FULL_STRIP = StripDomain(1.0)


@dataclass(frozen=True)
class ThetaConstants:
    """θ常数 θ2(0), θ3(0), θ4(0), θ4''(0), θ1'(0)"""

    theta2_0: complex
    theta3_0: complex
    theta4_0: complex
    theta4_dd_0: complex
    theta1_d_0: complex

    def to_dict(self) -> Dict[str, Any]:
        return {name: [value.real, value.imag] for name, value in (
            ("theta2_0", self.theta2_0),
            ("theta3_0", self.theta3_0),
            ("theta4_0", self.theta4_0),
            ("theta4_dd_0", self.theta4_dd_0),
            ("theta1_d_0", self.theta1_d_0),
        )}


@dataclass(frozen=True)
class EllipticModuli:
    """模数 k, 余模数 k', 第一类完全椭圆积分 K, K'"""

    k: complex
    k_prime: complex
    K: complex
    K_prime: complex

    @property
    def quarter_period(self) -> complex:
        return self.K
