"""
展开式类型定义
三角-指数展开的结构描述、求和模式、公式变体以及椭圆函数/ζ函数的求值路径
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict

from models.lattice import LatticeParameter, StripDomain, HALF_STRIP, FULL_STRIP
from models.exceptions import DomainError


class Basis(Enum):
    """展开基函数"""
    SIN = "sin"
    COS = "cos"


class ExponentSummation(Enum):
    """指数部分 Σ_p c_{2p} x^p 的求和方式"""
    AUTO = "auto"                    # 幂级数, 收敛圆外回退到乘积
    POWER_SERIES = "power_series"    # 仅幂级数
    TRUNCATED = "truncated"          # 取满 P 项, 不要求收敛
    PRODUCT = "product"              # Π_k (1 - x/S_k²) 解析延拓


class FormVariant(Enum):
    """公式变体: 印刷原文 / 由 θ 展开组合推导"""
    PAPER_LITERAL = "paper_literal"
    CANONICAL_DERIVED = "canonical_derived"


class ZetaRoute(Enum):
    """Jacobi ζ 函数求值路径"""
    LOG_DERIVATIVE = "log_derivative"
    FOURIER = "fourier"
    RATIONAL_FORM = "rational_form"
    THEOREM6_LITERAL = "theorem6_literal"
    THEOREM6_CANONICAL = "theorem6_canonical"


@dataclass(frozen=True)
class ExpansionForm:
    """θ_j(v) = θ4(0)·exp(phase + Σ c_{2p} basis^{2p}(π(v + shift)))"""

    which_theta: int
    shift_in_tau: float        # argument_shift = shift_in_tau · τ
    has_phase: bool            # phase = iπ(v + τ/4)
    basis: Basis
    strip: StripDomain

    def argument_shift(self, lat: LatticeParameter) -> complex:
        if self.shift_in_tau == 0.0:
            return 0j
        if lat.is_degenerate:
            raise DomainError("退化格点上的平移展开无定义")
        return self.shift_in_tau * lat.tau

    def phase_exponent(self, v: complex, lat: LatticeParameter) -> complex:
        if not self.has_phase:
            return 0j
        if lat.is_degenerate:
            raise DomainError("退化格点上的相位因子无定义")
        return 1j * math.pi * (v + lat.tau / 4)


EXPANSION_FORMS: Dict[int, ExpansionForm] = {
    1: ExpansionForm(1, 0.5, True, Basis.SIN, FULL_STRIP),
    2: ExpansionForm(2, 0.5, True, Basis.COS, HALF_STRIP),
    3: ExpansionForm(3, 0.0, False, Basis.COS, FULL_STRIP),
    4: ExpansionForm(4, 0.0, False, Basis.SIN, HALF_STRIP),
}


def expansion_form(which: int) -> ExpansionForm:
    """按编号取展开结构"""
    try:
        return EXPANSION_FORMS[int(which)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(f"θ函数编号必须为 1-4: {which}")


@dataclass(frozen=True)
class EllipticPoint:
    """椭圆函数自变量 u 与 θ 自变量 v = u/(2K)"""

    u: complex
    v: complex
    lat: LatticeParameter

    @classmethod
    def from_u(cls, u: complex, lat: LatticeParameter, K: complex) -> 'EllipticPoint':
        u = complex(u)
        return cls(u=u, v=u / (2 * K), lat=lat)
