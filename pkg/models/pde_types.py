"""
偏微分方程验证数据模型
网格、热方程边界类型与非线性薛定谔方程候选约定
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Any

import numpy as np


@dataclass(frozen=True)
class GridSpec1D:
    """一维均匀网格"""

    start: float
    end: float
    points: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"网格区间无效: [{self.start}, {self.end}]")
        if self.points < 8:
            raise ValueError(f"网格点数至少为 8: {self.points}")

    @property
    def spacing(self) -> float:
        return (self.end - self.start) / (self.points - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.points)

    def shifted(self, offset: float) -> 'GridSpec1D':
        return GridSpec1D(self.start + offset, self.end + offset, self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {"start": self.start, "end": self.end, "points": self.points}


class BoundaryCondition(Enum):
    """热方程边界条件"""
    DIRICHLET = "dirichlet"    # θ(0,t) = θ(1,t) = 0
    NEUMANN = "neumann"        # ∂θ/∂v = 0 于两端


class PhaseGrouping(Enum):
    """ψ 相位中 t 的括号位置"""
    A = "A"    # px - (p² + (2-k²)r²)t
    B = "B"    # px - (p² - (2-k²)r²)t
    C = "C"    # (px - p² - (2-k²)r²)t, 照印刷原样


class ModulusArgument(Enum):
    """dn 第二参数取 k 还是 k²"""
    K = "k"
    K_SQUARED = "k2"


@dataclass(frozen=True)
class NLSCandidate:
    """周期解 ψ = r·e^{iφ(x,t)}·dn(rx - 2prt, m) 的一种读法"""

    r: float
    p_wave: float
    k: float
    sign_time: int = 1
    phase_grouping: PhaseGrouping = PhaseGrouping.B
    modulus_argument: ModulusArgument = ModulusArgument.K

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"振幅 r 必须为正: {self.r}")
        if not 0.0 <= self.k < 1.0:
            raise ValueError(f"模数 k 必须位于 [0, 1): {self.k}")
        if self.sign_time not in (1, -1):
            raise ValueError(f"sign_time 只能为 ±1: {self.sign_time}")

    @property
    def dn_modulus(self) -> float:
        if self.modulus_argument is ModulusArgument.K_SQUARED:
            return self.k * self.k
        return self.k

    @property
    def label(self) -> str:
        sign = "+1" if self.sign_time > 0 else "-1"
        return f"S={sign},{self.phase_grouping.value},{self.modulus_argument.value}"

    def phase(self, x: np.ndarray, t: float) -> np.ndarray:
        """相位 φ(x, t)"""
        p, r, k = self.p_wave, self.r, self.k
        nonlinear = (2.0 - k * k) * r * r
        if self.phase_grouping is PhaseGrouping.A:
            return p * x - (p * p + nonlinear) * t
        if self.phase_grouping is PhaseGrouping.B:
            return p * x - (p * p - nonlinear) * t
        return (p * x - p * p - nonlinear) * t

    def phase_dx(self, t: float) -> float:
        """∂φ/∂x (对 x 为常数)"""
        if self.phase_grouping is PhaseGrouping.C:
            return self.p_wave * t
        return self.p_wave

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "p_wave": self.p_wave,
            "k": self.k,
            "sign_time": self.sign_time,
            "phase_grouping": self.phase_grouping.value,
            "modulus_argument": self.modulus_argument.value,
        }
