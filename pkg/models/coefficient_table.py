"""
展开系数表数据模型
定义 c_2 … c_{2P} 系数表及其生成方法
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Dict, Any, Tuple, List

from models.lattice import LatticeParameter


class CoefficientMethod(Enum):
    """系数生成方法枚举"""
    CLOSED_FORM = "closed_form"                          # 闭式 k-求和
    RECURRENCE_PAPER_SEEDS = "recurrence_paper_seeds"  # 印刷种子 + 递推
    RECURRENCE_CALIBRATED = "recurrence_calibrated"      # 拟合 c_0 + 递推
    EXTRACTED_ORACLE = "extracted_oracle"                # 由 log θ4 采样反解


def _encode_complex(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


def _decode_complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


@dataclass(frozen=True)
class CoefficientTable:
    """系数表 c_2, c_4, …, c_{2P}

    values[p-1] 存放 c_{2p}; seed_c0 为递推所用的 c_0 (闭式方法不含 c_0)。
    """

    lat: LatticeParameter
    max_order_P: int
    values: Tuple[complex, ...]
    method: CoefficientMethod
    seed_c0: Optional[complex] = None

    def __post_init__(self):
        values = tuple(complex(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if self.max_order_P < 1:
            raise ValueError(f"max_order_P 必须为正: {self.max_order_P}")
        if len(values) != self.max_order_P:
            raise ValueError(f"系数个数 {len(values)} 与 P={self.max_order_P} 不一致")

    def c(self, p: int) -> complex:
        """返回 c_{2p}; p = 0 时返回种子 c_0"""
        if p == 0:
            if self.seed_c0 is None:
                raise KeyError("系数表未携带 c_0")
            return self.seed_c0
        if not 1 <= p <= self.max_order_P:
            raise KeyError(f"阶数越界: p={p}, P={self.max_order_P}")
        return self.values[p - 1]

    def truncated(self, P: int) -> 'CoefficientTable':
        """截取前 P 个系数"""
        return CoefficientTable(self.lat, P, self.values[:P], self.method, self.seed_c0)

    @property
    def is_real(self) -> bool:
        return all(v.imag == 0.0 for v in self.values)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        lat = self.lat
        q = lat.nome
        data = {
            "tau_re": None if lat.is_degenerate else lat.tau.real,
            "tau_im": None if lat.is_degenerate else lat.tau_im,
            "q": q.real if lat.is_real_nome else _encode_complex(q),
            "P": self.max_order_P,
            "method": self.method.value,
            "c": [v.real if self.is_real else _encode_complex(v) for v in self.values],
        }
        if self.seed_c0 is not None:
            data["seed_c0"] = _encode_complex(self.seed_c0)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CoefficientTable':
        """从字典创建实例"""
        tau_im = data.get("tau_im")
        if tau_im is None or math.isinf(tau_im):
            lat = LatticeParameter(None)
        else:
            lat = LatticeParameter(complex(data.get("tau_re") or 0.0, tau_im))
        seed = data.get("seed_c0")
        return cls(
            lat=lat,
            max_order_P=int(data["P"]),
            values=tuple(_decode_complex(v) for v in data["c"]),
            method=CoefficientMethod(data["method"]),
            seed_c0=None if seed is None else _decode_complex(seed),
        )
