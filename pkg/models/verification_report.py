"""
验证报告数据模型
定义测量记录、判定枚举与验证报告
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Dict, Any, Tuple, Iterable, List, Union

import numpy as np


class Verdict(Enum):
    """报告判定枚举"""
    PASS = "pass"
    DOCUMENTED_DISCREPANCY = "documented_discrepancy"
    FAIL = "fail"


class MeasurementKind(Enum):
    """测量类型"""
    CHECK = "check"                # 超差即失败
    PRINTED_FORM = "printed_form"  # 超差记为已记录差异
    INFO = "info"                  # 仅记录, 不判定


# 判定严重程度 fail > documented_discrepancy > pass
_SEVERITY = {
    Verdict.PASS: 0,
    Verdict.DOCUMENTED_DISCREPANCY: 1,
    Verdict.FAIL: 2,
}


def encode_float(value: float) -> Union[float, str]:
    """非有限浮点数写作 "inf"/"-inf"/"nan", 严格 JSON 不接受 Infinity/NaN"""
    value = float(value)
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def normalize_parameter(value: Any) -> Any:
    """报告参数规范化为 JSON 原生类型, 复数写作 [re, im], 非有限值写作字符串"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): normalize_parameter(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [normalize_parameter(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return encode_float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [encode_float(value.real), encode_float(value.imag)]
    return value


def combine_verdicts(verdicts: Iterable[Verdict]) -> Verdict:
    """取最严重的判定, 空序列为 pass"""
    worst = Verdict.PASS
    for verdict in verdicts:
        if _SEVERITY[verdict] > _SEVERITY[worst]:
            worst = verdict
    return worst


@dataclass(frozen=True)
class Measurement:
    """一次交叉验证测量"""

    name: str
    route_a: str
    route_b: str
    max_abs_deviation: float
    max_rel_deviation: float
    n_points: int
    tolerance: Optional[float] = None
    governing: str = "abs"
    kind: MeasurementKind = MeasurementKind.CHECK

    def __post_init__(self):
        for label in ("max_abs_deviation", "max_rel_deviation"):
            value = getattr(self, label)
            if math.isnan(value) or value < 0:
                raise ValueError(f"{self.name}: {label} 必须为非负数, 实际为 {value}")
            object.__setattr__(self, label, float(value))
        if self.n_points < 1:
            raise ValueError(f"{self.name}: n_points 至少为 1")
        if self.governing not in ("abs", "rel"):
            raise ValueError(f"{self.name}: governing 只能为 abs/rel")
        if self.kind is not MeasurementKind.INFO and self.tolerance is None:
            raise ValueError(f"{self.name}: 需判定的测量必须给出容差")

    @property
    def governing_deviation(self) -> float:
        return self.max_abs_deviation if self.governing == "abs" else self.max_rel_deviation

    @property
    def within_tolerance(self) -> bool:
        if self.tolerance is None:
            return True
        return self.governing_deviation <= self.tolerance

    @property
    def verdict(self) -> Verdict:
        if self.kind is MeasurementKind.INFO or self.within_tolerance:
            return Verdict.PASS
        if self.kind is MeasurementKind.PRINTED_FORM:
            return Verdict.DOCUMENTED_DISCREPANCY
        return Verdict.FAIL

    def renamed(self, prefix: str) -> 'Measurement':
        return Measurement(
            name=f"{prefix}/{self.name}",
            route_a=self.route_a,
            route_b=self.route_b,
            max_abs_deviation=self.max_abs_deviation,
            max_rel_deviation=self.max_rel_deviation,
            n_points=self.n_points,
            tolerance=self.tolerance,
            governing=self.governing,
            kind=self.kind,
        )

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "name": self.name,
            "route_a": self.route_a,
            "route_b": self.route_b,
            "max_abs_deviation": encode_float(self.max_abs_deviation),
            "max_rel_deviation": encode_float(self.max_rel_deviation),
            "n_points": self.n_points,
            "tolerance": None if self.tolerance is None else encode_float(self.tolerance),
            "governing": self.governing,
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Measurement':
        """从字典创建实例"""
        tolerance = data.get("tolerance")
        return cls(
            name=str(data["name"]),
            route_a=str(data["route_a"]),
            route_b=str(data["route_b"]),
            max_abs_deviation=float(data["max_abs_deviation"]),
            max_rel_deviation=float(data["max_rel_deviation"]),
            n_points=int(data["n_points"]),
            tolerance=None if tolerance is None or tolerance == "" else float(tolerance),
            governing=str(data.get("governing", "abs")),
            kind=MeasurementKind(data.get("kind", "check")),
        )


@dataclass(frozen=True)
class VerificationReport:
    """交叉验证报告"""

    title: str
    subject_refs: Tuple[str, ...] = ()
    parameters: Dict[str, Any] = field(default_factory=dict)
    measurements: Tuple[Measurement, ...] = ()
    verdict: Verdict = Verdict.PASS
    artifact_version: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subject_refs", tuple(self.subject_refs))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "parameters", normalize_parameter(dict(self.parameters)))
        if self.verdict is Verdict.PASS and any(
                m.verdict is not Verdict.PASS for m in self.measurements):
            raise ValueError(f"{self.title}: 存在超差测量, 判定不能为 pass")

    @classmethod
    def build(cls, title: str, subject_refs: Iterable[str], parameters: Dict[str, Any],
              measurements: Iterable[Measurement], artifact_version: str = "") -> 'VerificationReport':
        """由测量列表按判定格构造报告"""
        measurements = tuple(measurements)
        return cls(
            title=title,
            subject_refs=tuple(subject_refs),
            parameters=dict(parameters),
            measurements=measurements,
            verdict=combine_verdicts(m.verdict for m in measurements),
            artifact_version=artifact_version,
        )

    def find(self, name: str) -> Measurement:
        """按名称查找测量"""
        for measurement in self.measurements:
            if measurement.name == name:
                return measurement
        raise KeyError(f"报告 {self.title} 中没有测量 {name}")

    @property
    def discrepancies(self) -> Tuple[Measurement, ...]:
        return tuple(m for m in self.measurements if m.verdict is Verdict.DOCUMENTED_DISCREPANCY)

    @property
    def failures(self) -> Tuple[Measurement, ...]:
        return tuple(m for m in self.measurements if m.verdict is Verdict.FAIL)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "title": self.title,
            "subject_refs": list(self.subject_refs),
            "parameters": self.parameters,
            "measurements": [m.to_dict() for m in self.measurements],
            "verdict": self.verdict.value,
            "artifact_version": self.artifact_version,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'VerificationReport':
        """从字典创建实例"""
        measurements: List[Measurement] = [Measurement.from_dict(m) for m in data.get("measurements", [])]
        return cls(
            title=str(data["title"]),
            subject_refs=tuple(data.get("subject_refs", ())),
            parameters=dict(data.get("parameters", {})),
            measurements=tuple(measurements),
            verdict=Verdict(data.get("verdict", "pass")),
            artifact_version=str(data.get("artifact_version", "")),
        )
