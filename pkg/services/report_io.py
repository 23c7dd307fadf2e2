"""
验证报告输入输出
JSON/CSV 序列化、反序列化、报告汇总与纯文本格式化
"""

import io
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Union

import pandas as pd

from models.verification_report import (
    Measurement, Verdict, VerificationReport, combine_verdicts,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "name", "route_a", "route_b", "max_abs_deviation", "max_rel_deviation", "n_points",
    "tolerance", "governing", "kind", "verdict",
]

FORMATS = ("json", "csv", "plain")


def _render_float(value: Optional[float]) -> str:
    """最短可往返的十进制表示"""
    if value is None:
        return ""
    return repr(float(value))


def _to_csv(report: VerificationReport) -> str:
    rows = []
    for m in report.measurements:
        rows.append({
            "name": m.name,
            "route_a": m.route_a,
            "route_b": m.route_b,
            "max_abs_deviation": _render_float(m.max_abs_deviation),
            "max_rel_deviation": _render_float(m.max_rel_deviation),
            "n_points": str(m.n_points),
            "tolerance": _render_float(m.tolerance),
            "governing": m.governing,
            "kind": m.kind.value,
            "verdict": m.verdict.value,
        })
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return frame.to_csv(index=False, lineterminator="\n")


def serialize_report(report: VerificationReport, fmt: str = "json") -> bytes:
    """确定性序列化, 相同报告得到相同字节"""
    if fmt == "json":
        text = json.dumps(report.to_dict(), ensure_ascii=False, indent=2, allow_nan=False) + "\n"
    elif fmt == "csv":
        text = _to_csv(report)
    elif fmt == "plain":
        text = format_plain(report)
    else:
        raise ValueError(f"不支持的输出格式: {fmt}")
    return text.encode("utf-8")


def deserialize_report(data: Union[bytes, str], fmt: str = "json",
                       title: str = "") -> VerificationReport:
    """JSON 还原完整报告; CSV 只含测量行, 判定由测量重新计算"""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if fmt == "json":
        return VerificationReport.from_dict(json.loads(text))
    if fmt == "csv":
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"CSV 缺少列: {missing}")
        measurements = [Measurement.from_dict(row) for row in frame.to_dict(orient="records")]
        return VerificationReport.build(title, [], {}, measurements)
    raise ValueError(f"不支持的反序列化格式: {fmt}")


def aggregate_reports(reports: Iterable[VerificationReport], title: str = "all",
                      artifact_version: str = "") -> VerificationReport:
    """多个报告合成一个, 测量名加上来源报告标题作前缀"""
    reports = list(reports)
    subject_refs: List[str] = []
    measurements: List[Measurement] = []
    parameters = {}
    for report in reports:
        for ref in report.subject_refs:
            if ref not in subject_refs:
                subject_refs.append(ref)
        measurements.extend(m.renamed(report.title) for m in report.measurements)
        parameters[report.title] = report.parameters
    verdict = combine_verdicts([r.verdict for r in reports] + [m.verdict for m in measurements])
    return VerificationReport(
        title=title,
        subject_refs=tuple(subject_refs),
        parameters=parameters,
        measurements=tuple(measurements),
        verdict=verdict,
        artifact_version=artifact_version,
    )


def _verdict_mark(verdict: Verdict) -> str:
    return {Verdict.PASS: "✅", Verdict.DOCUMENTED_DISCREPANCY: "⚠️", Verdict.FAIL: "❌"}[verdict]


def format_plain(report: VerificationReport) -> str:
    """面向终端的纯文本摘要"""
    lines = [f"{report.title}: {_verdict_mark(report.verdict)} {report.verdict.value}"]
    if report.artifact_version:
        lines.append(f"版本: {report.artifact_version}")
    for m in report.measurements:
        tolerance = "-" if m.tolerance is None else f"{m.tolerance:.1e}"
        lines.append(
            f"  {_verdict_mark(m.verdict)} {m.name} [{m.kind.value}] "
            f"{m.route_a} vs {m.route_b}: {m.governing_deviation:.3e} ({m.governing}) "
            f"容差 {tolerance}, 点数 {m.n_points}")
    return "\n".join(lines) + "\n"


def write_report(report: VerificationReport, fmt: str = "json",
                 out_path: Optional[str] = None) -> None:
    """写入文件, 未给路径时写到标准输出"""
    payload = serialize_report(report, fmt)
    if out_path:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
        logger.info(f"报告已写入: {path}")
    else:
        sys.stdout.write(payload.decode("utf-8"))
        sys.stdout.flush()
