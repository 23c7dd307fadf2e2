"""
命令行界面模块
提供 eval / coeffs / verify 三个子命令
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd

from config.config_manager import ConfigManager, get_config_manager
from models.exceptions import ConfigurationError, ThetaComputationError
from models.expansion_types import FormVariant, ZetaRoute
from models.lattice import MIN_ORDER_P, LatticeParameter, TruncationPolicy
from models.verification_report import Verdict, normalize_parameter
from services import elliptic
from services.report_io import FORMATS, write_report
from services.theta_classical import theta_constants, theta_series
from services.theta_expansion import theta4_double_sum, theta_via_expansion
from services.trig_coefficients import (
    coefficients_closed_form, extract_coefficients_oracle, printed_seeds,
)
from services.verification_manager import SUITES, VerificationManager
from services.zeta import zeta
from utils.complex_core import relative_deviation
from utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_CONFIGURATION = 2

THETA_FUNCTIONS = ("theta1", "theta2", "theta3", "theta4")
ELLIPTIC_FUNCTIONS = ("sn", "cn", "dn")
FUNCTIONS = THETA_FUNCTIONS + ELLIPTIC_FUNCTIONS + ("zeta",)

ROUTES: Dict[str, tuple] = {
    "theta": ("classical", "expansion", "expansion_literal", "double_sum"),
    "elliptic": ("theta_ratio", "expansion", "expansion_literal"),
    "zeta": tuple(route.value for route in ZetaRoute),
}
DEFAULT_ROUTES = {"theta": "classical", "elliptic": "theta_ratio", "zeta": ZetaRoute.FOURIER.value}

# 虚部相对实部低于此比例时按实数输出
REAL_OUTPUT_THRESHOLD = 1e-14


@dataclass(frozen=True)
class CliConfig:
    """一次命令的格点、截断与输出设置"""

    lattice: LatticeParameter
    truncation: TruncationPolicy
    order_P: int
    output_format: str = "plain"
    output_path: Optional[str] = None
    route: Optional[str] = None
    force: bool = False

    def __post_init__(self):
        if self.output_format not in FORMATS:
            raise ConfigurationError(f"未知输出格式: {self.output_format}")


def parse_complex(text: str) -> complex:
    """解析 "re[,im]" 形式的复数"""
    parts = [p.strip() for p in str(text).split(",")]
    if not 1 <= len(parts) <= 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"复数格式应为 re[,im]: {text}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"复数格式应为 re[,im]: {text}")
    return complex(values[0], values[1] if len(values) == 2 else 0.0)


def format_number(value: complex) -> str:
    """实数输出 .10f, 否则输出 re±imi"""
    value = complex(value)
    if abs(value.imag) <= REAL_OUTPUT_THRESHOLD * max(1.0, abs(value.real)):
        return f"{value.real + 0.0:.10f}"
    return f"{value.real:.10f}{value.imag:+.10f}i"


def _function_family(function: str) -> str:
    if function in THETA_FUNCTIONS:
        return "theta"
    if function in ELLIPTIC_FUNCTIONS:
        return "elliptic"
    return "zeta"


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    common = argparse.ArgumentParser(add_help=False)
    lattice = common.add_mutually_exclusive_group(required=True)
    lattice.add_argument("--q", type=float, help="实 nome q, 0 ≤ q < 1")
    lattice.add_argument("--tau-im", type=float, dest="tau_im", help="纯虚 τ 的虚部")
    common.add_argument("--P", type=int, dest="P", help="系数表阶数 P")
    common.add_argument("--tol", type=float, help="级数截断的逐项容差")
    common.add_argument("--max-terms", type=int, dest="max_terms", help="级数最大项数")
    common.add_argument("--format", choices=FORMATS, default="plain", dest="output_format")
    common.add_argument("--out", dest="output_path", help="输出文件路径, 缺省写到标准输出")
    common.add_argument("--force", action="store_true", help="允许超出支持的 nome 范围")
    common.add_argument("--config", default="config.yaml", help="YAML 配置文件路径")
    common.add_argument("--log-level", dest="log_level",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="覆盖配置中的日志级别")

    parser = argparse.ArgumentParser(prog="main.py", description="θ函数、椭圆函数与 zeta 函数的求值与交叉验证")
    commands = parser.add_subparsers(dest="command", required=True)

    eval_parser = commands.add_parser("eval", parents=[common], help="求函数值")
    eval_parser.add_argument("function", choices=FUNCTIONS)
    eval_parser.add_argument("argument", type=parse_complex, help="自变量 re[,im]")
    eval_parser.add_argument("--route", help="求值路线")

    coeffs_parser = commands.add_parser("coeffs", parents=[common], help="列出系数 c_2 … c_{2P}")
    coeffs_parser.add_argument("--compare", action="store_true", help="附加反解与印刷种子列")

    verify_parser = commands.add_parser("verify", parents=[common], help="运行验证套件")
    verify_parser.add_argument("suite", choices=SUITES + ("all",))
    return parser


class CLIInterface:
    """命令行界面"""

    def __init__(self, config_manager: ConfigManager):
        self.config_manager = config_manager

    def build_cli_config(self, args: argparse.Namespace) -> CliConfig:
        """由命令行参数与配置文件组装 CliConfig"""
        try:
            base = self.config_manager.get_truncation_policy()
            truncation = TruncationPolicy(
                term_tolerance=args.tol if args.tol is not None else base.term_tolerance,
                max_terms=args.max_terms if args.max_terms is not None else base.max_terms,
                max_order_P=max(args.P, MIN_ORDER_P) if args.P is not None else base.max_order_P,
            )
        except ValueError as e:
            raise ConfigurationError(f"截断参数无效: {e}")

        if args.q is not None:
            if not 0.0 <= args.q < 1.0:
                raise ConfigurationError(f"q 必须满足 0 ≤ q < 1: {args.q}")
            lattice = LatticeParameter.from_nome(args.q)
        else:
            if args.tau_im <= 0:
                raise ConfigurationError(f"--tau-im 必须为正: {args.tau_im}")
            lattice = LatticeParameter.from_tau_im(args.tau_im)

        order_P = args.P if args.P is not None else truncation.max_order_P
        if order_P < 1:
            raise ConfigurationError(f"--P 必须为正整数: {order_P}")
        return CliConfig(lattice=lattice, truncation=truncation, order_P=order_P,
                         output_format=args.output_format, output_path=args.output_path,
                         route=getattr(args, "route", None), force=args.force)

    def run(self, args: argparse.Namespace) -> int:
        """执行子命令并返回退出码"""
        try:
            config = self.build_cli_config(args)
            if args.command == "eval":
                return self.cmd_eval(args.function, args.argument, config)
            if args.command == "coeffs":
                return self.cmd_coeffs(config, args.compare)
            return self.cmd_verify(args.suite, config)
        except ConfigurationError as e:
            print(f"❌ 配置错误: {e}", file=sys.stderr)
            return EXIT_CONFIGURATION
        except ThetaComputationError as e:
            logger.error(f"计算失败: {type(e).__name__}: {e}")
            print(f"❌ 计算失败 ({type(e).__name__}): {e}", file=sys.stderr)
            return EXIT_COMPUTATION

    # 输出

    def _emit(self, config: CliConfig, text: str) -> None:
        if config.output_path:
            with open(config.output_path, "w", encoding="utf-8") as f:
                f.write(text)
            logger.info(f"结果已写入: {config.output_path}")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()

    def _render_frame(self, frame: pd.DataFrame, config: CliConfig) -> str:
        if config.output_format == "json":
            return json.dumps(normalize_parameter(frame.to_dict(orient="records")),
                              ensure_ascii=False, indent=2, allow_nan=False) + "\n"
        if config.output_format == "csv":
            return frame.to_csv(index=False, lineterminator="\n")
        return frame.to_string(index=False) + "\n"

    # eval

    def _evaluator(self, function: str, route: str, config: CliConfig) -> Callable[[complex], complex]:
        lat, policy = config.lattice, config.truncation
        family = _function_family(function)
        if route not in ROUTES[family]:
            raise ConfigurationError(f"{function} 不支持路线 {route}, 可选: {', '.join(ROUTES[family])}")

        def table():
            return coefficients_closed_form(lat, config.order_P, policy)

        if family == "theta":
            which = int(function[-1])
            if route == "classical":
                return lambda v: theta_series(which, v, lat, policy)
            if route == "double_sum":
                if which != 4:
                    raise ConfigurationError("double_sum 路线只适用于 theta4")
                return lambda v: theta4_double_sum(v, lat, policy)
            variant = (FormVariant.PAPER_LITERAL if route == "expansion_literal"
                       else FormVariant.CANONICAL_DERIVED)
            return lambda v: theta_via_expansion(which, v, lat, table(), policy, variant=variant)

        if family == "elliptic":
            if route == "theta_ratio":
                ratio = {"sn": elliptic.sn_theta, "cn": elliptic.cn_theta, "dn": elliptic.dn_theta}[function]
                return lambda u: ratio(elliptic.elliptic_point(u, lat, policy), policy)
            expansion = {"sn": elliptic.sn_expansion, "cn": elliptic.cn_expansion,
                         "dn": elliptic.dn_expansion}[function]
            variant = (FormVariant.PAPER_LITERAL if route == "expansion_literal"
                       else FormVariant.CANONICAL_DERIVED)
            return lambda u: expansion(elliptic.elliptic_point(u, lat, policy), table(), variant, policy)

        zeta_route = ZetaRoute(route)
        needs_table = zeta_route is ZetaRoute.THEOREM6_CANONICAL and not lat.is_degenerate
        return lambda z: zeta(z, lat, zeta_route, table() if needs_table else None, policy)

    def cmd_eval(self, function: str, argument: complex, config: CliConfig) -> int:
        """求单个函数值"""
        route = config.route or DEFAULT_ROUTES[_function_family(function)]
        value = complex(self._evaluator(function, route, config)(argument))
        logger.debug(f"eval {function}({argument}) 路线 {route} = {value}")
        if config.output_format == "plain":
            self._emit(config, format_number(value) + "\n")
            return EXIT_OK
        frame = pd.DataFrame([{
            "function": function,
            "argument": format_number(argument),
            "route": route,
            "q": format_number(config.lattice.nome),
            "value_re": repr(value.real),
            "value_im": repr(value.imag),
        }])
        self._emit(config, self._render_frame(frame, config))
        return EXIT_OK

    # coeffs

    def coefficient_rows(self, config: CliConfig, compare: bool = False) -> List[Dict[str, Any]]:
        """闭式系数表, compare 时附加反解值与印刷种子"""
        lat, policy = config.lattice, config.truncation
        P = config.order_P
        closed = coefficients_closed_form(lat, P, policy)
        rows = [{"order": 2 * p, "c_closed_form": format_number(closed.c(p))} for p in range(1, P + 1)]
        if not compare:
            return rows

        oracle = extract_coefficients_oracle(lat, P, policy)
        seeds = {}
        if not lat.is_degenerate:
            _, seed_c2, seed_c4 = printed_seeds(theta_constants(lat, policy))
            seeds = {1: seed_c2, 2: seed_c4}
        seed_tolerance = self.config_manager.get_tolerance("seed_c2")
        for p, row in enumerate(rows, start=1):
            row["c_oracle"] = format_number(oracle.c(p))
            seed = seeds.get(p)
            row["c_printed_seed"] = "" if seed is None else format_number(seed)
            mismatch = seed is not None and relative_deviation(seed, closed.c(p)) > seed_tolerance
            row["flag"] = "discrepancy" if mismatch else ""
        return rows

    def cmd_coeffs(self, config: CliConfig, compare: bool = False) -> int:
        rows = self.coefficient_rows(config, compare)
        self._emit(config, self._render_frame(pd.DataFrame(rows), config))
        return EXIT_OK

    # verify

    def cmd_verify(self, suite: str, config: CliConfig) -> int:
        """运行验证套件, fail 时返回 1"""
        manager = VerificationManager(self.config_manager, config.lattice, config.force, config.truncation)
        report = manager.run(suite)
        write_report(report, config.output_format, config.output_path)
        if report.verdict is Verdict.FAIL:
            print(f"❌ 验证失败: {suite}, 失败测量 {len(report.failures)} 项", file=sys.stderr)
            return EXIT_COMPUTATION
        mark = "✅" if report.verdict is Verdict.PASS else "⚠️"
        print(f"{mark} 验证完成: {suite}, 判定 {report.verdict.value}", file=sys.stderr)
        return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口"""
    parser = build_parser()
    args = parser.parse_args(argv)

    config_manager = get_config_manager(args.config)
    if not config_manager.is_valid:
        for error in config_manager.errors:
            print(f"❌ 配置错误: {error}", file=sys.stderr)
        return EXIT_CONFIGURATION

    setup_logging(config_manager.get_log_config(), args.log_level)
    return CLIInterface(config_manager).run(args)
