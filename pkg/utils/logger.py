"""
日志工具
提供统一的日志配置和管理功能
"""

import logging
import logging.handlers
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional

from utils.system_utils import format_duration


def setup_logging(config: Dict[str, Any], level_override: Optional[str] = None):
    """设置日志配置, 控制台输出走 stderr, stdout 只留给命令行结果"""
    log_config = config.get('logging', {})

    # 日志级别
    level_name = (level_override or log_config.get('level', 'INFO')).upper()
    log_level = getattr(logging, level_name, logging.INFO)

    # 日志文件路径
    log_file = log_config.get('file_path', 'logs/verification.log')
    log_path = Path(log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # 清除现有的处理器
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # 文件处理器 - 使用轮转文件
    max_size_mb = log_config.get('max_size_mb', 10)
    backup_count = log_config.get('backup_count', 5)
    file_handler = logging.handlers.RotatingFileHandler(
        log_file,
        maxBytes=max_size_mb * 1024 * 1024,
        backupCount=backup_count,
        encoding='utf-8'
    )
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    logging.info(f"日志系统已初始化，级别: {level_name}, 文件: {log_file}")


class VerificationLogger:
    """验证流程专用日志记录器"""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)

    def suite_started(self, suite: str, nome: Any):
        self.logger.info(f"套件开始 - {suite}, q={nome}")

    def suite_finished(self, suite: str, verdict: str, n_measurements: int):
        """记录套件结束"""
        self.logger.info(f"套件结束 - {suite}, 判定: {verdict}, 测量数: {n_measurements}")

    def suite_failed(self, suite: str, error: str):
        self.logger.error(f"套件异常 - {suite}, 错误: {error}")

    def measurement_recorded(self, name: str, deviation: float, tolerance: Any):
        self.logger.debug(f"测量 - {name}: 偏差 {deviation:.3e}, 容差 {tolerance}")

    def discrepancy_found(self, report: str, name: str, deviation: float):
        """记录印刷形式的已知差异"""
        self.logger.warning(f"记录差异 - 报告: {report}, 测量: {name}, 偏差: {deviation:.3e}")

    def route_fallback(self, context: str, counts: Dict[str, int]):
        self.logger.info(f"求和路线 - {context}: {counts}")


class PerformanceLogger:
    """性能日志记录器"""

    def __init__(self, name: str):
        self.logger = logging.getLogger(f"performance.{name}")

    def start_timing(self, operation: str):
        """开始计时"""
        return {
            'operation': operation,
            'start_time': time.perf_counter()
        }

    def end_timing(self, timing_info: dict):
        """结束计时并记录"""
        duration = time.perf_counter() - timing_info['start_time']
        self.logger.info(f"性能计时 - 操作: {timing_info['operation']}, 耗时: {format_duration(duration)}")
        return duration
