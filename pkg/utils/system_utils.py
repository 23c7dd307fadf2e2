"""
系统工具模块
配置校验与通用工具函数
"""

import logging
import shutil
import time
from pathlib import Path
from typing import Any, Dict, Optional

from models.lattice import MIN_MAX_TERMS, MIN_ORDER_P


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """验证配置"""
    errors = []
    warnings = []

    if not isinstance(config, dict):
        return {'valid': False, 'errors': ["配置文件内容必须是映射"], 'warnings': []}

    # 检查必需配置
    for field in ['system', 'truncation']:
        if field not in config:
            errors.append(f"缺少必需配置字段: {field}")

    if 'system' in config:
        for field in ['name', 'version', 'environment']:
            if field not in (config['system'] or {}):
                errors.append(f"缺少系统配置字段: system.{field}")

    # 截断策略
    truncation = config.get('truncation') or {}
    if 'term_tolerance' in truncation:
        tolerance = truncation['term_tolerance']
        if not _is_number(tolerance) or not 0 < tolerance < 1:
            errors.append(f"truncation.term_tolerance 必须位于 (0, 1): {tolerance}")
    for field, minimum in (('max_terms', MIN_MAX_TERMS), ('max_order_P', MIN_ORDER_P)):
        if field in truncation:
            value = truncation[field]
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                errors.append(f"truncation.{field} 必须为不小于 {minimum} 的整数: {value}")

    # 验证范围
    verification = config.get('verification') or {}
    nome_min = verification.get('nome_min', 0.0)
    nome_max = verification.get('nome_max', 0.5)
    if not (_is_number(nome_min) and _is_number(nome_max)) or not 0 <= nome_min < nome_max < 1:
        errors.append(f"nome 范围无效: [{nome_min}, {nome_max}]")
    elif nome_max > 0.5:
        warnings.append(f"nome_max={nome_max} 超过 0.5, 展开带收窄且截断代价增大")
    if 'max_workers' in verification:
        workers = verification['max_workers']
        if not isinstance(workers, int) or workers < 1:
            errors.append(f"verification.max_workers 必须为正整数: {workers}")

    # 容差
    for name, value in (config.get('tolerances') or {}).items():
        if not _is_number(value) or value < 0:
            errors.append(f"容差 tolerances.{name} 必须为非负数: {value}")

    if 'logging' not in config:
        warnings.append("缺少日志配置, 使用默认值")

    return {
        'valid': len(errors) == 0,
        'errors': errors,
        'warnings': warnings
    }


def backup_file(file_path: str, backup_dir: str = "backup") -> Optional[str]:
    """备份文件"""
    try:
        source_path = Path(file_path)
        if not source_path.exists():
            return None

        backup_path = Path(backup_dir)
        backup_path.mkdir(parents=True, exist_ok=True)

        timestamp = time.strftime("%Y%m%d_%H%M%S")
        backup = backup_path / f"{source_path.stem}_{timestamp}{source_path.suffix}"
        shutil.copy2(source_path, backup)
        return str(backup)
    except OSError as e:
        logging.error(f"备份文件失败: {e}")
        return None


def format_duration(seconds: float) -> str:
    """格式化时间间隔"""
    if seconds < 1:
        return f"{seconds * 1000:.0f}毫秒"
    elif seconds < 60:
        return f"{seconds:.1f}秒"
    elif seconds < 3600:
        return f"{seconds / 60:.1f}分钟"
    else:
        return f"{seconds / 3600:.1f}小时"
