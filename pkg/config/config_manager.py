"""
配置管理器模块
负责配置文件的加载、验证和管理
"""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from models.lattice import TruncationPolicy
from utils.system_utils import backup_file, validate_config

logger = logging.getLogger(__name__)


DEFAULT_CONFIG: Dict[str, Any] = {
    'system': {
        'name': 'theta-expansion-verifier',
        'version': '1.0.0',
        'environment': 'production'
    },
    'logging': {
        'level': 'INFO',
        'file_path': 'logs/verification.log',
        'max_size_mb': 10,
        'backup_count': 5
    },
    'truncation': {
        'term_tolerance': 1e-16,
        'max_terms': 400,
        'max_order_P': 40
    },
    'verification': {
        'nome_min': 0.0,
        'nome_max': 0.5,
        'max_workers': 4,
        'random_seed': 20240601,
        'theta': {'points_per_theta': 200},
        'coefficients': {'extraction_P': 10, 'system_orders': 6, 'system_step': 1e-4},
        'elliptic': {'grid_points': 100, 'derivative_step': 1e-5},
        'zeta': {'grid_points': 50, 'addition_pairs': 50, 'log_derivative_step': 1e-5},
        'heat': {'sample_points': 20, 'step': 1e-4, 'bvp_points': 201, 'kappa': 1.0,
                 't_final': 0.01, 'dt': 1e-6},
        'nls': {'r': 1.0, 'p_wave': 0.3, 'k': 0.6, 'grid_points': 400, 't_sample': 0.3,
                'plane_wave_k': 1e-6}
    },
    'tolerances': {
        'theta_expansion': 1e-9,
        'coefficient_extraction': 1e-8,
        'coefficient_representations': 1e-13,
        'seed_c2': 1e-10,
        'system_s': 1e-6,
        'theta1_prime': 1e-9,
        'elliptic_algebraic': 1e-11,
        'elliptic_derivative': 1e-8,
        'elliptic_expansion': 1e-9,
        'moduli': 1e-10,
        'hyperbolic_limit': 1e-2,
        'zeta_rational': 1e-10,
        'zeta_canonical': 1e-9,
        'zeta_canonical_vs_rational': 1e-12,
        'zeta_log_derivative': 1e-7,
        'zeta_addition': 1e-10,
        'zeta_period': 1e-12,
        'heat_fd_residual': 1e-5,
        'heat_mode': 1e-10,
        'heat_bvp': 5e-3,
        'nls_residual': 1e-5,
        'nls_separation': 1e4,
        'nls_plane_wave': 1e-6
    }
}


def _lookup(config: Dict[str, Any], key: str) -> Any:
    value = config
    for k in key.split('.'):
        value = value[k]
    return value


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_path: str = "config.yaml"):
        self.config_path = Path(config_path)
        self.config: Dict[str, Any] = {}
        self.errors: List[str] = []
        self.is_valid = self._load_config()

    def _load_config(self) -> bool:
        """加载配置文件"""
        try:
            if not self.config_path.exists():
                self._create_default_config()
                return True

            with open(self.config_path, 'r', encoding='utf-8') as f:
                self.config = yaml.safe_load(f) or {}

            # 验证配置
            validation = validate_config(self.config)
            for warning in validation['warnings']:
                logger.warning(f"配置警告: {warning}")
            if not validation['valid']:
                self.errors = list(validation['errors'])
                for error in self.errors:
                    logger.error(f"配置验证错误: {error}")
                return False
            return True

        except (OSError, yaml.YAMLError) as e:
            self.errors = [f"加载配置文件失败: {e}"]
            logger.error(self.errors[0])
            return False

    def _create_default_config(self) -> None:
        """创建默认配置文件"""
        default_config = copy.deepcopy(DEFAULT_CONFIG)
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, 'w', encoding='utf-8') as f:
            yaml.dump(default_config, f, default_flow_style=False, allow_unicode=True, sort_keys=False)
        self.config = default_config
        logger.info(f"已创建默认配置文件: {self.config_path}")

    def get(self, key: str, default: Any = None) -> Any:
        """获取配置值, 缺失时依次回退到 default 与内置默认值"""
        try:
            return _lookup(self.config, key)
        except (KeyError, TypeError):
            pass
        if default is not None:
            return default
        try:
            return _lookup(DEFAULT_CONFIG, key)
        except (KeyError, TypeError):
            return None

    def set(self, key: str, value: Any) -> bool:
        """设置配置值"""
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value
        return self.save()

    def save(self) -> bool:
        """保存配置到文件"""
        try:
            if self.config_path.exists():
                backup_file(str(self.config_path), str(self.config_path.parent / "backup"))
            with open(self.config_path, 'w', encoding='utf-8') as f:
                yaml.dump(self.config, f, default_flow_style=False, allow_unicode=True, sort_keys=False)
            logger.info(f"配置已保存: {self.config_path}")
            return True
        except OSError as e:
            logger.error(f"保存配置失败: {e}")
            return False

    def get_truncation_policy(self) -> TruncationPolicy:
        """截断策略"""
        return TruncationPolicy(
            term_tolerance=float(self.get('truncation.term_tolerance')),
            max_terms=int(self.get('truncation.max_terms')),
            max_order_P=int(self.get('truncation.max_order_P')),
        )

    def get_tolerance(self, name: str) -> float:
        """按名称获取容差"""
        value = self.get(f'tolerances.{name}')
        if value is None:
            raise KeyError(f"未知容差: {name}")
        return float(value)

    def get_nome_range(self) -> Tuple[float, float]:
        """支持的 nome 范围 (nome_min, nome_max]"""
        return float(self.get('verification.nome_min')), float(self.get('verification.nome_max'))

    def get_max_workers(self) -> int:
        """获取套件并发数"""
        return int(self.get('verification.max_workers'))

    def get_random_seed(self) -> int:
        return int(self.get('verification.random_seed'))

    def get_suite_settings(self, suite: str) -> Dict[str, Any]:
        """某个验证套件的网格与步长设置, 缺失项用内置默认值补齐"""
        settings = copy.deepcopy(DEFAULT_CONFIG['verification'].get(suite, {}))
        settings.update(self.get(f'verification.{suite}', {}) or {})
        return settings

    def get_artifact_version(self) -> str:
        """报告中的版本字符串"""
        return f"{self.get('system.name')} {self.get('system.version')}"

    def get_log_config(self) -> Dict[str, Any]:
        log_config = copy.deepcopy(DEFAULT_CONFIG['logging'])
        log_config.update(self.get('logging', {}) or {})
        return {'logging': log_config}


# 全局配置管理器实例
_config_manager: Optional[ConfigManager] = None


def get_config_manager(config_path: Optional[str] = None) -> ConfigManager:
    """获取全局配置管理器实例, 给出新路径时重新加载"""
    global _config_manager
    if _config_manager is None or (config_path and Path(config_path) != _config_manager.config_path):
        _config_manager = ConfigManager(config_path or "config.yaml")
    return _config_manager
