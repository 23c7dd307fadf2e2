"""
配置与日志测试
"""

import copy
import logging
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import yaml

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config.config_manager import DEFAULT_CONFIG, ConfigManager, get_config_manager
from utils.logger import PerformanceLogger, VerificationLogger, setup_logging
from utils.system_utils import format_duration, validate_config


class TestConfigManager(unittest.TestCase):
    """配置管理器测试"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config_file = os.path.join(self.temp_dir, 'test_config.yaml')

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def _write(self, config):
        with open(self.config_file, 'w', encoding='utf-8') as f:
            yaml.dump(config, f, allow_unicode=True)

    def test_default_config_creation(self):
        """测试默认配置创建"""
        config_manager = ConfigManager(self.config_file)
        self.assertTrue(os.path.exists(self.config_file))
        self.assertTrue(config_manager.is_valid)
        self.assertEqual(config_manager.get('truncation.max_terms'), 400)
        self.assertEqual(config_manager.get('system.name'), 'theta-expansion-verifier')

    def test_get_falls_back_to_defaults(self):
        """测试缺失键回退到内置默认值"""
        self._write({'system': {'name': 'x', 'version': '2', 'environment': 'test'},
                     'truncation': {'max_terms': 200}})
        config_manager = ConfigManager(self.config_file)
        self.assertTrue(config_manager.is_valid)
        self.assertEqual(config_manager.get('truncation.max_terms'), 200)
        self.assertEqual(config_manager.get('truncation.max_order_P'), 40)
        self.assertEqual(config_manager.get('no.such.key', 'fallback'), 'fallback')
        self.assertIsNone(config_manager.get('no.such.key'))
        self.assertEqual(config_manager.get_artifact_version(), 'x 2')

    def test_typed_getters(self):
        """测试类型化取值"""
        config_manager = ConfigManager(self.config_file)
        policy = config_manager.get_truncation_policy()
        self.assertEqual(policy.max_order_P, 40)
        self.assertEqual(policy.term_tolerance, 1e-16)
        self.assertEqual(config_manager.get_nome_range(), (0.0, 0.5))
        self.assertEqual(config_manager.get_tolerance('seed_c2'), 1e-10)
        self.assertEqual(config_manager.get_random_seed(), 20240601)
        self.assertEqual(config_manager.get_max_workers(), 4)
        with self.assertRaises(KeyError):
            config_manager.get_tolerance('no_such_tolerance')

    def test_suite_settings_merge(self):
        """测试套件设置与默认值合并"""
        config = dict(DEFAULT_CONFIG)
        config['verification'] = {'nome_min': 0.0, 'nome_max': 0.5, 'heat': {'kappa': 2.0}}
        self._write(config)
        settings = ConfigManager(self.config_file).get_suite_settings('heat')
        self.assertEqual(settings['kappa'], 2.0)
        self.assertEqual(settings['bvp_points'], 201)

    def test_invalid_config(self):
        """测试无效配置被拒绝"""
        config = dict(DEFAULT_CONFIG)
        config['verification'] = {'nome_min': 0.3, 'nome_max': 0.2}
        self._write(config)
        config_manager = ConfigManager(self.config_file)
        self.assertFalse(config_manager.is_valid)
        self.assertTrue(any('nome' in e for e in config_manager.errors))

    def test_unparsable_yaml(self):
        """测试无法解析的 YAML"""
        with open(self.config_file, 'w', encoding='utf-8') as f:
            f.write("system: [unclosed\n")
        config_manager = ConfigManager(self.config_file)
        self.assertFalse(config_manager.is_valid)
        self.assertEqual(len(config_manager.errors), 1)

    def test_set_and_backup(self):
        """测试设置配置值并备份原文件"""
        config_manager = ConfigManager(self.config_file)
        self.assertTrue(config_manager.set('verification.max_workers', 2))
        self.assertEqual(ConfigManager(self.config_file).get_max_workers(), 2)
        backups = list(Path(self.temp_dir, 'backup').glob('test_config_*.yaml'))
        self.assertEqual(len(backups), 1)

    def test_global_manager_reloads_on_new_path(self):
        """测试全局实例在路径变化时重新加载"""
        first = get_config_manager(self.config_file)
        self.assertIs(get_config_manager(self.config_file), first)
        other = os.path.join(self.temp_dir, 'other.yaml')
        self.assertIsNot(get_config_manager(other), first)


class TestValidateConfig(unittest.TestCase):
    """配置校验测试"""

    def test_default_config_valid(self):
        result = validate_config(DEFAULT_CONFIG)
        self.assertTrue(result['valid'])
        self.assertEqual(result['errors'], [])

    def test_missing_sections(self):
        result = validate_config({'logging': {}})
        self.assertFalse(result['valid'])
        self.assertIn("缺少必需配置字段: system", result['errors'])
        self.assertIn("缺少必需配置字段: truncation", result['errors'])

    def test_field_checks(self):
        config = {
            'system': {'name': 'x', 'version': '1', 'environment': 'test'},
            'truncation': {'term_tolerance': -1, 'max_terms': 0},
            'verification': {'max_workers': 0},
            'tolerances': {'seed_c2': -1e-3},
        }
        errors = validate_config(config)['errors']
        self.assertEqual(len(errors), 4)

    def test_truncation_bounds(self):
        for field, value in (('max_terms', 5), ('max_order_P', 2), ('term_tolerance', 0.0),
                             ('term_tolerance', 1.5)):
            config = copy.deepcopy(DEFAULT_CONFIG)
            config['truncation'][field] = value
            result = validate_config(config)
            self.assertFalse(result['valid'], f"{field}={value}")
            self.assertIn(f"truncation.{field}", result['errors'][0])
        config = copy.deepcopy(DEFAULT_CONFIG)
        config['truncation'].update({'max_terms': 8, 'max_order_P': 4})
        self.assertTrue(validate_config(config)['valid'])

    def test_wide_nome_range_warns(self):
        config = dict(DEFAULT_CONFIG)
        config['verification'] = {'nome_min': 0.0, 'nome_max': 0.8}
        result = validate_config(config)
        self.assertTrue(result['valid'])
        self.assertEqual(len(result['warnings']), 1)

    def test_format_duration(self):
        self.assertEqual(format_duration(0.25), "250毫秒")
        self.assertEqual(format_duration(12.34), "12.3秒")
        self.assertEqual(format_duration(90), "1.5分钟")


class TestLogging(unittest.TestCase):
    """日志测试"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            handler.close()
            root.removeHandler(handler)
        shutil.rmtree(self.temp_dir)

    def test_setup_logging_writes_file(self):
        """测试日志写入轮转文件"""
        log_file = os.path.join(self.temp_dir, 'logs', 'run.log')
        setup_logging({'logging': {'level': 'INFO', 'file_path': log_file}}, level_override='debug')
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        logging.getLogger('tests').info("hello")
        for handler in logging.getLogger().handlers:
            handler.flush()
        with open(log_file, encoding='utf-8') as f:
            self.assertIn("hello", f.read())

    def test_verification_logger_events(self):
        """测试验证事件日志"""
        events = VerificationLogger('tests.events')
        with self.assertLogs('tests.events', level='DEBUG') as captured:
            events.suite_started('theta', 0.1)
            events.discrepancy_found('coefficients', 'seed_c4', 2.5)
            events.measurement_recorded('seed_c2', 1e-12, 1e-10)
            events.suite_finished('theta', 'pass', 6)
        self.assertEqual(len(captured.records), 4)
        self.assertEqual(captured.records[2].levelname, 'DEBUG')
        self.assertEqual(captured.records[1].levelname, 'WARNING')

    def test_performance_logger(self):
        performance = PerformanceLogger('tests')
        timing = performance.start_timing('noop')
        self.assertGreaterEqual(performance.end_timing(timing), 0.0)


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(TestConfigManager))
    suite.addTests(loader.loadTestsFromTestCase(TestValidateConfig))
    suite.addTests(loader.loadTestsFromTestCase(TestLogging))
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_all_tests()
    sys.exit(0 if success else 1)
