"""
θ函数展开验证工具主程序
命令行入口: eval / coeffs / verify
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from ui.cli_interface import main


if __name__ == "__main__":
    sys.exit(main())
