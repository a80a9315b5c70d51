import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.environ[name]) if name in os.environ else default
    except ValueError:
        return default


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.environ[name]) if name in os.environ else default
    except ValueError:
        return default


# 数值常量（单位约定 ħ = μ = 1）
K_MIN = _env_float('SQWELL_K_MIN', 1e-6)

# 扫描与峰值细化
GRID_DENSITY = _env_int('SQWELL_GRID_DENSITY', 4096)
GRID_MAX_DOUBLINGS = _env_int('SQWELL_GRID_MAX_DOUBLINGS', 3)
GOLDEN_TOL = _env_float('SQWELL_GOLDEN_TOL', 1e-10)

# 求积（Gauss-Legendre 复合求积）
QUAD_ORDER = _env_int('SQWELL_QUAD_ORDER', 16)
QUAD_TOL = _env_float('SQWELL_QUAD_TOL', 1e-12)
QUAD_MAX_DOUBLINGS = _env_int('SQWELL_QUAD_MAX_DOUBLINGS', 10)

# 相位展开
UNWRAP_MAX_REFINE = _env_int('SQWELL_UNWRAP_MAX_REFINE', 60)

# 极点搜索
RESCALE_IM_QA = _env_float('SQWELL_RESCALE_IM_QA', 30.0)

# 实验与输出
FIGURE_POINTS = _env_int('SQWELL_FIGURE_POINTS', 8192)
SWEEP_POINTS_PER_ALPHA = _env_int('SQWELL_SWEEP_POINTS', 4096)
MAX_WORKERS = _env_int('SQWELL_MAX_WORKERS', 4)
DEFAULT_DIGITS = _env_int('SQWELL_DIGITS', 8)

# 日志
LOG_DIR = os.environ.get('SQWELL_LOG_DIR', os.path.join(os.path.abspath(os.path.dirname(__file__)), '../logs'))
LOG_TO_FILE = os.environ.get('SQWELL_LOG_TO_FILE', '1') not in ('0', 'false', 'False', '')
LOG_PRINT_SCREEN = os.environ.get('SQWELL_LOG_PRINT_SCREEN', '0') not in ('0', 'false', 'False', '')
