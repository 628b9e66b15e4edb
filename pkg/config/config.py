import os
from fractions import Fraction
from dotenv import load_dotenv
from typing import Dict, Any, List

load_dotenv()


def _parse_eps_grid(raw: str) -> List[float]:
    values = []
    for item in raw.split(','):
        item = item.strip()
        if item:
            values.append(float(Fraction(item)))
    return values


class Config:
    """Engine configuration settings"""

    def _get_setting(self, key: str, default: str = '') -> str:
        """Get setting from the environment (after .env has been merged)"""
        env_value = os.getenv(key, '')
        if env_value:
            return env_value

        return default

    # Logging
    @property
    def LOG_LEVEL(self) -> str:
        return self._get_setting('COARSEKIT_LOG_LEVEL', 'WARNING').upper()

    @property
    def OUTPUT_DIR(self) -> str:
        return self._get_setting('COARSEKIT_OUTPUT_DIR', 'out')

    # Window semantics
    DEFAULT_CUTOFF = float(os.getenv('COARSEKIT_CUTOFF', 30))
    FLOAT_TOL = float(os.getenv('COARSEKIT_FLOAT_TOL', 1e-9))

    # Constructions
    DEPTH = int(os.getenv('COARSEKIT_DEPTH', 6))
    GRID_STEP = float(Fraction(os.getenv('COARSEKIT_GRID_STEP', '1/32')))
    TOL = float(os.getenv('COARSEKIT_TOL', 1e-6))
    EPS_GRID = _parse_eps_grid(os.getenv('COARSEKIT_EPS_GRID', '0.5,0.25,0.1,0.05'))
    MAX_BREAKPOINTS = int(os.getenv('COARSEKIT_MAX_BREAKPOINTS', 256))

    # Checking budgets
    SEED = int(os.getenv('COARSEKIT_SEED', 20240601))
    CHECK_BUDGET = int(os.getenv('COARSEKIT_CHECK_BUDGET', 2 ** 20))
    SAMPLES = int(os.getenv('COARSEKIT_SAMPLES', 2000))
    SEARCH_BUDGET = int(os.getenv('COARSEKIT_SEARCH_BUDGET', 2 ** 12))
    CN_EXHAUSTIVE = int(os.getenv('COARSEKIT_CN_EXHAUSTIVE', 12))

    # Data Paths
    DATA_DIR = os.getenv('COARSEKIT_DATA_DIR', 'data')

    # Gallery files
    METRIC_Z_LINE_FILE = os.path.join(DATA_DIR, 'metric_z_line.json')
    FINITE_NONNORMAL_FILE = os.path.join(DATA_DIR, 'finite_nonnormal_topology.json')
    TWO_BLOCK_LINE_FILE = os.path.join(DATA_DIR, 'two_block_line.json')
    WEDGE_FILE = os.path.join(DATA_DIR, 'halfplane_wedge.json')
    TWO_BLOCK_SUBSETS_FILE = os.path.join(DATA_DIR, 'two_block_subsets.json')
    TWO_BLOCK_FUNCTION_FILE = os.path.join(DATA_DIR, 'two_block_function.json')
    GALLERY_FILES = [
        METRIC_Z_LINE_FILE,
        FINITE_NONNORMAL_FILE,
        TWO_BLOCK_LINE_FILE,
        WEDGE_FILE,
        TWO_BLOCK_SUBSETS_FILE,
        TWO_BLOCK_FUNCTION_FILE,
    ]

    AXIOMS = ['N0', 'N1', 'N2', 'N3', 'N4']
    DERIVED_AXIOMS = ["N0'", "N2'", "N3'"]

    @classmethod
    def validate_config(cls) -> Dict[str, Any]:
        """Validate configuration and return status"""
        issues = []

        if not 1 <= cls.DEPTH <= 16:
            issues.append(f"Dyadic depth out of range: {cls.DEPTH}")
        if not 0 < cls.GRID_STEP <= 0.5:
            issues.append(f"Grid step out of range: {cls.GRID_STEP}")
        if cls.TOL <= 0:
            issues.append(f"Tolerance must be positive: {cls.TOL}")
        if not cls.EPS_GRID or any(not 0 < eps <= 1 for eps in cls.EPS_GRID):
            issues.append(f"Epsilon grid must be non-empty inside (0, 1]: {cls.EPS_GRID}")
        if cls.CHECK_BUDGET < 1 or cls.SAMPLES < 1:
            issues.append("Check budget and sample count must be positive")

        for file_path in cls.GALLERY_FILES:
            if not os.path.exists(file_path):
                issues.append(f"Gallery file missing: {file_path}")

        return {
            'valid': len(issues) == 0,
            'issues': issues,
            'exhaustive_window_limit': cls.CHECK_BUDGET.bit_length() // 2,
        }
