#!/usr/bin/env python3
"""
Validation script to check if the coarse geometry engine is properly configured
"""

import sys
from pathlib import Path


def check_environment():
    """Check if the environment is properly configured"""
    print("🔍 Checking coarsekit configuration...")
    print("=" * 50)

    issues = []

    # Check if we're in the right directory
    if not Path("coarsekit").is_dir():
        issues.append("❌ coarsekit package not found - please run from project root")
        return False

    if Path(".env").exists():
        print("✅ .env file found")
    else:
        print("⚠️  .env file not found (defaults apply)")

    # Check required Python packages
    try:
        import numpy
        import pandas
        import pydantic
        import dotenv
        print("✅ Required Python packages are installed")
    except ImportError as e:
        issues.append(f"❌ Missing Python package: {e}")
        return False

    from config import Config
    status = Config.validate_config()
    for issue in status['issues']:
        issues.append(f"❌ {issue}")

    config = Config()
    print(f"   Output directory: {config.OUTPUT_DIR}")
    print(f"   Log level: {config.LOG_LEVEL}")
    print(f"   Dyadic depth: {Config.DEPTH}, grid step: {Config.GRID_STEP:g}, tolerance: {Config.TOL:g}")
    print(f"   Epsilon grid: {', '.join(f'{eps:g}' for eps in Config.EPS_GRID)}")
    print(f"   Exhaustive axiom checks up to {status['exhaustive_window_limit']} points")

    print("=" * 50)

    if not issues:
        print("🎉 Configuration check passed!")
        print("\nTo run the axiom suite on a gallery space:")
        print("   python -m coarsekit axioms --space data/metric_z_line.json")
        return True
    else:
        print("❌ Configuration issues found:")
        for issue in issues:
            print(f"   {issue}")
        print("\nRegenerate missing gallery files with:")
        print("   python -m coarsekit gallery --out data")
        return False


if __name__ == "__main__":
    success = check_environment()
    sys.exit(0 if success else 1)
