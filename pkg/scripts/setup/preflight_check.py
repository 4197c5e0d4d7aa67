#!/usr/bin/env python3
"""
Pre-flight check: verifies the environment before running the pipeline.

Usage:
    python scripts/setup/preflight_check.py
"""

import importlib
import shutil
import sys
from pathlib import Path

base_dir = Path(__file__).parent.parent.parent
sys.path.append(str(base_dir / "src"))

REQUIRED_PACKAGES = ["numpy", "scipy", "pandas", "yaml", "tqdm", "dotenv"]


class PreflightChecker:
    """Runs each requirement check and collects errors and warnings."""

    def __init__(self):
        self.errors = []
        self.warnings = []
        self.checks_passed = 0
        self.checks_total = 0

    def check(self, name: str, test_func) -> bool:
        self.checks_total += 1
        print(f"  [{self.checks_total}] {name}... ", end="", flush=True)

        try:
            result = test_func()
        except Exception as e:
            print(f"❌ ({e})")
            self.errors.append(f"{name}: {e}")
            return False
        if result:
            print("✅")
            self.checks_passed += 1
            return True
        print("❌")
        return False

    def check_python_version(self) -> bool:
        version = sys.version_info
        if version >= (3, 8):
            return True
        self.errors.append(f"Python 3.8+ required, found {version.major}.{version.minor}")
        return False

    def check_python_packages(self) -> bool:
        missing = []
        for pkg in REQUIRED_PACKAGES:
            try:
                importlib.import_module(pkg)
            except ImportError:
                missing.append(pkg)

        if missing:
            self.errors.append(f"Missing Python packages: {', '.join(missing)}")
            self.errors.append("  Install with: pip install -r requirements.txt")
            return False
        return True

    def check_package_import(self) -> bool:
        try:
            import scss_sim  # noqa: F401
        except ImportError as e:
            self.errors.append(f"scss_sim not importable ({e}); run pip install -e .")
            return False
        return True

    def check_config(self) -> bool:
        from scss_sim.core.config import cfg, resolve_experiment_config

        if not cfg.config_path.exists():
            self.warnings.append(f"{cfg.config_path} not found, using built-in defaults")
        for name in cfg.profiles:
            resolve_experiment_config(name, cfg)
        return True

    def check_table_i(self) -> bool:
        from scss_sim.phases.tomography import load_table_i

        for label in ("a", "b", "c"):
            result = load_table_i(label)
            if result.max_adjustment > 0.05:
                self.warnings.append(
                    f"Table I ({label}) needed an eigenvalue adjustment of {result.max_adjustment:.3f}"
                )
        return True

    def check_output_dir(self) -> bool:
        from scss_sim.core.config import cfg

        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return True

    def check_disk_space(self) -> bool:
        free_gb = shutil.disk_usage(".").free / (1024**3)
        if free_gb < 1:
            self.warnings.append(f"Low disk space: {free_gb:.1f} GB free")
            return False
        return True


def main():
    print("=" * 80)
    print("PRE-FLIGHT CHECK")
    print("=" * 80)
    print()

    checker = PreflightChecker()

    print("PYTHON:")
    checker.check("Python 3.8+", checker.check_python_version)
    packages_ok = checker.check("Python packages", checker.check_python_packages)
    package_ok = packages_ok and checker.check("scss_sim package", checker.check_package_import)
    print()

    if package_ok:
        print("CONFIGURATION AND DATA:")
        checker.check("config.yml profiles", checker.check_config)
        checker.check("Table I matrices", checker.check_table_i)
        checker.check("Output directory", checker.check_output_dir)
        print()

    print("SYSTEM:")
    checker.check("Disk space", checker.check_disk_space)
    print()

    print("=" * 80)
    print(f"✅ Checks passed: {checker.checks_passed}/{checker.checks_total}")

    if checker.errors:
        print(f"\n❌ ERRORS ({len(checker.errors)}):")
        for error in checker.errors:
            print(f"   • {error}")

    if checker.warnings:
        print(f"\n⚠️  WARNINGS ({len(checker.warnings)}):")
        for warning in checker.warnings:
            print(f"   • {warning}")

    print("\n" + "=" * 80)
    if checker.errors:
        print("❌ Fix the errors above before running the pipeline")
        return 1
    print("Next step:")
    print("  python scripts/pipeline/run_pipeline.py --quick")
    print("=" * 80)
    return 0


if __name__ == "__main__":
    sys.exit(main())
