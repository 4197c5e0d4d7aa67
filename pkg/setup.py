#!/usr/bin/env python3
"""
setup.py shim for tools that still call it directly.
Metadata lives in pyproject.toml; install with: pip install -e .
"""

from setuptools import find_packages, setup

if __name__ == "__main__":
    setup(
        packages=find_packages(where="src"),
        package_dir={"": "src"},
        package_data={"scss_sim": ["data/table_i/*.txt"]},
        include_package_data=True,
    )
