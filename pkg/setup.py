"""
Minimal setup.py for backwards compatibility.
Modern configuration is in pyproject.toml
"""

from setuptools import setup

# Read the pyproject.toml for configuration
setup()
