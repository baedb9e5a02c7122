"""
FLP Emergence Simulator - Core Module
"""

from src.__version__ import __author__, __version__

__all__ = ["__author__", "__version__"]
