"""Gaze analysis for two-alternative forced choice experiments"""

__version__ = "0.1.0"
