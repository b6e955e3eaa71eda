"""PPSZ analysis toolkit: algorithm, critical clause trees, biased placements and constants audit."""

__version__ = "0.1.0"
