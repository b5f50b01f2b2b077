"""Simulator and analysis tools for liquid-state NMR quantum computing
on homonucleus two-spin molecules."""

__version__ = "0.1.0"
