"""Minimum-energy power-state scheduling for multi-domain DNN accelerators."""

__version__ = "0.1.0"
