"""Prescribed-performance tracking control with sliding-mode disturbance observers."""

__version__ = "0.1.0"
