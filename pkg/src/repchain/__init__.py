"""Waiting-time and fidelity statistics for nested quantum repeater chains."""

__version__ = "0.1.0"
