"""Experiment driver: commands, acceptance checks and rate fits."""

from .main import main

__all__ = ["main"]
