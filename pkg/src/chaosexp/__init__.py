"""Edgeworth-type expansions for second-chaos statistics, with exact cumulants
and Monte Carlo validation on fractional Gaussian noise examples."""

__version__ = "0.1.0"
