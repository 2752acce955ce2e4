"""Ergodic sum-rate gain of uplink NOMA over OMA.

Monte Carlo link-level simulation and closed-form ergodic analysis for
single-antenna, multi-antenna and massive-MIMO base stations, in single-cell
and multi-cell deployments.
"""

__version__ = "0.1.0"
