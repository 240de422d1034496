"""
splitstep - boundary-preserving splitting-step integrators.

This package simulates Ito SDEs and lattice SPDEs whose solutions live on
[0, inf) by splitting each time step into an exact stochastic transition
(sampled through non-central chi-square variates) and a deterministic drift
step. It also ships a convergence-order harness and a CLI that writes
plot-ready data files.
"""

__version__ = "0.1.0"
