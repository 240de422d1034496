"""
Services package for splitstep.

This package contains the random streams, exact transition samplers, the
splitting integrator, the model catalog, the lattice SPDE engine and the
convergence harness.
"""
