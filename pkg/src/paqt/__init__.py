"""Adaptive quantum state tomography simulator.

Self-guided measurement design driven by simultaneous-perturbation
stochastic approximation, with least-squares and Bayesian particle-filter
post-processing, loss and conditioning diagnostics, and a reproducible
batch harness with a CLI (``paqt``).
"""

__version__ = "0.1.0"
