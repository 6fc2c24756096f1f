"""Coherent few-particle scattering through a double quantum dot:
open-boundary transport, dot-dot entanglement, and current-driven
entangling/disentangling maps."""

__version__ = "0.1.0"
