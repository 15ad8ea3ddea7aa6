"""Adiabatic fidelity, ground-state overlaps and their bounds for driven many-body Hamiltonians."""

__version__ = "0.1.0"
