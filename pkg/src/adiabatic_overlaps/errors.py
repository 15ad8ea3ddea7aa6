"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AdiabaticError(Exception):
    """Base class for every error raised by this package."""


class ContractError(AdiabaticError, ValueError):
    """Inputs violate a function precondition (dimension, basis, normalization)."""


class CapacityError(AdiabaticError, ValueError):
    """Requested system size lies outside the supported range."""


class DegeneracyError(AdiabaticError):
    """The ground state of H(lambda) is (numerically) degenerate."""

    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


class StiffnessError(AdiabaticError):
    """Adaptive step size underflowed."""

    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


class UndefinedComplementError(AdiabaticError):
    """The Q-projected component of a state vanishes, so D is undefined."""


class SingularBoundError(AdiabaticError, ValueError):
    """A bound was requested at a point where it diverges (C = 0 with s < 1)."""


class ConfigError(AdiabaticError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
