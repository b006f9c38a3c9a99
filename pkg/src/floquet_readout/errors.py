"""Exception hierarchy.

Input problems subclass ValueError so callers that only know the standard
library still catch them. Numerical failures share NumericalError; the CLI maps
ConfigError to exit code 1, NumericalError to 2 and validation failures to 3.
"""

from __future__ import annotations

from typing import Any


class FloquetReadoutError(Exception):
    """Base class for every error raised by this package."""


# Numerical failures

class NumericalError(FloquetReadoutError):
    """A numerical routine could not produce a trustworthy result."""


class NoConvergence(NumericalError):
    """An iterative procedure hit its iteration limit without converging."""


class IllConditioned(NumericalError):
    """Eigenvector matrix too ill-conditioned for spectral propagation.

    The raw decomposition is kept so the caller can inspect it before
    falling back to the matrix exponential.
    """

    def __init__(self, message: str, values: Any = None, vectors: Any = None,
                 condition: float = float("inf")):
        super().__init__(message)
        self.values = values
        self.vectors = vectors
        self.condition = condition


class Overflow(NumericalError):
    """Matrix norm beyond the scaling-and-squaring cap."""


class Singular(NumericalError):
    """LU pivot below the singularity threshold."""


class TraceDrift(NumericalError):
    """Propagated density matrix lost normalization beyond the hard guard."""


class StepUnderflow(NumericalError):
    """Adaptive integrator step fell below the minimum."""


class DivisionByZero(NumericalError, ZeroDivisionError):
    """Denominator of a physical ratio vanished."""


# Input errors

class NotHermitian(FloquetReadoutError, ValueError):
    """Matrix expected Hermitian is not."""


class NotNormalized(FloquetReadoutError, ValueError):
    """State vector or density matrix is not normalized."""


class DegenerateDetuning(FloquetReadoutError, ValueError):
    """Perturbative expansion requested at zero detuning."""


class AmbiguousLabeling(FloquetReadoutError, ValueError):
    """Eigenstates cannot be labeled unambiguously by basis overlap.

    Carries the raw eigensystem so callers may proceed without labels.
    """

    def __init__(self, message: str, values: Any = None, vectors: Any = None):
        super().__init__(message)
        self.values = values
        self.vectors = vectors


class CapExceeded(FloquetReadoutError, ValueError):
    """Requested horizon exceeds the configured cap."""


class OutOfRange(FloquetReadoutError, ValueError):
    """Argument outside the sampled domain."""


# Configuration

class ConfigError(FloquetReadoutError, ValueError):
    """Configuration could not be turned into a RunConfig."""


class ParseError(ConfigError):
    """Malformed configuration text or unknown key."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


class ValidationError(ConfigError):
    """Configuration value violates a parameter invariant."""

    def __init__(self, message: str, invariant: str | None = None):
        super().__init__(message)
        self.invariant = invariant
