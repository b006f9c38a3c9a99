"""Dense complex linear algebra with the error semantics the engine relies on.

Thin wrappers over scipy.linalg: each one checks its preconditions, turns
LAPACK failures into package exceptions and guarantees finite output.
"""

import logging
import math
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import IllConditioned, NoConvergence, NotHermitian, Overflow, Singular

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
DEFAULT_COND_THRESHOLD = 1e8
PIVOT_TOL = 1e-13
# Padé-13 norm bound of the scaling-and-squaring algorithm
PADE13_THETA = 5.371920351148152
DEFAULT_MAX_SCALING = 64


def _as_square(a, name: str = "a") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise Overflow(f"{what} produced non-finite entries")
    return x


def hermiticity_deviation(a) -> float:
    """Return max|a − a†|."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def kron(a, b) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is a[i, j]·b."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def eig_hermitian(a) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a Hermitian matrix.

    Args:
        a: Square complex matrix with max|a − a†| ≤ 1e-10·max|a|

    Returns:
        Tuple of (ascending real eigenvalues, orthonormal eigenvector columns)

    Raises:
        NotHermitian: If the Hermiticity precondition fails
        NoConvergence: If LAPACK does not converge
    """
    a = _as_square(a)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    deviation = hermiticity_deviation(a)
    if deviation > HERMITIAN_TOL * scale:
        raise NotHermitian(f"Matrix deviates from Hermitian by {deviation:.3e} (scale {scale:.3e})")
    try:
        values, vectors = sla.eigh(a)
    except sla.LinAlgError as e:
        raise NoConvergence(f"Hermitian eigensolver failed: {e}") from e
    return values, vectors


def eig_general(a, cond_threshold: float = DEFAULT_COND_THRESHOLD) -> tuple[np.ndarray, np.ndarray, float]:
    """Diagonalize a general complex matrix.

    Eigenvalues come back in LAPACK order, which is deterministic for identical
    input.

    Args:
        a: Square complex matrix
        cond_threshold: Largest acceptable 2-norm condition number of V

    Returns:
        Tuple of (eigenvalues, right eigenvector columns V, cond(V))

    Raises:
        NoConvergence: If LAPACK does not converge
        IllConditioned: If cond(V) exceeds cond_threshold; carries the raw decomposition
    """
    a = _as_square(a)
    try:
        values, vectors = sla.eig(a)
    except sla.LinAlgError as e:
        raise NoConvergence(f"General eigensolver failed: {e}") from e
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
        raise NoConvergence("General eigensolver returned non-finite values")
    condition = float(np.linalg.cond(vectors))
    if not math.isfinite(condition) or condition > cond_threshold:
        raise IllConditioned(
            f"Eigenvector matrix condition {condition:.3e} exceeds {cond_threshold:.1e}",
            values=values, vectors=vectors, condition=condition,
        )
    return values, vectors, condition


def expm(a, max_scaling: int = DEFAULT_MAX_SCALING) -> np.ndarray:
    """Matrix exponential by Padé-13 scaling and squaring.

    Raises:
        Overflow: If the scaling exponent ⌈log2(‖a‖₁/θ₁₃)⌉ exceeds max_scaling
            or the result is not finite
    """
    a = _as_square(a)
    norm = float(np.linalg.norm(a, 1)) if a.size else 0.0
    if not math.isfinite(norm):
        raise Overflow("Matrix norm is not finite")
    scaling = max(0, math.ceil(math.log2(norm / PADE13_THETA))) if norm > PADE13_THETA else 0
    if scaling > max_scaling:
        raise Overflow(f"Scaling exponent {scaling} exceeds cap {max_scaling} (‖a‖₁ = {norm:.3e})")
    return _check_finite(sla.expm(a), "expm")


def lu(a) -> tuple[np.ndarray, np.ndarray]:
    """Pivoted LU factorization with a singularity guard.

    Raises:
        Singular: If any pivot magnitude is below 1e-13·‖a‖∞
    """
    a = _as_square(a)
    norm = float(np.linalg.norm(a, np.inf)) if a.size else 0.0
    if norm == 0.0:
        raise Singular("Matrix is identically zero")
    # singular input only warns in LAPACK; the pivot check below decides
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu_, piv = sla.lu_factor(a, check_finite=True)
    smallest = float(np.min(np.abs(np.diag(lu_))))
    if smallest < PIVOT_TOL * norm:
        raise Singular(f"Pivot {smallest:.3e} below {PIVOT_TOL:.0e}·‖a‖ = {PIVOT_TOL * norm:.3e}")
    return lu_, piv


def lu_apply(factors: tuple[np.ndarray, np.ndarray], b) -> np.ndarray:
    """Solve with factors from lu()."""
    return sla.lu_solve(factors, np.asarray(b, dtype=complex))


def solve(a, b) -> np.ndarray:
    """Solve a·x = b by pivoted LU.

    Args:
        a: Square complex matrix
        b: Right-hand side with b.shape[0] == a.shape[0]

    Raises:
        Singular: If a pivot falls below 1e-13·‖a‖
    """
    a = _as_square(a)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"Right-hand side has {b.shape[0]} rows, expected {a.shape[0]}")
    return lu_apply(lu(a), b)
