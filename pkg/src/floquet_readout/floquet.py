"""Floquet-Liouville propagation of the periodically driven open system.

Expanding ρ⃗(t) = Σ_m e^{imνt} ρ⃗_m(t) turns the periodic generator into the
time-independent block-tridiagonal supermatrix

    L_F = I ⊗ L⁽⁰⁾ + ν F_z ⊗ I + F₊ ⊗ L⁽¹⁾ + F₋ ⊗ L⁽⁻¹⁾

on 2M+1 Fourier copies of Liouville space, ordered m = +M … −M from the top.
The initial state sits in the m = 0 slot; ρ(t) is recovered by summing the
harmonics with their phases e^{imνt}.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import IllConditioned, NoConvergence, Singular, TraceDrift
from .liouville import LIOUVILLE_DIM, check_density_matrix, devectorize, vectorize

logger = logging.getLogger(__name__)

TRACE_GUARD = 1e-6
DEFAULT_M_MAX = 6
DEFAULT_TRUNC_TOL = 1e-8
DEFAULT_PROBE_TIMES = (1.0, 10.0, 100.0)

SPECTRAL = "spectral"
EXPM = "expm"


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    """Truncated L_F with its propagation cache.

    With route "spectral" the cache holds the eigenvalues, right eigenvectors
    and LU factors of the eigenvector matrix; with route "expm" only L_F is
    used. Instances are read-only and may be shared between threads.
    """

    M: int
    nu: float
    LF: np.ndarray
    route: str
    values: np.ndarray | None = None
    vectors: np.ndarray | None = None
    lu_factors: tuple | None = None
    condition: float | None = None

    @property
    def harmonics(self) -> np.ndarray:
        """Fourier index m of each diagonal block, top to bottom."""
        return np.arange(self.M, -self.M - 1, -1)

    @property
    def dim(self) -> int:
        return self.LF.shape[0]

    def block(self, row: int, col: int) -> np.ndarray:
        """16×16 block at block-row/column position (0-based from the top)."""
        n = LIOUVILLE_DIM
        return self.LF[row * n:(row + 1) * n, col * n:(col + 1) * n]


def _freeze(*arrays):
    for a in arrays:
        if isinstance(a, np.ndarray):
            a.flags.writeable = False


def build_LF(L0, L1, Lm1, nu: float, M: int, cond_threshold: float = linalg.DEFAULT_COND_THRESHOLD,
             factorize: bool = True) -> FloquetOperator:
    """Assemble the truncated Floquet-Liouville supermatrix.

    Args:
        L0, L1, Lm1: 16×16 Liouville blocks
        nu: Drive difference frequency in rad/ns
        M: Truncation order, harmonics −M … +M
        cond_threshold: Largest acceptable eigenvector condition number
        factorize: Diagonalize L_F for spectral propagation

    Returns:
        FloquetOperator; falls back to the expm route if the eigenvector
        matrix is ill-conditioned
    """
    if M < 0:
        raise ValueError(f"Truncation order must be >= 0, got {M}")
    for name, block in (("L0", L0), ("L1", L1), ("Lm1", Lm1)):
        if np.shape(block) != (LIOUVILLE_DIM, LIOUVILLE_DIM):
            raise ValueError(f"{name} must be {LIOUVILLE_DIM}x{LIOUVILLE_DIM}, got {np.shape(block)}")
    size = 2 * M + 1
    harmonics = np.arange(M, -M - 1, -1)
    LF = (
        linalg.kron(np.eye(size), L0)
        + linalg.kron(np.diag(harmonics * float(nu)), np.eye(LIOUVILLE_DIM))
        + linalg.kron(np.eye(size, k=1), L1)
        + linalg.kron(np.eye(size, k=-1), Lm1)
    )
    if not factorize:
        _freeze(LF)
        return FloquetOperator(M, float(nu), LF, EXPM)
    try:
        values, vectors, condition = linalg.eig_general(LF, cond_threshold)
        factors = linalg.lu(vectors)
    except (IllConditioned, NoConvergence, Singular) as e:
        logger.warning("Spectral factorization of L_F (M=%d) rejected, using expm: %s", M, e)
        _freeze(LF)
        return FloquetOperator(M, float(nu), LF, EXPM)
    logger.debug("Factorized L_F: M=%d, dim=%d, cond(V)=%.3e", M, LF.shape[0], condition)
    _freeze(LF, values, vectors)
    return FloquetOperator(M, float(nu), LF, SPECTRAL, values, vectors, factors, condition)


def embed(F: FloquetOperator, rho0) -> np.ndarray:
    """Initial Floquet supervector |m=0> ⊗ ρ⃗(0)."""
    x0 = np.zeros(F.dim, dtype=complex)
    x0[F.M * LIOUVILLE_DIM:(F.M + 1) * LIOUVILLE_DIM] = vectorize(rho0)
    return x0


def project(F: FloquetOperator, x: np.ndarray, t: float) -> np.ndarray:
    """Σ_m e^{imνt} ρ⃗_m: collapse the Fourier space at time t."""
    blocks = x.reshape(2 * F.M + 1, LIOUVILLE_DIM)
    phases = np.exp(1j * F.harmonics * F.nu * t)
    return devectorize(phases @ blocks)


def _evolve(F: FloquetOperator, x0: np.ndarray, coeffs: np.ndarray | None, t: float) -> np.ndarray:
    if F.route == SPECTRAL:
        return F.vectors @ (np.exp(-1j * F.values * t) * coeffs)
    return linalg.expm(-1j * t * F.LF) @ x0


def _finish(rho: np.ndarray, t: float) -> np.ndarray:
    rho = (rho + rho.conj().T) / 2
    trace = complex(np.trace(rho))
    if abs(trace - 1) > TRACE_GUARD:
        raise TraceDrift(f"|Tr rho - 1| = {abs(trace - 1):.3e} at t = {t} ns")
    return rho / trace.real


def propagate_batch(F: FloquetOperator, rho0, times, raw: bool = False) -> list[np.ndarray]:
    """Propagate ρ0 to every time in `times`, sharing one spectral solve.

    Args:
        F: Floquet operator
        rho0: Initial 4×4 density matrix at t = 0
        times: Ascending non-negative times in ns
        raw: Skip re-Hermitization and trace renormalization

    Raises:
        NotHermitian, NotNormalized, ValueError: If rho0 is not a density matrix
        TraceDrift: If |Tr ρ(t) − 1| > 1e-6 (never raised when raw)
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be a 1-D sequence")
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be non-negative and sorted ascending")
    rho0 = check_density_matrix(rho0)
    x0 = embed(F, rho0)
    coeffs = linalg.lu_apply(F.lu_factors, x0) if F.route == SPECTRAL else None
    states = []
    for t in times:
        if t == 0:
            states.append(rho0.copy())
            continue
        rho = project(F, _evolve(F, x0, coeffs, t), t)
        states.append(rho if raw else _finish(rho, t))
    return states


def propagate(F: FloquetOperator, rho0, t: float, raw: bool = False) -> np.ndarray:
    """ρ(t) from ρ(0) = rho0; see propagate_batch."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return propagate_batch(F, rho0, [t], raw=raw)[0]


def converge_truncation(L0, L1, Lm1, nu: float, rho0, probe_times=DEFAULT_PROBE_TIMES,
                        tol: float = DEFAULT_TRUNC_TOL, M_max: int = DEFAULT_M_MAX,
                        cond_threshold: float = linalg.DEFAULT_COND_THRESHOLD) -> int:
    """Smallest M whose probe states differ from order M+1 by at most tol.

    Raises:
        NoConvergence: If no M ≤ M_max meets the tolerance
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    probe_times = sorted(float(t) for t in probe_times)
    previous = None
    for M in range(M_max + 2):
        F = build_LF(L0, L1, Lm1, nu, M, cond_threshold)
        current = np.array(propagate_batch(F, rho0, probe_times, raw=True))
        if previous is not None:
            change = float(np.max(np.abs(current - previous)))
            logger.debug("Truncation M=%d vs M=%d: max change %.3e", M - 1, M, change)
            if change <= tol:
                logger.info("Floquet truncation converged at M=%d (change %.2e <= %.1e)", M - 1, change, tol)
                return M - 1
        previous = current
    raise NoConvergence(f"Floquet truncation did not converge to {tol:.1e} within M_max={M_max}")
