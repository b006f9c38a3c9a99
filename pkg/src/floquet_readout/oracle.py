"""Brute-force reference propagator.

Integrates the time-dependent Liouville equation directly with an adaptive
Dormand-Prince 5(4) pair (scipy's RK45, 4th-order dense output). The step is
capped at a twentieth of the drive period, which makes the oracle expensive
and therefore restricted to short horizons.

rel_tol targets the global error, not the local one: the per-step tolerance
is rel_tol divided by the square root of the number of capped steps in the
horizon.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from . import linalg
from .errors import CapExceeded, StepUnderflow, TraceDrift
from .hamiltonian import harmonic_hamiltonian
from .liouville import (
    RateMatrices,
    check_density_matrix,
    devectorize,
    lindblad_apply,
    liouville_rhs,
    trace_row,
    vectorize,
)

logger = logging.getLogger(__name__)

DEFAULT_T_CAP = 10.0
MIN_STEP = 1e-9
REL_TOL_RANGE = (1e-12, 1e-4)
STEPS_PER_PERIOD = 20
MIN_STEP_TOL = 1e-13
ATOL_RATIO = 1e-3


@dataclass(frozen=True)
class IntegratorStats:
    accepted: int
    rejected: int
    max_step: float
    nfev: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution: times (ns) and the 4×4 density matrix at each."""

    times: np.ndarray
    states: list[np.ndarray] = field(repr=False)
    stats: IntegratorStats

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        """Diagonal of ρ at each sample time, shape (n, 4)."""
        return np.array([np.diag(rho).real for rho in self.states])


def _max_step(nu: float, t_end: float) -> float:
    if nu == 0:
        return t_end
    return min(t_end, 2 * math.pi / abs(nu) / STEPS_PER_PERIOD)


def step_tolerance(rel_tol: float, t_end: float, max_step: float) -> float:
    """Per-step rtol that keeps the accumulated error near rel_tol."""
    steps = max(1.0, t_end / max_step)
    return max(MIN_STEP_TOL, rel_tol / math.sqrt(steps))


def _check_request(t_end: float, rel_tol: float, cap: float | None) -> None:
    lo, hi = REL_TOL_RANGE
    if not lo <= rel_tol <= hi:
        raise ValueError(f"rel_tol must lie in [{lo}, {hi}], got {rel_tol}")
    if t_end <= 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if cap is not None and t_end > cap:
        raise CapExceeded(f"t_end = {t_end} ns exceeds the oracle cap of {cap} ns")


def _sample_times(t_end: float, times) -> np.ndarray:
    if times is None:
        return np.array([0.0, t_end])
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] < 0 or times[-1] > t_end or np.any(np.diff(times) < 0):
        raise ValueError("Sample times must be sorted within [0, t_end]")
    return times


def _run(fun, y0: np.ndarray, t_end: float, max_step: float, rel_tol: float,
         times: np.ndarray) -> tuple[np.ndarray, IntegratorStats]:
    rtol = step_tolerance(rel_tol, t_end, max_step)
    solver = RK45(fun, 0.0, y0, t_end, max_step=max_step, rtol=rtol, atol=rtol * ATOL_RATIO)
    samples = np.empty((times.size, y0.size), dtype=complex)
    filled = 0
    while filled < times.size and times[filled] <= 0:
        samples[filled] = y0
        filled += 1
    accepted = 0
    largest = 0.0
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise StepUnderflow(f"Integrator failed at t = {solver.t:.6g} ns: {message}")
        accepted += 1
        largest = max(largest, solver.step_size)
        if filled < times.size and times[filled] <= solver.t:
            dense = solver.dense_output()
            while filled < times.size and times[filled] <= solver.t:
                samples[filled] = dense(times[filled])
                filled += 1
        if solver.status == "running" and solver.h_abs < MIN_STEP:
            raise StepUnderflow(f"Required step {solver.h_abs:.3e} ns below {MIN_STEP:.0e} ns at t = {solver.t:.6g}")
    # FSAL: two evaluations to start, six per attempted step
    attempts = (solver.nfev - 2) // 6
    stats = IntegratorStats(accepted, max(0, attempts - accepted), largest, solver.nfev)
    logger.debug("RK45 finished: %s", stats)
    return samples, stats


def _trajectory(samples: np.ndarray, times: np.ndarray, stats: IntegratorStats,
                rel_tol: float) -> Trajectory:
    states = [devectorize(y) for y in samples]
    tol = max(1e-7, 10 * rel_tol)
    drift = float(np.max(np.abs(samples @ trace_row() - 1)))
    asym = linalg.hermiticity_deviation(states[-1])
    if drift > tol or asym > tol:
        raise TraceDrift(f"Oracle trajectory off by trace {drift:.3e}, final Hermiticity {asym:.3e}")
    return Trajectory(times, states, stats)


def integrate(L0, L1, Lm1, nu: float, rho0, t_end: float, rel_tol: float = 1e-8,
              times=None, cap: float | None = DEFAULT_T_CAP) -> Trajectory:
    """Integrate dρ⃗/dt = −i L(t) ρ⃗ with the supermatrix blocks.

    Args:
        L0, L1, Lm1: Liouville blocks shared with the Floquet engine
        nu: Drive difference frequency in rad/ns
        rho0: Initial density matrix
        t_end: Final time in ns
        rel_tol: Target global relative accuracy in [1e-12, 1e-4]; see step_tolerance
        times: Sample times in [0, t_end] (default: 0 and t_end)
        cap: Horizon cap in ns, None to override

    Raises:
        CapExceeded: If t_end exceeds cap
        StepUnderflow: If the step size collapses below 1e-9 ns
        TraceDrift: If the trace drifts along the trajectory or the final state is not Hermitian
        NotHermitian, NotNormalized, ValueError: If rho0 is not a density matrix
    """
    _check_request(t_end, rel_tol, cap)
    sample_times = _sample_times(t_end, times)
    L0, L1, Lm1 = (np.asarray(L, dtype=complex) for L in (L0, L1, Lm1))

    def fun(t, y):
        return liouville_rhs(L0, L1, Lm1, nu, t, y)

    rho0 = check_density_matrix(rho0)
    samples, stats = _run(fun, vectorize(rho0), t_end, _max_step(nu, t_end), rel_tol, sample_times)
    return _trajectory(samples, sample_times, stats, rel_tol)


def commutator_rhs(H0, Hplus, Hminus, nu: float, rates: RateMatrices, t: float, rho) -> np.ndarray:
    """−i[H(t), ρ] + 𝓛(ρ) in Hilbert space."""
    H = harmonic_hamiltonian(H0, Hplus, Hminus, nu, t)
    return -1j * (H @ rho - rho @ H) + lindblad_apply(rates, rho)


def integrate_commutator(H0, Hplus, Hminus, nu: float, rates: RateMatrices, rho0, t_end: float,
                         rel_tol: float = 1e-8, times=None,
                         cap: float | None = DEFAULT_T_CAP) -> Trajectory:
    """Same as integrate, but builds the right-hand side from H⁽⁰⁾, H⁽±¹⁾ and the
    dissipator directly, without supermatrices."""
    _check_request(t_end, rel_tol, cap)
    sample_times = _sample_times(t_end, times)
    H0, Hplus, Hminus = (np.asarray(H, dtype=complex) for H in (H0, Hplus, Hminus))

    def fun(t, y):
        return vectorize(commutator_rhs(H0, Hplus, Hminus, nu, rates, t, devectorize(y)))

    rho0 = check_density_matrix(rho0)
    samples, stats = _run(fun, vectorize(rho0), t_end, _max_step(nu, t_end), rel_tol, sample_times)
    return _trajectory(samples, sample_times, stats, rel_tol)
