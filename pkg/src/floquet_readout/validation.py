"""Oracle-equivalence and invariant checks behind `floquet-readout validate`.

Each check returns a CheckResult instead of raising, so one failing check
does not hide the others. Numerical exceptions inside a check count as a
failure and are reported in its detail string.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import floquet, linalg, oracle
from .config import RunConfig
from .errors import ConfigError, FloquetReadoutError
from .hamiltonian import DriveParams, acstark_eigensystem, build_H0
from .liouville import (
    DIM,
    RateMatrices,
    build_L0,
    devectorize,
    dissipator_superop,
    vectorize,
)
from .optics import angular_overlap_integral, angular_overlap_quadrature, branching_ratio
from .readout import assemble_system, truncation_order
from .utils import DRIVE_PRESETS, TWO_PI

logger = logging.getLogger(__name__)

ORACLE_HORIZON = 2.0
ORACLE_TOL = 1e-4
RANDOM_DRIVES = 3
RABI_REL_TOL = 1e-9
EARLY_WINDOW = 2.0
EARLY_POINTS = 200


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _drive_from_preset(name: str, **changes) -> DriveParams:
    d = DRIVE_PRESETS[name]
    p = DriveParams(B_x=d["B_x_T"], g_ex=d["g_ex"], g_hx=d["g_hx"], Omega1p=d["Omega1p_GHz"],
                    Delta1=d["Delta1_GHz"], Omega2p=d["Omega2p_GHz"], Omega2m=d["Omega2m_GHz"])
    return p.replace(**changes)


def random_density_matrix(rng: np.random.Generator, dim: int = DIM) -> np.ndarray:
    """Random full-rank density matrix G G† / Tr."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def jump_dissipator(rates: RateMatrices, rho) -> np.ndarray:
    """𝓛(ρ) from jump operators |b><a| with rate Γ_ab, plus elementwise pure dephasing."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for a in range(DIM):
        for b in range(DIM):
            if a == b or rates.Gamma[a, b] == 0:
                continue
            L = np.zeros((DIM, DIM))
            L[b, a] = 1.0
            LdL = L.T @ L
            out += rates.Gamma[a, b] * (L @ rho @ L.T - 0.5 * (LdL @ rho + rho @ LdL))
    return out - rates.gamma * rho


def _match_multisets(a: np.ndarray, b: np.ndarray) -> float:
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# Checks

def check_branching_endpoint(cfg: RunConfig) -> CheckResult:
    r_b = branching_ratio(_drive_from_preset("paper-branching"))
    return CheckResult("branching-endpoint", abs(r_b - 0.02) <= 0.2 * 0.02, f"r_B = {r_b:.5f}, expected 0.02 ± 20%")


def check_voigt_branching(cfg: RunConfig) -> CheckResult:
    r_b = branching_ratio(_drive_from_preset("paper-branching", Omega1p=0.0))
    return CheckResult("voigt-branching", abs(r_b - 1) <= 1e-9, f"r_B(Omega1p=0) = {r_b:.12f}")


def check_acstark_shift(cfg: RunConfig) -> CheckResult:
    p = DriveParams(Omega1p=200.0, Delta1=2000.0)
    ac = acstark_eigensystem(p)
    values = np.sort(linalg.eig_hermitian(build_H0(p))[0])
    delta, omega = TWO_PI * p.Delta1, TWO_PI * p.Omega1p
    closed = math.sqrt(delta**2 + omega**2) - delta
    exact = ac.exact_energies[2] - ac.exact_energies[0]
    # dressed z+ pair sits at ±W/2, the bare z- pair at ±Δ/2 inside it
    numeric = (values[3] - values[0]) - delta
    first = ac.firstorder_energies[2] - ac.firstorder_energies[0]
    exact_ok = abs(exact - closed) <= 1e-10 * closed and abs(numeric - closed) <= 1e-9 * closed
    first_ok = abs(first - exact) / exact <= (p.Omega1p / p.Delta1) ** 2
    return CheckResult(
        "acstark-shift", exact_ok and first_ok,
        f"exact {exact / TWO_PI:.6f} GHz, first-order {first / TWO_PI:.6f} GHz",
    )


def _oracle_deviation(system, M: int, cond_threshold: float, rel_tol: float, target: str) -> float:
    times = np.linspace(0.0, ORACLE_HORIZON, 21)
    F = floquet.build_LF(*system.blocks, M, cond_threshold)
    rho0 = system.initial[target]
    expected = floquet.propagate_batch(F, rho0, times)
    trajectory = oracle.integrate(*system.blocks, rho0, ORACLE_HORIZON, rel_tol=rel_tol, times=times)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(expected, trajectory.states))


def random_drive(rng: np.random.Generator) -> tuple[DriveParams, RateMatrices]:
    """Pseudo-Faraday drive and rates drawn around the read-out preset, Ω₂/ν well below 0.01."""
    phases = np.exp(2j * math.pi * rng.uniform(size=2))
    drive = DriveParams(
        B_x=rng.uniform(0.05, 0.15), g_ex=rng.uniform(0.2, 0.5), g_hx=rng.uniform(0.2, 0.5),
        Omega1p=rng.uniform(150.0, 250.0), Delta1=rng.uniform(1500.0, 2500.0),
        Omega2p=rng.uniform(0.1, 1.0) * phases[0], Omega2m=rng.uniform(0.1, 1.0) * phases[1],
    )
    return drive, RateMatrices.preset("paper-sim").scaled(rng.uniform(0.5, 2.0))


def check_oracle_equivalence(cfg: RunConfig) -> CheckResult:
    engine = cfg.engine
    rng = np.random.default_rng(engine.seed)
    cases = [(cfg.drive, cfg.rates)] + [random_drive(rng) for _ in range(RANDOM_DRIVES)]
    worst = 0.0
    for drive, rates in cases:
        system = assemble_system(drive, rates, cfg.readout.target, engine.rates_angular)
        M = truncation_order(system, engine, cfg.readout.target)
        deviation = _oracle_deviation(system, M, engine.cond_threshold, engine.ode_rel_tol, cfg.readout.target)
        logger.debug("Oracle deviation %.3e at M=%d", deviation, M)
        worst = max(worst, deviation)
    return CheckResult("floquet-vs-ode", worst <= ORACLE_TOL,
                       f"max |rho_F - rho_ODE| = {worst:.3e} over {len(cases)} drives")


def readout_times(T_max: float, grid: int) -> np.ndarray:
    """Read-out grid merged with a dense grid over the first nanoseconds."""
    early = np.linspace(0.0, min(EARLY_WINDOW, T_max), EARLY_POINTS)
    return np.union1d(np.linspace(0.0, T_max, grid), early)


def check_dephasing(cfg: RunConfig) -> CheckResult:
    margin = cfg.rates.dephasing_margin
    return CheckResult("dephasing-cp", cfg.rates.is_completely_positive(),
                       f"dephasing margin {margin:.3e} ns^-1")


def check_trajectory_invariants(cfg: RunConfig) -> CheckResult:
    readout, engine = cfg.readout, cfg.engine
    system = assemble_system(readout.drive, readout.rates, readout.target, engine.rates_angular)
    M = truncation_order(system, engine, readout.target)
    F = floquet.build_LF(*system.blocks, M, engine.cond_threshold)
    times = readout_times(readout.T_max, readout.grid)
    trace = herm = 0.0
    smallest = math.inf
    for key in system.initial:
        for rho in floquet.propagate_batch(F, system.initial[key], times, raw=True):
            trace = max(trace, abs(complex(np.trace(rho)) - 1))
            herm = max(herm, linalg.hermiticity_deviation(rho))
            smallest = min(smallest, float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]))
    passed = trace <= 1e-8 and herm <= 1e-8 and smallest >= -1e-6
    return CheckResult("trajectory-invariants", passed,
                       f"|Tr-1| {trace:.2e}, Hermiticity {herm:.2e}, min eigenvalue {smallest:.2e} (M={M})")


def check_lindblad_form(cfg: RunConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.engine.seed)
    rates = RateMatrices.preset("paper-sim")
    D = dissipator_superop(rates)
    worst = 0.0
    for _ in range(100):
        rho = random_density_matrix(rng)
        worst = max(worst, float(np.max(np.abs(devectorize(D @ vectorize(rho)) - jump_dissipator(rates, rho)))))
    return CheckResult("lindblad-form", worst <= 1e-12, f"max deviation {worst:.2e} on 100 states")


def check_closed_spectrum(cfg: RunConfig) -> CheckResult:
    H0 = build_H0(cfg.drive)
    L0 = build_L0(H0, RateMatrices.zero())
    values, _, _ = linalg.eig_general(-1j * L0, cond_threshold=math.inf)
    energies = linalg.eig_hermitian(H0)[0]
    expected = np.array([-1j * (a - b) for a in energies for b in energies])
    worst = _match_multisets(values, expected)
    return CheckResult("closed-spectrum", worst <= 1e-9, f"max eigenvalue mismatch {worst:.2e}")


def check_angular_integral(cfg: RunConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.engine.seed)
    worst = 0.0
    for _ in range(10):
        u = rng.normal(size=3) + 1j * rng.normal(size=3)
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        exact = angular_overlap_integral(u, v)
        estimate = angular_overlap_quadrature(u, v, samples=1_000_000, rng=rng)
        scale = 4 * math.pi / 3 * np.linalg.norm(u) * np.linalg.norm(v)
        worst = max(worst, abs(estimate - exact) / scale)
    return CheckResult("angular-integral", worst <= 0.01, f"max relative error {worst:.2e} on 10 pairs")


def check_rabi(cfg: RunConfig) -> CheckResult:
    omega = 0.5
    p = DriveParams(Omega2m=omega, Delta2=0.0)
    system = assemble_system(p, RateMatrices.zero())
    period = 1.0 / omega
    times = np.linspace(0.0, period, 201)
    rho0 = np.zeros((DIM, DIM), dtype=complex)
    rho0[1, 1] = 1.0
    rel_tol = min(cfg.engine.ode_rel_tol, RABI_REL_TOL)
    trajectory = oracle.integrate(*system.blocks, rho0, period, rel_tol=rel_tol, times=times)
    upper = trajectory.populations()[:, 3]
    expected = np.sin(TWO_PI * omega * times / 2) ** 2
    contrast = float(upper.max() - upper.min())
    error = float(np.max(np.abs(upper - expected)))
    return CheckResult("rabi", contrast >= 0.999 and error <= 1e-6,
                       f"contrast {contrast:.6f}, max deviation from sin^2 {error:.2e}")


def check_truncation(cfg: RunConfig) -> CheckResult:
    readout, engine = cfg.readout, cfg.engine
    system = assemble_system(readout.drive, readout.rates, readout.target, engine.rates_angular)
    rho0 = system.initial[readout.target]
    orders = {floquet.converge_truncation(*system.blocks, rho0, engine.probe_times, engine.trunc_tol,
                                          engine.M_max, engine.cond_threshold) for _ in range(10)}
    if len(orders) != 1:
        return CheckResult("truncation", False, f"unstable orders {sorted(orders)}")
    M = orders.pop()
    states = [np.array(floquet.propagate_batch(floquet.build_LF(*system.blocks, m, engine.cond_threshold),
                                               rho0, engine.probe_times, raw=True)) for m in (M, M + 1)]
    change = float(np.max(np.abs(states[0] - states[1])))
    return CheckResult("truncation", change <= engine.trunc_tol, f"M = {M}, change to M+1 {change:.2e}")


CHECKS: dict[str, Callable[[RunConfig], CheckResult]] = {
    "branching-endpoint": check_branching_endpoint,
    "voigt-branching": check_voigt_branching,
    "acstark-shift": check_acstark_shift,
    "floquet-vs-ode": check_oracle_equivalence,
    "dephasing-cp": check_dephasing,
    "trajectory-invariants": check_trajectory_invariants,
    "lindblad-form": check_lindblad_form,
    "closed-spectrum": check_closed_spectrum,
    "angular-integral": check_angular_integral,
    "rabi": check_rabi,
    "truncation": check_truncation,
}


def run_validation(cfg: RunConfig, names=None) -> list[CheckResult]:
    """Run the named checks (all by default) and log each outcome.

    Raises:
        ConfigError: If a requested check does not exist
    """
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"Unknown checks: {unknown}. Must be among {list(CHECKS)}")
    results = []
    for name in names:
        try:
            result = CHECKS[name](cfg)
        except FloquetReadoutError as e:
            result = CheckResult(name, False, f"{type(e).__name__}: {e}")
        log = logger.info if result.passed else logger.error
        log("%s %s: %s", "PASS" if result.passed else "FAIL", result.name, result.detail)
        results.append(result)
    return results
