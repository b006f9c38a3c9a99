"""Spin read-out protocol and the datasets behind each figure.

The electron is prepared in one of the two electron-like dressed states and
the near-resonant laser drives the target cycling transition. The photon
emission rate R(t), the mean detected photon number D(T) and the detection
probability p(D) of each preparation give the fidelity
F(T) = (1 − p_dark + p_bright)/2, maximized over the detection window T.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import minimize_scalar

from . import floquet
from .errors import NotHermitian, OutOfRange, ValidationError
from .hamiltonian import (
    TARGETS,
    DriveParams,
    StateLabel,
    adiabatic_timescale,
    build_H0,
    build_H1,
    pseudo_faraday_eigensystem,
    relative_frequencies,
    resolve_drive,
)
from .liouville import RateMatrices, build_L0, build_L1
from .optics import beta_coupling, branching_ratio
from .utils import ENGINE_DEFAULTS, READOUT_DEFAULTS

logger = logging.getLogger(__name__)

PROB_MODELS = ("poisson", "capped-linear")
MIN_GRID = 16
GRID_GUARD = 1e-3
T_STAR_XTOL = 1e-4


@dataclass(frozen=True)
class EngineOptions:
    """Numerical knobs; M of None selects the truncation order automatically."""

    M: int | None = None
    M_max: int = ENGINE_DEFAULTS["M_max"]
    trunc_tol: float = ENGINE_DEFAULTS["trunc_tol"]
    probe_times: tuple[float, ...] = tuple(ENGINE_DEFAULTS["probe_times_ns"])
    rates_angular: bool = ENGINE_DEFAULTS["rates_angular"]
    cond_threshold: float = ENGINE_DEFAULTS["cond_threshold"]
    ode_rel_tol: float = ENGINE_DEFAULTS["ode_rel_tol"]
    seed: int = ENGINE_DEFAULTS["seed"]
    threads: int = 1

    def __post_init__(self):
        if self.M is not None and self.M < 0:
            raise ValidationError(f"M must be >= 0, got {self.M}", invariant="M >= 0")
        if self.M_max < 0:
            raise ValidationError(f"M_max must be >= 0, got {self.M_max}", invariant="M_max >= 0")
        if self.trunc_tol <= 0:
            raise ValidationError(f"trunc_tol must be > 0, got {self.trunc_tol}", invariant="trunc_tol > 0")
        if not self.probe_times or any(t <= 0 for t in self.probe_times):
            raise ValidationError("probe_times must be non-empty and positive", invariant="probe_times > 0")
        if self.cond_threshold <= 1:
            raise ValidationError(f"cond_threshold must be > 1, got {self.cond_threshold}",
                                  invariant="cond_threshold > 1")
        if not 1e-12 <= self.ode_rel_tol <= 1e-4:
            raise ValidationError(f"ode_rel_tol must lie in [1e-12, 1e-4], got {self.ode_rel_tol}",
                                  invariant="ode_rel_tol range")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}", invariant="threads >= 1")
        object.__setattr__(self, "probe_times", tuple(float(t) for t in self.probe_times))


@dataclass(frozen=True)
class ReadoutConfig:
    drive: DriveParams
    rates: RateMatrices
    epsilon: float = READOUT_DEFAULTS["epsilon"]
    T_max: float = READOUT_DEFAULTS["T_max_ns"]
    grid: int = READOUT_DEFAULTS["grid"]
    target: str = READOUT_DEFAULTS["target"]
    prob_model: str = READOUT_DEFAULTS["prob_model"]
    engine: EngineOptions = field(default_factory=EngineOptions)

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValidationError(f"epsilon must lie in [0, 1], got {self.epsilon}", invariant="epsilon in [0, 1]")
        if not self.T_max > 0:
            raise ValidationError(f"T_max must be > 0, got {self.T_max}", invariant="T_max > 0")
        if self.grid < MIN_GRID:
            raise ValidationError(f"grid must be >= {MIN_GRID}, got {self.grid}", invariant=f"grid >= {MIN_GRID}")
        if self.target not in TARGETS:
            raise ValidationError(f"target must be one of {list(TARGETS)}, got {self.target!r}",
                                  invariant="target")
        if self.prob_model not in PROB_MODELS:
            raise ValidationError(f"prob_model must be one of {list(PROB_MODELS)}, got {self.prob_model!r}",
                                  invariant="prob_model")


@dataclass(frozen=True, eq=False)
class ReadoutResult:
    """Curves for both preparations; '_minus'/'_plus' name the initial electron-like state."""

    times: np.ndarray
    R_minus: np.ndarray
    R_plus: np.ndarray
    D_minus: np.ndarray
    D_plus: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray
    F: np.ndarray
    T_star: float
    F_star: float
    D_star: float
    target: str
    Delta2: float
    M: int
    route: str
    adiabatic_timescale: float
    grid_converged: bool

    def summary(self) -> dict:
        return {
            "target": self.target,
            "T_star_ns": self.T_star,
            "F_star": self.F_star,
            "D_star": self.D_star,
            "Delta2_GHz": self.Delta2,
            "M": self.M,
            "route": self.route,
            "adiabatic_timescale_ns": self.adiabatic_timescale,
            "grid_converged": self.grid_converged,
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-labeled table plus scalar summary values."""

    name: str
    columns: tuple[str, ...]
    rows: np.ndarray
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


# Photon statistics

def emission_rate(rho, rates: RateMatrices) -> float:
    """R = Γ₃₁ρ₃₃ + Γ₄₂ρ₄₄ in ns⁻¹."""
    rho = np.asarray(rho)
    value = rates.Gamma[2, 0] * rho[2, 2] + rates.Gamma[3, 1] * rho[3, 3]
    if abs(value.imag) > 1e-10:
        raise NotHermitian(f"Trion populations have imaginary part {value.imag:.3e}")
    return float(value.real)


def detected_photons(times, rates_series, epsilon: float, T: float) -> float:
    """D(T) = ε∫₀ᵀ R dt by the trapezoid rule, interpolating R linearly at T.

    Raises:
        OutOfRange: If T lies outside the sampled times
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(rates_series, dtype=float)
    if not times[0] <= T <= times[-1]:
        raise OutOfRange(f"T = {T} ns outside sampled range [{times[0]}, {times[-1]}]")
    k = int(np.searchsorted(times, T, side="right"))
    head = trapezoid(series[:k], times[:k]) if k > 1 else 0.0
    if k < times.size and T > times[k - 1]:
        r_T = np.interp(T, times, series)
        head += 0.5 * (series[k - 1] + r_T) * (T - times[k - 1])
    return float(epsilon * head)


def detected_photon_curve(times, rates_series, epsilon: float) -> np.ndarray:
    """D at every sample time."""
    return epsilon * cumulative_trapezoid(rates_series, times, initial=0.0)


def detection_probability(D, model: str = "poisson"):
    """Probability of detecting at least one photon given mean count D.

    "poisson" uses 1 − e^{−D}; "capped-linear" uses min(D, 1).
    """
    D = np.asarray(D, dtype=float)
    if np.any(D < 0):
        raise ValueError("Mean photon number must be >= 0")
    if model == "poisson":
        p = -np.expm1(-D)
    elif model == "capped-linear":
        p = np.minimum(D, 1.0)
    else:
        raise ValueError(f"Invalid probability model: {model}. Must be one of {list(PROB_MODELS)}")
    return float(p) if p.ndim == 0 else p


def fidelity(p_plus, p_minus):
    """F = (1 − p_plus + p_minus)/2, with z- the bright state."""
    p_plus = np.asarray(p_plus, dtype=float)
    p_minus = np.asarray(p_minus, dtype=float)
    if np.any((p_plus < 0) | (p_plus > 1) | (p_minus < 0) | (p_minus > 1)):
        raise ValueError("Detection probabilities must lie in [0, 1]")
    F = (1 - p_plus + p_minus) / 2
    return float(F) if F.ndim == 0 else F


# Protocol

def _fidelity_curve(target: str, p_minus, p_plus):
    return fidelity(p_plus, p_minus) if target == "z-" else fidelity(p_minus, p_plus)


def _optimal_window(times, R_minus, R_plus, cfg: ReadoutConfig, F: np.ndarray) -> float:
    """Grid argmax of F refined by golden-section search inside its two neighbours.

    F carries a drive-period ripple of a few 1e-6, so the search stays in the
    bracket around the grid argmax and keeps the grid point unless it improves on it.
    """
    i = int(np.argmax(F))
    if i == 0 or i == len(times) - 1:
        return float(times[i])

    def score(T):
        T = min(max(T, times[0]), times[-1])
        p_minus = detection_probability(detected_photons(times, R_minus, cfg.epsilon, T), cfg.prob_model)
        p_plus = detection_probability(detected_photons(times, R_plus, cfg.epsilon, T), cfg.prob_model)
        return -_fidelity_curve(cfg.target, p_minus, p_plus)

    a, b, c = times[i - 1], times[i], times[i + 1]
    if not (score(b) < score(a) and score(b) < score(c)):
        return float(b)
    result = minimize_scalar(score, bracket=(a, b, c), method="golden", options={"xtol": T_STAR_XTOL})
    T = float(min(max(result.x, times[0]), times[-1]))
    return T if score(T) <= score(b) else float(b)


def _grid_guard(times, R, epsilon: float, T: float) -> bool:
    fine = detected_photons(times, R, epsilon, T)
    coarse_times, coarse_R = times[::2], R[::2]
    if T > coarse_times[-1]:
        coarse_times = np.append(coarse_times, times[-1])
        coarse_R = np.append(coarse_R, R[-1])
    coarse = detected_photons(coarse_times, coarse_R, epsilon, T)
    if fine == 0:
        return coarse == 0
    deviation = abs(fine - coarse) / abs(fine)
    if deviation > GRID_GUARD:
        logger.warning("D(T*) changes by %.2e under grid halving; the time grid may be too coarse", deviation)
        return False
    return True


def initial_states(p: DriveParams) -> dict[str, np.ndarray]:
    """Projectors onto the electron-like dressed states, keyed 'z-' and 'z+'."""
    es = pseudo_faraday_eigensystem(p)
    return {"z-": es.projector(StateLabel.E_ZM), "z+": es.projector(StateLabel.E_ZP)}


@dataclass(frozen=True, eq=False)
class DrivenSystem:
    """Everything the propagators need for one resolved drive and rate set."""

    drive: DriveParams
    rates: RateMatrices
    H0: np.ndarray
    Hplus: np.ndarray
    Hminus: np.ndarray
    nu: float
    L0: np.ndarray
    L1: np.ndarray
    Lm1: np.ndarray
    initial: dict[str, np.ndarray]

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        return self.L0, self.L1, self.Lm1, self.nu


def assemble_system(drive: DriveParams, rates: RateMatrices, target: str = "z-",
                    rates_angular: bool = False) -> DrivenSystem:
    """Resolve Δ₂ for the target and build Hamiltonians, Liouville blocks and initial states."""
    rates = rates.as_angular() if rates_angular else rates
    drive = resolve_drive(drive, target)
    H0 = build_H0(drive)
    Hplus, Hminus, nu = build_H1(drive)
    return DrivenSystem(drive, rates, H0, Hplus, Hminus, nu,
                        build_L0(H0, rates), build_L1(Hplus), build_L1(Hminus), initial_states(drive))


def truncation_order(system: DrivenSystem, engine: EngineOptions, target: str = "z-") -> int:
    """Configured M, or the converged one when M is automatic."""
    if engine.M is not None:
        return engine.M
    return floquet.converge_truncation(*system.blocks, system.initial[target], engine.probe_times,
                                       engine.trunc_tol, engine.M_max, engine.cond_threshold)


def run_readout(cfg: ReadoutConfig) -> ReadoutResult:
    """Simulate the read-out of both electron-like states.

    Raises:
        AmbiguousLabeling: Propagated from the eigensystem labeling
        NoConvergence: If automatic truncation does not converge
        TraceDrift: If propagation loses normalization
    """
    engine = cfg.engine
    system = assemble_system(cfg.drive, cfg.rates, cfg.target, engine.rates_angular)
    drive, rates = system.drive, system.rates
    M = truncation_order(system, engine, cfg.target)
    F_op = floquet.build_LF(*system.blocks, M, engine.cond_threshold)
    logger.info("Read-out: target %s, Delta2 = %.6f GHz, M = %d, route %s",
                cfg.target, drive.Delta2, M, F_op.route)

    times = np.linspace(0.0, cfg.T_max, cfg.grid)
    with ThreadPoolExecutor(max_workers=min(engine.threads, 2)) as pool:
        futures = {key: pool.submit(floquet.propagate_batch, F_op, rho, times)
                   for key, rho in system.initial.items()}
        states = {key: future.result() for key, future in futures.items()}

    R_minus = np.array([emission_rate(rho, rates) for rho in states["z-"]])
    R_plus = np.array([emission_rate(rho, rates) for rho in states["z+"]])
    D_minus = detected_photon_curve(times, R_minus, cfg.epsilon)
    D_plus = detected_photon_curve(times, R_plus, cfg.epsilon)
    p_minus = detection_probability(D_minus, cfg.prob_model)
    p_plus = detection_probability(D_plus, cfg.prob_model)
    F = _fidelity_curve(cfg.target, p_minus, p_plus)

    T_star = _optimal_window(times, R_minus, R_plus, cfg, F)
    D_star_minus = detected_photons(times, R_minus, cfg.epsilon, T_star)
    D_star_plus = detected_photons(times, R_plus, cfg.epsilon, T_star)
    F_star = _fidelity_curve(cfg.target, detection_probability(D_star_minus, cfg.prob_model),
                             detection_probability(D_star_plus, cfg.prob_model))
    bright = R_minus if cfg.target == "z-" else R_plus
    D_star = D_star_minus if cfg.target == "z-" else D_star_plus
    converged = _grid_guard(times, bright, cfg.epsilon, T_star)

    return ReadoutResult(
        times=times, R_minus=R_minus, R_plus=R_plus, D_minus=D_minus, D_plus=D_plus,
        p_minus=np.asarray(p_minus), p_plus=np.asarray(p_plus), F=np.asarray(F),
        T_star=T_star, F_star=float(F_star), D_star=D_star, target=cfg.target,
        Delta2=float(drive.Delta2), M=M, route=F_op.route,
        adiabatic_timescale=adiabatic_timescale(drive), grid_converged=converged,
    )


# Figure datasets

def _manifold_sorted(p: DriveParams) -> tuple[np.ndarray, object]:
    es = pseudo_faraday_eigensystem(p)
    freqs = relative_frequencies(es, p)
    electron = sorted(f for f, label in zip(freqs, es.labels) if not label.is_trion)
    trion = sorted(f for f, label in zip(freqs, es.labels) if label.is_trion)
    return np.array(electron + trion), es


FIG2_COLUMNS = ("stage", "B_x_T", "Omega1p_GHz", "e_low_GHz", "e_high_GHz", "t_low_GHz", "t_high_GHz")


def fig2(p: DriveParams, B_grid=None, Omega_grid=None) -> Dataset:
    """Zeeman splitting versus B_x (no drive), then AC Stark splitting versus Ω₁₊ at zero field.

    Trion frequencies are relative to the zero-field resonance ω₀.
    """
    B_grid = np.linspace(0.0, 0.5, 51) if B_grid is None else np.asarray(B_grid, dtype=float)
    Omega_grid = np.linspace(0.0, 200.0, 51) if Omega_grid is None else np.asarray(Omega_grid, dtype=float)
    rows = []
    for B in B_grid:
        freqs, _ = _manifold_sorted(p.replace(B_x=B, Omega1p=0.0))
        rows.append([1, B, 0.0, *freqs])
    for omega in Omega_grid:
        freqs, _ = _manifold_sorted(p.replace(B_x=0.0, Omega1p=omega))
        rows.append([2, 0.0, omega, *freqs])
    rows = np.array(rows, dtype=float)
    last = rows[-1]
    summary = {"z+_transition_shift_GHz": float(last[6] - last[3])}
    return Dataset("fig2", FIG2_COLUMNS, rows, summary)


FIG3_COLUMNS = FIG2_COLUMNS + ("e_low_zplus_weight", "t_high_zplus_weight")


def fig3(p: DriveParams, B_grid=None, Omega_grid=None) -> Dataset:
    """Voigt splitting up to p.B_x, then the pseudo-Faraday transition versus Ω₁₊ at p.B_x.

    The weight columns give the |e,z+> character of the lower electron-like
    state and the |t,z+> character of the upper trion-like state.
    """
    B_grid = np.linspace(0.0, p.B_x, 21) if B_grid is None else np.asarray(B_grid, dtype=float)
    Omega_grid = np.linspace(0.0, 200.0, 51) if Omega_grid is None else np.asarray(Omega_grid, dtype=float)
    rows = []
    for stage, params in (
        *((1, p.replace(B_x=B, Omega1p=0.0)) for B in B_grid),
        *((2, p.replace(Omega1p=omega)) for omega in Omega_grid),
    ):
        freqs, es = _manifold_sorted(params)
        electron = [k for k, label in enumerate(es.labels) if not label.is_trion]
        trion = [k for k, label in enumerate(es.labels) if label.is_trion]
        e_low = min(electron, key=lambda k: es.values[k])
        t_high = max(trion, key=lambda k: es.values[k])
        rows.append([stage, params.B_x, params.Omega1p, *freqs,
                     abs(es.vectors[0, e_low]) ** 2, abs(es.vectors[2, t_high]) ** 2])
    return Dataset("fig3", FIG3_COLUMNS, np.array(rows, dtype=float))


FIG4_COLUMNS = ("Omega1p_GHz", "r_B", "beta_abs")


def fig4(p: DriveParams, Omega_grid=None) -> Dataset:
    """Branching ratio and |β| versus Ω₁₊ at fixed B_x and Δ₁."""
    Omega_grid = np.linspace(0.0, 200.0, 51) if Omega_grid is None else np.asarray(Omega_grid, dtype=float)
    rows = []
    for omega in Omega_grid:
        params = p.replace(Omega1p=omega)
        es = pseudo_faraday_eigensystem(params)
        rows.append([omega, branching_ratio(params, es=es), abs(beta_coupling(params, es=es))])
    rows = np.array(rows, dtype=float)
    return Dataset("fig4", FIG4_COLUMNS, rows, {"r_B_endpoint": float(rows[-1, 1])})


FIG5_COLUMNS = ("T_ns", "R_minus", "R_plus", "D_minus", "D_plus", "F")


def fig5(cfg: ReadoutConfig) -> Dataset:
    """Read-out time series: emission rates, detected photons and fidelity."""
    result = run_readout(cfg)
    rows = np.column_stack([result.times, result.R_minus, result.R_plus,
                            result.D_minus, result.D_plus, result.F])
    return Dataset("fig5", FIG5_COLUMNS, rows, result.summary())


SWEEP_COLUMNS = ("r_B", "F_star", "T_star", "D_star", "M")


def _sweep_point(cfg: ReadoutConfig) -> list[float]:
    result = run_readout(cfg)
    return [branching_ratio(cfg.drive), result.F_star, result.T_star, result.D_star, result.M]


def parameter_sweep(key: str, values, make_config: Callable[[float], ReadoutConfig],
                    threads: int = 1) -> Dataset:
    """Run the read-out at each value of one parameter.

    Args:
        key: Column name for the swept parameter
        values: Parameter values
        make_config: Builds the ReadoutConfig for one value
        threads: Worker threads; row order follows `values` regardless
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("Sweep needs at least one value")
    configs = [make_config(v) for v in values]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(_sweep_point, configs))
    rows = np.array([[v, *r] for v, r in zip(values, results)], dtype=float)
    return Dataset("sweep", (key, *SWEEP_COLUMNS), rows)
