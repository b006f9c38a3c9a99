"""Liouville-space representation of the open-system dynamics.

A density matrix ρ unfolds row-major into a 16-component supervector, with
ρ_{αβ} at flat index 4α + β (zero-based). Superoperators act on supervectors
as 16×16 matrices. The generator convention is

    dρ⃗/dt = −i L(t) ρ⃗,   L(t) = L⁽⁰⁾ + L⁽¹⁾ e^{iνt} + L⁽⁻¹⁾ e^{−iνt},

with ħ = 1, so dissipation enters L⁽⁰⁾ multiplied by i.
"""

import logging
import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import linalg
from .errors import NotHermitian, NotNormalized, ValidationError
from .utils import RATE_PRESETS, TWO_PI

logger = logging.getLogger(__name__)

DIM = 4
LIOUVILLE_DIM = DIM * DIM
RATE_KEY = re.compile(r"^(Gamma|gamma)_([1-4])([1-4])$")


@dataclass(frozen=True, eq=False)
class RateMatrices:
    """Population relaxation Γ and pure dephasing γ in ns⁻¹.

    Gamma[a, b] is the rate of |a> → |b> (zero diagonal). gamma[a, b] is the
    extra decay rate of the coherence ρ_ab (symmetric, zero diagonal).
    """

    Gamma: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        Gamma = np.array(self.Gamma, dtype=float)
        gamma = np.array(self.gamma, dtype=float)
        for name, m in (("Gamma", Gamma), ("gamma", gamma)):
            if m.shape != (DIM, DIM):
                raise ValidationError(f"{name} must be {DIM}x{DIM}, got {m.shape}", invariant=f"{name} shape")
            if not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} has non-finite entries", invariant=f"{name} finite")
            if np.any(m < 0):
                raise ValidationError(f"{name} has negative entries", invariant=f"{name} >= 0")
            if np.any(np.diag(m) != 0):
                raise ValidationError(f"{name} diagonal must be zero", invariant=f"{name} zero diagonal")
        if not np.array_equal(gamma, gamma.T):
            raise ValidationError("gamma must be symmetric", invariant="gamma symmetric")
        Gamma.flags.writeable = False
        gamma.flags.writeable = False
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "gamma", gamma)

    def __eq__(self, other):
        if not isinstance(other, RateMatrices):
            return NotImplemented
        return np.array_equal(self.Gamma, other.Gamma) and np.array_equal(self.gamma, other.gamma)

    __hash__ = None

    @classmethod
    def zero(cls) -> "RateMatrices":
        return cls(np.zeros((DIM, DIM)), np.zeros((DIM, DIM)))

    @classmethod
    def from_named(cls, rates: dict[str, float]) -> "RateMatrices":
        """Build from keys like Gamma_31 (|3> → |1>) and gamma_13 (mirrored to gamma_31).

        Raises:
            ValidationError: For unknown keys, diagonal keys or conflicting mirrored values
        """
        Gamma = np.zeros((DIM, DIM))
        gamma = np.zeros((DIM, DIM))
        seen_gamma: dict[tuple[int, int], float] = {}
        for key, value in rates.items():
            match = RATE_KEY.match(key)
            if not match:
                raise ValidationError(f"Unknown rate key: {key}", invariant="rate key")
            kind, a, b = match.group(1), int(match.group(2)) - 1, int(match.group(3)) - 1
            if a == b:
                raise ValidationError(f"Diagonal rate {key} must be omitted", invariant=f"{kind} zero diagonal")
            value = float(value)
            if kind == "Gamma":
                Gamma[a, b] = value
                continue
            pair = (min(a, b), max(a, b))
            if pair in seen_gamma and seen_gamma[pair] != value:
                raise ValidationError(f"{key} conflicts with its mirrored entry", invariant="gamma symmetric")
            seen_gamma[pair] = value
            gamma[a, b] = gamma[b, a] = value
        return cls(Gamma, gamma)

    @classmethod
    def preset(cls, name: str = "paper-sim") -> "RateMatrices":
        if name not in RATE_PRESETS:
            raise ValueError(f"Unknown rate preset: {name}. Must be one of {list(RATE_PRESETS)}")
        return cls.from_named(RATE_PRESETS[name])

    def to_named(self, include_zero: bool = False) -> dict[str, float]:
        """Entries as Gamma_ab / gamma_ab (a < b for gamma), zeros only if requested."""
        named = {}
        for a in range(DIM):
            for b in range(DIM):
                if a != b and (include_zero or self.Gamma[a, b]):
                    named[f"Gamma_{a + 1}{b + 1}"] = float(self.Gamma[a, b])
        for a in range(DIM):
            for b in range(a + 1, DIM):
                if include_zero or self.gamma[a, b]:
                    named[f"gamma_{a + 1}{b + 1}"] = float(self.gamma[a, b])
        return named

    def scaled(self, factor: float) -> "RateMatrices":
        return RateMatrices(self.Gamma * factor, self.gamma * factor)

    def as_angular(self) -> "RateMatrices":
        """Reinterpret the rates as angular frequencies (multiply by 2π)."""
        return self.scaled(TWO_PI)

    @property
    def total_out(self) -> np.ndarray:
        """Σ_q Γ_{aq} for each level a."""
        return self.Gamma.sum(axis=1)

    @property
    def dephasing_margin(self) -> float:
        """Smallest eigenvalue of −γ restricted to vectors summing to zero, in ns⁻¹.

        The elementwise damping e^{−γt} keeps every density matrix positive
        for all t ≥ 0 exactly when this is non-negative.
        """
        basis = null_space(np.ones((1, DIM)))
        return float(np.linalg.eigvalsh(-basis.T @ self.gamma @ basis)[0])

    def is_completely_positive(self, tol: float = 1e-12) -> bool:
        return self.dephasing_margin >= -tol


# Vectorization

def vectorize(rho) -> np.ndarray:
    """ρ (4×4) → supervector (16,), row-major."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise ValueError(f"Density matrix must be {DIM}x{DIM}, got {rho.shape}")
    return rho.reshape(LIOUVILLE_DIM).copy()


def devectorize(v) -> np.ndarray:
    """Supervector (16,) → ρ (4×4)."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (LIOUVILLE_DIM,):
        raise ValueError(f"Supervector must have {LIOUVILLE_DIM} entries, got {v.shape}")
    return v.reshape(DIM, DIM).copy()


def flat_index(alpha: int, beta: int) -> int:
    """Flat supervector index of ρ_{αβ}, zero-based."""
    return DIM * alpha + beta


def check_density_matrix(rho, tol: float = 1e-10, positivity_tol: float = 1e-8) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity.

    Raises:
        NotHermitian: If max|ρ − ρ†| > tol
        NotNormalized: If |Tr ρ − 1| > tol
        ValueError: If the smallest eigenvalue is below −positivity_tol
    """
    rho = np.asarray(rho, dtype=complex)
    deviation = linalg.hermiticity_deviation(rho)
    if deviation > tol:
        raise NotHermitian(f"Density matrix deviates from Hermitian by {deviation:.3e}")
    trace = complex(np.trace(rho))
    if abs(trace - 1) > tol:
        raise NotNormalized(f"Density matrix trace is {trace:.12g}")
    smallest = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if smallest < -positivity_tol:
        raise ValueError(f"Density matrix has negative eigenvalue {smallest:.3e}")
    return rho


# Dissipation

def lindblad_apply(rates: RateMatrices, rho) -> np.ndarray:
    """Dissipative part 𝓛(ρ).

    Populations: dρ_aa/dt = Σ_q (−Γ_aq ρ_aa + Γ_qa ρ_qq).
    Coherences:  dρ_ab/dt = −(½Σ_q (Γ_aq + Γ_bq) + γ_ab) ρ_ab.
    """
    rho = np.asarray(rho, dtype=complex)
    out_rate = rates.total_out
    out = -(0.5 * (out_rate[:, None] + out_rate[None, :]) + rates.gamma) * rho
    out[np.diag_indices(DIM)] += rates.Gamma.T @ np.diag(rho)
    return out


def commutator_superop(H) -> np.ndarray:
    """Supermatrix S with S·vec(ρ) = vec([H, ρ])."""
    H = np.asarray(H, dtype=complex)
    identity = np.eye(DIM)
    return linalg.kron(H, identity) - linalg.kron(identity, H.T)


def dissipator_superop(rates: RateMatrices) -> np.ndarray:
    """Supermatrix D with D·vec(ρ) = vec(𝓛(ρ))."""
    D = np.empty((LIOUVILLE_DIM, LIOUVILLE_DIM), dtype=complex)
    for col in range(LIOUVILLE_DIM):
        D[:, col] = vectorize(lindblad_apply(rates, devectorize(np.eye(LIOUVILLE_DIM)[col])))
    return D


def build_L0(H0, rates: RateMatrices) -> np.ndarray:
    """L⁽⁰⁾ = [H⁽⁰⁾, ·] + i𝓛, so that −iL⁽⁰⁾ρ⃗ = vec(−i[H⁽⁰⁾, ρ] + 𝓛(ρ))."""
    H0 = np.asarray(H0, dtype=complex)
    scale = float(np.max(np.abs(H0))) if H0.size else 0.0
    if linalg.hermiticity_deviation(H0) > linalg.HERMITIAN_TOL * max(scale, 1.0):
        raise NotHermitian("H0 must be Hermitian")
    return commutator_superop(H0) + 1j * dissipator_superop(rates)


def build_L1(Hpm) -> np.ndarray:
    """L⁽±¹⁾: the commutator supermatrix of H⁽±¹⁾, no dissipation."""
    return commutator_superop(Hpm)


def trace_row() -> np.ndarray:
    """Row vector t with t·ρ⃗ = Tr ρ."""
    row = np.zeros(LIOUVILLE_DIM)
    row[[flat_index(a, a) for a in range(DIM)]] = 1.0
    return row


def liouville_rhs(L0, L1, Lm1, nu: float, t: float, v) -> np.ndarray:
    """dρ⃗/dt at time t."""
    return -1j * ((L0 + L1 * np.exp(1j * nu * t) + Lm1 * np.exp(-1j * nu * t)) @ v)

