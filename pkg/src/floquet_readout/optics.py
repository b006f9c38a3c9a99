"""Optical selection rules between the dressed eigenstates.

The dipole operator carries the heavy-hole circular selection rules: the
z+ transition couples through q₁₃ = (x̂ + iŷ)/√2, the z- transition through
q₂₄ = (x̂ − iŷ)/√2, and nothing couples along the growth axis. Dipoles are
in units of the scalar dipole moment d = 1.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DivisionByZero, NotNormalized
from .hamiltonian import DriveParams, LabeledEigensystem, StateLabel, pseudo_faraday_eigensystem

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
Q13 = np.array([1, 1j, 0]) / math.sqrt(2)
Q24 = np.array([1, -1j, 0]) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class DipoleOperator:
    """Cartesian components of d, stacked as a (3, 4, 4) array."""

    components: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.components[0]

    @property
    def y(self) -> np.ndarray:
        return self.components[1]

    @property
    def z(self) -> np.ndarray:
        return self.components[2]


@dataclass(frozen=True, eq=False)
class TransitionDipole:
    """P_ij = <ψ_i|d|ψ_j> as a complex 3-vector."""

    vector: np.ndarray
    source: StateLabel | None = None
    destination: StateLabel | None = None

    @property
    def strength(self) -> float:
        """|P_ij|²."""
        return float(np.vdot(self.vector, self.vector).real)


def dipole_operator() -> DipoleOperator:
    """d = q₁₃σ₊ + q₂₄σ₋ + H.c. in the |e,z±>, |t,z±> basis."""
    d = np.zeros((3, 4, 4), dtype=complex)
    d[:, 0, 2] = Q13
    d[:, 1, 3] = Q24
    d[:, 2, 0] = Q13.conj()
    d[:, 3, 1] = Q24.conj()
    return DipoleOperator(d)


_DIPOLE = dipole_operator()


def _check_normalized(psi: np.ndarray, name: str) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise ValueError(f"{name} must be a 4-component vector, got shape {psi.shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > NORM_TOL:
        raise NotNormalized(f"{name} has norm {norm:.12f}")
    return psi


def transition_dipole(psi_i, psi_j, source: StateLabel | None = None,
                      destination: StateLabel | None = None) -> TransitionDipole:
    """Sandwich the dipole operator between two normalized states.

    Raises:
        NotNormalized: If either vector is off unit norm by more than 1e-10
    """
    psi_i = _check_normalized(psi_i, "psi_i")
    psi_j = _check_normalized(psi_j, "psi_j")
    vector = np.einsum("a,kab,b->k", psi_i.conj(), _DIPOLE.components, psi_j)
    return TransitionDipole(vector, source, destination)


def _labeled_dipole(es: LabeledEigensystem, source: StateLabel, destination: StateLabel) -> TransitionDipole:
    return transition_dipole(es.vector(source), es.vector(destination), source, destination)


def branching_ratio(p: DriveParams, es: LabeledEigensystem | None = None) -> float:
    """Spin-flip over spin-preserving emission from the trion-like z- state.

    r_B = |<ψ₁|d|ψ₄>|² / |<ψ₂|d|ψ₄>|² with ψ₁, ψ₂ the electron-like z+, z-
    states and ψ₄ the trion-like z- state.

    Raises:
        AmbiguousLabeling: Propagated from the eigensystem labeling
        DivisionByZero: If the spin-preserving dipole vanishes
    """
    es = es or pseudo_faraday_eigensystem(p)
    flip = _labeled_dipole(es, StateLabel.E_ZP, StateLabel.T_ZM).strength
    keep = _labeled_dipole(es, StateLabel.E_ZM, StateLabel.T_ZM).strength
    if keep == 0.0:
        raise DivisionByZero("Spin-preserving transition dipole vanishes")
    return flip / keep


def beta_coupling(p: DriveParams, electron: StateLabel = StateLabel.E_ZP,
                  es: LabeledEigensystem | None = None) -> complex:
    """Overlap P*_{i3}·P_{i4} of the two dipoles from one electron-like state.

    A zero value means the two decay channels into that state do not
    interfere, so dissipation is pure rate decay.
    """
    es = es or pseudo_faraday_eigensystem(p)
    to_zp = _labeled_dipole(es, electron, StateLabel.T_ZP)
    to_zm = _labeled_dipole(es, electron, StateLabel.T_ZM)
    return complex(np.vdot(to_zp.vector, to_zm.vector))


# Angular integral over emission directions

def angular_overlap_integral(u, v) -> complex:
    """Closed form (4π/3)·u·v of the polarization-averaged solid-angle integral."""
    return 4 * math.pi / 3 * complex(np.dot(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)))


def angular_overlap_quadrature(u, v, samples: int = 1_000_000,
                               rng: np.random.Generator | None = None) -> complex:
    """Monte-Carlo estimate of ∮ dΩ ½Σ_ε (u·ε)(v·ε).

    Directions k̂ are uniform on the sphere; ε runs over the two transverse
    polarizations ê_θ, ê_φ of each direction.
    """
    rng = rng or np.random.default_rng()
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    k = rng.normal(size=(samples, 3))
    k /= np.linalg.norm(k, axis=1, keepdims=True)
    cos_t = k[:, 2]
    sin_t = np.sqrt(np.clip(1 - cos_t**2, 0, None))
    phi = np.arctan2(k[:, 1], k[:, 0])
    e_theta = np.stack([cos_t * np.cos(phi), cos_t * np.sin(phi), -sin_t], axis=1)
    e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros(samples)], axis=1)
    integrand = 0.5 * ((e_theta @ u) * (e_theta @ v) + (e_phi @ u) * (e_phi @ v))
    return complex(4 * math.pi * integrand.mean())


def spontaneous_rate_formula(omega_ji: float, dipole: TransitionDipole, d_cm: float) -> float:
    """Weisskopf-Wigner spontaneous rate Γ_ji = ω³|d|²|P_ij|²/(3πε₀ħc³) in s⁻¹.

    Args:
        omega_ji: Transition angular frequency in rad/s
        dipole: Transition dipole in units of d
        d_cm: Scalar dipole moment in C·m
    """
    return (omega_ji**3 * d_cm**2 * dipole.strength
            / (3 * math.pi * constants.epsilon_0 * constants.hbar * constants.c**3))
