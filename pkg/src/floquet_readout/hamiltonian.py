"""Rotating-frame Hamiltonians of the driven quantum-dot electron/trion system.

The basis is |e,z+>, |e,z->, |t,z+>, |t,z-> (indices 0..3). An in-plane field
B_x couples the spin states inside each manifold, a far-detuned σ+ laser
(Ω₁₊, Δ₁) couples |e,z+> to |t,z+>, and a weak near-resonant laser (Ω₂±, Δ₂)
drives both z-transitions. In the frame rotating at ω₁ the Hamiltonian is

    H(t) = H⁽⁰⁾ + H⁽¹⁾ e^{iνt} + H⁽⁻¹⁾ e^{−iνt},   ν = 2π(Δ₂ − Δ₁).

All returned matrices and eigenvalues are angular frequencies in rad/ns.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg
from .errors import AmbiguousLabeling, DegenerateDetuning, ValidationError
from .utils import LARGE_DETUNING_RATIO, TWO_PI, ghz_to_angular, zeeman_angular

logger = logging.getLogger(__name__)

LABEL_TOL = 1e-9


class StateLabel(str, Enum):
    """Eigenstate labels; z-labels follow the basis order, x-labels the Voigt limit."""

    E_ZP = "e,z+"
    E_ZM = "e,z-"
    T_ZP = "t,z+"
    T_ZM = "t,z-"
    E_XP = "e,x+"
    E_XM = "e,x-"
    T_XP = "t,x+"
    T_XM = "t,x-"

    @property
    def is_trion(self) -> bool:
        return self.value.startswith("t")


BASIS_LABELS = (StateLabel.E_ZP, StateLabel.E_ZM, StateLabel.T_ZP, StateLabel.T_ZM)

# read-out target -> (electron-like, trion-like) pair of the cycling transition
TARGETS = {
    "z+": (StateLabel.E_ZP, StateLabel.T_ZP),
    "z-": (StateLabel.E_ZM, StateLabel.T_ZM),
}


def check_target(target: str) -> str:
    if target not in TARGETS:
        raise ValueError(f"Invalid target: {target}. Must be one of {list(TARGETS)}")
    return target


@dataclass(frozen=True)
class DriveParams:
    """Field, g-factors and the two lasers.

    Frequencies are f = ω/2π in GHz. Omega1p is the real amplitude of the
    σ+ far-detuned laser (Ω₁₋ is zero). Delta2 of None means "resonant with
    the read-out target", resolved by resonant_detuning_for_readout.
    """

    B_x: float = 0.0
    g_ex: float = 0.24
    g_hx: float = 0.47
    Omega1p: float = 0.0
    Delta1: float = 0.0
    Omega2p: complex = 0j
    Omega2m: complex = 0j
    Delta2: float | None = None

    def __post_init__(self):
        for name in ("B_x", "g_ex", "g_hx", "Omega1p", "Delta1"):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real number, got {value!r}", invariant=name)
            object.__setattr__(self, name, float(value))
        if self.B_x < 0:
            raise ValidationError(f"B_x must be >= 0, got {self.B_x}", invariant="B_x >= 0")
        if self.Omega1p < 0:
            raise ValidationError(f"Omega1p must be >= 0, got {self.Omega1p}", invariant="Omega1p >= 0")
        for name in ("Omega2p", "Omega2m"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValidationError(f"{name} must be finite, got {value!r}", invariant=name)
            object.__setattr__(self, name, value)
        if self.Delta2 is not None:
            if not math.isfinite(self.Delta2):
                raise ValidationError(f"Delta2 must be finite, got {self.Delta2!r}", invariant="Delta2")
            object.__setattr__(self, "Delta2", float(self.Delta2))
        if self.Omega1p > 0 and (self.Delta1 == 0 or self.Omega1p / abs(self.Delta1) > LARGE_DETUNING_RATIO):
            logger.warning(
                "Far-detuned drive is not weak: Omega1p/Delta1 = %s exceeds %s",
                "inf" if self.Delta1 == 0 else f"{self.Omega1p / abs(self.Delta1):.3g}",
                LARGE_DETUNING_RATIO,
            )

    def replace(self, **changes) -> "DriveParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class LabeledEigensystem:
    """Four labeled eigenpairs; vectors are the columns of `vectors`."""

    values: np.ndarray
    vectors: np.ndarray
    labels: tuple[StateLabel, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise AmbiguousLabeling(f"Labels are not a bijection: {self.labels}",
                                    values=self.values, vectors=self.vectors)
        object.__setattr__(self, "_index", {label: k for k, label in enumerate(self.labels)})

    def value(self, label: StateLabel) -> float:
        return float(self.values[self._index[label]])

    def vector(self, label: StateLabel) -> np.ndarray:
        return self.vectors[:, self._index[label]]

    def projector(self, label: StateLabel) -> np.ndarray:
        v = self.vector(label)
        return np.outer(v, v.conj())

    def as_dict(self) -> dict:
        """JSON-friendly view (frequencies in GHz)."""
        return {
            label.value: {
                "frequency_GHz": float(self.values[k]) / TWO_PI,
                "vector": [[float(c.real), float(c.imag)] for c in self.vectors[:, k]],
            }
            for k, label in enumerate(self.labels)
        }


@dataclass(frozen=True, eq=False)
class AcStarkEigensystem:
    """Zero-field eigensystem under the far-detuned drive.

    exact_values are {−W₁/2, −Δ₁/2, +W₁/2, +Δ₁/2} in rad/ns. The first-order
    part holds the energies relative to the bare levels (trion pair relative
    to ω₀) and the first-order vectors; both are None when not requested.
    """

    W1: float
    exact_values: np.ndarray
    exact_vectors: np.ndarray
    exact_energies: np.ndarray
    firstorder_energies: np.ndarray | None
    firstorder_vectors: np.ndarray | None


# Hamiltonians

def build_H0(p: DriveParams) -> np.ndarray:
    """Time-independent part H⁽⁰⁾ (rad/ns, ħ = 1)."""
    delta1 = ghz_to_angular(p.Delta1)
    omega1 = ghz_to_angular(p.Omega1p)
    ze = zeeman_angular(p.B_x, p.g_ex)
    zh = zeeman_angular(p.B_x, p.g_hx)
    H = np.diag([-delta1 / 2, -delta1 / 2, delta1 / 2, delta1 / 2]).astype(complex)
    H[0, 1] = H[1, 0] = ze
    H[0, 2] = H[2, 0] = omega1 / 2
    H[2, 3] = H[3, 2] = -zh
    return H


def drive_frequency(p: DriveParams) -> float:
    """ν = 2π(Δ₂ − Δ₁) in rad/ns; Delta2 must be resolved."""
    if p.Delta2 is None:
        raise ValueError("Delta2 is unresolved; call resonant_detuning_for_readout first")
    return ghz_to_angular(p.Delta2 - p.Delta1)


def build_H1(p: DriveParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Oscillating parts of the near-resonant drive.

    Returns:
        Tuple of (H⁽¹⁾, H⁽⁻¹⁾ = H⁽¹⁾†, ν in rad/ns)
    """
    Hplus = np.zeros((4, 4), dtype=complex)
    Hplus[2, 0] = np.conj(ghz_to_angular(p.Omega2p)) / 2
    Hplus[3, 1] = np.conj(ghz_to_angular(p.Omega2m)) / 2
    return Hplus, Hplus.conj().T.copy(), drive_frequency(p)


def harmonic_hamiltonian(H0, Hplus, Hminus, nu: float, t: float) -> np.ndarray:
    """H(t) = H⁽⁰⁾ + H⁽⁺¹⁾e^{iνt} + H⁽⁻¹⁾e^{−iνt} in the rotating frame.

    The arguments after H0 are ordered as build_H1 returns them.
    """
    return H0 + Hplus * np.exp(1j * nu * t) + Hminus * np.exp(-1j * nu * t)


# Eigensystems

def zeeman_eigensystem(p: DriveParams) -> LabeledEigensystem:
    """Analytic Voigt-limit eigensystem (Ω₁₊ and Δ₁ ignored).

    At B_x = 0 every level is degenerate and the z-basis is returned.
    """
    ze = zeeman_angular(p.B_x, p.g_ex)
    zh = zeeman_angular(p.B_x, p.g_hx)
    if ze == 0 and zh == 0:
        return LabeledEigensystem(np.zeros(4), np.eye(4, dtype=complex), BASIS_LABELS)
    s = 1 / math.sqrt(2)
    vectors = np.array([
        [s, s, 0, 0],
        [-s, s, 0, 0],
        [0, 0, s, s],
        [0, 0, s, -s],
    ], dtype=complex)
    values = np.array([-ze, ze, -zh, zh])
    return LabeledEigensystem(
        values, vectors, (StateLabel.E_XM, StateLabel.E_XP, StateLabel.T_XP, StateLabel.T_XM)
    )


def acstark_eigensystem(p: DriveParams, firstorder: bool = True) -> AcStarkEigensystem:
    """Zero-field eigensystem of the far-detuned drive, exact and to first order.

    Args:
        p: Drive parameters; B_x is ignored
        firstorder: Also compute the first-order energies and vectors

    Raises:
        DegenerateDetuning: If firstorder is requested at Δ₁ = 0
    """
    delta = ghz_to_angular(p.Delta1)
    omega = ghz_to_angular(p.Omega1p)
    W = math.hypot(delta, omega)
    theta = math.atan2(omega, delta)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    vectors = np.array([
        [c, 0, s, 0],
        [0, 1, 0, 0],
        [-s, 0, c, 0],
        [0, 0, 0, 1],
    ], dtype=complex)
    values = np.array([-W / 2, -delta / 2, W / 2, delta / 2])
    shift = (W - delta) / 2
    energies = np.array([-shift, 0.0, shift, 0.0])

    fo_energies = fo_vectors = None
    if firstorder:
        if delta == 0:
            raise DegenerateDetuning("First-order AC Stark expansion diverges at Delta1 = 0")
        ratio = omega / (2 * delta)
        fo_shift = omega**2 / (4 * delta)
        fo_energies = np.array([-fo_shift, 0.0, fo_shift, 0.0])
        fo_vectors = np.array([
            [1, 0, ratio, 0],
            [0, 1, 0, 0],
            [-ratio, 0, 1, 0],
            [0, 0, 0, 1],
        ], dtype=complex)
    return AcStarkEigensystem(W, values, vectors, energies, fo_energies, fo_vectors)


def label_by_overlap(values: np.ndarray, vectors: np.ndarray) -> LabeledEigensystem:
    """Label eigenvectors by maximum squared overlap with the basis states.

    The assignment maximizes the total overlap, so it is bijective. Each
    eigenvector's assigned overlap must also be its own largest one and at
    least 0.5, both within 1e-9 so exact ties (Voigt limit) still label.

    Raises:
        AmbiguousLabeling: If any eigenvector fails those checks
    """
    overlaps = np.abs(vectors) ** 2
    basis_idx, eig_idx = linear_sum_assignment(overlaps, maximize=True)
    order = np.empty(4, dtype=int)
    for i, j in zip(basis_idx, eig_idx):
        assigned = overlaps[i, j]
        if assigned < overlaps[:, j].max() - LABEL_TOL or assigned < 0.5 - LABEL_TOL:
            raise AmbiguousLabeling(
                f"Eigenvector {j} has overlap {assigned:.4f} with {BASIS_LABELS[i].value} "
                f"(best {overlaps[:, j].max():.4f})",
                values=values, vectors=vectors,
            )
        order[i] = j
    return LabeledEigensystem(values[order], vectors[:, order], BASIS_LABELS)


def pseudo_faraday_eigensystem(p: DriveParams) -> LabeledEigensystem:
    """Numerically diagonalize H⁽⁰⁾ and label the dressed states.

    Labels come back in basis order: electron-like z+, z-, trion-like z+, z-.

    Raises:
        AmbiguousLabeling: If the dressed states are too deeply mixed
    """
    values, vectors = linalg.eig_hermitian(build_H0(p))
    return label_by_overlap(values, vectors)


def rotating_frame_energies(es: LabeledEigensystem, omega0: float, omega1: float) -> np.ndarray:
    """Absolute energies (rad/ns) from rotating-frame eigenvalues.

    Electron-like states get (ω₀ − ω₁)/2 added, trion-like ones (ω₀ + ω₁)/2.
    """
    offsets = np.array([
        (omega0 + omega1) / 2 if label.is_trion else (omega0 - omega1) / 2 for label in es.labels
    ])
    return es.values + offsets


def relative_frequencies(es: LabeledEigensystem, p: DriveParams) -> np.ndarray:
    """Eigenfrequencies in GHz with trion levels relative to the zero-field resonance ω₀."""
    return rotating_frame_energies(es, 0.0, -ghz_to_angular(p.Delta1)) / TWO_PI


def resonant_detuning_for_readout(p: DriveParams, target: str = "z-") -> float:
    """Δ₂ (GHz) that puts the read-out laser on the target cycling transition.

    The laser is resonant when ω₂ − ω₁ equals the dressed trion/electron gap,
    i.e. Δ₂ = Δ₁ − (λ_trion − λ_electron)/2π.

    Raises:
        AmbiguousLabeling: Propagated from the eigensystem labeling
    """
    electron, trion = TARGETS[check_target(target)]
    es = pseudo_faraday_eigensystem(p)
    gap = es.value(trion) - es.value(electron)
    return p.Delta1 - gap / TWO_PI


def resolve_drive(p: DriveParams, target: str = "z-") -> DriveParams:
    """Return p with Delta2 filled in for the target if it was left unset."""
    if p.Delta2 is not None:
        return p
    return p.replace(Delta2=resonant_detuning_for_readout(p, target))


def adiabatic_timescale(p: DriveParams) -> float:
    """ħ/δ_e in ns, with δ_e = 2μ_B g_{e,x} B_x the electron Zeeman splitting."""
    splitting = 2 * zeeman_angular(p.B_x, p.g_ex)
    return math.inf if splitting == 0 else 1.0 / abs(splitting)
