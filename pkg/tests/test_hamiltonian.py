"""Tests for the rotating-frame Hamiltonians and the labeled eigensystems."""

import logging
import math

import numpy as np
import pytest

from floquet_readout import linalg
from floquet_readout.errors import AmbiguousLabeling, DegenerateDetuning, ValidationError
from floquet_readout.hamiltonian import (
    BASIS_LABELS,
    DriveParams,
    LabeledEigensystem,
    StateLabel,
    acstark_eigensystem,
    adiabatic_timescale,
    build_H0,
    build_H1,
    drive_frequency,
    harmonic_hamiltonian,
    label_by_overlap,
    pseudo_faraday_eigensystem,
    relative_frequencies,
    resolve_drive,
    resonant_detuning_for_readout,
    rotating_frame_energies,
    zeeman_eigensystem,
)
from floquet_readout.utils import MU_B_GHZ_PER_T, TWO_PI, angular_to_ghz, ghz_to_angular, zeeman_angular


def characteristic_roots(H):
    """Eigenvalues as roots of the Faddeev-LeVerrier characteristic polynomial."""
    n = H.shape[0]
    coeffs = [1.0 + 0j]
    M = np.zeros_like(H)
    for k in range(1, n + 1):
        M = H @ M + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(H @ M) / k)
    return np.sort(np.roots(coeffs).real)


class TestUnits:
    """Unit conversion helpers."""

    def test_bohr_magneton(self):
        """μB/h from CODATA is 13.996 GHz/T."""
        assert MU_B_GHZ_PER_T == pytest.approx(13.996245, rel=1e-6)

    def test_round_trip(self):
        """f → ω → f is exact to machine precision."""
        for f in (0.0, 0.5, 2000.0, -13.7, 0.5 + 0.25j):
            assert angular_to_ghz(ghz_to_angular(f)) == pytest.approx(f, rel=1e-15, abs=1e-15)


class TestDriveParams:
    """Parameter validation."""

    def test_negative_field(self):
        """B_x < 0 is rejected."""
        with pytest.raises(ValidationError, match="B_x"):
            DriveParams(B_x=-0.1)

    def test_negative_omega(self):
        """Ω₁₊ < 0 is rejected."""
        with pytest.raises(ValidationError, match="Omega1p"):
            DriveParams(Omega1p=-1.0)

    def test_non_finite(self):
        """NaN detuning is rejected."""
        with pytest.raises(ValidationError):
            DriveParams(Delta1=float("nan"))

    def test_large_drive_warns(self, caplog):
        """|Ω₁₊/Δ₁| > 0.2 logs a warning but still builds."""
        with caplog.at_level(logging.WARNING, logger="floquet_readout.hamiltonian"):
            p = DriveParams(Omega1p=500.0, Delta1=2000.0)
        assert p.Omega1p == 500.0
        assert "not weak" in caplog.text

    def test_read_out_drive_is_quiet(self, sim_drive, caplog):
        """The read-out drive stays in the weak regime."""
        with caplog.at_level(logging.WARNING, logger="floquet_readout.hamiltonian"):
            sim_drive.replace(Omega1p=200.0)
        assert caplog.text == ""

    def test_complex_amplitudes(self):
        """Ω₂± are stored as complex."""
        p = DriveParams(Omega2p=0.5, Omega2m=1)
        assert isinstance(p.Omega2p, complex) and p.Omega2m == 1 + 0j


class TestBuildH0:
    """Time-independent Hamiltonian."""

    def test_zero(self):
        """No field, no drive, no detuning gives the zero matrix."""
        assert np.array_equal(build_H0(DriveParams()), np.zeros((4, 4)))

    def test_zeeman_element(self):
        """Electron Zeeman coupling sits at (1,2)."""
        H = build_H0(DriveParams(B_x=0.1, g_ex=0.24))
        assert H[0, 1] == pytest.approx(TWO_PI * 0.33591, rel=1e-4)
        assert H[1, 0] == H[0, 1]

    def test_detuning_diagonal(self):
        """Δ₁ alone gives diag(∓πΔ₁)."""
        H = build_H0(DriveParams(Delta1=2000.0, g_ex=0.0, g_hx=0.0))
        assert np.allclose(np.diag(H).real, [-2000 * math.pi] * 2 + [2000 * math.pi] * 2)

    def test_structure(self, sim_drive):
        """Drive at (1,3), hole Zeeman at (3,4) with negative sign."""
        H = build_H0(sim_drive)
        assert H[0, 2] == pytest.approx(TWO_PI * 100.0)
        assert H[2, 3] == pytest.approx(-zeeman_angular(0.1, 0.47))
        assert H[0, 3] == 0 and H[1, 2] == 0

    def test_hermitian_and_traceless(self, rng):
        """Exactly Hermitian with zero trace for random parameters."""
        for _ in range(10):
            p = DriveParams(B_x=rng.uniform(0, 1), g_ex=rng.normal(), g_hx=rng.normal(),
                            Omega1p=rng.uniform(0, 100), Delta1=rng.uniform(-3000, 3000))
            H = build_H0(p)
            assert np.array_equal(H, H.conj().T)
            assert abs(np.trace(H)) <= 1e-12 * max(1.0, np.max(np.abs(H)))

    def test_zeeman_limit_eigenvalues(self):
        """At Ω₁₊ = 0 the eigenvalues are −πΔ₁ ± ze and +πΔ₁ ± zh."""
        p = DriveParams(B_x=0.1, Delta1=2000.0)
        values, _ = linalg.eig_hermitian(build_H0(p))
        ze, zh = zeeman_angular(0.1, 0.24), zeeman_angular(0.1, 0.47)
        half = math.pi * 2000.0
        expected = sorted([-half - ze, -half + ze, half - zh, half + zh])
        assert np.max(np.abs(values - expected)) <= 1e-12 * half

    def test_continuity(self, sim_drive):
        """A 1e-6 relative bump moves eigenvalues by at most 1e-4 relative."""
        base = linalg.eig_hermitian(build_H0(sim_drive))[0]
        for name in ("B_x", "Omega1p", "Delta1", "g_ex", "g_hx"):
            bumped = sim_drive.replace(**{name: getattr(sim_drive, name) * (1 + 1e-6)})
            moved = linalg.eig_hermitian(build_H0(bumped))[0]
            assert np.max(np.abs(moved - base) / np.abs(base)) <= 1e-4


class TestBuildH1:
    """Oscillating near-resonant drive."""

    def test_undriven(self):
        """Ω₂± = 0 gives zero parts and H(t) = H⁽⁰⁾."""
        p = DriveParams(B_x=0.1, Delta2=1.0)
        Hplus, Hminus, _ = build_H1(p)
        assert not Hplus.any() and not Hminus.any()
        assert np.array_equal(harmonic_hamiltonian(build_H0(p), *build_H1(p), 0.37), build_H0(p))

    def test_entries(self):
        """0.5 GHz amplitudes give π·0.5 at (3,1) and (4,2)."""
        Hplus, _, _ = build_H1(DriveParams(Omega2p=0.5, Omega2m=0.5, Delta2=0.0))
        assert Hplus[2, 0] == pytest.approx(math.pi * 0.5)
        assert Hplus[3, 1] == pytest.approx(math.pi * 0.5)
        assert np.count_nonzero(Hplus) == 2

    def test_conjugate_parts(self, rng):
        """H⁽⁻¹⁾ = H⁽¹⁾† for random complex amplitudes."""
        p = DriveParams(Omega2p=complex(*rng.normal(size=2)), Omega2m=complex(*rng.normal(size=2)), Delta2=3.0)
        Hplus, Hminus, _ = build_H1(p)
        assert np.array_equal(Hminus, Hplus.conj().T)
        assert Hplus[2, 0] == pytest.approx(np.conj(TWO_PI * p.Omega2p) / 2)

    def test_drive_frequency(self):
        """ν = 2π(Δ₂ − Δ₁)."""
        assert drive_frequency(DriveParams(Delta1=2000.0, Delta2=10.0)) == pytest.approx(TWO_PI * -1990.0)

    def test_unresolved_delta2(self):
        """Δ₂ must be resolved before ν exists."""
        with pytest.raises(ValueError, match="unresolved"):
            build_H1(DriveParams())

    def test_hamiltonian_is_hermitian(self, sim_drive):
        """H(t) is Hermitian at every time."""
        p = resolve_drive(sim_drive)
        for t in (0.0, 0.1, 3.3):
            assert linalg.hermiticity_deviation(harmonic_hamiltonian(build_H0(p), *build_H1(p), t)) <= 1e-12


class TestZeemanEigensystem:
    """Analytic Voigt-limit eigensystem."""

    def test_zero_field(self):
        """B_x = 0 returns the z-basis."""
        es = zeeman_eigensystem(DriveParams())
        assert es.labels == BASIS_LABELS
        assert np.array_equal(es.vectors, np.eye(4))

    def test_electron_splitting(self):
        """Electron pair splits by 2μB·B·g = 2π·0.67182 GHz."""
        es = zeeman_eigensystem(DriveParams(B_x=0.1))
        splitting = es.value(StateLabel.E_XP) - es.value(StateLabel.E_XM)
        assert splitting / TWO_PI == pytest.approx(0.67182, rel=1e-4)

    def test_vectors(self):
        """|e,x−> = (1,−1,0,0)/√2 and |t,x+> = (0,0,1,1)/√2."""
        es = zeeman_eigensystem(DriveParams(B_x=0.1))
        s = 1 / math.sqrt(2)
        assert np.allclose(es.vector(StateLabel.E_XM), [s, -s, 0, 0])
        assert np.allclose(es.vector(StateLabel.T_XP), [0, 0, s, s])
        assert es.value(StateLabel.T_XP) < 0

    def test_matches_numeric(self):
        """Analytic pairs are eigenpairs of H0 at Δ₁ = Ω₁₊ = 0."""
        p = DriveParams(B_x=0.1)
        H = build_H0(p)
        es = zeeman_eigensystem(p.replace(Omega1p=50.0, Delta1=300.0))
        for k in range(4):
            v = es.vectors[:, k]
            assert np.max(np.abs(H @ v - es.values[k] * v)) <= 1e-12


class TestAcStarkEigensystem:
    """Zero-field AC Stark eigensystem."""

    def test_undriven(self):
        """Ω₁₊ = 0 gives W₁ = |Δ₁|, no shift and unmixed vectors."""
        ac = acstark_eigensystem(DriveParams(Delta1=2000.0))
        assert ac.W1 == pytest.approx(TWO_PI * 2000.0)
        assert np.allclose(ac.exact_energies, 0)
        assert np.allclose(ac.exact_vectors, np.eye(4))

    def test_read_out_values(self):
        """W₁/2π = 2009.975 GHz, exact shift 4.98756 GHz, first-order 5 GHz."""
        ac = acstark_eigensystem(DriveParams(Omega1p=200.0, Delta1=2000.0))
        assert ac.W1 / TWO_PI == pytest.approx(2009.975124, rel=1e-9)
        assert ac.exact_energies[2] / TWO_PI == pytest.approx(4.987562, rel=1e-6)
        assert ac.firstorder_energies[2] / TWO_PI == pytest.approx(5.0)
        z_plus_shift = (ac.firstorder_energies[2] - ac.firstorder_energies[0]) / TWO_PI
        assert z_plus_shift == pytest.approx(10.0)

    def test_exact_values_are_eigenvalues(self):
        """Exact pairs diagonalize H0 at zero field."""
        p = DriveParams(Omega1p=200.0, Delta1=2000.0)
        H = build_H0(p)
        ac = acstark_eigensystem(p)
        for k in range(4):
            v = ac.exact_vectors[:, k]
            assert np.max(np.abs(H @ v - ac.exact_values[k] * v)) <= 1e-9

    def test_first_order_accuracy(self):
        """First-order energies stay within (Ω/Δ)²·|Δ| of the exact ones."""
        for ratio in np.linspace(0.0, 0.2, 11):
            ac = acstark_eigensystem(DriveParams(Omega1p=2000.0 * ratio, Delta1=2000.0))
            bound = ratio**2 * TWO_PI * 2000.0
            assert np.max(np.abs(ac.firstorder_energies - ac.exact_energies)) <= bound + 1e-12

    def test_first_order_vectors(self):
        """First-order mixing amplitude is Ω₁₊/2Δ₁."""
        ac = acstark_eigensystem(DriveParams(Omega1p=200.0, Delta1=2000.0))
        assert ac.firstorder_vectors[2, 0] == pytest.approx(-0.05)
        assert ac.firstorder_vectors[0, 2] == pytest.approx(0.05)

    def test_degenerate_detuning(self):
        """First order diverges at Δ₁ = 0; the exact part still works."""
        with pytest.raises(DegenerateDetuning):
            acstark_eigensystem(DriveParams(Omega1p=10.0))
        ac = acstark_eigensystem(DriveParams(Omega1p=10.0), firstorder=False)
        assert ac.firstorder_energies is None
        assert ac.W1 == pytest.approx(TWO_PI * 10.0)


class TestPseudoFaraday:
    """Numerical eigensystem and labeling."""

    def test_labels_bijective(self, sim_drive):
        """Labels come back in basis order."""
        es = pseudo_faraday_eigensystem(sim_drive)
        assert es.labels == BASIS_LABELS
        assert np.allclose(es.vectors.conj().T @ es.vectors, np.eye(4), atol=1e-10)

    def test_large_drive_tracks_acstark_vectors(self):
        """With B_x = 0 the labeled states are the exact AC Stark ones."""
        p = DriveParams(Omega1p=1000.0, Delta1=2000.0)
        es = pseudo_faraday_eigensystem(p)
        ac = acstark_eigensystem(p, firstorder=False)
        for k, label in enumerate(BASIS_LABELS):
            assert abs(np.vdot(ac.exact_vectors[:, k], es.vector(label))) == pytest.approx(1.0, abs=1e-12)

    def test_zplus_below_zminus(self, branching_drive):
        """The dressed z+ electron state is pushed below the z- one."""
        es = pseudo_faraday_eigensystem(branching_drive)
        gap = (es.value(StateLabel.E_ZM) - es.value(StateLabel.E_ZP)) / TWO_PI
        assert 4.0 < gap < 6.0

    def test_characteristic_polynomial_oracle(self, sim_drive):
        """Eigenvalues match the roots of the characteristic polynomial."""
        H = build_H0(sim_drive)
        values = np.sort(pseudo_faraday_eigensystem(sim_drive).values)
        roots = characteristic_roots(H)
        assert np.max(np.abs(values - roots)) <= 1e-6 * np.max(np.abs(values))

    def test_labels_stable_under_perturbation(self, sim_drive):
        """A 1e-8 bump keeps every label on the same state."""
        base = pseudo_faraday_eigensystem(sim_drive)
        bumped = pseudo_faraday_eigensystem(sim_drive.replace(B_x=sim_drive.B_x * (1 + 1e-8)))
        for label in BASIS_LABELS:
            assert abs(np.vdot(base.vector(label), bumped.vector(label))) == pytest.approx(1.0, abs=1e-6)

    def test_voigt_labels(self):
        """Exact 50/50 ties at Ω₁₊ = 0 still label deterministically."""
        es = pseudo_faraday_eigensystem(DriveParams(B_x=0.1, Delta1=2000.0))
        assert sorted(es.labels) == sorted(BASIS_LABELS)

    def test_ambiguous(self):
        """An evenly mixed eigenvector set cannot be labeled."""
        vectors = np.full((4, 4), 0.5, dtype=complex)
        vectors[:, 1] *= [1, -1, 1, -1]
        vectors[:, 2] *= [1, 1, -1, -1]
        vectors[:, 3] *= [1, -1, -1, 1]
        with pytest.raises(AmbiguousLabeling) as info:
            label_by_overlap(np.arange(4.0), vectors)
        assert info.value.vectors is vectors

    def test_duplicate_labels_rejected(self):
        """LabeledEigensystem enforces a bijection."""
        with pytest.raises(AmbiguousLabeling):
            LabeledEigensystem(np.zeros(4), np.eye(4), (StateLabel.E_ZP,) * 4)

    def test_as_dict(self, sim_drive):
        """JSON view reports frequencies in GHz."""
        es = pseudo_faraday_eigensystem(sim_drive)
        view = es.as_dict()
        assert set(view) == {label.value for label in BASIS_LABELS}
        assert view["e,z+"]["frequency_GHz"] == pytest.approx(es.value(StateLabel.E_ZP) / TWO_PI)


class TestEnergies:
    """Absolute and relative energy reporting."""

    def test_undriven_absolute(self):
        """Electron energies 0, trion energies ω₀."""
        omega0 = TWO_PI * 300000.0
        omega1 = omega0 - TWO_PI * 2000.0
        p = DriveParams(Delta1=2000.0)
        energies = rotating_frame_energies(pseudo_faraday_eigensystem(p), omega0, omega1)
        assert np.allclose(energies, [0, 0, omega0, omega0], atol=1e-6)

    def test_first_order_energies(self):
        """E₁ ≈ −Ω²/4Δ and E₃ − ω₀ ≈ +Ω²/4Δ."""
        p = DriveParams(Omega1p=200.0, Delta1=2000.0)
        freqs = relative_frequencies(pseudo_faraday_eigensystem(p), p)
        assert freqs[0] == pytest.approx(-5.0, rel=0.01)
        assert freqs[2] == pytest.approx(5.0, rel=0.01)

    def test_zplus_transition_shift(self):
        """At 200/2000 GHz the z+ transition moves up by 9.975 GHz."""
        p = DriveParams(Omega1p=200.0, Delta1=2000.0)
        freqs = relative_frequencies(pseudo_faraday_eigensystem(p), p)
        assert freqs[2] - freqs[0] == pytest.approx(9.975124, rel=1e-6)
        assert freqs[3] - freqs[1] == pytest.approx(0.0, abs=1e-9)


class TestResonantDetuning:
    """Δ₂ for the read-out laser."""

    def test_undriven(self):
        """Without field or drive the z- transition needs Δ₂ = 0."""
        assert resonant_detuning_for_readout(DriveParams(Delta1=2000.0)) == pytest.approx(0.0, abs=1e-9)

    def test_resonance_consistency(self, sim_drive):
        """ν cancels the dressed target gap."""
        for target, (electron, trion) in (("z-", (StateLabel.E_ZM, StateLabel.T_ZM)),
                                          ("z+", (StateLabel.E_ZP, StateLabel.T_ZP))):
            p = resolve_drive(sim_drive, target)
            es = pseudo_faraday_eigensystem(p)
            gap = es.value(trion) - es.value(electron)
            assert abs(drive_frequency(p) + gap) <= 1e-10 * abs(gap)

    def test_read_out_value(self, sim_drive):
        """z- resonance at the read-out drive sits within Zeeman corrections of 0."""
        delta2 = resonant_detuning_for_readout(sim_drive, "z-")
        assert abs(delta2) < 1.0

    def test_targets_differ_by_acstark_shift(self, sim_drive):
        """z+ and z- resonances differ by about the 10 GHz AC Stark shift."""
        diff = resonant_detuning_for_readout(sim_drive, "z-") - resonant_detuning_for_readout(sim_drive, "z+")
        assert diff == pytest.approx(10.0, abs=1.0)

    def test_invalid_target(self, sim_drive):
        """Only z+ and z- are targets."""
        with pytest.raises(ValueError, match="Invalid target"):
            resonant_detuning_for_readout(sim_drive, "x+")

    def test_resolve_keeps_explicit(self, sim_drive):
        """An explicit Δ₂ is left alone."""
        p = sim_drive.replace(Delta2=1.5)
        assert resolve_drive(p) is p


def test_adiabatic_timescale():
    """ħ/δ_e ≈ 0.121 ns at 0.1 T with g = 0.47; infinite without field."""
    assert adiabatic_timescale(DriveParams(B_x=0.1, g_ex=0.47)) == pytest.approx(0.121, rel=0.01)
    assert adiabatic_timescale(DriveParams()) == math.inf
