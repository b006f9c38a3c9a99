"""Tests for the dipole selection rules, branching ratio and angular integral."""

import math

import numpy as np
import pytest

from floquet_readout.errors import DivisionByZero, NotNormalized
from floquet_readout.hamiltonian import DriveParams, StateLabel, pseudo_faraday_eigensystem, zeeman_eigensystem
from floquet_readout.optics import (
    Q13,
    Q24,
    TransitionDipole,
    angular_overlap_integral,
    angular_overlap_quadrature,
    beta_coupling,
    branching_ratio,
    dipole_operator,
    spontaneous_rate_formula,
    transition_dipole,
)

BASIS = np.eye(4, dtype=complex)


class TestDipoleOperator:
    """Dipole operator in the z-basis."""

    def test_zplus_element(self):
        """<e,z+|d|t,z+> = q₁₃ = (1, i, 0)/√2."""
        d = dipole_operator()
        element = d.components[:, 0, 2]
        assert np.allclose(element, [1 / math.sqrt(2), 1j / math.sqrt(2), 0])

    def test_cross_element_vanishes(self):
        """<e,z+|d|t,z-> = 0."""
        assert not dipole_operator().components[:, 0, 3].any()

    def test_components_hermitian(self):
        """Each Cartesian component is Hermitian and z vanishes."""
        d = dipole_operator()
        for component in (d.x, d.y, d.z):
            assert np.array_equal(component, component.conj().T)
        assert not d.z.any()


class TestTransitionDipole:
    """Sandwiching the dipole operator."""

    def test_basis_states(self):
        """Faraday basis gives q₁₃ on the z+ transition."""
        P = transition_dipole(BASIS[0], BASIS[2])
        assert np.allclose(P.vector, Q13)
        assert P.strength == pytest.approx(1.0)

    def test_same_manifold(self):
        """No optical coupling between the electron states."""
        assert transition_dipole(BASIS[0], BASIS[1]).strength == 0

    def test_voigt_strengths_equal(self):
        """Both electron x-states reach |t,x-> with equal strength 1/2."""
        es = zeeman_eigensystem(DriveParams(B_x=0.1))
        target = es.vector(StateLabel.T_XM)
        plus = transition_dipole(es.vector(StateLabel.E_XP), target).strength
        minus = transition_dipole(es.vector(StateLabel.E_XM), target).strength
        assert plus == pytest.approx(minus, abs=1e-12)
        assert plus + minus == pytest.approx(1.0, abs=1e-12)

    def test_not_normalized(self):
        """Unnormalized input is rejected."""
        with pytest.raises(NotNormalized):
            transition_dipole(2 * BASIS[0], BASIS[2])

    def test_bounded(self, rng):
        """|P| ≤ 1 for random normalized states."""
        for _ in range(20):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            b = rng.normal(size=4) + 1j * rng.normal(size=4)
            P = transition_dipole(a / np.linalg.norm(a), b / np.linalg.norm(b))
            assert P.strength <= 1 + 1e-12

    def test_sum_rule(self, rng):
        """Σ over trion states of |P|² is basis-invariant in the electron pair."""
        u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
        rotated = [np.concatenate([u[:, k], [0, 0]]) for k in range(2)]
        trions = (BASIS[2], BASIS[3])
        for k in range(2):
            total = sum(transition_dipole(rotated[k], t).strength for t in trions)
            assert total == pytest.approx(1.0, abs=1e-12)


class TestBranchingRatio:
    """Spin-flip over spin-preserving emission."""

    def test_voigt_limit(self):
        """All four transitions equally strong at Ω₁₊ = 0."""
        assert branching_ratio(DriveParams(B_x=0.1, Delta1=2000.0)) == pytest.approx(1.0, abs=1e-9)

    def test_figure_endpoint(self, branching_drive):
        """r_B ≈ 0.02 at the branching parameters."""
        assert branching_ratio(branching_drive) == pytest.approx(0.02, rel=0.2)

    def test_zero_field(self):
        """Uncoupled z-manifolds give r_B = 0."""
        assert branching_ratio(DriveParams(Omega1p=200.0, Delta1=2000.0)) == 0.0

    def test_monotone_over_sweep(self, branching_drive):
        """r_B falls monotonically as Ω₁₊ grows."""
        values = [branching_ratio(branching_drive.replace(Omega1p=w)) for w in np.linspace(4.0, 200.0, 50)]
        assert np.all(np.diff(values) < 0)

    def test_phase_invariant(self, branching_drive):
        """Global phases of the eigenvectors do not change r_B."""
        es = pseudo_faraday_eigensystem(branching_drive)
        phased = type(es)(es.values, es.vectors * np.exp(1j * np.array([0.3, 1.1, -2.0, 0.7])), es.labels)
        assert branching_ratio(branching_drive, es=phased) == pytest.approx(branching_ratio(branching_drive, es=es))

    def test_vanishing_denominator(self, branching_drive):
        """A spin-preserving dipole of zero raises DivisionByZero."""
        es = pseudo_faraday_eigensystem(branching_drive)
        # electron labels swapped onto bare states: |e,z+> cannot reach |t,z->
        broken = type(es)(es.values, np.eye(4, dtype=complex)[:, [1, 0, 2, 3]], es.labels)
        with pytest.raises(DivisionByZero):
            branching_ratio(branching_drive, es=broken)


class TestBetaCoupling:
    """Interference term between decay channels into one electron state."""

    def test_faraday_limit(self):
        """B_x = 0: circular dipoles are orthogonal."""
        assert abs(beta_coupling(DriveParams(Omega1p=200.0, Delta1=2000.0))) <= 1e-12

    def test_voigt_limit(self):
        """Ω₁₊ = 0: the x-basis dipoles are orthogonal too."""
        p = DriveParams(B_x=0.1, Delta1=2000.0)
        for electron in (StateLabel.E_ZP, StateLabel.E_ZM):
            assert abs(beta_coupling(p, electron)) <= 1e-10

    def test_pseudo_faraday_small(self, sim_drive):
        """At the read-out drive the coupling is set by the residual trion mixing."""
        assert abs(beta_coupling(sim_drive)) < 0.2


class TestAngularIntegral:
    """Polarization-averaged solid-angle integral."""

    def test_unit_vectors(self):
        """x̂·x̂ gives 4π/3, x̂·ŷ gives 0."""
        assert angular_overlap_integral([1, 0, 0], [1, 0, 0]) == pytest.approx(4 * math.pi / 3)
        assert angular_overlap_integral([1, 0, 0], [0, 1, 0]) == 0

    def test_bilinear_not_sesquilinear(self):
        """No conjugation: q₁₃·q₁₃ = 0 while q₁₃·q₂₄ = 1."""
        assert abs(angular_overlap_integral(Q13, Q13)) <= 1e-15
        assert angular_overlap_integral(Q13, Q24) == pytest.approx(4 * math.pi / 3)

    def test_quadrature_oracle(self):
        """Monte-Carlo quadrature reproduces the closed form within 1%."""
        rng = np.random.default_rng(7)
        for _ in range(10):
            u = rng.normal(size=3) + 1j * rng.normal(size=3)
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            estimate = angular_overlap_quadrature(u, v, samples=1_000_000, rng=rng)
            scale = 4 * math.pi / 3 * np.linalg.norm(u) * np.linalg.norm(v)
            assert abs(estimate - angular_overlap_integral(u, v)) <= 0.01 * scale


def test_spontaneous_rate_formula():
    """ω³d²|P|²/(3πε₀ħc³) in vacuum for a ~1 eV, 10 D transition, cubic in ω."""
    omega = 1.6e15
    d_cm = 3.3e-29
    rate = spontaneous_rate_formula(omega, TransitionDipole(Q13), d_cm)
    assert rate == pytest.approx(1.881e7, rel=1e-3)
    assert spontaneous_rate_formula(2 * omega, TransitionDipole(Q13), d_cm) == pytest.approx(8 * rate)
    assert spontaneous_rate_formula(omega, TransitionDipole(np.zeros(3)), d_cm) == 0.0
