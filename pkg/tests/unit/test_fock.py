"""Unit tests for the truncated Fock-space energy form."""

import math

import numpy as np
import pytest

from qeilab.errors import MasslessZeroMode, MismatchedInputs
from qeilab.fock import (
    FockBasis,
    ModeSet,
    Sector,
    assemble_smeared_energy_form,
    build_mode_set,
    min_eigenvalue,
    verify_qwei,
    volume_trend,
)
from qeilab.models import BumpWeight, Cos2Weight, GaussianWeight, SampledWeight, SamplesParams
from qeilab.qei import worldline_qwei_bound
from qeilab.weights import rescale, square_transform

TWO_PI = 2.0 * math.pi


@pytest.fixture
def desk_modes() -> ModeSet:
    """19 modes: L=2π, Λ=1.5, m=1."""
    return build_mode_set(TWO_PI, 1.5, 1.0)


class TestBuildModeSet:
    """Tests for build_mode_set."""

    def test_desk_scale_counts(self, desk_modes: ModeSet) -> None:
        """|n|² ≤ 2 gives 1 + 6 + 12 modes and a 191-dimensional basis."""
        assert desk_modes.count == 19
        assert FockBasis(desk_modes.count).dimension == 191

    @pytest.mark.parametrize(
        ("length", "modes", "dimension"), [(8.0, 7, 29), (12.0, 19, 191), (16.0, 57, 1654)]
    )
    def test_fixed_cutoff_counts(self, length: float, modes: int, dimension: int) -> None:
        """At Λ=0.9 the mode count grows with the box."""
        mode_set = build_mode_set(length, 0.9, 1.0)
        assert mode_set.count == modes
        assert FockBasis(mode_set.count).dimension == dimension

    def test_closed_under_reflection(self, desk_modes: ModeSet) -> None:
        """k → −k maps the set onto itself."""
        forward = {tuple(k) for k in np.round(desk_modes.momenta, 12)}
        backward = {tuple(k) for k in np.round(-desk_modes.momenta, 12) + 0.0}
        assert forward == backward

    def test_zero_mode_first(self, desk_modes: ModeSet) -> None:
        """Modes are ordered by |k| with k=0 first."""
        np.testing.assert_array_equal(desk_modes.momenta[0], [0.0, 0.0, 0.0])
        assert desk_modes.frequencies[0] == 1.0

    def test_massless_zero_mode_rejected(self) -> None:
        """m=0 without an infrared floor would include ω=0."""
        with pytest.raises(MasslessZeroMode):
            build_mode_set(TWO_PI, 1.5, 0.0)

    def test_infrared_floor(self) -> None:
        """k_min removes the zero mode so m=0 is allowed."""
        modes = build_mode_set(TWO_PI, 1.5, 0.0, k_min=0.5)
        assert modes.count == 18

    @pytest.mark.parametrize(("length", "cutoff"), [(0.0, 1.0), (1.0, -1.0)])
    def test_invalid_sizes(self, length: float, cutoff: float) -> None:
        """Box length and cutoff must be positive."""
        with pytest.raises(ValueError):
            build_mode_set(length, cutoff, 1.0)


class TestFockBasis:
    """Tests for FockBasis."""

    def test_two_particle_sector(self) -> None:
        """Vacuum plus M(M+1)/2 pair states."""
        basis = FockBasis(3)
        assert basis.states[0] == ()
        assert (0, 0) in basis.index
        assert basis.dimension == 1 + 6

    def test_four_particle_sector(self) -> None:
        """0+2+4 adds C(M+3, 4) states."""
        assert FockBasis(3, Sector.FOUR).dimension == 1 + 6 + 15


class TestClosedForms:
    """Closed-form oracles for one-mode forms."""

    def test_single_moving_mode(self, gaussian: GaussianWeight) -> None:
        """λ_min = (A − √(A² + 4|C|²))/2 for one mode k ≠ 0."""
        length, m = TWO_PI, 1.0
        k = np.array([[1.0, 0.0, 0.0]])
        modes = ModeSet.from_momenta(k, length, m)
        volume = length**3
        omega = math.sqrt(2.0)
        k_sq = 1.0
        a = 2.0 * omega / volume * float(square_transform(gaussian, 0.0).real)
        c = math.sqrt(2.0) * k_sq / (2.0 * volume * omega) * abs(
            complex(square_transform(gaussian, 2.0 * omega))
        )
        expected = (a - math.sqrt(a * a + 4.0 * c * c)) / 2.0
        form = assemble_smeared_energy_form(modes, gaussian)
        lam, _ = min_eigenvalue(form)
        assert lam == pytest.approx(expected, rel=1e-10)
        assert lam < 0

    def test_single_mode_in_larger_box(self, bump: BumpWeight) -> None:
        """The same closed form holds at L=8 with k = 2π/8 and a bump weight."""
        length, m = 8.0, 1.0
        k_sq = (TWO_PI / length) ** 2
        modes = ModeSet.from_momenta([[TWO_PI / length, 0.0, 0.0]], length, m)
        volume = length**3
        omega = math.sqrt(k_sq + m * m)
        a = 2.0 * omega / volume * float(square_transform(bump, 0.0).real)
        c = math.sqrt(2.0) * k_sq / (2.0 * volume * omega) * abs(
            complex(square_transform(bump, 2.0 * omega))
        )
        expected = (a - math.sqrt(a * a + 4.0 * c * c)) / 2.0
        form = assemble_smeared_energy_form(modes, bump)
        lam, _ = min_eigenvalue(form)
        assert lam == pytest.approx(expected, rel=1e-10)
        assert lam < 0
        report = verify_qwei(form, worldline_qwei_bound(bump, m))
        assert report.passed is True

    def test_zero_mode(self, gaussian: GaussianWeight) -> None:
        """The k=0 mode has no pair creation, so λ_min = 0."""
        modes = ModeSet.from_momenta([[0.0, 0.0, 0.0]], TWO_PI, 1.0)
        form = assemble_smeared_energy_form(modes, gaussian)
        lam, _ = min_eigenvalue(form)
        assert abs(lam) <= 1e-14
        dense = form.dense()
        assert dense[1, 1] == pytest.approx(2.0 / TWO_PI**3)

    def test_vacuum_diagonal_is_zero(
        self, desk_modes: ModeSet, gaussian: GaussianWeight
    ) -> None:
        """Normal ordering leaves no vacuum expectation."""
        form = assemble_smeared_energy_form(desk_modes, gaussian)
        assert form.dense()[0, 0] == 0.0


class TestEnergyForm:
    """Structural properties of the assembled form."""

    def test_hermitian(self, desk_modes: ModeSet) -> None:
        """The form is Hermitian, also for an off-centre weight."""
        w = GaussianWeight.model_validate({"params": {"center": 0.7}})
        form = assemble_smeared_energy_form(desk_modes, w)
        assert form.hermiticity_defect() <= 1e-13
        assert np.any(np.abs(form.dense().imag) > 0)

    def test_cubic_symmetry(self, desk_modes: ModeSet, gaussian: GaussianWeight) -> None:
        """Permuting and reflecting axes leaves the spectrum unchanged."""
        lam, _ = min_eigenvalue(assemble_smeared_energy_form(desk_modes, gaussian))
        rotated = desk_modes.momenta[:, [2, 0, 1]] * np.array([1.0, -1.0, 1.0])
        modes = ModeSet.from_momenta(rotated, desk_modes.box_length, desk_modes.mass)
        lam_rotated, _ = min_eigenvalue(assemble_smeared_energy_form(modes, gaussian))
        assert lam_rotated == pytest.approx(lam, rel=1e-12)

    def test_variational_monotonicity(self, gaussian: GaussianWeight) -> None:
        """Enlarging the mode set or the sector can only lower λ_min."""
        small = build_mode_set(TWO_PI, 1.0, 1.0)
        large = build_mode_set(TWO_PI, 1.5, 1.0)
        lam_small, _ = min_eigenvalue(assemble_smeared_energy_form(small, gaussian))
        lam_large, _ = min_eigenvalue(assemble_smeared_energy_form(large, gaussian))
        lam_four, _ = min_eigenvalue(
            assemble_smeared_energy_form(small, gaussian, Sector.FOUR)
        )
        assert lam_large <= lam_small + 1e-15
        assert lam_four <= lam_small + 1e-15

    def test_eigenvector_phase_is_fixed(
        self, desk_modes: ModeSet, gaussian: GaussianWeight
    ) -> None:
        """The returned eigenvector is normalized with a real positive pivot."""
        _, vector = min_eigenvalue(assemble_smeared_energy_form(desk_modes, gaussian))
        assert np.linalg.norm(vector) == pytest.approx(1.0)
        pivot = int(np.argmax(np.abs(vector)))
        assert vector[pivot].imag == pytest.approx(0.0, abs=1e-12)
        assert vector[pivot].real > 0


class TestVerifyQwei:
    """Tests for verify_qwei and volume_trend."""

    def test_desk_scale_passes(self, desk_modes: ModeSet, gaussian: GaussianWeight) -> None:
        """λ_min is negative and above −Q[g]·(1+ε)."""
        form = assemble_smeared_energy_form(desk_modes, gaussian)
        report = verify_qwei(form, worldline_qwei_bound(gaussian, 1.0), 0.25)
        assert report.lambda_min < 0
        assert report.passed is True
        assert report.lambda_min >= -1.25 * report.q_value
        assert report.dimension == 191
        assert report.mode_count == 19
        assert report.ratio == pytest.approx(abs(report.lambda_min) / report.q_value)
        assert report.model_dump(by_alias=True)["pass"] is True

    @pytest.mark.parametrize("w", [BumpWeight(), Cos2Weight()], ids=["bump", "cos2"])
    def test_compact_weights_pass(
        self, desk_modes: ModeSet, w: BumpWeight | Cos2Weight
    ) -> None:
        """Compactly supported weights also give λ_min < 0 within the bound."""
        form = assemble_smeared_energy_form(desk_modes, w)
        report = verify_qwei(form, worldline_qwei_bound(w, 1.0), 0.25)
        assert report.lambda_min < 0
        assert report.passed is True

    def test_mismatched_mass(self, desk_modes: ModeSet, gaussian: GaussianWeight) -> None:
        """A bound for another mass is rejected."""
        form = assemble_smeared_energy_form(desk_modes, gaussian)
        with pytest.raises(MismatchedInputs, match="mass"):
            verify_qwei(form, worldline_qwei_bound(gaussian, 2.0))

    def test_mismatched_weight(self, desk_modes: ModeSet, gaussian: GaussianWeight) -> None:
        """A bound for another weight is rejected."""
        form = assemble_smeared_energy_form(desk_modes, gaussian)
        with pytest.raises(MismatchedInputs, match="weights"):
            verify_qwei(form, worldline_qwei_bound(rescale(gaussian, 2.0), 1.0))

    def test_negative_epsilon(self, desk_modes: ModeSet, gaussian: GaussianWeight) -> None:
        """ε < 0 is rejected."""
        form = assemble_smeared_energy_form(desk_modes, gaussian)
        with pytest.raises(ValueError, match="epsilon"):
            verify_qwei(form, worldline_qwei_bound(gaussian, 1.0), -0.1)

    def test_zero_weight(self) -> None:
        """A vanishing weight gives the zero form, Q = 0 and a pass without ratio."""
        t = tuple(float(x) for x in np.linspace(-1.0, 1.0, 5))
        w = SampledWeight(params=SamplesParams(t=t, g=(0.0,) * 5))
        modes = build_mode_set(TWO_PI, 1.0, 1.0)
        form = assemble_smeared_energy_form(modes, w)
        report = verify_qwei(form, worldline_qwei_bound(w, 1.0))
        assert report.lambda_min == 0.0
        assert report.q_value == 0.0
        assert report.ratio is None
        assert report.passed is True

    def test_volume_trend(self, gaussian: GaussianWeight) -> None:
        """The deficit does not worsen from L=8 to L=16 at fixed Λ."""
        reports = volume_trend([16.0, 8.0, 12.0], 0.9, gaussian, 1.0)
        assert [r.box_length for r in reports] == [8.0, 12.0, 16.0]
        assert [r.dimension for r in reports] == [29, 191, 1654]
        assert all(r.passed for r in reports)
        deficits = [r.deficit for r in reports]
        assert deficits[1] <= deficits[0]
        assert deficits[2] <= deficits[1]
