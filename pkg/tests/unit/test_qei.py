"""Unit tests for QWEI lower bounds."""

import math

import numpy as np
import pytest
from scipy.integrate import quad, simpson

from qeilab.errors import DivergenceDetected, InsufficientPoints, NonPositiveScale
from qeilab.models import (
    ArithmeticSpectrum,
    BoundRoute,
    BumpWeight,
    Cos2Weight,
    GaussianWeight,
    ListSpectrum,
    LogarithmicSpectrum,
    PowerLawSpectrum,
    SampledWeight,
    SamplesParams,
)
from qeilab.numerics import fit_power_law
from qeilab.qei import (
    WorldlineDecomposition,
    bound_for,
    fit_scaling_exponent,
    gff_qwei_bound,
    local_slopes,
    scaling_curve,
    vacuum_reference_bound,
    worldline_qwei_bound,
)
from qeilab.spectrum import first_masses
from qeilab.weights import power_spectrum, rescale

GAUSSIAN_MASSLESS = 3.0 / (64.0 * math.pi**2)


def _local_slope(w: BumpWeight, m: float, tau: float) -> float:
    taus = [tau * f for f in (0.95, 1.0, 1.05)]
    values = [worldline_qwei_bound(rescale(w, t), m).q_value for t in taus]
    return fit_power_law(taus, values).slope


class TestWorldlineBound:
    """Tests for worldline_qwei_bound."""

    def test_massless_gaussian(self, gaussian: GaussianWeight) -> None:
        """Q = 3/(64π²) for the unit gaussian at m=0."""
        bound = worldline_qwei_bound(gaussian, 0.0)
        assert bound.q_value == pytest.approx(GAUSSIAN_MASSLESS, rel=1e-9)
        assert bound.route == BoundRoute.WORLDLINE
        assert bound.quadrature_error < 1e-9 * bound.q_value
        assert bound.metadata["schwartz_class_only"] is True

    def test_decreasing_in_mass(self, bump: BumpWeight) -> None:
        """Heavier fields have a smaller bound."""
        values = [worldline_qwei_bound(bump, m).q_value for m in (0.0, 0.5, 1.0, 2.0)]
        assert all(b < a for a, b in zip(values, values[1:], strict=False))

    def test_massless_scaling(self, bump: BumpWeight) -> None:
        """τ⁴·Q[g_τ] is constant at m=0."""
        base = worldline_qwei_bound(bump, 0.0).q_value
        for tau in (0.25, 2.0, 4.0):
            scaled = worldline_qwei_bound(rescale(bump, tau), 0.0).q_value
            assert tau**4 * scaled == pytest.approx(base, rel=1e-8)

    def test_change_of_variables(self, gaussian: GaussianWeight) -> None:
        """Q[g_τ; m] = τ^-4 Q[g; mτ]."""
        tau = 2.0
        scaled = worldline_qwei_bound(rescale(gaussian, tau), 0.5).q_value
        base = worldline_qwei_bound(gaussian, 1.0).q_value
        assert scaled == pytest.approx(base / tau**4, rel=1e-9)

    def test_massive_decay_is_superpolynomial(self, bump: BumpWeight) -> None:
        """The local log-log slope steepens by more than 2 from τ=5 to τ=30."""
        assert _local_slope(bump, 1.0, 30.0) < _local_slope(bump, 1.0, 5.0) - 2.0

    def test_cos2_massless_closed_form(self, cos2: Cos2Weight) -> None:
        """Q = ∫|g''|²/16π² = π²/64 for the unit cos² window at m=0."""
        bound = worldline_qwei_bound(cos2, 0.0)
        assert bound.q_value == pytest.approx(math.pi**2 / 64.0, rel=1e-12)
        assert bound.quadrature_error < 1e-12

    def test_cos2_change_of_variables(self, cos2: Cos2Weight) -> None:
        """Q[g_τ; m] = τ^-4 Q[g; mτ] also holds for a polynomially decaying spectrum."""
        tau = 2.0
        scaled = worldline_qwei_bound(rescale(cos2, tau), 0.5).q_value
        base = worldline_qwei_bound(cos2, 1.0).q_value
        assert scaled == pytest.approx(base / tau**4, rel=1e-9)
        assert 0.0 < base < math.pi**2 / 64.0

    def test_sampled_cos2_tracks_closed_form(
        self, cos2: Cos2Weight, sampled_cos2: SampledWeight
    ) -> None:
        """A finely tabulated cos² window gives nearly the analytic bound."""
        for m in (0.0, 1.0, 3.0):
            sampled = worldline_qwei_bound(sampled_cos2, m).q_value
            analytic = worldline_qwei_bound(cos2, m).q_value
            assert sampled == pytest.approx(analytic, rel=1e-3)

    def test_table_with_nonzero_edges_diverges(self) -> None:
        """A table that jumps at its ends has |ĝ| ~ u^-1, so u⁴|ĝ|² is not integrable."""
        t = tuple(float(x) for x in np.linspace(-1.0, 1.0, 11))
        w = SampledWeight(params=SamplesParams(t=t, g=(1.0,) * 11))
        with pytest.raises(DivergenceDetected) as exc_info:
            worldline_qwei_bound(w, 0.0)
        assert exc_info.value.test == "envelope"

    def test_negative_mass(self, gaussian: GaussianWeight) -> None:
        """m < 0 is rejected."""
        with pytest.raises(ValueError, match="mass"):
            worldline_qwei_bound(gaussian, -1.0)

    def test_underflow_keeps_log_error(self, gaussian: GaussianWeight) -> None:
        """A bound below double range still reports a finite log error bar."""
        bound = worldline_qwei_bound(gaussian, 40.0)
        assert bound.q_value == 0.0
        assert bound.underflow is True
        assert bound.log_error_bound is not None
        assert bound.log_error_bound < -1000.0


class TestGffBound:
    """Tests for gff_qwei_bound."""

    def test_single_mass_matches_worldline(
        self, bump: BumpWeight, single_mass: ListSpectrum
    ) -> None:
        """A one-species list reproduces the single-mass bound."""
        gff = gff_qwei_bound(bump, single_mass)
        single = worldline_qwei_bound(bump, 1.0)
        assert gff.q_value == pytest.approx(single.q_value, rel=1e-9)
        assert gff.route == BoundRoute.GFF

    def test_additivity(self, gaussian: GaussianWeight) -> None:
        """bound(list) = Σ bound(mass), multiplicities included."""
        masses = (0.5, 1.0, 1.0, 2.0)
        gff = gff_qwei_bound(gaussian, ListSpectrum(masses=masses))
        total = math.fsum(worldline_qwei_bound(gaussian, m).q_value for m in masses)
        assert gff.q_value == pytest.approx(total, rel=1e-9)

    def test_arithmetic_matches_mass_sum(
        self, gaussian: GaussianWeight, arithmetic: ArithmeticSpectrum
    ) -> None:
        """N(u) = ⌊u⌋ equals the sum over m_j = j of single-mass bounds."""
        gff = gff_qwei_bound(gaussian, arithmetic)
        total = math.fsum(worldline_qwei_bound(gaussian, float(j)).q_value for j in range(1, 16))
        assert gff.q_value == pytest.approx(total, rel=1e-8)

    def test_arithmetic_matches_dense_grid(
        self, gaussian: GaussianWeight, arithmetic: ArithmeticSpectrum
    ) -> None:
        """A fixed-grid Simpson rule between the integer jumps of ⌊u⌋ agrees to 1e-6."""
        pieces = []
        for j in range(1, 12):
            u = np.linspace(float(j), float(j + 1), 2001)
            pieces.append(j * simpson(u**4 * 2.0 * math.sqrt(math.pi) * np.exp(-u * u), x=u))
        oracle = math.fsum(pieces) / (16.0 * math.pi**3)
        gff = gff_qwei_bound(gaussian, arithmetic)
        assert gff.q_value == pytest.approx(oracle, rel=1e-6)

    def test_logarithmic_spectrum_with_gaussian_is_finite(
        self, gaussian: GaussianWeight, logarithmic: LogarithmicSpectrum
    ) -> None:
        """Gaussian decay dominates an exponentially growing N(u)."""
        bound = gff_qwei_bound(gaussian, logarithmic)
        assert math.isfinite(bound.q_value)
        assert bound.q_value > 0

    def test_logarithmic_spectrum_with_cos2_diverges(
        self, cos2: Cos2Weight, logarithmic: LogarithmicSpectrum
    ) -> None:
        """Polynomial Fourier decay cannot dominate exponential growth."""
        with pytest.raises(DivergenceDetected) as exc_info:
            gff_qwei_bound(cos2, logarithmic)
        assert exc_info.value.test == "envelope"

    def test_cos2_list_is_sum_of_single_masses(self, cos2: Cos2Weight) -> None:
        """A cos² weight sums its per-mass bounds without integrating to infinity."""
        masses = (0.25, 0.5, 2.0, 2.0)
        gff = gff_qwei_bound(cos2, ListSpectrum(masses=masses))
        total = math.fsum(worldline_qwei_bound(cos2, m).q_value for m in masses)
        assert gff.q_value == pytest.approx(total, rel=1e-9)
        assert gff.quadrature_error < 1e-9 * gff.q_value

    def test_cos2_sparse_power_law_is_enclosed(self, cos2: Cos2Weight) -> None:
        """N(u) = ⌊√u⌋ against a cos² weight reports a value with an honest error bar."""
        spectrum = PowerLawSpectrum(c=1.0, p=0.5)
        gff = gff_qwei_bound(cos2, spectrum)
        explicit = math.fsum(
            worldline_qwei_bound(cos2, float(m)).q_value for m in first_masses(spectrum, 5)
        )
        assert math.isfinite(gff.q_value)
        assert gff.q_value > explicit
        assert 0.0 < gff.quadrature_error < gff.q_value

    def test_bump_arithmetic_is_finite(
        self, bump: BumpWeight, arithmetic: ArithmeticSpectrum
    ) -> None:
        """Round-off in the numerical bump transform does not exhaust the budget."""
        gff = gff_qwei_bound(bump, arithmetic)
        partial = math.fsum(worldline_qwei_bound(bump, float(j)).q_value for j in range(1, 11))
        assert math.isfinite(gff.q_value)
        assert gff.q_value > partial
        assert gff.quadrature_error < 1e-6 * gff.q_value

    def test_bound_for_dispatch(
        self, gaussian: GaussianWeight, single_mass: ListSpectrum
    ) -> None:
        """A float selects the worldline route and a spectrum the gff route."""
        assert bound_for(gaussian, 1.0).route == BoundRoute.WORLDLINE
        assert bound_for(gaussian, single_mass).route == BoundRoute.GFF


class TestVacuumReferenceBound:
    """Tests for vacuum_reference_bound."""

    @pytest.mark.parametrize("w", [GaussianWeight(), BumpWeight()], ids=["gaussian", "bump"])
    def test_massless_matches_worldline(self, w: GaussianWeight | BumpWeight) -> None:
        """At m=0 both routes agree within 0.5%."""
        vacuum = vacuum_reference_bound(w, 0.0)
        worldline = worldline_qwei_bound(w, 0.0)
        assert vacuum.q_value == pytest.approx(worldline.q_value, rel=5e-3)
        assert vacuum.ratio_to_worldline == pytest.approx(1.0, rel=5e-3)
        assert vacuum.route == BoundRoute.VACUUM_REFERENCE

    def test_massive_matches_momentum_integral(self, gaussian: GaussianWeight) -> None:
        """At m=1 the value equals (1/4π³)∫_m^∞|ĝ(k)|²K(k)dk by Fubini."""
        m = 1.0

        def kernel(k: float) -> float:
            p = math.sqrt(max(k * k - m * m, 0.0))
            return (
                p * (2.0 * p * p + m * m) * math.sqrt(p * p + m * m)
                - m**4 * math.asinh(p / m)
            ) / 8.0

        def integrand(k: float) -> float:
            return 2.0 * math.sqrt(math.pi) * math.exp(-k * k) * kernel(k)

        oracle, _ = quad(integrand, m, math.inf, epsrel=1e-12, epsabs=0.0)
        oracle /= 4.0 * math.pi**3
        vacuum = vacuum_reference_bound(gaussian, m)
        assert vacuum.q_value == pytest.approx(oracle, rel=1e-6)
        assert vacuum.ratio_to_worldline is not None
        assert math.isfinite(vacuum.ratio_to_worldline)

    def test_bump_massive_matches_momentum_integral(self, bump: BumpWeight) -> None:
        """At m=1 the bump value equals (1/4π³)∫_m^∞|ĝ(k)|²K(k)dk."""
        m = 1.0

        def integrand(k: float) -> float:
            p = math.sqrt(max(k * k - m * m, 0.0))
            kernel = (
                p * (2.0 * p * p + m * m) * math.sqrt(p * p + m * m)
                - m**4 * math.asinh(p / m)
            ) / 8.0
            return float(power_spectrum(bump, np.array([k]))[0]) * kernel

        pieces = [(m, 20.0), (20.0, 100.0), (100.0, 400.0)]
        oracle = math.fsum(
            quad(integrand, lo, hi, epsrel=1e-11, epsabs=1e-18, limit=400)[0] for lo, hi in pieces
        )
        oracle /= 4.0 * math.pi**3
        vacuum = vacuum_reference_bound(bump, m)
        assert vacuum.q_value == pytest.approx(oracle, rel=1e-6)

    @pytest.mark.parametrize("w", [BumpWeight(), Cos2Weight()], ids=["bump", "cos2"])
    def test_massive_vacuum_below_worldline(self, w: BumpWeight | Cos2Weight) -> None:
        """K(u) ≤ u⁴/4 makes the point-split value at most the worldline bound."""
        vacuum = vacuum_reference_bound(w, 1.0)
        assert 0.0 < vacuum.q_value < worldline_qwei_bound(w, 1.0).q_value
        assert vacuum.ratio_to_worldline is not None
        assert 0.0 < vacuum.ratio_to_worldline < 1.0

    def test_cos2_massless_matches_worldline(self, cos2: Cos2Weight) -> None:
        """At m=0 both routes give π²/64 for the cos² window."""
        vacuum = vacuum_reference_bound(cos2, 0.0)
        assert vacuum.q_value == pytest.approx(math.pi**2 / 64.0, rel=1e-10)
        assert vacuum.ratio_to_worldline == pytest.approx(1.0, rel=1e-10)


class TestWorldlineDecomposition:
    """Tests for WorldlineDecomposition."""

    def test_symbols_sum_to_twice_omega_squared(self) -> None:
        """Σ_j |c_j(p)|² = 2ω² on shell."""
        decomposition = WorldlineDecomposition()
        p = np.array([[0.3, -1.2, 0.5], [0.0, 0.0, 2.0]])
        m = 0.7
        squared = decomposition.squared_symbols(p, m)
        assert squared.shape == (2, 5)
        omega_sq = np.sum(p * p, axis=1) + m * m
        np.testing.assert_allclose(squared.sum(axis=1), 2.0 * omega_sq)
        np.testing.assert_allclose(
            decomposition.radial_weight(np.sqrt(np.sum(p * p, axis=1)), m), 2.0 * omega_sq
        )


class TestScalingCurve:
    """Tests for scaling_curve and exponent fitting."""

    def test_massless_slope(self, gaussian: GaussianWeight) -> None:
        """m=0 gives slope -4 over any window."""
        taus = list(np.geomspace(0.25, 4.0, 16))
        curve = scaling_curve(gaussian, 0.0, taus, window=(0.25, 4.0))
        assert len(curve.bound_values) == 16
        assert curve.fitted_slope == pytest.approx(-4.0, abs=1e-6)
        products = [t**4 * b for t, b in zip(curve.tau_values, curve.bound_values, strict=True)]
        np.testing.assert_allclose(products, products[0], rtol=1e-8)
        assert local_slopes(curve) == pytest.approx([-4.0] * 15, abs=1e-6)

    def test_threads_give_identical_curves(self, bump: BumpWeight) -> None:
        """Thread fan-out preserves grid order and values."""
        taus = [0.5, 1.0, 2.0, 4.0]
        serial = scaling_curve(bump, 1.0, taus)
        threaded = scaling_curve(bump, 1.0, taus, workers=3)
        assert serial == threaded

    def test_arithmetic_spectrum_exponent(
        self, gaussian: GaussianWeight, arithmetic: ArithmeticSpectrum
    ) -> None:
        """N(u) ~ u gives Q ∝ τ^-5 at small τ."""
        curve = scaling_curve(
            gaussian, arithmetic, list(np.geomspace(1e-3, 1e-2, 5)), window=(1e-3, 1e-2)
        )
        assert curve.fitted_slope == pytest.approx(-5.0, abs=0.1)

    def test_power_law_spectrum_exponent(
        self, gaussian: GaussianWeight, quadratic: PowerLawSpectrum
    ) -> None:
        """N(u) ~ u² gives Q ∝ τ^-6 at small τ."""
        curve = scaling_curve(
            gaussian, quadratic, list(np.geomspace(1e-3, 1e-2, 5)), window=(1e-3, 1e-2)
        )
        assert curve.fitted_slope == pytest.approx(-6.0, abs=0.15)

    def test_window_with_too_few_points(self, gaussian: GaussianWeight) -> None:
        """A window holding two points raises InsufficientPoints."""
        curve = scaling_curve(gaussian, 0.0, [1.0, 2.0, 4.0])
        with pytest.raises(InsufficientPoints):
            fit_scaling_exponent(curve, (1.5, 4.0))

    def test_rejects_non_positive_tau(self, gaussian: GaussianWeight) -> None:
        """τ ≤ 0 raises NonPositiveScale."""
        with pytest.raises(NonPositiveScale):
            scaling_curve(gaussian, 0.0, [0.0, 1.0])

    def test_rejects_unsorted_grid(self, gaussian: GaussianWeight) -> None:
        """τ values must be strictly increasing."""
        with pytest.raises(ValueError, match="strictly increasing"):
            scaling_curve(gaussian, 0.0, [2.0, 1.0])
