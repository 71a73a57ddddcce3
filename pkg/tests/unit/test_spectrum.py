"""Unit tests for mass spectra and nuclearity diagnostics."""

import math
import numpy as np
import pytest

from qeilab.errors import DivergenceDetected, InsufficientPoints
from qeilab.models import (
    ArithmeticSpectrum,
    ListSpectrum,
    LogarithmicSpectrum,
    PowerLawSpectrum,
    SeriesTest,
)
from qeilab.spectrum import (
    counting,
    first_masses,
    fit_nuclearity_exponent,
    growth_bound,
    index_function,
    mass,
    nuclearity_log_index,
    partition_sum,
)


class TestMasses:
    """Tests for mass and first_masses."""

    def test_arithmetic(self) -> None:
        """m_j = j·m0."""
        s = ArithmeticSpectrum(m0=0.5)
        assert mass(s, 3) == 1.5
        np.testing.assert_allclose(first_masses(s, 3), [0.5, 1.0, 1.5])

    def test_power_law(self, quadratic: PowerLawSpectrum) -> None:
        """m_n = (n/c)^(1/p)."""
        np.testing.assert_allclose(first_masses(quadratic, 4), [1.0, math.sqrt(2.0), math.sqrt(3.0), 2.0])

    def test_logarithmic(self, logarithmic: LogarithmicSpectrum) -> None:
        """m_j = s·log(j+1)."""
        assert mass(logarithmic, 1) == pytest.approx(math.log(2.0))

    def test_list_is_sorted(self) -> None:
        """List spectra are stored in ascending order."""
        s = ListSpectrum(masses=(3.0, 1.0, 2.0))
        assert mass(s, 1) == 1.0
        assert list(first_masses(s, 5)) == [1.0, 2.0, 3.0]

    def test_index_starts_at_one(self, arithmetic: ArithmeticSpectrum) -> None:
        """Index 0 is rejected."""
        with pytest.raises(ValueError, match=">= 1"):
            mass(arithmetic, 0)


class TestCounting:
    """Tests for counting N(u)."""

    def test_threshold_counts(self, arithmetic: ArithmeticSpectrum) -> None:
        """N(u) = #{j : m_j ≤ u} with θ(0) = 1."""
        assert counting(arithmetic, 0.0) == 0
        assert counting(arithmetic, 2.5) == 2
        assert counting(arithmetic, 3.0) == 3

    def test_power_law(self, quadratic: PowerLawSpectrum) -> None:
        """N(u) = ⌊u²⌋."""
        assert counting(quadratic, 2.0) == 4
        assert counting(quadratic, 1.9) == 3

    def test_multiplicity(self) -> None:
        """Repeated masses count once per species."""
        assert counting(ListSpectrum(masses=(1.0, 1.0, 2.0)), 1.0) == 2

    def test_agrees_with_index_function(self, logarithmic: LogarithmicSpectrum) -> None:
        """N(u) = ⌊ν(u)⌋ away from thresholds."""
        for u in (0.3, 1.7, 5.2):
            assert counting(logarithmic, u) == math.floor(float(index_function(logarithmic, u)))

    def test_huge_index_skips_threshold_walk(
        self, logarithmic: LogarithmicSpectrum
    ) -> None:
        """Beyond 2^53 species N(u) is ⌊ν(u)⌋ straight away."""
        assert counting(logarithmic, 100.0) == math.floor(math.expm1(100.0))

    def test_overflowing_index_raises(self, logarithmic: LogarithmicSpectrum) -> None:
        """A count beyond the float range is an error naming u."""
        with pytest.raises(ValueError, match="u=1000"):
            counting(logarithmic, 1000.0)

    def test_negative_u(self, arithmetic: ArithmeticSpectrum) -> None:
        """u < 0 is rejected."""
        with pytest.raises(ValueError):
            counting(arithmetic, -1.0)

    def test_growth_bound(self, quadratic: PowerLawSpectrum) -> None:
        """N(u) ≤ C·u^p·e^{γu}."""
        coefficient, power, rate = growth_bound(quadratic)
        assert (coefficient, power, rate) == (1.0, 2.0, 0.0)
        for u in (0.5, 3.3, 10.0):
            assert counting(quadratic, u) <= coefficient * u**power


class TestPartitionSum:
    """Tests for partition_sum."""

    def test_finite_list(self) -> None:
        """A finite list is summed directly."""
        result = partition_sum(ListSpectrum(masses=(1.0, 2.0)), 1.0)
        assert result.value == pytest.approx(math.exp(-1.0) + math.exp(-2.0), rel=1e-15)
        assert result.test == SeriesTest.FINITE
        assert result.truncation_error == 0.0

    def test_ratio_test(self, arithmetic: ArithmeticSpectrum) -> None:
        """Σ e^{-j} = 1/(e − 1) stops by the ratio test."""
        result = partition_sum(arithmetic, 1.0)
        assert result.value == pytest.approx(1.0 / math.expm1(1.0), rel=1e-13)
        assert result.test == SeriesTest.RATIO

    def test_integral_test(self, arithmetic: ArithmeticSpectrum) -> None:
        """Slowly decaying series continue with the integral test."""
        beta = 1e-3
        result = partition_sum(arithmetic, beta)
        assert result.value == pytest.approx(1.0 / math.expm1(beta), rel=1e-9)
        assert result.test == SeriesTest.INTEGRAL

    def test_logarithmic_spectrum_diverges(self, logarithmic: LogarithmicSpectrum) -> None:
        """Σ (j+1)^{-β} diverges for β ≤ 1."""
        with pytest.raises(DivergenceDetected) as exc_info:
            partition_sum(logarithmic, 0.5)
        assert exc_info.value.test == "integral"

    def test_logarithmic_spectrum_converges_for_large_beta(
        self, logarithmic: LogarithmicSpectrum
    ) -> None:
        """Σ (j+1)^{-3} = ζ(3) − 1."""
        result = partition_sum(logarithmic, 3.0)
        assert result.value == pytest.approx(1.2020569031595942 - 1.0, rel=1e-9)

    def test_beta_must_be_positive(self, arithmetic: ArithmeticSpectrum) -> None:
        """β ≤ 0 is rejected."""
        with pytest.raises(ValueError, match="beta"):
            partition_sum(arithmetic, 0.0)


class TestNuclearity:
    """Tests for nuclearity_log_index and fit_nuclearity_exponent."""

    def test_single_mass(self, single_mass: ListSpectrum) -> None:
        """m=β=r=c=1 gives |log(1 − e^{-1/2})| = 0.9327521."""
        estimate = nuclearity_log_index(single_mass, 1.0, 1.0, 1.0)
        assert estimate.log_index_bound == pytest.approx(0.9327521, abs=1e-6)
        assert estimate.test == SeriesTest.FINITE

    def test_prefactor(self, single_mass: ListSpectrum) -> None:
        """The bound carries c(r/β)³."""
        base = nuclearity_log_index(single_mass, 1.0, 1.0, 1.0).log_index_bound
        scaled = nuclearity_log_index(single_mass, 1.0, 2.0, 3.0).log_index_bound
        assert scaled == pytest.approx(24.0 * base, rel=1e-14)

    def test_decreasing_in_masses(self) -> None:
        """Heavier species give a smaller estimate."""
        light = nuclearity_log_index(ListSpectrum(masses=(1.0, 2.0)), 1.0)
        heavy = nuclearity_log_index(ListSpectrum(masses=(1.5, 2.0)), 1.0)
        assert heavy.log_index_bound < light.log_index_bound

    def test_logarithmic_spectrum_diverges(self, logarithmic: LogarithmicSpectrum) -> None:
        """The divergence flag fires for m_j = log(j+1) at β = 0.5."""
        with pytest.raises(DivergenceDetected):
            nuclearity_log_index(logarithmic, 0.5)

    def test_arithmetic_exponent(self, arithmetic: ArithmeticSpectrum) -> None:
        """N(u) ~ u gives log_index_bound ∝ β^-4."""
        fit = fit_nuclearity_exponent(arithmetic, list(np.geomspace(1e-3, 1e-2, 5)))
        assert fit.slope == pytest.approx(4.0, abs=0.2)

    def test_power_law_exponent(self, quadratic: PowerLawSpectrum) -> None:
        """N(u) ~ u² gives log_index_bound ∝ β^-5."""
        fit = fit_nuclearity_exponent(quadratic, list(np.geomspace(1e-3, 1e-2, 5)))
        assert fit.slope == pytest.approx(5.0, abs=0.3)

    def test_needs_three_betas(self, arithmetic: ArithmeticSpectrum) -> None:
        """Fewer than three β values raise InsufficientPoints."""
        with pytest.raises(InsufficientPoints):
            fit_nuclearity_exponent(arithmetic, [0.1, 0.2])

    @pytest.mark.parametrize(("name", "kwargs"), [("beta", {"beta": 0.0}), ("r", {"r": -1.0})])
    def test_rejects_non_positive(
        self, single_mass: ListSpectrum, name: str, kwargs: dict[str, float]
    ) -> None:
        """β, r and c must be positive."""
        params = {"beta": 1.0, "r": 1.0, "c": 1.0} | kwargs
        with pytest.raises(ValueError, match=name):
            nuclearity_log_index(single_mass, **params)
