"""Unit tests for log-log power-law fitting."""

import numpy as np
import pytest

from qeilab.errors import InsufficientPoints
from qeilab.numerics import fit_power_law, local_slopes, select_window


class TestFitPowerLaw:
    """Tests for fit_power_law."""

    def test_exact_power_law(self) -> None:
        """y = 3x^-4 gives slope -4 and a vanishing residual."""
        x = np.geomspace(0.25, 4.0, 16)
        fit = fit_power_law(x, 3.0 * x**-4.0)
        assert fit.slope == pytest.approx(-4.0, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
        assert fit.residual < 1e-12
        assert fit.points == 16

    def test_window_restricts_points(self) -> None:
        """Only points inside [lo, hi] enter the fit."""
        x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        y = np.where(x <= 4.0, x**2, x**5)
        fit = fit_power_law(x, y, window=(1.0, 4.0))
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.points == 3
        assert fit.window == (1.0, 4.0)

    def test_too_few_points(self) -> None:
        """Fewer than three points in the window raises InsufficientPoints."""
        x = np.array([1.0, 2.0, 4.0, 8.0])
        with pytest.raises(InsufficientPoints) as exc_info:
            fit_power_law(x, x, window=(3.0, 9.0))
        assert exc_info.value.count == 2

    def test_non_positive_values(self) -> None:
        """Zero ordinates cannot be fitted in log space."""
        with pytest.raises(ValueError, match="positive"):
            fit_power_law([1.0, 2.0, 3.0], [1.0, 0.0, 1.0])


class TestSelectWindow:
    """Tests for select_window."""

    def test_endpoints_are_inclusive(self) -> None:
        """Grid endpoints survive rounding from geomspace."""
        x = np.geomspace(1e-3, 1e-2, 5)
        assert select_window(x, (1e-3, 1e-2)).all()

    def test_none_selects_all(self) -> None:
        """No window keeps every point."""
        assert select_window([1.0, 2.0], None).tolist() == [True, True]


class TestLocalSlopes:
    """Tests for local_slopes."""

    def test_constant_slope(self) -> None:
        """A pure power law has the same slope between every pair."""
        x = np.array([1.0, 2.0, 4.0])
        assert local_slopes(x, x**2) == pytest.approx([2.0, 2.0])
