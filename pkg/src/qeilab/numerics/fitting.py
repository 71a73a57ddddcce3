"""Log-log least-squares fitting of power laws."""

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from qeilab.errors import InsufficientPoints
from qeilab.models.results import ExponentFit

logger = logging.getLogger(__name__)

_WINDOW_SLACK = 1e-12


def select_window(
    x: npt.ArrayLike, window: tuple[float, float] | None
) -> npt.NDArray[np.bool_]:
    """Mask of points with lo ≤ x ≤ hi (all points when ``window`` is None)."""
    xs = np.asarray(x, dtype=np.float64)
    if window is None:
        return np.ones(xs.shape, dtype=bool)
    lo, hi = sorted(window)
    return (xs >= lo * (1.0 - _WINDOW_SLACK)) & (xs <= hi * (1.0 + _WINDOW_SLACK))


def fit_power_law(
    x: Sequence[float] | npt.ArrayLike,
    y: Sequence[float] | npt.ArrayLike,
    window: tuple[float, float] | None = None,
) -> ExponentFit:
    """Fit log(y) = intercept + slope·log(x) by ordinary least squares.

    Args:
        x: Positive abscissae.
        y: Positive ordinates.
        window: Inclusive [lo, hi] range of x to fit; all points when None.

    Returns:
        ExponentFit with the RMS of the log residuals.

    Raises:
        InsufficientPoints: If fewer than 3 points fall in the window.
        ValueError: If a value in the window is not positive.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    mask = select_window(xs, window)
    count = int(mask.sum())
    if count < 3:
        raise InsufficientPoints(count)
    xw, yw = xs[mask], ys[mask]
    if np.any(xw <= 0) or np.any(yw <= 0):
        raise ValueError("log-log fit requires positive x and y values")
    lx, ly = np.log(xw), np.log(yw)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = math.sqrt(float(np.mean((ly - (intercept + slope * lx)) ** 2)))
    logger.debug("fit_power_law: slope=%.6f residual=%.3e points=%d", slope, residual, count)
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        points=count,
        window=(float(xw.min()), float(xw.max())),
    )


def local_slopes(x: npt.ArrayLike, y: npt.ArrayLike) -> list[float]:
    """Successive log-log slopes d(log y)/d(log x) between neighbouring points."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    return [float(s) for s in np.diff(ly) / np.diff(lx)]


__all__ = ["fit_power_law", "local_slopes", "select_window"]
