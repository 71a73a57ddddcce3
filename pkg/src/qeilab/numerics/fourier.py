"""Fourier-transform machinery with the convention ĝ(u) = ∫ dt e^{iut} g(t).

Two evaluation routes are provided:
- ``fft_transform``: uniform frequency grids via ``numpy.fft`` with the phase
  factor for the time origin
- ``direct_transform``: arbitrary frequencies via composite Gauss-Legendre
  panels short enough to resolve the highest requested frequency
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Self

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qeilab.errors import ResolutionError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
Profile = Callable[[FloatArray], FloatArray]

GAUSS_LEGENDRE_ORDER = 16
"""パネルあたりの Gauss-Legendre 節点数。"""

MIN_SAMPLES_ACROSS_SUPPORT = 512
"""FFT でサポート幅に置く最小サンプル数。"""

MAX_DIRECT_NODES = 400_000
"""直接変換で使う時間節点数の上限。"""

_DIRECT_CELLS = 1 << 22

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_LEGENDRE_ORDER)


class GridSpec(BaseModel):
    """周波数グリッドの指定（一様 FFT グリッドまたは明示的な点列）。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    u_max: float = Field(default=20.0, gt=0, description="カットオフ U_max")
    du: float | None = Field(default=None, gt=0, description="一様グリッドの間隔")
    points: tuple[float, ...] | None = Field(default=None, description="明示的な周波数点")

    @model_validator(mode="after")
    def validate_grid(self) -> Self:
        """Exactly one of du or points; explicit points are sorted and non-negative."""
        if (self.du is None) == (self.points is None):
            raise ValueError("exactly one of du or points must be given")
        if self.points is not None:
            if any(p < 0 for p in self.points):
                raise ValueError("grid points must be non-negative")
            if any(b <= a for a, b in zip(self.points, self.points[1:], strict=False)):
                raise ValueError("grid points must be strictly increasing")
            if self.points and self.points[-1] > self.u_max:
                raise ValueError("grid points must not exceed u_max")
        return self

    @classmethod
    def uniform(cls, du: float, u_max: float) -> Self:
        return cls(du=du, u_max=u_max)

    @classmethod
    def explicit(cls, points: npt.ArrayLike) -> Self:
        """Build an explicit grid; 0 is prepended when missing."""
        pts = [float(p) for p in np.atleast_1d(np.asarray(points, dtype=np.float64))]
        if not pts or pts[0] != 0.0:
            pts.insert(0, 0.0)
        return cls(points=tuple(pts), u_max=max(pts[-1], 1e-300))

    @property
    def is_uniform(self) -> bool:
        return self.du is not None

    def nodes(self) -> FloatArray:
        """Return the grid abscissae (starting at 0)."""
        if self.points is not None:
            return np.asarray(self.points, dtype=np.float64)
        assert self.du is not None
        count = int(math.floor(self.u_max / self.du + 1e-9)) + 1
        return np.arange(count, dtype=np.float64) * self.du


@dataclass(frozen=True)
class SpectralSamples:
    """周波数グリッド上の ĝ(u) または ĥ(u) のサンプル。

    Attributes:
        grid: 狭義単調増加で 0 から始まる周波数
        values: 各周波数での値（実数のパワースペクトルも複素数として保持）
        cutoff: カットオフ U_max
        tail_error: 宣言された減衰包絡線による ∫_{U_max}^∞ の上界
    """

    grid: FloatArray
    values: ComplexArray
    cutoff: float
    tail_error: float
    metadata: dict[str, str | bool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if self.grid.size == 0 or self.grid[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not self.tail_error >= 0.0:
            raise ValueError(f"tail_error must be non-negative, got {self.tail_error}")

    def interpolate(self, u: npt.ArrayLike) -> ComplexArray:
        """Linearly interpolate the samples; negative u uses conjugate symmetry."""
        x = np.asarray(u, dtype=np.float64)
        ax = np.abs(x)
        re = np.interp(ax, self.grid, self.values.real, right=0.0)
        im = np.interp(ax, self.grid, self.values.imag, right=0.0)
        out = re + 1j * np.where(x < 0, -im, im)
        return np.asarray(out, dtype=np.complex128)


def panel_rule(
    breakpoints: npt.ArrayLike, max_panel: float
) -> tuple[FloatArray, FloatArray]:
    """Composite Gauss-Legendre nodes and weights over consecutive breakpoints.

    Each interval between breakpoints is split into equal panels no longer
    than ``max_panel``.
    """
    bp = np.asarray(breakpoints, dtype=np.float64)
    nodes: list[FloatArray] = []
    weights: list[FloatArray] = []
    for lo, hi in zip(bp[:-1], bp[1:], strict=True):
        n = max(1, math.ceil((hi - lo) / max_panel))
        edges = np.linspace(lo, hi, n + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        halves = 0.5 * np.diff(edges)
        nodes.append((centers[:, None] + halves[:, None] * _GL_NODES[None, :]).ravel())
        weights.append((halves[:, None] * _GL_WEIGHTS[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def direct_transform(
    profile: Profile, breakpoints: npt.ArrayLike, u: npt.ArrayLike
) -> ComplexArray:
    """Evaluate ∫ e^{iut} f(t) dt over the breakpoint range at arbitrary u.

    Args:
        profile: Vectorized real function f(t), zero outside the breakpoints.
        breakpoints: Increasing abscissae covering the support; the function
            should be smooth between consecutive breakpoints.
        u: Frequencies.

    Returns:
        Complex transform values with the shape of ``u``.

    Raises:
        ResolutionError: If resolving the highest frequency needs more than
            ``MAX_DIRECT_NODES`` time nodes.
    """
    freqs = np.asarray(u, dtype=np.float64)
    flat = freqs.ravel()
    u_top = float(np.max(np.abs(flat))) if flat.size else 0.0
    max_panel = 2.0 * math.pi / max(u_top, 1.0)
    t, w = panel_rule(breakpoints, max_panel)
    if t.size > MAX_DIRECT_NODES:
        raise ResolutionError(
            f"Frequency u={u_top:.6g} needs {t.size} time nodes "
            f"(limit {MAX_DIRECT_NODES})"
        )
    fw = profile(t) * w
    out = np.empty(flat.size, dtype=np.complex128)
    step = max(1, _DIRECT_CELLS // max(t.size, 1))
    for start in range(0, flat.size, step):
        block = flat[start : start + step]
        out[start : start + step] = np.exp(1j * block[:, None] * t[None, :]) @ fw
    return out.reshape(freqs.shape)


def fft_transform(
    profile: Profile, t_min: float, t_max: float, grid: GridSpec
) -> tuple[FloatArray, ComplexArray]:
    """Evaluate ∫ e^{iut} f(t) dt on a uniform grid with one FFT.

    Args:
        profile: Vectorized real function supported in [t_min, t_max].
        t_min: Left end of the support.
        t_max: Right end of the support.
        grid: Uniform frequency grid.

    Returns:
        Tuple of (frequencies, transform values).

    Raises:
        ResolutionError: If the spacing is too coarse for the support width.
    """
    if grid.du is None:
        raise ValueError("fft_transform requires a uniform grid")
    width = t_max - t_min
    if grid.du > 2.0 * math.pi / width:
        raise ResolutionError(
            f"Grid spacing du={grid.du:.6g} cannot resolve support width "
            f"{width:.6g}; need du <= {2.0 * math.pi / width:.6g}"
        )
    u = grid.nodes()
    needed = max(
        2.0 * grid.u_max / grid.du,
        MIN_SAMPLES_ACROSS_SUPPORT * 2.0 * math.pi / (width * grid.du),
    )
    n = 1 << max(4, math.ceil(math.log2(needed)))
    dt = 2.0 * math.pi / (n * grid.du)
    if grid.u_max > math.pi / dt:
        raise ResolutionError(
            f"Cutoff u_max={grid.u_max:.6g} exceeds Nyquist frequency {math.pi / dt:.6g}"
        )
    t = t_min + dt * np.arange(n)
    samples = np.where(t <= t_max, profile(t), 0.0)
    spectrum = np.fft.ifft(samples) * n * dt
    logger.debug("fft_transform: n=%d dt=%.3e du=%.3e", n, dt, grid.du)
    values = spectrum[: u.size] * np.exp(1j * u * t_min)
    return u, np.asarray(values, dtype=np.complex128)


__all__ = [
    "GAUSS_LEGENDRE_ORDER",
    "ComplexArray",
    "MAX_DIRECT_NODES",
    "GridSpec",
    "Profile",
    "SpectralSamples",
    "direct_transform",
    "fft_transform",
    "panel_rule",
]
