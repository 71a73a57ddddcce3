"""Sampling functions g along an inertial worldline and their Fourier data.

Every weight describes g_τ(t) = τ^-1/2 g(t/τ). The analytic families are a
base profile p on [-1, 1] (or a gaussian) shifted to ``center`` and stretched
to ``width``; the scale τ stretches both.
"""

import functools
import logging
import math
from typing import overload

import numpy as np
import numpy.typing as npt
from scipy.interpolate import CubicSpline

from qeilab.errors import NonPositiveScale, ResolutionError
from qeilab.models.results import QuadratureResult
from qeilab.models.weight import (
    BumpWeight,
    Cos2Weight,
    GaussianWeight,
    SampledWeight,
    SamplesParams,
    Weight,
)
from qeilab.numerics.envelope import DecayEnvelope
from qeilab.numerics.fourier import (
    ComplexArray,
    GridSpec,
    SpectralSamples,
    direct_transform,
    fft_transform,
    panel_rule,
)
from qeilab.numerics.quadrature import FloatArray, integrate_finite, integrate_semi_infinite

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(np.float64).eps)

GAUSSIAN_EFFECTIVE_HALF_WIDTH = 8.6
"""ガウス重みの実効サポート半幅（σ 単位、|g| < 1e-16·max）。"""

_BUMP_BREAKS = np.unique(
    np.concatenate(
        [
            np.linspace(-0.5, 0.5, 5),
            [s * (1.0 - 2.0**-k) for s in (-1.0, 1.0) for k in range(1, 13)],
            [-1.0, 1.0],
        ]
    )
)

# |p̂(v)|² ≤ 16π⁴/9 · v^-6 for v ≥ 2π (cos² window on [-1, 1]).
_COS2_POWER_CONST = 16.0 * math.pi**4 / 9.0
# |(p²)^(v)| ≤ 64π⁴/15 · v^-5 for v ≥ 4π.
_COS2_SQUARE_CONST = 64.0 * math.pi**4 / 15.0
# ∫ p''² over [-1, 1] for p = cos²(πx/2).
_COS2_CURVATURE = math.pi**4 / 4.0
_BUMP_L1 = 0.4439938161680794

EDGE_TOLERANCE = 1e-12
"""サンプル表の端点値をゼロとみなす相対閾値。"""

NOISE_ULPS = 256.0
"""数値フーリエ変換の丸め誤差（∫|g| に対する eps の倍数）。"""


def _bump_profile(x: FloatArray) -> FloatArray:
    inside = np.abs(x) < 1.0
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def _cos2_profile(x: FloatArray) -> FloatArray:
    return np.where(np.abs(x) <= 1.0, np.cos(0.5 * math.pi * x) ** 2, 0.0)


def _box(v: FloatArray) -> FloatArray:
    """Transform of the indicator of [-1, 1]: 2 sin(v)/v."""
    return 2.0 * np.sinc(v / math.pi)


def _cos2_transform(v: FloatArray) -> FloatArray:
    return 0.5 * _box(v) + 0.25 * (_box(v + math.pi) + _box(v - math.pi))


def _cos2_square_transform(v: FloatArray) -> FloatArray:
    return (
        0.375 * _box(v)
        + 0.25 * (_box(v + math.pi) + _box(v - math.pi))
        + 0.0625 * (_box(v + 2.0 * math.pi) + _box(v - 2.0 * math.pi))
    )


@functools.cache
def _spline(params: SamplesParams) -> CubicSpline:
    # Zero end slopes: a table that vanishes at both ends joins the zero extension in C¹.
    return CubicSpline(np.asarray(params.t), np.asarray(params.g), bc_type="clamped")


@functools.cache
def _edges_vanish(params: SamplesParams) -> bool:
    g = np.abs(np.asarray(params.g))
    scale = float(g.max())
    return scale == 0.0 or max(float(g[0]), float(g[-1])) <= EDGE_TOLERANCE * scale


def _samples_decay(params: SamplesParams) -> float:
    """Decay power q of |ŝ(v)|, capped by what the table edges allow.

    A table vanishing at both ends gives a C¹ profile whose second derivative
    jumps at the edges, so |ŝ| ~ v^-3. Any non-zero edge is a jump and
    |ŝ| ~ v^-1.
    """
    structural = 3.0 if _edges_vanish(params) else 1.0
    return min(params.decay, structural)


def _samples_profile(params: SamplesParams) -> "functools.partial[FloatArray]":
    return functools.partial(_evaluate_spline, params)


def _evaluate_spline(params: SamplesParams, x: FloatArray) -> FloatArray:
    inside = (x >= params.t[0]) & (x <= params.t[-1])
    out = np.zeros_like(x)
    out[inside] = _spline(params)(x[inside])
    return out


@functools.cache
def _samples_norms(params: SamplesParams) -> tuple[float, float]:
    """Return (∫|s|, ∫s²) of the spline profile."""
    x, wts = panel_rule(np.asarray(params.t), max_panel=math.inf)
    values = _evaluate_spline(params, x)
    return float(np.abs(values) @ wts), float((values * values) @ wts)


@functools.cache
def _samples_curvature(params: SamplesParams) -> float:
    """Return ∫ s''² of the spline; s'' is linear between knots."""
    t = np.asarray(params.t)
    second = _spline(params)(t, 2)
    a, b = second[:-1], second[1:]
    return math.fsum(np.diff(t) * (a * a + a * b + b * b) / 3.0)


def _scaled(w: Weight) -> tuple[float, float]:
    """Return the stretched (width, center) of an analytic family."""
    assert not isinstance(w, SampledWeight)
    return w.tau * w.params.width, w.tau * w.params.center


@overload
def evaluate(w: Weight, t: float) -> float: ...
@overload
def evaluate(w: Weight, t: npt.NDArray[np.float64]) -> FloatArray: ...
def evaluate(w: Weight, t: float | FloatArray) -> float | FloatArray:
    """Evaluate g_τ(t) = τ^-1/2 g(t/τ).

    Args:
        w: Weight descriptor.
        t: Time or array of times.

    Returns:
        Value(s) of the rescaled profile; zero outside a compact support.
    """
    x = np.asarray(t, dtype=np.float64)
    flat = np.atleast_1d(x).ravel()
    if isinstance(w, SampledWeight):
        out = _evaluate_spline(w.params, flat / w.tau) / math.sqrt(w.tau)
    else:
        width, center = _scaled(w)
        y = (flat - center) / width
        if isinstance(w, GaussianWeight):
            out = math.pi**-0.25 * width**-0.5 * np.exp(-0.5 * y * y)
        elif isinstance(w, BumpWeight):
            out = _bump_profile(y) / math.sqrt(w.tau)
        else:
            out = _cos2_profile(y) / math.sqrt(w.tau)
    if x.ndim == 0:
        return float(out[0])
    return out.reshape(x.shape)


def rescale(w: Weight, tau: float) -> Weight:
    """Return the weight g_τ, composing with any scale already applied.

    Raises:
        NonPositiveScale: If ``tau`` is not a positive finite number.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise NonPositiveScale(tau)
    return w.model_copy(update={"tau": w.tau * tau})


def support(w: Weight) -> tuple[float, float] | None:
    """Closed support interval of g_τ, or None for the unbounded gaussian."""
    if isinstance(w, GaussianWeight):
        return None
    if isinstance(w, SampledWeight):
        return w.tau * w.params.t[0], w.tau * w.params.t[-1]
    width, center = _scaled(w)
    return center - width, center + width


def _effective_support(w: Weight) -> tuple[float, float]:
    bounds = support(w)
    if bounds is not None:
        return bounds
    width, center = _scaled(w)
    half = GAUSSIAN_EFFECTIVE_HALF_WIDTH * width
    return center - half, center + half


def frequency_scale(w: Weight) -> float:
    """Characteristic angular frequency 1/(τ·width) of ĝ_τ."""
    if isinstance(w, SampledWeight):
        return 2.0 / (w.tau * (w.params.t[-1] - w.params.t[0]))
    width, _ = _scaled(w)
    return 1.0 / width


def weight_metadata(w: Weight) -> dict[str, str | bool]:
    """Flags describing how the weight relates to the compact-support hypothesis."""
    if isinstance(w, SampledWeight):
        smoothness = "C1" if _edges_vanish(w.params) else "discontinuous"
    else:
        smoothness = {"gaussian": "C_infinity", "bump": "C_infinity", "cos2": "C1"}[w.family]
    return {
        "family": w.family,
        "smoothness": smoothness,
        "schwartz_class_only": isinstance(w, GaussianWeight),
        "compact_support": not isinstance(w, GaussianWeight),
    }


def transform(w: Weight, u: npt.ArrayLike) -> ComplexArray:
    """Evaluate ĝ_τ(u) = ∫ dt e^{iut} g_τ(t) at arbitrary frequencies."""
    freqs = np.asarray(u, dtype=np.float64)
    if isinstance(w, SampledWeight):
        base = direct_transform(_samples_profile(w.params), w.params.t, w.tau * freqs)
        return np.asarray(math.sqrt(w.tau) * base, dtype=np.complex128)
    width, center = _scaled(w)
    phase = np.exp(1j * freqs * center)
    v = width * freqs
    if isinstance(w, GaussianWeight):
        amp = math.sqrt(2.0 * math.pi * width) * math.pi**-0.25 * np.exp(-0.5 * v * v)
        return np.asarray(amp * phase, dtype=np.complex128)
    if isinstance(w, Cos2Weight):
        base = _cos2_transform(v).astype(np.complex128)
    else:
        base = direct_transform(_bump_profile, _BUMP_BREAKS, v)
    return np.asarray(width / math.sqrt(w.tau) * base * phase, dtype=np.complex128)


def square_transform(w: Weight, u: npt.ArrayLike) -> ComplexArray:
    """Evaluate ĥ_τ(u) for h_τ(t) = |g_τ(t)|²."""
    freqs = np.asarray(u, dtype=np.float64)
    if isinstance(w, SampledWeight):
        spline_profile = _samples_profile(w.params)

        def squared(x: FloatArray) -> FloatArray:
            s = spline_profile(x)
            return s * s

        base = direct_transform(squared, w.params.t, w.tau * freqs)
        return np.asarray(base, dtype=np.complex128)
    width, center = _scaled(w)
    phase = np.exp(1j * freqs * center)
    v = width * freqs
    if isinstance(w, GaussianWeight):
        return np.asarray(np.exp(-0.25 * v * v) * phase, dtype=np.complex128)
    if isinstance(w, Cos2Weight):
        base = _cos2_square_transform(v).astype(np.complex128)
    else:

        def bump_squared(x: FloatArray) -> FloatArray:
            b = _bump_profile(x)
            return b * b

        base = direct_transform(bump_squared, _BUMP_BREAKS, v)
    return np.asarray(width / w.tau * base * phase, dtype=np.complex128)


def power_spectrum(w: Weight, u: npt.ArrayLike) -> FloatArray:
    """Evaluate |ĝ_τ(u)|²."""
    freqs = np.asarray(u, dtype=np.float64)
    if isinstance(w, GaussianWeight):
        width, _ = _scaled(w)
        return 2.0 * math.sqrt(math.pi) * width * np.exp(-((width * freqs) ** 2))
    g_hat = transform(w, freqs)
    return np.asarray(g_hat.real**2 + g_hat.imag**2, dtype=np.float64)


def power_envelope(w: Weight) -> DecayEnvelope:
    """Declared decay envelope bounding |ĝ_τ(u)|²."""
    if isinstance(w, SampledWeight):
        l1, _ = _samples_norms(w.params)
        length = w.params.t[-1] - w.params.t[0]
        u_c = 2.0 * math.pi / (w.tau * length)
        q = _samples_decay(w.params)
        return DecayEnvelope(
            amplitude=w.tau * l1 * l1 * u_c ** (2.0 * q),
            power=-2.0 * q,
            valid_from=u_c,
        )
    width, _ = _scaled(w)
    if isinstance(w, GaussianWeight):
        return DecayEnvelope(
            amplitude=2.0 * math.sqrt(math.pi) * width, rate=width**2, shape=2.0
        )
    if isinstance(w, BumpWeight):
        return DecayEnvelope(
            amplitude=8.0 * width**2 / w.tau, rate=1.8 * math.sqrt(width), shape=0.5
        )
    return DecayEnvelope(
        amplitude=_COS2_POWER_CONST * width**-4 / w.tau,
        power=-6.0,
        valid_from=2.0 * math.pi / width,
    )


def square_envelope(w: Weight) -> DecayEnvelope:
    """Declared decay envelope bounding |ĥ_τ(u)|."""
    if isinstance(w, SampledWeight):
        _, l2 = _samples_norms(w.params)
        length = w.params.t[-1] - w.params.t[0]
        u_c = 2.0 * math.pi / (w.tau * length)
        q = _samples_decay(w.params)
        return DecayEnvelope(amplitude=l2 * u_c**q, power=-q, valid_from=u_c)
    width, _ = _scaled(w)
    if isinstance(w, GaussianWeight):
        return DecayEnvelope(amplitude=1.0, rate=0.25 * width**2, shape=2.0)
    if isinstance(w, BumpWeight):
        return DecayEnvelope(
            amplitude=2.0 * width / w.tau, rate=1.2 * math.sqrt(width), shape=0.5
        )
    return DecayEnvelope(
        amplitude=_COS2_SQUARE_CONST * width**-4 / w.tau,
        power=-5.0,
        valid_from=4.0 * math.pi / width,
    )


def curvature_norm(w: Weight) -> float | None:
    """Return ∫ |g_τ''(t)|² dt for weights whose spectrum decays polynomially.

    By Parseval this equals (1/π) ∫_0^∞ u⁴ |ĝ_τ(u)|² du, which lets slowly
    decaying spectra be integrated as a total minus a finite head. Returns
    None for the gaussian and bump families and for tables that do not
    vanish at both ends.
    """
    if isinstance(w, Cos2Weight):
        width, _ = _scaled(w)
        return _COS2_CURVATURE / (w.tau * width**3)
    if isinstance(w, SampledWeight) and _edges_vanish(w.params):
        return _samples_curvature(w.params) / w.tau**4
    return None


def l1_norm(w: Weight) -> float:
    """Return ∫ |g_τ(t)| dt, the sup of |ĝ_τ|."""
    if isinstance(w, SampledWeight):
        l1, _ = _samples_norms(w.params)
        return math.sqrt(w.tau) * l1
    width, _ = _scaled(w)
    if isinstance(w, GaussianWeight):
        return math.pi**-0.25 * math.sqrt(2.0 * math.pi * width)
    base = _BUMP_L1 if isinstance(w, BumpWeight) else 1.0
    return base * width / math.sqrt(w.tau)


def transform_noise(w: Weight) -> float:
    """Absolute round-off level of ``transform(w, u)``; zero for the gaussian."""
    if isinstance(w, GaussianWeight):
        return 0.0
    ulps = 8.0 if isinstance(w, Cos2Weight) else NOISE_ULPS
    return ulps * _EPS * l1_norm(w)


def power_noise(w: Weight, u: npt.ArrayLike) -> FloatArray:
    """Absolute round-off level of ``power_spectrum(w, u)``.

    Uses |ĝ_τ| ≤ min(√envelope, ∫|g_τ|) for the size of the exact value.
    """
    freqs = np.asarray(u, dtype=np.float64)
    delta = transform_noise(w)
    if delta == 0.0:
        return np.zeros_like(freqs)
    size = np.minimum(np.sqrt(power_envelope(w)(freqs)), l1_norm(w))
    return np.asarray(2.0 * size * delta + delta * delta, dtype=np.float64)


def norm_squared(w: Weight, tol: float = 1e-12) -> QuadratureResult:
    """Compute ‖g_τ‖₂² = ∫ |g_τ(t)|² dt by quadrature."""

    def integrand(t: FloatArray) -> FloatArray:
        g = evaluate(w, t)
        return g * g

    bounds = support(w)
    if bounds is None:
        width, center = _scaled(w)
        right = integrate_semi_infinite(integrand, center, tol, scale=width)
        left = integrate_semi_infinite(
            lambda t: integrand(2.0 * center - t), center, tol, scale=width
        )
        return QuadratureResult(
            value=left.value + right.value,
            error_estimate=left.error_estimate + right.error_estimate,
            segments_used=left.segments_used + right.segments_used,
            intervals_used=left.intervals_used + right.intervals_used,
        )
    if isinstance(w, SampledWeight):
        knots = w.tau * np.asarray(w.params.t)
        pieces = [
            integrate_finite(integrand, float(lo), float(hi), tol, abs_tol=1e-300)
            for lo, hi in zip(knots[:-1], knots[1:], strict=True)
        ]
        return QuadratureResult(
            value=math.fsum(p.value for p in pieces),
            error_estimate=math.fsum(p.error_estimate for p in pieces),
            segments_used=len(pieces),
            intervals_used=sum(p.intervals_used for p in pieces),
        )
    return integrate_finite(integrand, bounds[0], bounds[1], tol, abs_tol=1e-300)


def _check_resolution(w: Weight, grid: GridSpec) -> None:
    if grid.du is None:
        return
    lo, hi = _effective_support(w)
    limit = 2.0 * math.pi / (hi - lo)
    if grid.du > limit:
        raise ResolutionError(
            f"Grid spacing du={grid.du:.6g} cannot resolve support width "
            f"{hi - lo:.6g}; need du <= {limit:.6g}"
        )


def _sample(w: Weight, grid: GridSpec, square: bool) -> SpectralSamples:
    _check_resolution(w, grid)
    closed_form = isinstance(w, GaussianWeight | Cos2Weight)
    if grid.is_uniform and not closed_form:

        def profile(t: FloatArray) -> FloatArray:
            g = evaluate(w, t)
            return g * g if square else g

        lo, hi = _effective_support(w)
        nodes, values = fft_transform(profile, lo, hi, grid)
    else:
        nodes = grid.nodes()
        values = square_transform(w, nodes) if square else transform(w, nodes)
    if square:
        tail = square_envelope(w).tail_integral(grid.u_max)
    else:
        tail = power_envelope(w).tail_integral(grid.u_max)
    return SpectralSamples(
        grid=nodes,
        values=values,
        cutoff=grid.u_max,
        tail_error=tail,
        metadata=weight_metadata(w),
    )


def fourier_transform_weight(w: Weight, grid: GridSpec) -> SpectralSamples:
    """Sample ĝ_τ(u) = ∫ dt e^{iut} g_τ(t) on a frequency grid.

    Gaussian and cos² weights use their closed forms; bump and sampled
    weights use an FFT on uniform grids and Gauss-Legendre panels on explicit
    grids. ``tail_error`` bounds ∫_{u_max}^∞ |ĝ_τ|² under the declared envelope.

    Raises:
        ResolutionError: If a uniform grid cannot resolve the support width.
    """
    return _sample(w, grid, square=False)


def power_spectrum_of_square(w: Weight, grid: GridSpec) -> SpectralSamples:
    """Sample ĥ_τ(u) for h_τ = |g_τ|² on a frequency grid.

    ``tail_error`` bounds ∫_{u_max}^∞ |ĥ_τ| under the declared envelope.

    Raises:
        ResolutionError: If a uniform grid cannot resolve the support width.
    """
    return _sample(w, grid, square=True)


__all__ = [
    "EDGE_TOLERANCE",
    "NOISE_ULPS",
    "curvature_norm",
    "evaluate",
    "fourier_transform_weight",
    "frequency_scale",
    "l1_norm",
    "norm_squared",
    "power_envelope",
    "power_noise",
    "power_spectrum",
    "power_spectrum_of_square",
    "rescale",
    "square_envelope",
    "square_transform",
    "support",
    "transform",
    "transform_noise",
    "weight_metadata",
]
