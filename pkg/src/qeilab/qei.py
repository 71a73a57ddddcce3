"""Quantum weak energy inequality bounds along an inertial worldline.

Three routes compute the magnitude Q[g] of the state-independent lower bound
on ∫dt |g(t)|² ⟨:ρ(t,0):⟩:

- worldline: (1/16π³)∫_m^∞ u⁴|ĝ(u)|² du for a single mass m
- gff: the same integrand weighted by the mass counting function N(u)
- vacuum_reference: the point-split construction, summing the squared
  worldline symbols against the vacuum two-point function

Weights whose spectrum decays only polynomially (cos² and tables vanishing
at their ends) are not integrated out to infinity. Their full integral
(1/16π³)∫_0^∞ u⁴|ĝ|² = ∫|g''|²/16π² is known in closed form, so each route
subtracts a finite head instead.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from qeilab.errors import ConvergenceError, DivergenceDetected, NonPositiveScale
from qeilab.models.results import BoundRoute, ExponentFit, QeiBound, ScalingCurve
from qeilab.models.spectrum import ListSpectrum, MassSpectrum
from qeilab.models.weight import Weight
from qeilab.numerics.envelope import DecayEnvelope
from qeilab.numerics.fitting import fit_power_law
from qeilab.numerics.fitting import local_slopes as _log_log_slopes
from qeilab.numerics.quadrature import (
    FloatArray,
    Integrand,
    cumulative_integral,
    cumulative_tail,
    integrate_finite,
    integrate_semi_infinite,
)
from qeilab.spectrum import first_masses, growth_bound, index_density, index_function
from qeilab.weights import (
    curvature_norm,
    frequency_scale,
    power_envelope,
    power_noise,
    power_spectrum,
    rescale,
    transform_noise,
    weight_metadata,
)

logger = logging.getLogger(__name__)

EXPLICIT_THRESHOLDS = 20_000
"""質量しきい値を明示的に積分する最大数（超えると連続近似 ν(u)−½）。"""

ABS_TOL_FLOOR = 1e-300
"""q_value≈0 のときに使う絶対許容誤差。"""

HEAD_SPAN = 256.0
"""多項式減衰の重みで無限スペクトルの質量を明示的に足す範囲（周波数スケール単位）。"""

_NORMALIZATION = 1.0 / (16.0 * math.pi**3)
_VACUUM_NORMALIZATION = 1.0 / (4.0 * math.pi**3)
_INNER_TOL_FACTOR = 0.1
_SAWTOOTH_SAMPLES = 2048
_EPS = float(np.finfo(np.float64).eps)
_CANCELLATION_ULPS = 8.0
_MIN_TOL = 1e-15


@dataclass(frozen=True)
class WorldlineSymbol:
    """エネルギー密度の二乗和分解の 1 項 P_j。"""

    label: str
    description: str


@dataclass(frozen=True)
class WorldlineDecomposition:
    """ρ = ½ Σ_j (P_j φ)² の分解（時間微分、空間勾配 3 成分、質量項）。

    A mode e^{i(p·x−ωt)} picks up the symbols (−iω, ip_x, ip_y, ip_z, m);
    their squared magnitudes sum to ω² + |p|² + m² = 2ω².
    """

    symbols: tuple[WorldlineSymbol, ...] = (
        WorldlineSymbol("dt", "time derivative, symbol -i*omega"),
        WorldlineSymbol("dx", "gradient x-component, symbol i*p_x"),
        WorldlineSymbol("dy", "gradient y-component, symbol i*p_y"),
        WorldlineSymbol("dz", "gradient z-component, symbol i*p_z"),
        WorldlineSymbol("mass", "mass term, symbol m"),
    )

    def squared_symbols(self, momenta: npt.ArrayLike, m: float) -> FloatArray:
        """Return |c_j(p)|² with shape (n, 5) for momenta of shape (n, 3)."""
        p = np.atleast_2d(np.asarray(momenta, dtype=np.float64))
        omega_sq = np.sum(p * p, axis=1) + m * m
        return np.column_stack([omega_sq, p * p, np.full(p.shape[0], m * m)])

    def radial_weight(self, p: npt.ArrayLike, m: float) -> FloatArray:
        """Σ_j |c_j|² as a function of |p| alone (isotropic, so p along x)."""
        r = np.asarray(p, dtype=np.float64)
        flat = r.ravel()
        zeros = np.zeros_like(flat)
        symbols = self.squared_symbols(np.column_stack([flat, zeros, zeros]), m)
        return np.asarray(symbols.sum(axis=1).reshape(r.shape), dtype=np.float64)


def _warn_hypothesis(w: Weight) -> dict[str, str | bool]:
    meta = weight_metadata(w)
    if meta["schwartz_class_only"] or meta["smoothness"] != "C_infinity":
        logger.warning(
            "%s weight (%s, compact_support=%s) lies outside the smooth compactly "
            "supported class; the bound is computed as stated",
            w.family,
            meta["smoothness"],
            meta["compact_support"],
        )
    return meta


def _check_mass(m: float) -> None:
    if not (math.isfinite(m) and m >= 0):
        raise ValueError(f"mass must be a non-negative finite number, got {m}")


def _single_mass_envelope(w: Weight) -> DecayEnvelope:
    envelope = power_envelope(w).times_power(4.0).scaled(_NORMALIZATION)
    if not envelope.decays:
        raise DivergenceDetected(
            f"{w.family} weight envelope cannot bound u^4|g(u)|^2",
            test="envelope",
        )
    return envelope


def _error_bars(
    value: float, error: float, envelope: DecayEnvelope, lower: float
) -> tuple[bool, float | None]:
    """Return (underflow, log_error_bound) for a finished integral."""
    log_tail = envelope.log_tail_integral(lower)
    underflow = value == 0.0 and math.isfinite(log_tail)
    if underflow:
        logger.warning(
            "bound underflowed to 0; log of the envelope error bar is %.6g", log_tail
        )
        return True, log_tail
    if error > 0.0:
        return False, math.log(error)
    return False, log_tail if math.isfinite(log_tail) else None


def _weighted_noise(
    w: Weight, factor: Callable[[FloatArray], FloatArray]
) -> Integrand | None:
    """Round-off level of factor(u)·|ĝ(u)|², or None for exact transforms."""
    if transform_noise(w) == 0.0:
        return None

    def noise(u: FloatArray) -> FloatArray:
        return np.abs(factor(u)) * power_noise(w, u)

    return noise


def _scaled_noise(level: Integrand, factor: Callable[[FloatArray], FloatArray]) -> Integrand:
    def noise(u: FloatArray) -> FloatArray:
        return level(u) * factor(u)

    return noise


def _worldline_density(u: FloatArray) -> FloatArray:
    return _NORMALIZATION * u**4


def _head_integral(
    f: Integrand, upper: float, tol: float, total: float, noise: Integrand | None
) -> tuple[float, float]:
    """Return ∫_0^upper f and its error, tight enough that total − head keeps ``tol``."""
    if upper == 0.0:
        return 0.0, 0.0
    head = integrate_finite(f, 0.0, upper, tol, abs_tol=ABS_TOL_FLOOR, noise=noise)
    rest = total - head.value
    if rest > 0.0 and head.value > 0.0 and head.error_estimate > tol * rest:
        tighter = max(tol * rest / head.value, _MIN_TOL)
        head = integrate_finite(f, 0.0, upper, tighter, abs_tol=tol * rest, noise=noise)
    return head.value, head.error_estimate


def worldline_qwei_bound(w: Weight, m: float, tol: float = 1e-10) -> QeiBound:
    """Compute Q[g] = (1/16π³)∫_m^∞ u⁴|ĝ(u)|² du for a free field of mass m.

    Args:
        w: Weight g_τ.
        m: Mass m ≥ 0.
        tol: Relative tolerance (absolute when the bound is ≈ 0).

    Returns:
        QeiBound on the worldline route.

    Raises:
        ValueError: If ``m`` is negative or not finite.
        DivergenceDetected: If the weight's declared decay is too weak.
    """
    _check_mass(m)
    meta = _warn_hypothesis(w)
    envelope = _single_mass_envelope(w)
    noise = _weighted_noise(w, _worldline_density)

    def integrand(u: FloatArray) -> FloatArray:
        return _worldline_density(u) * power_spectrum(w, u)

    curvature = curvature_norm(w)
    if curvature is not None:
        total = _NORMALIZATION * math.pi * curvature
        head, head_error = _head_integral(integrand, m, tol, total, noise)
        raw = total - head
        error = head_error + _CANCELLATION_ULPS * _EPS * total
        logger.debug("worldline total %.17g minus head %.17g", total, head)
    else:
        result = integrate_semi_infinite(
            integrand,
            m,
            tol,
            scale=frequency_scale(w),
            envelope=envelope,
            abs_tol=ABS_TOL_FLOOR,
            noise=noise,
        )
        raw, error = result.value, result.error_estimate
    value = max(raw, 0.0)
    underflow, log_error = _error_bars(value, error, envelope, m)
    logger.info(
        "worldline bound (%s, tau=%g, m=%g) = %.17g +- %.3e",
        w.family,
        w.tau,
        m,
        value,
        error,
    )
    return QeiBound(
        q_value=value,
        quadrature_error=error,
        route=BoundRoute.WORLDLINE,
        weight=w,
        mass=m,
        underflow=underflow,
        log_error_bound=log_error,
        metadata=meta,
    )


def gff_qwei_bound(w: Weight, s: MassSpectrum, tol: float = 1e-10) -> QeiBound:
    """Compute Q[g] = (1/16π³)∫_0^∞ u⁴|ĝ(u)|² N(u) du for a generalized free field.

    The first ``EXPLICIT_THRESHOLDS`` masses are integrated exactly as
    breakpoints of N(u). Beyond the last of them an infinite spectrum is
    replaced by its continuous index ν(u) − ½; the sawtooth remainder is
    bounded and added to ``quadrature_error``.

    Weights with polynomial spectral decay sum Σ_j Q(m_j) instead, each term
    being the closed-form total minus a head. For an infinite spectrum the
    masses above ``HEAD_SPAN`` frequency scales enter through the envelope
    bound R on their sum: the value carries R/2 and the error R/2.

    Raises:
        DivergenceDetected: If N(u) grows faster than the weight's envelope
            can dominate.
        ConvergenceError: If the envelope cannot bound the remainder of an
            infinite spectrum.
    """
    meta = _warn_hypothesis(w)
    coefficient, power, rate = growth_bound(s)
    envelope = (
        power_envelope(w)
        .times_power(4.0)
        .scaled(_NORMALIZATION)
        .times_growth(coefficient, power, rate)
    )
    if not envelope.decays:
        raise DivergenceDetected(
            f"mass counting function of the {s.kind} spectrum grows faster than "
            f"the {w.family} weight's Fourier decay",
            test="envelope",
        )

    def weight_part(u: FloatArray) -> FloatArray:
        return _worldline_density(u) * power_spectrum(w, u)

    weight_noise = _weighted_noise(w, _worldline_density)
    curvature = curvature_norm(w)
    if curvature is not None:
        value, error, lowest = _gff_complement(
            w, s, tol, curvature, weight_part, weight_noise, envelope
        )
        sawtooth = 0.0
    else:
        value, error, sawtooth, lowest = _gff_direct(
            w, s, tol, weight_part, weight_noise, envelope
        )
    underflow, log_error = _error_bars(value, error, envelope, lowest)
    logger.info(
        "gff bound (%s, tau=%g, %s) = %.17g +- %.3e (sawtooth %.3e)",
        w.family,
        w.tau,
        s.kind,
        value,
        error,
        sawtooth,
    )
    return QeiBound(
        q_value=value,
        quadrature_error=error,
        route=BoundRoute.GFF,
        weight=w,
        spectrum=s,
        underflow=underflow,
        log_error_bound=log_error,
        metadata=meta,
    )


def _gff_direct(
    w: Weight,
    s: MassSpectrum,
    tol: float,
    weight_part: Integrand,
    weight_noise: Integrand | None,
    envelope: DecayEnvelope,
) -> tuple[float, float, float, float]:
    """Integrate f(u)·N(u) over [0, ∞); returns (value, error, sawtooth, lowest mass)."""
    finite = isinstance(s, ListSpectrum)
    count = len(s.masses) if isinstance(s, ListSpectrum) else EXPLICIT_THRESHOLDS
    masses = first_masses(s, count)
    last = float(masses[-1])

    def counting(u: FloatArray) -> FloatArray:
        n = np.searchsorted(masses, u, side="right").astype(np.float64)
        if finite:
            return n
        beyond = u >= last
        if np.any(beyond):
            n[beyond] = index_function(s, u[beyond]) - 0.5
        return n

    def integrand(u: FloatArray) -> FloatArray:
        return weight_part(u) * counting(u)

    noise: Integrand | None = None
    if weight_noise is not None:
        noise = _scaled_noise(weight_noise, lambda u: np.maximum(counting(u), 0.0))

    result = integrate_semi_infinite(
        integrand,
        0.0,
        tol,
        scale=frequency_scale(w),
        envelope=envelope,
        abs_tol=ABS_TOL_FLOOR,
        breakpoints=np.unique(masses),
        noise=noise,
    )
    sawtooth = 0.0 if finite else _sawtooth_error(w, s, weight_part, last)
    value = max(result.value, 0.0)
    return value, result.error_estimate + sawtooth, sawtooth, float(masses[0])


def _gff_complement(
    w: Weight,
    s: MassSpectrum,
    tol: float,
    curvature: float,
    weight_part: Integrand,
    weight_noise: Integrand | None,
    envelope: DecayEnvelope,
) -> tuple[float, float, float]:
    """Sum Q(m_j) = total − ∫_0^{m_j} f; returns (value, error, lowest mass)."""
    total = _NORMALIZATION * math.pi * curvature
    remainder = 0.0
    if isinstance(s, ListSpectrum):
        masses = np.asarray(s.masses, dtype=np.float64)
    else:
        span = max(HEAD_SPAN * frequency_scale(w), envelope.valid_from)
        count = min(EXPLICIT_THRESHOLDS, math.floor(float(index_function(s, span))) + 1)
        masses = first_masses(s, count)
        # Σ_{j>J} Q(m_j) = ∫_{m_J}^∞ f(u)(N(u) − J) du ≤ envelope tail from m_J.
        remainder = envelope.tail_integral(float(masses[-1]))
        if not math.isfinite(remainder):
            raise ConvergenceError(
                f"envelope cannot bound the {s.kind} spectrum beyond "
                f"m={float(masses[-1]):.6g}"
            )
    heads, head_errors = cumulative_integral(weight_part, 0.0, masses, tol, noise=weight_noise)
    explicit = math.fsum(total - heads)
    value = max(explicit + 0.5 * remainder, 0.0)
    error = (
        math.fsum(head_errors)
        + masses.size * _CANCELLATION_ULPS * _EPS * total
        + 0.5 * remainder
    )
    if error > tol * value:
        logger.warning(
            "gff bound (%s, %s) meets only relative error %.3e (remainder %.3e over "
            "%d explicit masses)",
            w.family,
            s.kind,
            error / value if value > 0 else math.inf,
            remainder,
            masses.size,
        )
    return value, error, float(masses[0])


def _sawtooth_error(
    w: Weight,
    s: MassSpectrum,
    weight_part: Callable[[FloatArray], FloatArray],
    start: float,
) -> float:
    """Bound |∫_start^∞ f(u)(N(u) − ν(u) + ½) du|.

    With x = ν(u) the remainder is ∫F(x)(frac(x) − ½)dx for F = f/ν′, which
    is at most ¼·max F for a unimodal F; it never exceeds ½∫f either.
    """
    half_tail = 0.5 * power_envelope(w).times_power(4.0).scaled(
        _NORMALIZATION
    ).tail_integral(start)
    if half_tail == 0.0:
        return 0.0
    span = start + 1024.0 * frequency_scale(w)
    u = np.geomspace(start, max(span, 2.0 * start), _SAWTOOTH_SAMPLES)
    ratio = weight_part(u) / index_density(s, u)
    return float(min(0.25 * np.max(ratio), half_tail))


def _kernel_deficit(u: FloatArray, m: float) -> FloatArray:
    """Return u⁴/4 − ∫_0^P p²√(p²+m²) dp with P = √(u²−m²), for u ≥ m > 0.

    Written in x = m²/u² without the large cancellation of the direct form.
    """
    x = (m / u) ** 2
    root = np.sqrt(np.maximum(1.0 - x, 0.0))
    leading = u**4 * x * (8.0 - 5.0 * x + x * x) / (2.0 + root * (2.0 - x))
    return 0.125 * (leading + m**4 * np.arcsinh(u * root / m))


def vacuum_reference_bound(w: Weight, m: float, tol: float = 1e-8) -> QeiBound:
    """Compute the bound by point-splitting against the vacuum two-point function.

    q = ∫_{k₀≥0} dk₀/2π Σ_j ∫ d³p/((2π)³2ω) |c_j(p)|² |ĝ(k₀+ω)|², which by
    isotropy reduces to (1/4π³)∫_0^∞ p²ω G(ω) dp with G(ω) = ∫_ω^∞|ĝ|².
    The inner tails G are evaluated for all outer nodes of a batch at once.

    For weights with polynomial spectral decay the p-integral is done first:
    q = (1/4π³)∫_m^∞ |ĝ(u)|² K(u) du with K(u) = ∫_0^{√(u²−m²)} p²√(p²+m²) dp,
    evaluated as the closed-form total minus a head and minus the
    fast-decaying deficit u⁴/4 − K(u).

    Args:
        w: Weight g_τ.
        m: Mass m ≥ 0.
        tol: Relative tolerance of the outer integral; the inner tails use a
            tenth of it.

    Returns:
        QeiBound with ``ratio_to_worldline`` set.

    Raises:
        ValueError: If ``m`` is negative or not finite.
        DivergenceDetected: If the weight decays too slowly for a finite result.
    """
    _check_mass(m)
    meta = _warn_hypothesis(w)
    envelope = _single_mass_envelope(w)
    curvature = curvature_norm(w)
    if curvature is not None:
        value, error = _vacuum_complement(w, m, tol, curvature)
    else:
        value, error = _vacuum_direct(w, m, tol)
    reference = worldline_qwei_bound(w, m, tol)
    ratio = value / reference.q_value if reference.q_value > 0 else None
    underflow, log_error = _error_bars(value, error, envelope, m)
    logger.info(
        "vacuum-reference bound (%s, tau=%g, m=%g) = %.17g +- %.3e (ratio %s)",
        w.family,
        w.tau,
        m,
        value,
        error,
        ratio,
    )
    return QeiBound(
        q_value=value,
        quadrature_error=error,
        route=BoundRoute.VACUUM_REFERENCE,
        weight=w,
        mass=m,
        underflow=underflow,
        log_error_bound=log_error,
        ratio_to_worldline=ratio,
        metadata=meta,
    )


def _vacuum_direct(w: Weight, m: float, tol: float) -> tuple[float, float]:
    inner_envelope = power_envelope(w)
    decomposition = WorldlineDecomposition()
    scale = frequency_scale(w)
    inner_tol = _INNER_TOL_FACTOR * tol
    inner_noise = _weighted_noise(w, np.ones_like)

    def spectrum_density(u: FloatArray) -> FloatArray:
        return power_spectrum(w, u)

    def integrand(p: FloatArray) -> FloatArray:
        omega = np.sqrt(p * p + m * m)
        tails, _ = cumulative_tail(
            spectrum_density,
            omega,
            inner_tol,
            scale=scale,
            envelope=inner_envelope,
            noise=inner_noise,
        )
        # Σ_j |c_j|²/(2ω) = ω; the 1/2 of the bilinear goes with k₀ ≥ 0.
        symbols = decomposition.radial_weight(p, m) / (2.0 * omega)
        return _VACUUM_NORMALIZATION * p * p * symbols * tails

    result = integrate_semi_infinite(
        integrand, 0.0, tol, scale=scale, abs_tol=ABS_TOL_FLOOR
    )
    value = max(result.value, 0.0)
    return value, result.error_estimate + inner_tol * value


def _vacuum_complement(
    w: Weight, m: float, tol: float, curvature: float
) -> tuple[float, float]:
    total = _NORMALIZATION * math.pi * curvature

    def head_integrand(u: FloatArray) -> FloatArray:
        return _worldline_density(u) * power_spectrum(w, u)

    head, head_error = _head_integral(
        head_integrand, m, tol, total, _weighted_noise(w, _worldline_density)
    )
    deficit = 0.0
    deficit_error = 0.0
    if m > 0.0:

        def deficit_density(u: FloatArray) -> FloatArray:
            return _VACUUM_NORMALIZATION * _kernel_deficit(u, m)

        def deficit_integrand(u: FloatArray) -> FloatArray:
            return deficit_density(u) * power_spectrum(w, u)

        # u⁴/4 − K(u) ≤ 5m²u²/8 for u ≥ m.
        deficit_envelope = (
            power_envelope(w)
            .times_power(2.0)
            .scaled(0.625 * m * m * _VACUUM_NORMALIZATION)
        )
        result = integrate_semi_infinite(
            deficit_integrand,
            m,
            tol,
            scale=frequency_scale(w),
            envelope=deficit_envelope,
            abs_tol=0.5 * tol * max(total - head, ABS_TOL_FLOOR),
            noise=_weighted_noise(w, deficit_density),
        )
        deficit, deficit_error = result.value, result.error_estimate
    value = max(total - head - deficit, 0.0)
    error = head_error + deficit_error + _CANCELLATION_ULPS * _EPS * total
    return value, error


def bound_for(w: Weight, target: float | MassSpectrum, tol: float = 1e-10) -> QeiBound:
    """Dispatch to the worldline route for a mass and the gff route for a spectrum."""
    if isinstance(target, int | float):
        return worldline_qwei_bound(w, float(target), tol)
    return gff_qwei_bound(w, target, tol)


def scaling_curve(
    w: Weight,
    target: float | MassSpectrum,
    tau_grid: Sequence[float],
    tol: float = 1e-10,
    *,
    workers: int = 1,
    window: tuple[float, float] | None = None,
) -> ScalingCurve:
    """Evaluate the bound of rescale(w, τ) over a grid of scales.

    Args:
        w: Base weight.
        target: Mass (worldline route) or spectrum (gff route).
        tau_grid: Positive, strictly increasing scales.
        tol: Relative tolerance per point.
        workers: Thread pool size; results are collected in grid order.
        window: Optional [lo, hi] τ-window for the exponent fit.

    Raises:
        NonPositiveScale: If a scale is not positive.
        ValueError: If the grid is empty or not strictly increasing.
        InsufficientPoints: If ``window`` holds fewer than 3 points.
    """
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise ValueError("tau_grid must not be empty")
    for t in taus:
        if not t > 0:
            raise NonPositiveScale(t)
    if any(b <= a for a, b in zip(taus, taus[1:], strict=False)):
        raise ValueError("tau_grid must be strictly increasing")
    weights = [rescale(w, t) for t in taus]

    def evaluate(scaled: Weight) -> QeiBound:
        return bound_for(scaled, target, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bounds = list(pool.map(evaluate, weights))
    else:
        bounds = [evaluate(x) for x in weights]

    curve = ScalingCurve(
        tau_values=taus,
        bound_values=[b.q_value for b in bounds],
        errors=[b.quadrature_error for b in bounds],
    )
    if window is None:
        return curve
    fit = fit_scaling_exponent(curve, window)
    return curve.model_copy(
        update={
            "fit_window": fit.window,
            "fitted_slope": fit.slope,
            "fit_residual": fit.residual,
        }
    )


def fit_scaling_exponent(
    curve: ScalingCurve, window: tuple[float, float] | None = None
) -> ExponentFit:
    """Least-squares slope of log(bound) against log(τ) over ``window``.

    Raises:
        InsufficientPoints: If fewer than 3 grid points fall in the window.
    """
    return fit_power_law(curve.tau_values, curve.bound_values, window)


def local_slopes(curve: ScalingCurve) -> list[float]:
    """Successive log-log slopes between neighbouring points of the curve."""
    return _log_log_slopes(curve.tau_values, curve.bound_values)


__all__ = [
    "EXPLICIT_THRESHOLDS",
    "WorldlineDecomposition",
    "WorldlineSymbol",
    "bound_for",
    "fit_scaling_exponent",
    "gff_qwei_bound",
    "local_slopes",
    "scaling_curve",
    "vacuum_reference_bound",
    "worldline_qwei_bound",
]
