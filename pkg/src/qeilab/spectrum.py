"""Mass spectra of generalized free fields and nuclearity diagnostics.

Generator spectra (arithmetic, power_law, logarithmic) realize their masses
lazily from a continuous index function ν(u): the n-th mass is the smallest u
with ν(u) ≥ n, so that N(u) = ⌊ν(u)⌋ = #{j : m_j ≤ u}.
"""

import bisect
import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
import numpy.typing as npt

from qeilab.errors import DivergenceDetected, InsufficientPoints
from qeilab.models.results import ExponentFit, NuclearityEstimate, PartitionSum, SeriesTest
from qeilab.models.spectrum import (
    ArithmeticSpectrum,
    ListSpectrum,
    LogarithmicSpectrum,
    MassSpectrum,
    PowerLawSpectrum,
)
from qeilab.numerics.envelope import DecayEnvelope
from qeilab.numerics.fitting import fit_power_law
from qeilab.numerics.quadrature import FloatArray, integrate_semi_infinite

logger = logging.getLogger(__name__)

DIRECT_TERMS = 10_000
"""積分テストに切り替えるまでに直接和を取る項数。"""

RATIO_STOP = 1e-14
"""比テストで打ち切る、次の項と部分和の比。"""

SERIES_TOL = 1e-12
"""積分テストの相対許容誤差。"""

EXACT_INDEX_LIMIT = 2.0**53
"""これ以上の ν(u) では質量との照合による補正を行わない（float の整数精度）。"""


def mass(s: MassSpectrum, index: int) -> float:
    """Return the mass m_j for j ≥ 1 (list spectra index their sorted masses)."""
    if index < 1:
        raise ValueError(f"mass index must be >= 1, got {index}")
    if isinstance(s, ListSpectrum):
        return s.masses[index - 1]
    return float(_mass_of_index(s, np.asarray([float(index)]))[0])


def _mass_of_index(s: MassSpectrum, x: FloatArray) -> FloatArray:
    if isinstance(s, ArithmeticSpectrum):
        return x * s.m0
    if isinstance(s, PowerLawSpectrum):
        return np.asarray((x / s.c) ** (1.0 / s.p), dtype=np.float64)
    if isinstance(s, LogarithmicSpectrum):
        return s.scale * np.log1p(x)
    raise TypeError(f"{s.kind} spectrum has no index function")


def index_function(s: MassSpectrum, u: npt.ArrayLike) -> FloatArray:
    """Continuous index ν(u) with N(u) = ⌊ν(u)⌋ for generator spectra."""
    x = np.asarray(u, dtype=np.float64)
    if isinstance(s, ArithmeticSpectrum):
        return x / s.m0
    if isinstance(s, PowerLawSpectrum):
        return np.asarray(s.c * x**s.p, dtype=np.float64)
    if isinstance(s, LogarithmicSpectrum):
        return np.expm1(x / s.scale)
    raise TypeError(f"{s.kind} spectrum has no index function")


def index_density(s: MassSpectrum, u: npt.ArrayLike) -> FloatArray:
    """Derivative dν/du of the continuous index."""
    x = np.asarray(u, dtype=np.float64)
    if isinstance(s, ArithmeticSpectrum):
        return np.full_like(x, 1.0 / s.m0)
    if isinstance(s, PowerLawSpectrum):
        return np.asarray(s.c * s.p * x ** (s.p - 1.0), dtype=np.float64)
    if isinstance(s, LogarithmicSpectrum):
        return np.exp(x / s.scale) / s.scale
    raise TypeError(f"{s.kind} spectrum has no index function")


def first_masses(s: MassSpectrum, count: int) -> FloatArray:
    """The first ``count`` masses in ascending order (fewer for a short list)."""
    if isinstance(s, ListSpectrum):
        return np.asarray(s.masses[:count], dtype=np.float64)
    return _mass_of_index(s, np.arange(1, count + 1, dtype=np.float64))


def growth_bound(s: MassSpectrum) -> tuple[float, float, float]:
    """Return (C, p, γ) with N(u) ≤ C·u^p·e^{γu} for all u > 0."""
    if isinstance(s, ListSpectrum):
        return float(len(s.masses)), 0.0, 0.0
    if isinstance(s, ArithmeticSpectrum):
        return 1.0 / s.m0, 1.0, 0.0
    if isinstance(s, PowerLawSpectrum):
        return s.c, s.p, 0.0
    return 1.0, 0.0, 1.0 / s.scale


def counting(s: MassSpectrum, u: float) -> int:
    """Count species with m_j ≤ u (θ(0)=1 convention).

    Raises:
        ValueError: If ``u`` is negative or N(u) exceeds the float range.
    """
    if u < 0:
        raise ValueError(f"u must be non-negative, got {u}")
    if isinstance(s, ListSpectrum):
        return bisect.bisect_right(s.masses, u)
    with np.errstate(over="ignore"):
        nu = float(index_function(s, u))
    if not math.isfinite(nu):
        raise ValueError(f"N(u) of the {s.kind} spectrum overflows at u={u}")
    if nu >= EXACT_INDEX_LIMIT:
        return math.floor(nu)
    n = max(0, math.floor(nu))
    while mass(s, n + 1) <= u:
        n += 1
    while n > 0 and mass(s, n) > u:
        n -= 1
    return n


def _density_envelope(
    s: MassSpectrum, amplitude: float, rate: float, start: float
) -> DecayEnvelope:
    """Bound amplitude·e^{−rate·u}·dν/du for u ≥ start."""
    if isinstance(s, ArithmeticSpectrum):
        return DecayEnvelope(amplitude / s.m0, rate=rate, valid_from=start)
    if isinstance(s, PowerLawSpectrum):
        return DecayEnvelope(
            amplitude * s.c * s.p, power=s.p - 1.0, rate=rate, valid_from=start
        )
    return DecayEnvelope(
        amplitude / s.scale, rate=rate, growth=1.0 / s.scale, valid_from=start
    )


def _sum_series(
    s: MassSpectrum,
    term: Callable[[FloatArray], FloatArray],
    envelope_from: Callable[[float], DecayEnvelope],
    scale: float,
) -> tuple[float, float, SeriesTest, int]:
    """Sum Σ_j term(m_j) for a decreasing term.

    Returns:
        Tuple of (value, truncation_error, test, terms_summed).
    """
    if isinstance(s, ListSpectrum):
        values = term(np.asarray(s.masses, dtype=np.float64))
        return math.fsum(values), 0.0, SeriesTest.FINITE, len(s.masses)

    terms = term(first_masses(s, DIRECT_TERMS))
    partial = np.cumsum(terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(terms[:-1] > 0, terms[1:] / terms[:-1], 0.0)
    # Stop at the first term n below RATIO_STOP of the partial sum whose ratio to
    # its predecessor is < 1 and not larger than the previous ratio.
    stop = np.flatnonzero(
        (terms[2:] < RATIO_STOP * partial[1:-1])
        & (ratios[1:] < 1.0)
        & (ratios[1:] <= ratios[:-1] * (1.0 + 1e-12))
    )
    if stop.size:
        n = int(stop[0]) + 2
        r = float(ratios[n - 1])
        remainder = float(terms[n]) * r / (1.0 - r)
        logger.debug("ratio test stopped at term %d (ratio %.6g)", n + 1, r)
        return math.fsum(terms[: n + 1]), remainder, SeriesTest.RATIO, n + 1

    start = float(_mass_of_index(s, np.asarray([float(DIRECT_TERMS)]))[0])

    def integrand(u: FloatArray) -> FloatArray:
        return term(u) * index_density(s, u)

    try:
        tail = integrate_semi_infinite(
            integrand, start, SERIES_TOL, scale=scale, envelope=envelope_from(start)
        )
    except DivergenceDetected as exc:
        raise DivergenceDetected(
            f"Series fails the integral test beyond index {DIRECT_TERMS}: {exc}",
            test="integral",
        ) from exc

    def f(x: float) -> float:
        return float(term(_mass_of_index(s, np.asarray([x])))[0])

    j = float(DIRECT_TERMS)
    fm2, fm1, f0, fp1, fp2 = (f(j + d) for d in (-2.0, -1.0, 0.0, 1.0, 2.0))
    d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / 12.0
    d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / 2.0
    remainder = tail.value - 0.5 * f0 - d1 / 12.0 + d3 / 720.0
    error = tail.error_estimate + abs(d3) / 720.0
    value = math.fsum([*terms, remainder])
    logger.debug(
        "integral test: remainder %.6g beyond m=%.6g (error %.3e)", remainder, start, error
    )
    return value, error, SeriesTest.INTEGRAL, DIRECT_TERMS


def partition_sum(s: MassSpectrum, beta: float) -> PartitionSum:
    """Compute Σ_j e^{−β m_j}.

    Args:
        s: Mass spectrum.
        beta: Inverse temperature β > 0.

    Returns:
        PartitionSum with the truncation error and the test that decided it.

    Raises:
        ValueError: If ``beta`` is not positive.
        DivergenceDetected: If the series fails the integral test.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")

    def term(m: FloatArray) -> FloatArray:
        return np.exp(-beta * m)

    value, error, test, count = _sum_series(
        s,
        term,
        lambda start: _density_envelope(s, 1.0, beta, start),
        scale=1.0 / beta,
    )
    logger.info("partition_sum(beta=%g) = %.17g (%s test)", beta, value, test)
    return PartitionSum(value=value, truncation_error=error, test=test, terms_summed=count)


def nuclearity_log_index(
    s: MassSpectrum, beta: float, r: float = 1.0, c: float = 1.0
) -> NuclearityEstimate:
    """Upper estimate c(r/β)³ Σ_j |log(1 − e^{−β m_j/2})| of the log nuclearity index.

    Args:
        s: Mass spectrum.
        beta: Inverse temperature β > 0.
        r: Region radius r > 0.
        c: Positive constant.

    Raises:
        ValueError: If a parameter is not positive.
        DivergenceDetected: If the partition sum at β/2 diverges.
    """
    for name, value in (("beta", beta), ("r", r), ("c", c)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    partition_sum(s, 0.5 * beta)

    def term(m: FloatArray) -> FloatArray:
        return -np.log1p(-np.exp(-0.5 * beta * m))

    def envelope_from(start: float) -> DecayEnvelope:
        amplitude = 1.0 / -math.expm1(-0.5 * beta * start)
        return _density_envelope(s, amplitude, 0.5 * beta, start)

    series, error, test, _ = _sum_series(s, term, envelope_from, scale=2.0 / beta)
    prefactor = c * (r / beta) ** 3
    return NuclearityEstimate(
        log_index_bound=prefactor * series,
        beta=beta,
        r=r,
        c=c,
        truncation_error=prefactor * error,
        series_value=series,
        test=test,
    )


def fit_nuclearity_exponent(
    s: MassSpectrum,
    beta_grid: Sequence[float],
    r: float = 1.0,
    c: float = 1.0,
) -> ExponentFit:
    """Fit n in log_index_bound ∝ β^{−n} over a grid of β values.

    Raises:
        InsufficientPoints: If the grid has fewer than 3 points.
        DivergenceDetected: If any estimate diverges.
    """
    if len(beta_grid) < 3:
        raise InsufficientPoints(len(beta_grid))
    betas = sorted(beta_grid, reverse=True)
    bounds = [nuclearity_log_index(s, b, r, c).log_index_bound for b in betas]
    inverse = [1.0 / b for b in betas]
    return fit_power_law(inverse, bounds)


__all__ = [
    "DIRECT_TERMS",
    "EXACT_INDEX_LIMIT",
    "counting",
    "first_masses",
    "fit_nuclearity_exponent",
    "growth_bound",
    "index_density",
    "index_function",
    "mass",
    "nuclearity_log_index",
    "partition_sum",
]
