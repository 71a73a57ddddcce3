"""Adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges.

Integrands are vectorized callables: they receive a 1-D float array of nodes
and return an array of the same shape. All sums are taken in ascending order
of the abscissa with ``math.fsum`` so results are bit-reproducible.

An optional ``noise`` callable gives the absolute round-off level of the
integrand at each node. Intervals whose error estimate is already below the
integrated noise are never bisected again.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
import numpy.typing as npt

from qeilab.errors import ConvergenceError, DivergenceDetected
from qeilab.models.results import QuadratureResult
from qeilab.numerics.envelope import DecayEnvelope

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Integrand = Callable[[FloatArray], FloatArray]

# Kronrod 15-point nodes on [-1, 1] with the embedded 7-point Gauss rule.
_XK = np.array(
    [
        -0.991455371120812639206854697526329,
        -0.949107912342758524526189684047851,
        -0.864864423359769072789712788640926,
        -0.741531185599394439863864773280788,
        -0.586087235467691130294144845693013,
        -0.405845151377397166906606412076961,
        -0.207784955007898467600689403773245,
        0.0,
        0.207784955007898467600689403773245,
        0.405845151377397166906606412076961,
        0.586087235467691130294144845693013,
        0.741531185599394439863864773280788,
        0.864864423359769072789712788640926,
        0.949107912342758524526189684047851,
        0.991455371120812639206854697526329,
    ]
)
_WK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
        0.204432940075298892414161999234649,
        0.190350578064785409913256402421014,
        0.169004726639267902826583426598550,
        0.140653259715525918745189590510238,
        0.104790010322250183839876322541518,
        0.063092092629978553290700663189204,
        0.022935322010529224963732008058970,
    ]
)
_WG = np.array(
    [
        0.0,
        0.129484966168869693270611432679082,
        0.0,
        0.279705391489276667901467771423780,
        0.0,
        0.381830050505118944950369775488975,
        0.0,
        0.417959183673469387755102040816327,
        0.0,
        0.381830050505118944950369775488975,
        0.0,
        0.279705391489276667901467771423780,
        0.0,
        0.129484966168869693270611432679082,
        0.0,
    ]
)

_EPS = float(np.finfo(np.float64).eps)
_EMPTY: FloatArray = np.zeros(0)

MAX_INTERVALS = 4000
"""区間分割の上限（1 つの有限区間あたり）。"""

MAX_SEGMENTS = 64
"""半無限積分の幾何セグメント数の上限。"""

DIVERGENCE_STREAK = 6
"""発散と判定する、減衰しないセグメントの連続数。"""

MAX_TOTAL_INTERVALS = 60000
"""半無限積分全体での区間数の上限。"""

_SEGMENT_SHARE = 6.0 / math.pi**2


def _inside(points: FloatArray, a: float, b: float) -> FloatArray:
    lo = int(np.searchsorted(points, a, side="right"))
    hi = int(np.searchsorted(points, b, side="left"))
    return np.unique(points[lo:hi])


def _gauss_kronrod(
    f: Integrand,
    left: FloatArray,
    right: FloatArray,
    noise: Integrand | None = None,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Apply the 7/15 rule to every interval at once.

    Returns:
        Tuple of (value, error, abs_value, error_floor) per interval.
    """
    center = 0.5 * (left + right)
    half = 0.5 * (right - left)
    nodes = center[:, None] + half[:, None] * _XK[None, :]
    fx = np.asarray(f(nodes.ravel()), dtype=np.float64).reshape(nodes.shape)
    if not np.all(np.isfinite(fx)):
        raise ConvergenceError(
            f"Integrand is not finite on [{left.min():.6g}, {right.max():.6g}]"
        )
    k15 = fx @ _WK
    g7 = fx @ _WG
    resabs = np.abs(fx) @ _WK
    resasc = np.abs(fx - 0.5 * k15[:, None]) @ _WK
    diff = np.abs(k15 - g7)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc > 0) & (diff > 0),
            resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5),
            diff,
        )
    floor = 50.0 * _EPS * resabs
    err = np.maximum(scaled, floor)
    if noise is not None:
        level = np.abs(np.asarray(noise(nodes.ravel()), dtype=np.float64))
        floor = np.maximum(floor, 2.0 * (level.reshape(nodes.shape) @ _WK))
    return half * k15, half * err, half * resabs, half * floor


class _Partition:
    """Adaptive bisection state of one finite interval.

    The interval starts split at any breakpoints strictly inside it.
    """

    def __init__(
        self,
        f: Integrand,
        a: float,
        b: float,
        breakpoints: FloatArray | None = None,
        noise: Integrand | None = None,
    ) -> None:
        self._f = f
        self._noise = noise
        self.a = a
        self.b = b
        inner = _EMPTY if breakpoints is None else _inside(breakpoints, a, b)
        edges = np.concatenate([[a], inner, [b]])
        self.left = edges[:-1]
        self.right = edges[1:]
        self.limit = max(MAX_INTERVALS, 4 * self.left.size)
        self.values, self.errors, self.abs_values, self.floors = _gauss_kronrod(
            f, self.left, self.right, noise
        )

    @property
    def value(self) -> float:
        return math.fsum(self.values)

    @property
    def error(self) -> float:
        return math.fsum(self.errors)

    @property
    def abs_value(self) -> float:
        return math.fsum(self.abs_values)

    @property
    def size(self) -> int:
        return int(self.left.size)

    def refine(self, target: Callable[["_Partition"], float]) -> None:
        """Bisect intervals until the total error meets ``target(self)``.

        Raises:
            ConvergenceError: If the interval budget is exhausted.
        """
        length = self.b - self.a
        while True:
            goal = target(self)
            if self.error <= goal:
                return
            share = goal * (self.right - self.left) / length
            split = (self.errors > share) & (self.errors > self.floors)
            if not np.any(split):
                return
            self._bisect(split)

    def refine_locally(self, tol: float) -> None:
        """Bisect until every interval meets ``tol`` relative to its own |f| integral."""
        while True:
            split = (self.errors > tol * self.abs_values) & (self.errors > self.floors)
            if not np.any(split):
                return
            self._bisect(split)

    def _bisect(self, split: npt.NDArray[np.bool_]) -> None:
        if self.size + int(split.sum()) > self.limit:
            raise ConvergenceError(
                f"Interval budget {self.limit} exhausted on "
                f"[{self.a:.6g}, {self.b:.6g}] (error {self.error:.3e})"
            )
        lo = self.left[split]
        hi = self.right[split]
        mid = 0.5 * (lo + hi)
        new_left = np.concatenate([lo, mid])
        new_right = np.concatenate([mid, hi])
        v, e, av, fl = _gauss_kronrod(self._f, new_left, new_right, self._noise)
        keep = ~split
        left = np.concatenate([self.left[keep], new_left])
        order = np.argsort(left, kind="stable")
        self.left = left[order]
        self.right = np.concatenate([self.right[keep], new_right])[order]
        self.values = np.concatenate([self.values[keep], v])[order]
        self.errors = np.concatenate([self.errors[keep], e])[order]
        self.abs_values = np.concatenate([self.abs_values[keep], av])[order]
        self.floors = np.concatenate([self.floors[keep], fl])[order]


def integrate_finite(
    f: Integrand,
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    abs_tol: float = 0.0,
    breakpoints: npt.ArrayLike | None = None,
    noise: Integrand | None = None,
) -> QuadratureResult:
    """Integrate a vectorized function over [a, b] by adaptive Gauss-Kronrod.

    Args:
        f: Vectorized integrand.
        a: Lower limit.
        b: Upper limit (``b >= a``).
        tol: Relative tolerance.
        abs_tol: Absolute tolerance.
        breakpoints: Sorted points where f may be discontinuous.
        noise: Absolute round-off level of f at each node.

    Returns:
        QuadratureResult with ``segments_used`` 1.

    Raises:
        ValueError: If ``tol`` is not positive or ``b < a``.
        ConvergenceError: If the interval budget is exhausted.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if b < a:
        raise ValueError(f"upper limit {b} is below lower limit {a}")
    if b == a:
        return QuadratureResult(value=0.0, error_estimate=0.0)
    cuts = None if breakpoints is None else np.sort(np.asarray(breakpoints, dtype=np.float64))
    part = _Partition(f, a, b, cuts, noise)
    part.refine(lambda p: max(abs_tol, tol * abs(p.value)))
    return QuadratureResult(
        value=part.value,
        error_estimate=part.error,
        segments_used=1,
        intervals_used=part.size,
    )


def _geometric_tail(contributions: list[float]) -> float:
    prev, last = abs(contributions[-2]), abs(contributions[-1])
    if last == 0.0:
        return 0.0
    if prev == 0.0 or last >= prev:
        return math.inf
    ratio = last / prev
    return last * ratio / (1.0 - ratio)


def integrate_semi_infinite(
    f: Integrand,
    a: float,
    tol: float = 1e-10,
    *,
    scale: float = 1.0,
    envelope: DecayEnvelope | None = None,
    abs_tol: float = 0.0,
    breakpoints: npt.ArrayLike | None = None,
    noise: Integrand | None = None,
) -> QuadratureResult:
    """Integrate a vectorized, eventually decaying function over [a, ∞).

    The range is cut into geometric segments [a, a+Δ], [a+Δ, a+3Δ], ... each
    integrated by adaptive Gauss-Kronrod. Refinement walks a fixed ladder of
    tolerances 0.1·2^-k down to ``tol``; segments are only ever bisected or
    appended, and the result with the smallest error estimate along the ladder
    is returned. Segment n is held to a 6/(π²(n+1)²) share of the budget, so
    far segments are not starved. With an envelope, segments stop being
    appended as soon as the envelope bounds the rest of the range.

    Args:
        f: Vectorized integrand.
        a: Lower limit.
        tol: Relative tolerance.
        scale: Length Δ of the first segment.
        envelope: Declared upper bound on |f| used to bound the neglected tail.
            Without one, the tail is extrapolated geometrically from the last
            two segments.
        abs_tol: Absolute tolerance.
        breakpoints: Sorted points where f may be discontinuous; segments
            start split at those falling inside them.
        noise: Absolute round-off level of f at each node.

    Returns:
        QuadratureResult whose ``error_estimate`` includes the tail bound.

    Raises:
        DivergenceDetected: If the envelope cannot bound any tail, or segment
            contributions stop decaying for several consecutive segments.
        ConvergenceError: If the segment or interval budget is exhausted.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if envelope is not None and not envelope.decays:
        raise DivergenceDetected(
            "Declared envelope grows too fast for a finite tail integral",
            test="envelope",
        )

    cuts = None if breakpoints is None else np.sort(np.asarray(breakpoints, dtype=np.float64))
    rungs = max(0, math.ceil(math.log2(0.1 / tol) - 1e-12))
    segments: list[_Partition] = []
    best: tuple[float, float, float] | None = None
    streak = 0

    def add_segment() -> None:
        n = len(segments)
        lo = a + scale * (2.0**n - 1.0)
        hi = a + scale * (2.0 ** (n + 1) - 1.0)
        segments.append(_Partition(f, lo, hi, cuts, noise))

    def tail_after(contributions: list[float]) -> float:
        if envelope is not None:
            return envelope.tail_integral(segments[-1].b)
        return _geometric_tail(contributions)

    def refine_segment(index: int, rung_tol: float) -> None:
        preceding = math.fsum(s.abs_value for s in segments[:index])
        weight = _SEGMENT_SHARE / (index + 1) ** 2
        floor = abs_tol * weight
        segments[index].refine(
            lambda p: max(floor, rung_tol * weight * max(p.abs_value, preceding))
        )
        used = sum(s.size for s in segments)
        if used > MAX_TOTAL_INTERVALS:
            raise ConvergenceError(
                f"Interval budget {MAX_TOTAL_INTERVALS} exhausted integrating from "
                f"{a:.6g} (segment [{segments[index].a:.6g}, {segments[index].b:.6g}])"
            )

    def finished(rung_tol: float) -> tuple[bool, float]:
        total = math.fsum(s.value for s in segments)
        target = max(abs_tol, rung_tol * abs(total))
        if envelope is not None:
            tail = envelope.tail_integral(segments[-1].b)
            return tail <= target, tail
        if len(segments) < 2:
            return False, math.inf
        contributions = [segments[-2].value, segments[-1].value]
        tail = _geometric_tail(contributions)
        return max(abs(c) for c in contributions) <= target and tail <= target, tail

    tail = math.inf
    for k in range(rungs + 1):
        rung_tol = 0.1 * 2.0**-k
        for i in range(len(segments)):
            refine_segment(i, rung_tol)
        while True:
            if segments:
                done, tail = finished(rung_tol)
                if done:
                    break
            if len(segments) >= MAX_SEGMENTS:
                raise ConvergenceError(
                    f"Segment budget {MAX_SEGMENTS} exhausted integrating from {a:.6g}"
                )
            add_segment()
            refine_segment(len(segments) - 1, rung_tol)
            if len(segments) < 2:
                continue
            prev, last = abs(segments[-2].value), abs(segments[-1].value)
            if last >= prev > 0.0 and math.isinf(tail_after([prev, last])):
                streak += 1
            else:
                streak = 0
            if streak >= DIVERGENCE_STREAK:
                raise DivergenceDetected(
                    "Segment contributions stopped decaying beyond "
                    f"u={segments[-1].b:.6g}",
                    test="segment_decay",
                )

        value = math.fsum(s.value for s in segments)
        error = math.fsum(s.error for s in segments) + tail
        logger.debug(
            "rung %d (tol %.3e): value=%.17g error=%.3e segments=%d tail=%.3e",
            k,
            rung_tol,
            value,
            error,
            len(segments),
            tail,
        )
        if best is None or error <= best[1]:
            best = (value, error, tail)

    assert best is not None
    return QuadratureResult(
        value=best[0],
        error_estimate=best[1],
        segments_used=len(segments),
        intervals_used=sum(s.size for s in segments),
        tail_bound=best[2],
    )


def _knot_pieces(
    f: Integrand, knots: FloatArray, tol: float, noise: Integrand | None
) -> tuple[FloatArray, FloatArray]:
    """Integrals of f between consecutive knots, each refined to its own |f|."""
    part = _Partition(f, float(knots[0]), float(knots[-1]), knots, noise)
    part.refine_locally(tol)
    piece = np.searchsorted(knots, part.left, side="right") - 1
    values = np.zeros(knots.size - 1)
    errs = np.zeros(knots.size - 1)
    np.add.at(values, piece, part.values)
    np.add.at(errs, piece, part.errors)
    return values, errs


def cumulative_tail(
    f: Integrand,
    points: npt.ArrayLike,
    tol: float = 1e-10,
    *,
    scale: float = 1.0,
    envelope: DecayEnvelope | None = None,
    noise: Integrand | None = None,
) -> tuple[FloatArray, FloatArray]:
    """Evaluate T(x) = ∫_x^∞ f for many lower limits at once.

    The range between the smallest and largest point is integrated once,
    split at every point and refined interval by interval to ``tol`` relative
    to that interval's own |f| integral, so small tails keep their relative
    accuracy. The part beyond the largest point comes from
    ``integrate_semi_infinite``.

    Args:
        f: Vectorized integrand.
        points: Lower limits (any order, repeats allowed).
        tol: Relative tolerance.
        scale: First segment length for the outermost tail.
        envelope: Declared bound on |f| for the outermost tail.
        noise: Absolute round-off level of f at each node.

    Returns:
        Tuple of (T(points), error estimates), in the order of ``points``.
    """
    x = np.asarray(points, dtype=np.float64)
    flat = x.ravel()
    if flat.size == 0:
        return np.zeros(x.shape), np.zeros(x.shape)
    knots = np.unique(flat)
    far = integrate_semi_infinite(
        f, float(knots[-1]), tol, scale=scale, envelope=envelope, noise=noise
    )
    tails = np.full(knots.size, far.value)
    errors = np.full(knots.size, far.error_estimate)
    if knots.size > 1:
        values, errs = _knot_pieces(f, knots, tol, noise)
        tails[:-1] += np.cumsum(values[::-1])[::-1]
        errors[:-1] += np.cumsum(errs[::-1])[::-1]
    index = np.searchsorted(knots, flat)
    return tails[index].reshape(x.shape), errors[index].reshape(x.shape)


def cumulative_integral(
    f: Integrand,
    a: float,
    points: npt.ArrayLike,
    tol: float = 1e-10,
    *,
    noise: Integrand | None = None,
) -> tuple[FloatArray, FloatArray]:
    """Evaluate H(x) = ∫_a^x f for many upper limits at once.

    Args:
        f: Vectorized integrand.
        a: Common lower limit.
        points: Upper limits, none below ``a`` (any order, repeats allowed).
        tol: Relative tolerance per piece between neighbouring points.
        noise: Absolute round-off level of f at each node.

    Returns:
        Tuple of (H(points), error estimates), in the order of ``points``.

    Raises:
        ValueError: If a point lies below ``a``.
    """
    x = np.asarray(points, dtype=np.float64)
    flat = x.ravel()
    if flat.size == 0:
        return np.zeros(x.shape), np.zeros(x.shape)
    if float(flat.min()) < a:
        raise ValueError(f"upper limit {float(flat.min())} is below lower limit {a}")
    knots = np.unique(np.concatenate([[a], flat]))
    heads = np.zeros(knots.size)
    errors = np.zeros(knots.size)
    if knots.size > 1:
        values, errs = _knot_pieces(f, knots, tol, noise)
        heads[1:] = np.cumsum(values)
        errors[1:] = np.cumsum(errs)
    index = np.searchsorted(knots, flat)
    return heads[index].reshape(x.shape), errors[index].reshape(x.shape)


__all__ = [
    "DIVERGENCE_STREAK",
    "MAX_INTERVALS",
    "MAX_SEGMENTS",
    "MAX_TOTAL_INTERVALS",
    "FloatArray",
    "Integrand",
    "cumulative_integral",
    "cumulative_tail",
    "integrate_finite",
    "integrate_semi_infinite",
]
