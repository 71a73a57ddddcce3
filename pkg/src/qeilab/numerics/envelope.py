"""Declared decay envelopes and rigorous tail bounds."""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecayEnvelope:
    """非負の被積分関数の上界 A·u^K·exp(−b·u^α + γ·u)（u ≥ u0 で有効）。

    Attributes:
        amplitude: 係数 A
        power: 多項式指数 K
        rate: 指数減衰率 b（0 なら多項式減衰のみ）
        shape: 指数 α
        growth: 指数成長率 γ（スペクトルの成長から）
        valid_from: 有効範囲の下限 u0
    """

    amplitude: float
    power: float = 0.0
    rate: float = 0.0
    shape: float = 1.0
    growth: float = 0.0
    valid_from: float = 0.0

    def __call__(self, u: npt.ArrayLike) -> npt.NDArray[np.float64]:
        x = np.asarray(u, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = self.amplitude * np.exp(
                self.power * np.log(x) - self.rate * x**self.shape + self.growth * x
            )
        return np.where(x > 0, out, np.inf if self.power < 0 else 0.0)

    @property
    def decays(self) -> bool:
        """Whether the tail integral is finite for some cutoff."""
        if self.amplitude == 0.0:
            return True
        if self.rate == 0.0:
            return self.growth == 0.0 and self.power < -1.0
        if self.growth == 0.0:
            return True
        return self.shape > 1.0 or (self.shape == 1.0 and self.rate > self.growth)

    def _denominator(self, cutoff: float) -> float:
        """Lower bound D of αb·u^α − γu − (K+1) on [cutoff, ∞), or 0 if none."""
        d = (
            self.shape * self.rate * cutoff**self.shape
            - self.growth * cutoff
            - (self.power + 1.0)
        )
        if self.growth > 0.0:
            if self.shape < 1.0:
                return 0.0
            slope = self.shape**2 * self.rate * cutoff ** (self.shape - 1.0)
            if slope < self.growth:
                return 0.0
        return max(d, 0.0)

    def log_tail_integral(self, cutoff: float) -> float:
        """Return log of an upper bound on ∫_cutoff^∞ of the envelope.

        Args:
            cutoff: Lower limit U of the tail.

        Returns:
            The logarithm of the bound; ``inf`` when the envelope cannot bound
            the tail at this cutoff, ``-inf`` for a zero envelope.
        """
        if self.amplitude == 0.0:
            return -math.inf
        if cutoff < self.valid_from or cutoff <= 0.0:
            return math.inf
        d = self._denominator(cutoff)
        if d <= 0.0:
            return math.inf
        return (
            math.log(self.amplitude)
            + (self.power + 1.0) * math.log(cutoff)
            - self.rate * cutoff**self.shape
            + self.growth * cutoff
            - math.log(d)
        )

    def tail_integral(self, cutoff: float) -> float:
        """Return an upper bound on ∫_cutoff^∞ of the envelope (``inf`` if none)."""
        log_tail = self.log_tail_integral(cutoff)
        if log_tail == math.inf:
            return math.inf
        if log_tail < -745.0:
            return 0.0
        return math.exp(log_tail)

    def scaled(self, factor: float) -> "DecayEnvelope":
        return replace(self, amplitude=self.amplitude * factor)

    def times_power(self, k: float) -> "DecayEnvelope":
        return replace(self, power=self.power + k)

    def times_growth(
        self, coefficient: float, power: float, rate: float
    ) -> "DecayEnvelope":
        """Multiply by a growth bound C·u^p·e^{γu}."""
        return replace(
            self,
            amplitude=self.amplitude * coefficient,
            power=self.power + power,
            growth=self.growth + rate,
        )


__all__ = ["DecayEnvelope"]
