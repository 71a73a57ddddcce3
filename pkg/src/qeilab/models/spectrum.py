"""Mass-spectrum descriptors for generalized free fields."""

import math
from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class SpectrumKind(StrEnum):
    """質量スペクトルの種類。"""

    LIST = "list"
    ARITHMETIC = "arithmetic"
    POWER_LAW = "power_law"
    LOGARITHMIC = "logarithmic"


class _SpectrumBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ListSpectrum(_SpectrumBase):
    """明示的な質量リスト（重複は多重度）。"""

    kind: Literal["list"] = "list"
    masses: tuple[float, ...] = Field(..., min_length=1, description="質量のリスト")

    @field_validator("masses")
    @classmethod
    def validate_masses(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Masses must be positive and finite; they are stored sorted."""
        if not all(math.isfinite(m) and m > 0 for m in v):
            raise ValueError("all masses must be positive and finite")
        return tuple(sorted(v))


class ArithmeticSpectrum(_SpectrumBase):
    """等差スペクトル m_j = j·m0（j ≥ 1）。"""

    kind: Literal["arithmetic"] = "arithmetic"
    m0: float = Field(default=1.0, gt=0, description="質量間隔 m0")


class PowerLawSpectrum(_SpectrumBase):
    """べき則スペクトル N(u)=⌊c·u^p⌋、質量は m_n=(n/c)^(1/p)。"""

    kind: Literal["power_law"] = "power_law"
    c: float = Field(default=1.0, gt=0, description="係数 c")
    p: float = Field(default=1.0, gt=0, description="指数 p")


class LogarithmicSpectrum(_SpectrumBase):
    """対数スペクトル m_j = s·log(j+1)（指数的な N(u)）。"""

    kind: Literal["logarithmic"] = "logarithmic"
    scale: float = Field(default=1.0, gt=0, description="スケール s")


SpectrumSpec = Annotated[
    ListSpectrum | ArithmeticSpectrum | PowerLawSpectrum | LogarithmicSpectrum,
    Field(discriminator="kind"),
]
"""質量スペクトルの入力型（kind で判別）。"""

MassSpectrum = ListSpectrum | ArithmeticSpectrum | PowerLawSpectrum | LogarithmicSpectrum

__all__ = [
    "ArithmeticSpectrum",
    "ListSpectrum",
    "LogarithmicSpectrum",
    "MassSpectrum",
    "PowerLawSpectrum",
    "SpectrumKind",
    "SpectrumSpec",
]
