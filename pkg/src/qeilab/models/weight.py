"""Weight (sampling function) descriptors.

Defines the discriminated union of weight families:
- gaussian: Schwartz-class control case with closed-form transforms
- bump: smooth compactly supported exp(-1/(1-x^2))
- cos2: compactly supported cos^2 window (C^1 only)
- samples: tabulated profile with cubic-spline interpolation
"""

import math
from enum import StrEnum
from typing import Annotated, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class WeightFamily(StrEnum):
    """重み関数のファミリー。"""

    GAUSSIAN = "gaussian"
    BUMP = "bump"
    COS2 = "cos2"
    SAMPLES = "samples"


class ProfileParams(BaseModel):
    """解析的プロファイルの共通パラメータ。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    width: float = Field(default=1.0, gt=0, description="基本プロファイルの幅")
    center: float = Field(default=0.0, description="中心時刻")


class SamplesParams(BaseModel):
    """サンプル表のパラメータ。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t: tuple[float, ...] = Field(..., min_length=4, description="サンプル時刻（狭義単調増加）")
    g: tuple[float, ...] = Field(..., min_length=4, description="サンプル値")
    decay: float = Field(
        default=3.0,
        gt=0,
        description="宣言されたフーリエ減衰の多項式下限 q（|ĝ(u)| ≲ u^-q）",
    )

    @model_validator(mode="after")
    def validate_table(self) -> Self:
        """Validate table shape, ordering and finiteness."""
        if len(self.t) != len(self.g):
            raise ValueError(
                f"t and g must have equal length, got {len(self.t)} and {len(self.g)}"
            )
        if not all(math.isfinite(x) for x in (*self.t, *self.g)):
            raise ValueError("sample table must contain only finite values")
        if any(b <= a for a, b in zip(self.t, self.t[1:], strict=False)):
            raise ValueError("t must be strictly increasing")
        return self


class _WeightBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tau: float = Field(default=1.0, gt=0, description="スケール τ（g_τ(t)=τ^-1/2 g(t/τ)）")


class GaussianWeight(_WeightBase):
    """L² 正規化ガウス重み g(t)=π^-1/4 σ^-1/2 exp(-(t-c)²/2σ²)。"""

    family: Literal["gaussian"] = "gaussian"
    params: ProfileParams = Field(default_factory=ProfileParams)


class BumpWeight(_WeightBase):
    """滑らかなバンプ関数 exp(-1/(1-((t-c)/w)²))。"""

    family: Literal["bump"] = "bump"
    params: ProfileParams = Field(default_factory=ProfileParams)


class Cos2Weight(_WeightBase):
    """cos² 窓 cos²(π(t-c)/2w)（|t-c| ≤ w）。"""

    family: Literal["cos2"] = "cos2"
    params: ProfileParams = Field(default_factory=ProfileParams)


class SampledWeight(_WeightBase):
    """サンプル表からスプライン補間した重み。"""

    family: Literal["samples"] = "samples"
    params: SamplesParams


WeightSpec = Annotated[
    GaussianWeight | BumpWeight | Cos2Weight | SampledWeight,
    Field(discriminator="family"),
]
"""重み関数の入力型（family で判別）。"""

Weight = GaussianWeight | BumpWeight | Cos2Weight | SampledWeight

__all__ = [
    "BumpWeight",
    "Cos2Weight",
    "GaussianWeight",
    "ProfileParams",
    "SampledWeight",
    "SamplesParams",
    "Weight",
    "WeightFamily",
    "WeightSpec",
]
