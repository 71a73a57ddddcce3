"""Configuration models for qeilab commands."""

from typing import Any, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qeilab.fock import DEFAULT_EPSILON, Sector
from qeilab.models.spectrum import SpectrumSpec
from qeilab.models.weight import GaussianWeight, WeightSpec

DEFAULT_TOL: float = 1e-10
"""数値積分のデフォルト相対許容誤差。"""

DEFAULT_VACUUM_TOL: float = 1e-8
"""vacuum-bound の外側積分のデフォルト相対許容誤差。"""


class NumericsOptions(BaseModel):
    """数値計算オプション。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=DEFAULT_TOL, gt=0, lt=1, description="相対許容誤差")
    workers: int = Field(default=1, ge=1, le=64, description="グリッド評価のスレッド数")


class LoggingOptions(BaseModel):
    """ロギングオプション。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="WARNING", description="ログレベル"
    )


class _CommandConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    numerics: NumericsOptions = Field(default_factory=NumericsOptions)
    logging: LoggingOptions = Field(default_factory=LoggingOptions)


class Grid(BaseModel):
    """対数等間隔グリッド min:max:count。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    min: float = Field(..., gt=0, description="最小値")
    max: float = Field(..., gt=0, description="最大値")
    count: int = Field(..., ge=1, le=10_000, description="点数")

    @model_validator(mode="before")
    @classmethod
    def parse_shorthand(cls, data: Any) -> Any:
        """Accept a single number or the string form min:max:count."""
        if isinstance(data, int | float) and not isinstance(data, bool):
            return {"min": data, "max": data, "count": 1}
        if isinstance(data, str):
            parts = data.split(":")
            if len(parts) == 1:
                return {"min": parts[0], "max": parts[0], "count": 1}
            if len(parts) != 3:
                raise ValueError(f"grid must be a number or min:max:count, got {data!r}")
            return {"min": parts[0], "max": parts[1], "count": parts[2]}
        return data

    @model_validator(mode="after")
    def validate_range(self) -> Self:
        """A grid of several points needs min < max."""
        if self.count > 1 and not self.min < self.max:
            raise ValueError(f"grid min {self.min} must be below max {self.max}")
        if self.count == 1 and self.min != self.max:
            raise ValueError("a one-point grid needs min == max")
        return self

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.min]
        return [float(x) for x in np.geomspace(self.min, self.max, self.count)]


class BoundConfig(_CommandConfig):
    """bound コマンドの設定（単一質量の QWEI 下界）。"""

    weight: WeightSpec = Field(default_factory=GaussianWeight, description="重み関数")
    mass: float = Field(..., ge=0, description="質量 m")
    tau: float = Field(default=1.0, gt=0, description="重みに掛けるスケール τ")


class GffConfig(_CommandConfig):
    """gff コマンドの設定（一般化自由場の QWEI 下界）。"""

    weight: WeightSpec = Field(default_factory=GaussianWeight, description="重み関数")
    spectrum: SpectrumSpec = Field(..., description="質量スペクトル")
    tau: float = Field(default=1.0, gt=0, description="重みに掛けるスケール τ")


class VacuumBoundConfig(_CommandConfig):
    """vacuum-bound コマンドの設定（真空参照経路）。"""

    numerics: NumericsOptions = Field(
        default_factory=lambda: NumericsOptions(tol=DEFAULT_VACUUM_TOL)
    )
    weight: WeightSpec = Field(default_factory=GaussianWeight, description="重み関数")
    mass: float = Field(..., ge=0, description="質量 m")
    tau: float = Field(default=1.0, gt=0, description="重みに掛けるスケール τ")


class ScalingConfig(_CommandConfig):
    """scaling コマンドの設定（τ 依存性と指数フィット）。"""

    weight: WeightSpec = Field(default_factory=GaussianWeight, description="重み関数")
    mass: float | None = Field(default=None, ge=0, description="質量 m（spectrum と排他）")
    spectrum: SpectrumSpec | None = Field(default=None, description="質量スペクトル")
    tau: Grid = Field(..., description="τ グリッド")
    fit: Literal["all"] | tuple[float, float] | None = Field(
        default=None, description="フィット窓（all または [lo, hi]）"
    )

    @field_validator("fit", mode="before")
    @classmethod
    def parse_fit(cls, v: Any) -> Any:
        """Accept the string form lo:hi."""
        if isinstance(v, str) and v != "all":
            parts = v.split(":")
            if len(parts) != 2:
                raise ValueError(f"fit must be all or lo:hi, got {v!r}")
            return (parts[0], parts[1])
        return v

    @model_validator(mode="after")
    def validate_target(self) -> Self:
        """Exactly one of mass or spectrum."""
        if (self.mass is None) == (self.spectrum is None):
            raise ValueError("exactly one of mass or spectrum must be given")
        return self

    def fit_window(self) -> tuple[float, float] | None:
        if self.fit is None:
            return None
        if self.fit == "all":
            taus = self.tau.values()
            return taus[0], taus[-1]
        return self.fit


class NuclearityConfig(_CommandConfig):
    """nuclearity コマンドの設定。"""

    spectrum: SpectrumSpec = Field(..., description="質量スペクトル")
    beta: Grid = Field(..., description="β の値またはグリッド")
    r: float = Field(default=1.0, gt=0, description="半径 r")
    c: float = Field(default=1.0, gt=0, description="定数 c")


class FockConfig(_CommandConfig):
    """fock コマンドの設定（切断 Fock 空間での検証）。"""

    L: float = Field(default=8.0, gt=0, description="箱の一辺")
    Lambda: float = Field(default=2.0, gt=0, description="運動量カットオフ Λ")
    mass: float = Field(default=1.0, ge=0, description="質量 m")
    weight: WeightSpec = Field(default_factory=GaussianWeight, description="重み関数")
    tau: float = Field(default=1.0, gt=0, description="重みに掛けるスケール τ")
    epsilon: float = Field(default=DEFAULT_EPSILON, ge=0, description="有限体積の許容幅 ε")
    sector: Sector = Field(default=Sector.TWO, description="粒子数セクター")
    k_min: float = Field(default=0.0, ge=0, description="赤外下限")
    trend: list[float] | None = Field(
        default=None, description="体積トレンドを取る L の値（固定 Λ）"
    )


COMMAND_CONFIGS: dict[str, type[_CommandConfig]] = {
    "bound": BoundConfig,
    "gff": GffConfig,
    "vacuum-bound": VacuumBoundConfig,
    "scaling": ScalingConfig,
    "nuclearity": NuclearityConfig,
    "fock": FockConfig,
}
"""サブコマンド名と設定モデルの対応。"""

CommandConfig = (
    BoundConfig
    | GffConfig
    | VacuumBoundConfig
    | ScalingConfig
    | NuclearityConfig
    | FockConfig
)
