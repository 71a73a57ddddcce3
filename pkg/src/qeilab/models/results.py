"""Result records returned by numerics, qei, spectrum and fock operations."""

import math
from enum import StrEnum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qeilab.models.spectrum import SpectrumSpec
from qeilab.models.weight import WeightSpec


class BoundRoute(StrEnum):
    """下界の計算経路。"""

    WORLDLINE = "worldline"
    GFF = "gff"
    VACUUM_REFERENCE = "vacuum_reference"


class SeriesTest(StrEnum):
    """級数の収束判定に使われたテスト。"""

    FINITE = "finite"
    RATIO = "ratio"
    INTEGRAL = "integral"


class QuadratureResult(BaseModel):
    """数値積分の結果。"""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="積分値")
    error_estimate: float = Field(..., ge=0, description="誤差推定")
    segments_used: int = Field(default=0, ge=0, description="使用した幾何セグメント数")
    intervals_used: int = Field(default=0, ge=0, description="Gauss-Kronrod 区間数")
    tail_bound: float = Field(default=0.0, ge=0, description="打ち切った裾の上界")


class ExponentFit(BaseModel):
    """log-log 最小二乗フィットの結果。"""

    model_config = ConfigDict(frozen=True)

    slope: float = Field(..., description="傾き")
    intercept: float = Field(..., description="切片（log 空間）")
    residual: float = Field(..., ge=0, description="log 残差の RMS")
    points: int = Field(..., ge=3, description="窓内の点数")
    window: tuple[float, float] = Field(..., description="フィット窓 [lo, hi]")


class QeiBound(BaseModel):
    """QWEI 下界 Q[g]（平均エネルギー密度 ≥ −q_value）。"""

    model_config = ConfigDict(frozen=True)

    q_value: float = Field(..., ge=0, description="下界の大きさ Q[g]")
    quadrature_error: float = Field(..., ge=0, description="数値積分の誤差")
    route: BoundRoute = Field(..., description="計算経路")
    weight: WeightSpec = Field(..., description="使用した重み")
    mass: float | None = Field(default=None, ge=0, description="単一質量 m")
    spectrum: SpectrumSpec | None = Field(default=None, description="質量スペクトル")
    underflow: bool = Field(default=False, description="q_value が倍精度でアンダーフローしたか")
    log_error_bound: float | None = Field(
        default=None,
        description="誤差上界の自然対数（アンダーフロー時も有限）",
    )
    ratio_to_worldline: float | None = Field(
        default=None,
        description="vacuum_reference 経路での Q[g] に対する比",
    )
    metadata: dict[str, str | bool] = Field(default_factory=dict, description="重みフラグ")

    @model_validator(mode="after")
    def validate_target(self) -> Self:
        """Exactly one of mass or spectrum must be set."""
        if (self.mass is None) == (self.spectrum is None):
            raise ValueError("exactly one of mass or spectrum must be given")
        return self


class ScalingCurve(BaseModel):
    """τ に対する下界の曲線とその指数フィット。"""

    model_config = ConfigDict(frozen=True)

    tau_values: list[float] = Field(..., min_length=1, description="τ の値（狭義単調増加）")
    bound_values: list[float] = Field(..., description="各 τ での q_value")
    errors: list[float] = Field(..., description="各 τ での誤差")
    fit_window: tuple[float, float] | None = Field(default=None, description="フィット窓")
    fitted_slope: float | None = Field(default=None, description="フィットした傾き")
    fit_residual: float | None = Field(default=None, ge=0, description="フィット残差")

    @model_validator(mode="after")
    def validate_curve(self) -> Self:
        """Check lengths, ordering and finiteness."""
        n = len(self.tau_values)
        if len(self.bound_values) != n or len(self.errors) != n:
            raise ValueError("tau_values, bound_values and errors must have equal length")
        if any(t <= 0 for t in self.tau_values):
            raise ValueError("tau_values must be positive")
        if any(b <= a for a, b in zip(self.tau_values, self.tau_values[1:], strict=False)):
            raise ValueError("tau_values must be strictly increasing")
        if not all(math.isfinite(b) for b in self.bound_values):
            raise ValueError("bound_values must be finite")
        return self


class PartitionSum(BaseModel):
    """分配和 Σ exp(−β m_j) とその打ち切り誤差。"""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0, description="和の値")
    truncation_error: float = Field(..., ge=0, description="打ち切り誤差")
    test: SeriesTest = Field(..., description="収束判定に使ったテスト")
    terms_summed: int = Field(..., ge=0, description="直接和を取った項数")


class NuclearityEstimate(BaseModel):
    """核型性指数の上からの評価（指数部）。"""

    model_config = ConfigDict(frozen=True)

    log_index_bound: float = Field(..., ge=0, description="c(r/β)³ Σ|log(1−e^{−βm/2})|")
    beta: float = Field(..., gt=0, description="逆温度 β")
    r: float = Field(..., gt=0, description="半径 r")
    c: float = Field(..., gt=0, description="定数 c")
    truncation_error: float = Field(..., ge=0, description="裾の打ち切り誤差")
    series_value: float = Field(..., ge=0, description="Σ|log(1−e^{−βm/2})|")
    test: SeriesTest = Field(..., description="収束判定に使ったテスト")


class VerificationReport(BaseModel):
    """Fock 空間での QWEI 検証結果。"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_min: float = Field(..., description="二次形式の最小固有値")
    minus_q: float = Field(..., le=0, description="−q_value")
    q_value: float = Field(..., ge=0, description="連続極限の下界 Q[g]")
    ratio: float | None = Field(..., description="|λ_min| / q_value（q_value=0 なら None）")
    passed: bool = Field(..., alias="pass", description="λ_min ≥ −q(1+ε)")
    epsilon: float = Field(..., ge=0, description="有限体積の許容幅 ε")
    dimension: int = Field(..., ge=1, description="基底の次元")
    deficit: float = Field(..., ge=0, description="|λ_min + q_value|")
    box_length: float = Field(..., gt=0, description="箱の一辺 L")
    mode_count: int = Field(..., ge=1, description="モード数")


__all__ = [
    "BoundRoute",
    "ExponentFit",
    "NuclearityEstimate",
    "PartitionSum",
    "QeiBound",
    "QuadratureResult",
    "ScalingCurve",
    "SeriesTest",
    "VerificationReport",
]
