"""Run record written by every CLI command."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class RunMetadata(BaseModel):
    """再現性比較から除外されるメタデータ。"""

    model_config = ConfigDict(frozen=True)

    timestamp: str = Field(..., description="実行開始時刻（ISO 8601, UTC）")
    wall_time_s: float = Field(..., ge=0, description="実行時間（秒）")


class RunRecord(BaseModel):
    """1 回の実行の記録。

    results は config から決定的に再計算でき、replay で比較される。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: str = Field(..., description="サブコマンド名")
    version: str = Field(..., description="qeilab のバージョン")
    config: dict[str, Any] = Field(..., description="検証済みの完全な設定")
    inputs: dict[str, Any] = Field(default_factory=dict, description="解析済みの重み・スペクトル")
    results: dict[str, Any] = Field(..., description="結果ペイロード")
    metadata: RunMetadata = Field(..., description="タイムスタンプと実行時間")


__all__ = ["RunMetadata", "RunRecord"]
