"""Exception hierarchy for qeilab."""


class QeiLabError(Exception):
    """qeilab の全例外の基底クラス。"""


class DivergenceDetected(QeiLabError):
    """積分または級数が減衰テストに失敗した。

    Attributes:
        test: 発火したテスト名（"segment_decay", "envelope", "integral" など）
    """

    def __init__(self, message: str, test: str = "segment_decay") -> None:
        self.test = test
        super().__init__(message)


class ConvergenceError(QeiLabError):
    """反復・区間数の上限に達しても許容誤差を満たせなかった。"""


class ResolutionError(QeiLabError):
    """周波数グリッドがサポート幅やカットオフを解像できない。"""


class NonPositiveScale(QeiLabError, ValueError):
    """スケール τ が正でない。"""

    def __init__(self, tau: float) -> None:
        self.tau = tau
        super().__init__(f"Scale tau must be positive, got {tau!r}")


class InsufficientPoints(QeiLabError, ValueError):
    """フィット窓に含まれる点が 3 点未満。"""

    def __init__(self, count: int, required: int = 3) -> None:
        self.count = count
        self.required = required
        super().__init__(
            f"Fit window contains {count} points; at least {required} are required"
        )


class MasslessZeroMode(QeiLabError, ValueError):
    """m=0 で k=0 モードを含めようとした。"""


class MismatchedInputs(QeiLabError, ValueError):
    """二次形式と下界が異なる重み・質量から作られている。"""


class ConfigError(QeiLabError, ValueError):
    """設定の検証エラー（フィールドパス付きの項目リスト）。"""

    def __init__(self, errors: list[str]) -> None:
        self.errors = errors
        super().__init__("Invalid configuration:\n" + "\n".join(f"  {e}" for e in errors))


__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DivergenceDetected",
    "InsufficientPoints",
    "MasslessZeroMode",
    "MismatchedInputs",
    "NonPositiveScale",
    "QeiLabError",
    "ResolutionError",
]
