"""CLI main module for qeilab.

Every subcommand validates its config, runs the computation and emits a
RunRecord as JSON (stdout or ``--out``). Exit codes: 0 success, 1 config or
usage error, 2 divergence detected, 3 numerical non-convergence.
"""

import json
import logging
import time
from collections.abc import Callable
from datetime import UTC, datetime
from pathlib import Path
from typing import Annotated, Any, NoReturn

import typer
from pydantic import BaseModel

from qeilab import __version__
from qeilab.config import (
    BoundConfig,
    CommandConfig,
    FockConfig,
    GffConfig,
    NuclearityConfig,
    ScalingConfig,
    VacuumBoundConfig,
    load_config,
    validate_config,
)
from qeilab.errors import (
    ConfigError,
    ConvergenceError,
    DivergenceDetected,
    QeiLabError,
    ResolutionError,
)
from qeilab.fock import (
    assemble_smeared_energy_form,
    build_mode_set,
    verify_qwei,
    volume_trend,
)
from qeilab.models import ScalingCurve, WeightFamily
from qeilab.qei import (
    gff_qwei_bound,
    local_slopes,
    scaling_curve,
    vacuum_reference_bound,
    worldline_qwei_bound,
)
from qeilab.records import (
    build_record,
    dump_record,
    load_record,
    results_payload,
    write_curve_csv,
    write_record,
)
from qeilab.spectrum import fit_nuclearity_exponent, nuclearity_log_index
from qeilab.weights import rescale

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
"""設定・使い方のエラー。"""

EXIT_DIVERGENCE = 2
"""DivergenceDetected。"""

EXIT_NUMERICAL = 3
"""数値的な非収束（ConvergenceError / ResolutionError）。"""

app = typer.Typer(
    name="qeilab",
    help="qeilab - 量子エネルギー不等式の下界計算と Fock 空間での検証",
    add_completion=False,
)

Results = tuple[dict[str, Any], dict[str, BaseModel | None], ScalingCurve | None]


def version_callback(value: bool) -> None:
    """Show version and exit."""
    if value:
        typer.echo(f"qeilab version {__version__}")
        raise typer.Exit()


def _fail(message: str, code: int = EXIT_CONFIG) -> NoReturn:
    typer.echo(f"エラー: {message}", err=True)
    raise typer.Exit(code)


def _parse_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        _fail(f"{what} が JSON として不正です: {e}")


def _parse_weight(text: str) -> Any:
    """A bare family name fills the defaults; anything else is inline JSON."""
    if text in {f.value for f in WeightFamily}:
        return {"family": text}
    return _parse_json(text, "--weight")


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Overlay flags on the file config; unset flags (None) never reach the model."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            current = merged.get(key)
            nested = _merge(current if isinstance(current, dict) else {}, value)
            if nested:
                merged[key] = nested
            continue
        merged[key] = value
    return merged


def _resolve(
    command: str, config_file: Path | None, overrides: dict[str, Any]
) -> CommandConfig:
    """Load the config file, apply inline flags and validate."""
    data: dict[str, Any] = {}
    if config_file is not None:
        try:
            data = load_config(config_file)
        except FileNotFoundError:
            _fail(f"設定ファイルが見つかりません: {config_file}")
        except ValueError as e:
            _fail(f"設定ファイルが不正です: {e}")
        data.pop("command", None)
    try:
        config = validate_config(command, _merge(data, overrides))
    except ConfigError as e:
        _fail("設定が不正です:\n" + "\n".join(f"  {item}" for item in e.errors))
    if not logging.getLogger().isEnabledFor(logging.DEBUG):
        logging.getLogger("qeilab").setLevel(config.logging.level)
    return config


def _bound_results(bound: BaseModel) -> dict[str, Any]:
    payload = bound.model_dump(mode="json", exclude={"weight", "spectrum"})
    payload["error"] = payload.pop("quadrature_error")
    return payload


def _run_bound(config: BoundConfig) -> Results:
    w = rescale(config.weight, config.tau)
    bound = worldline_qwei_bound(w, config.mass, config.numerics.tol)
    return _bound_results(bound), {"weight": config.weight}, None


def _run_gff(config: GffConfig) -> Results:
    w = rescale(config.weight, config.tau)
    bound = gff_qwei_bound(w, config.spectrum, config.numerics.tol)
    inputs: dict[str, BaseModel | None] = {
        "weight": config.weight,
        "spectrum": config.spectrum,
    }
    return _bound_results(bound), inputs, None


def _run_vacuum_bound(config: VacuumBoundConfig) -> Results:
    w = rescale(config.weight, config.tau)
    bound = vacuum_reference_bound(w, config.mass, config.numerics.tol)
    return _bound_results(bound), {"weight": config.weight}, None


def _run_scaling(config: ScalingConfig) -> Results:
    target = config.mass if config.spectrum is None else config.spectrum
    assert target is not None
    curve = scaling_curve(
        config.weight,
        target,
        config.tau.values(),
        config.numerics.tol,
        workers=config.numerics.workers,
        window=config.fit_window(),
    )
    results = curve.model_dump(mode="json")
    results["local_slopes"] = local_slopes(curve)
    inputs: dict[str, BaseModel | None] = {
        "weight": config.weight,
        "spectrum": config.spectrum,
    }
    return results, inputs, curve


def _run_nuclearity(config: NuclearityConfig) -> Results:
    betas = config.beta.values()
    estimates = [
        nuclearity_log_index(config.spectrum, b, config.r, config.c) for b in betas
    ]
    results: dict[str, Any] = {
        "estimates": [e.model_dump(mode="json") for e in estimates],
        "fit": None,
    }
    if len(betas) >= 3:
        fit = fit_nuclearity_exponent(config.spectrum, betas, config.r, config.c)
        results["fit"] = fit.model_dump(mode="json")
        results["exponent"] = fit.slope
    return results, {"spectrum": config.spectrum}, None


def _run_fock(config: FockConfig) -> Results:
    w = rescale(config.weight, config.tau)
    modes = build_mode_set(config.L, config.Lambda, config.mass, k_min=config.k_min)
    form = assemble_smeared_energy_form(modes, w, config.sector)
    bound = worldline_qwei_bound(w, config.mass, config.numerics.tol)
    report = verify_qwei(form, bound, config.epsilon)
    results = report.model_dump(mode="json", by_alias=True)
    if config.trend:
        reports = volume_trend(
            config.trend,
            config.Lambda,
            w,
            config.mass,
            config.epsilon,
            config.sector,
            k_min=config.k_min,
        )
        results["trend"] = [r.model_dump(mode="json", by_alias=True) for r in reports]
    return results, {"weight": config.weight}, None


_RUNNERS: dict[str, Callable[[Any], Results]] = {
    "bound": _run_bound,
    "gff": _run_gff,
    "vacuum-bound": _run_vacuum_bound,
    "scaling": _run_scaling,
    "nuclearity": _run_nuclearity,
    "fock": _run_fock,
}


def execute(command: str, config: CommandConfig) -> Results:
    """Run a validated config and return (results, inputs, curve)."""
    return _RUNNERS[command](config)


def _execute_or_exit(command: str, config: CommandConfig) -> tuple[Results, float]:
    started = time.perf_counter()
    try:
        outcome = execute(command, config)
    except DivergenceDetected as e:
        _fail(f"発散を検出しました ({e.test}): {e}", EXIT_DIVERGENCE)
    except (ConvergenceError, ResolutionError) as e:
        _fail(f"数値計算が収束しませんでした: {e}", EXIT_NUMERICAL)
    except (QeiLabError, ValueError) as e:
        _fail(str(e))
    return outcome, time.perf_counter() - started


def _emit(
    command: str,
    config: CommandConfig,
    out: Path | None,
    csv_path: Path | None = None,
) -> None:
    """Run the command and write the RunRecord (and scaling CSV)."""
    started_at = datetime.now(UTC)
    (results, inputs, curve), elapsed = _execute_or_exit(command, config)
    record = build_record(
        command,
        __version__,
        config,
        results,
        inputs=inputs,
        started=started_at,
        wall_time_s=elapsed,
    )
    if out is None:
        typer.echo(dump_record(record))
    else:
        write_record(record, out)
        typer.echo(f"結果を書き込みました: {out}")
    if curve is not None:
        target = csv_path or (out.with_suffix(".csv") if out is not None else None)
        if target is not None:
            write_curve_csv(curve, target)
            typer.echo(f"CSV を書き込みました: {target}")


ConfigOption = Annotated[
    Path | None, typer.Option("--config", help="YAML/JSON 設定ファイル")
]
OutOption = Annotated[
    Path | None, typer.Option("--out", "-o", help="RunRecord の出力先（省略時は標準出力）")
]
WeightOption = Annotated[
    str | None,
    typer.Option("--weight", "-w", help="重み: ファミリー名またはインライン JSON"),
]
SpectrumOption = Annotated[
    str | None, typer.Option("--spectrum", "-s", help="質量スペクトル（インライン JSON）")
]
TolOption = Annotated[float | None, typer.Option("--tol", help="相対許容誤差")]


def _weight_override(weight: str | None) -> Any:
    return None if weight is None else _parse_weight(weight)


def _spectrum_override(spectrum: str | None) -> Any:
    return None if spectrum is None else _parse_json(spectrum, "--spectrum")


@app.callback()
def main(
    version: Annotated[
        bool,
        typer.Option(
            "--version",
            "-v",
            help="バージョン情報を表示",
            callback=version_callback,
            is_eager=True,
        ),
    ] = False,
    verbose: Annotated[
        bool, typer.Option("--verbose", "-V", help="詳細な計算ログを表示")
    ] = False,
) -> None:
    """qeilab - 量子エネルギー不等式の下界計算と Fock 空間での検証。"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    logging.getLogger("qeilab").setLevel(logging.NOTSET)


@app.command()
def bound(
    weight: WeightOption = None,
    mass: Annotated[float | None, typer.Option("--mass", "-m", help="質量 m")] = None,
    tau: Annotated[float | None, typer.Option("--tau", help="スケール τ")] = None,
    tol: TolOption = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """単一質量の QWEI 下界 Q[g] を計算します。"""
    overrides = {
        "weight": _weight_override(weight),
        "mass": mass,
        "tau": tau,
        "numerics": {"tol": tol},
    }
    config = _resolve("bound", config_file, overrides)
    _emit("bound", config, out)


@app.command()
def gff(
    weight: WeightOption = None,
    spectrum: SpectrumOption = None,
    tau: Annotated[float | None, typer.Option("--tau", help="スケール τ")] = None,
    tol: TolOption = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """一般化自由場の QWEI 下界を計算します。"""
    overrides = {
        "weight": _weight_override(weight),
        "spectrum": _spectrum_override(spectrum),
        "tau": tau,
        "numerics": {"tol": tol},
    }
    config = _resolve("gff", config_file, overrides)
    _emit("gff", config, out)


@app.command(name="vacuum-bound")
def vacuum_bound(
    weight: WeightOption = None,
    mass: Annotated[float | None, typer.Option("--mass", "-m", help="質量 m")] = None,
    tau: Annotated[float | None, typer.Option("--tau", help="スケール τ")] = None,
    tol: TolOption = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """真空参照（点分離）経路で下界を計算します。"""
    overrides = {
        "weight": _weight_override(weight),
        "mass": mass,
        "tau": tau,
        "numerics": {"tol": tol},
    }
    config = _resolve("vacuum-bound", config_file, overrides)
    _emit("vacuum-bound", config, out)


@app.command()
def scaling(
    weight: WeightOption = None,
    mass: Annotated[float | None, typer.Option("--mass", "-m", help="質量 m")] = None,
    spectrum: SpectrumOption = None,
    tau: Annotated[
        str | None, typer.Option("--tau", help="τ グリッド min:max:count（対数等間隔）")
    ] = None,
    fit: Annotated[
        str | None, typer.Option("--fit", help="フィット窓: all または lo:hi")
    ] = None,
    workers: Annotated[
        int | None, typer.Option("--workers", help="並列スレッド数")
    ] = None,
    tol: TolOption = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
    csv_path: Annotated[
        Path | None, typer.Option("--csv", help="CSV 出力先（既定は --out の .csv）")
    ] = None,
) -> None:
    """τ に対する下界の曲線と指数フィットを計算します。"""
    overrides = {
        "weight": _weight_override(weight),
        "mass": mass,
        "spectrum": _spectrum_override(spectrum),
        "tau": tau,
        "fit": fit,
        "numerics": {"tol": tol, "workers": workers},
    }
    config = _resolve("scaling", config_file, overrides)
    _emit("scaling", config, out, csv_path)


@app.command()
def nuclearity(
    spectrum: SpectrumOption = None,
    beta: Annotated[
        str | None, typer.Option("--beta", "-b", help="β の値またはグリッド min:max:count")
    ] = None,
    r: Annotated[float | None, typer.Option("--r", help="半径 r")] = None,
    c: Annotated[float | None, typer.Option("--c", help="定数 c")] = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """核型性指数の上からの評価と β 指数を計算します。"""
    overrides = {
        "spectrum": _spectrum_override(spectrum),
        "beta": beta,
        "r": r,
        "c": c,
    }
    config = _resolve("nuclearity", config_file, overrides)
    _emit("nuclearity", config, out)


@app.command()
def fock(
    box_length: Annotated[float | None, typer.Option("--L", "-L", help="箱の一辺")] = None,
    cutoff: Annotated[
        float | None, typer.Option("--Lambda", help="運動量カットオフ Λ")
    ] = None,
    mass: Annotated[float | None, typer.Option("--mass", "-m", help="質量 m")] = None,
    weight: WeightOption = None,
    tau: Annotated[float | None, typer.Option("--tau", help="スケール τ")] = None,
    epsilon: Annotated[
        float | None, typer.Option("--epsilon", help="有限体積の許容幅 ε")
    ] = None,
    sector: Annotated[
        str | None, typer.Option("--sector", help="粒子数セクター (0+2 / 0+2+4)")
    ] = None,
    k_min: Annotated[float | None, typer.Option("--k-min", help="赤外下限")] = None,
    trend: Annotated[
        str | None, typer.Option("--trend", help="体積トレンドの L（カンマ区切り）")
    ] = None,
    config_file: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """切断 Fock 空間で二次形式の最小固有値を求め、下界と比較します。"""
    trend_values: list[str] | None = None
    if trend is not None:
        trend_values = [part.strip() for part in trend.split(",") if part.strip()]
    overrides = {
        "L": box_length,
        "Lambda": cutoff,
        "mass": mass,
        "weight": _weight_override(weight),
        "tau": tau,
        "epsilon": epsilon,
        "sector": sector,
        "k_min": k_min,
        "trend": trend_values,
    }
    config = _resolve("fock", config_file, overrides)
    _emit("fock", config, out)


@app.command()
def validate(
    config_file: Annotated[
        Path | None, typer.Argument(help="YAML/JSON 設定ファイル")
    ] = None,
    command: Annotated[
        str | None, typer.Option("--command", help="対象のサブコマンド")
    ] = None,
    inline: Annotated[
        str | None, typer.Option("--json", help="インライン JSON 設定")
    ] = None,
) -> None:
    """設定を検証し、デフォルトを補った設定を表示します。"""
    data: dict[str, Any] = {}
    if config_file is not None:
        try:
            data = load_config(config_file)
        except FileNotFoundError:
            _fail(f"設定ファイルが見つかりません: {config_file}")
        except ValueError as e:
            _fail(f"設定ファイルが不正です: {e}")
    if inline is not None:
        parsed = _parse_json(inline, "--json")
        if not isinstance(parsed, dict):
            _fail("--json はオブジェクトである必要があります")
        data = _merge(data, parsed)
    name = command or data.pop("command", None)
    data.pop("command", None)
    if name is None:
        _fail("サブコマンドを指定してください (--command または設定の command)")
    try:
        config = validate_config(name, data)
    except ConfigError as e:
        _fail("設定が不正です:\n" + "\n".join(f"  {item}" for item in e.errors))
    typer.echo(json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2))


@app.command()
def replay(
    record_file: Annotated[Path, typer.Argument(help="RunRecord JSON ファイル")],
) -> None:
    """RunRecord を再実行し、結果が一致するかを確認します。"""
    try:
        record = load_record(record_file)
    except FileNotFoundError:
        _fail(f"記録ファイルが見つかりません: {record_file}")
    except ValueError as e:
        _fail(f"記録ファイルが不正です: {e}")
    try:
        config = validate_config(record.command, record.config)
    except ConfigError as e:
        _fail("記録された設定が不正です:\n" + "\n".join(f"  {i}" for i in e.errors))
    (results, inputs, _), elapsed = _execute_or_exit(record.command, config)
    rerun = build_record(
        record.command, __version__, config, results, inputs=inputs, wall_time_s=elapsed
    )
    if results_payload(rerun) != results_payload(record):
        _fail(f"結果が一致しません: {record_file}")
    typer.echo(f"一致しました: {record_file} ({record.command})")
