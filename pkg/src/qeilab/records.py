"""RunRecord persistence and scaling-curve CSV output.

Records are written as JSON with sorted keys. The ``results`` payload is
compared byte for byte on replay; ``metadata`` (timestamp, wall time) is
excluded from that comparison.
"""

import csv
import io
import json
import logging
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from qeilab.models.record import RunMetadata, RunRecord
from qeilab.models.results import ScalingCurve

logger = logging.getLogger(__name__)

CSV_HEADER = ("tau", "bound", "error")
"""スケーリング曲線 CSV のヘッダー。"""


def _format_float(x: float) -> str:
    return format(x, ".17g")


def build_record(
    command: str,
    version: str,
    config: BaseModel,
    results: dict[str, Any],
    *,
    inputs: dict[str, BaseModel | None] | None = None,
    started: datetime | None = None,
    wall_time_s: float = 0.0,
) -> RunRecord:
    """Assemble a RunRecord from a validated config and a results payload.

    Args:
        command: Subcommand name.
        version: qeilab version string.
        config: Validated command config (echoed with defaults filled).
        results: JSON-compatible results payload.
        inputs: Parsed weight and spectrum objects.
        started: Start time; now when omitted.
        wall_time_s: Elapsed wall time in seconds.
    """
    parsed = {
        name: value.model_dump(mode="json")
        for name, value in (inputs or {}).items()
        if value is not None
    }
    return RunRecord(
        command=command,
        version=version,
        config=config.model_dump(mode="json"),
        inputs=parsed,
        results=results,
        metadata=RunMetadata(
            timestamp=(started or datetime.now(UTC)).isoformat(),
            wall_time_s=wall_time_s,
        ),
    )


def dump_record(record: RunRecord) -> str:
    """Serialize a record as indented JSON with sorted keys."""
    return json.dumps(
        record.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False
    )


def results_payload(record: RunRecord) -> str:
    """Canonical compact JSON of the results payload used for replay comparison."""
    return json.dumps(record.results, sort_keys=True, separators=(",", ":"))


def write_record(record: RunRecord, path: str | Path) -> Path:
    """Write a record to ``path`` (parents are created)."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dump_record(record) + "\n", encoding="utf-8")
    logger.info("Wrote %s record to %s", record.command, out)
    return out


def load_record(path: str | Path) -> RunRecord:
    """Read a record written by ``write_record``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file is not a valid RunRecord.
    """
    src = Path(path)
    if not src.exists():
        raise FileNotFoundError(f"Record file not found: {src}")
    try:
        return RunRecord.model_validate_json(src.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ValueError(f"Invalid run record in {src}: {e}") from None


def curve_csv(curve: ScalingCurve) -> str:
    """Render a scaling curve as CSV with 17 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for tau, bound, error in zip(
        curve.tau_values, curve.bound_values, curve.errors, strict=True
    ):
        writer.writerow([_format_float(tau), _format_float(bound), _format_float(error)])
    return buffer.getvalue()


def write_curve_csv(curve: ScalingCurve, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(curve_csv(curve), encoding="utf-8")
    logger.info("Wrote %d-point scaling curve to %s", len(curve.tau_values), out)
    return out


__all__ = [
    "CSV_HEADER",
    "build_record",
    "curve_csv",
    "dump_record",
    "load_record",
    "results_payload",
    "write_curve_csv",
    "write_record",
]
