import csv
import dataclasses
import io
import json
import logging
import pathlib
from typing import Any, Literal, Optional, get_args

import dacite

from ._config import Config, jsonschema_config
from ._json import dump_json, load_json, normalize_json

ReportFormat = Literal["json", "csv"]
ReportStatus = Literal["pass", "fail"]
Command = Literal[
    "widths",
    "sweep-scan",
    "count-r",
    "spectrum",
    "calibrate",
    "crofton",
    "trace",
    "bezout-audit",
    "basis",
    "geodesic",
]
Probe = Literal["equator", "latitude", "pencil", "polynomial", "random"]


@dataclasses.dataclass(frozen=True)
class RunConfig:
    # pylint: disable=too-many-instance-attributes
    command: Command
    seed: int = 0
    format: ReportFormat = "json"
    out: Optional[str] = None
    dump_samples: Optional[str] = None
    p_max: Optional[int] = None
    d: Optional[int] = None
    d_max: Optional[int] = None
    mu: Optional[float] = None
    tol: Optional[float] = None
    n_params: Optional[int] = None
    n_samples: Optional[int] = None
    n_polys: Optional[int] = None
    n_circles: Optional[int] = None
    refine: bool = False
    probe: Optional[Probe] = None
    colatitude: Optional[float] = None
    angle: Optional[float] = None
    coeffs: Optional[list[float]] = None
    resolution: Optional[int] = None
    axis: Optional[int] = None
    max_arc: Optional[float] = None


def jsonschema_run_config() -> dict[str, Any]:
    def optional(schema: dict[str, Any]) -> dict[str, Any]:
        return {"oneOf": [{"type": "null"}, schema]}

    positive = {"type": "integer", "minimum": 1}
    number = {"type": "number"}
    schema = {
        "type": "object",
        "required": ["command"],
        "additionalProperties": False,
        "properties": {
            "command": {"enum": list(get_args(Command))},
            "seed": {"type": "integer", "minimum": 0},
            "format": {"enum": list(get_args(ReportFormat))},
            "out": optional({"type": "string"}),
            "dump_samples": optional({"type": "string"}),
            "p_max": optional(positive),
            "d": optional({"type": "integer", "minimum": 0}),
            "d_max": optional({"type": "integer", "minimum": 0}),
            "mu": optional(number),
            "tol": optional(number),
            "n_params": optional(positive),
            "n_samples": optional(positive),
            "n_polys": optional(positive),
            "n_circles": optional(positive),
            "refine": {"type": "boolean"},
            "probe": optional({"enum": list(get_args(Probe))}),
            "colatitude": optional(number),
            "angle": optional(number),
            "coeffs": optional({"type": "array", "items": number}),
            "resolution": optional({"type": "integer", "minimum": 0}),
            "axis": optional({"enum": [0, 1, 2, 3]}),
            "max_arc": optional(number),
        },
    }
    return schema


def jsonschema_report() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": ["version", "config", "settings", "status", "result"],
        "additionalProperties": False,
        "properties": {
            "version": {"type": "string"},
            "config": jsonschema_run_config(),
            "settings": jsonschema_config(),
            "status": {"enum": list(get_args(ReportStatus))},
            "result": {"type": "object"},
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class Outcome:
    """Result of one command: report body, verdict, optional CSV rows."""

    result: dict[str, Any]
    passed: bool
    rows: Optional[list[dict[str, Any]]] = None
    samples: Optional[list[dict[str, Any]]] = None

    @property
    def status(self) -> ReportStatus:
        return "pass" if self.passed else "fail"


def build_report(
    run: RunConfig,
    settings: Config,
    outcome: Outcome,
    *,
    version: str,
) -> dict[str, Any]:
    report = {
        "version": version,
        "config": dataclasses.asdict(run),
        "settings": dataclasses.asdict(settings),
        "status": outcome.status,
        "result": outcome.result,
    }
    # a reloaded report compares equal to a rebuilt one
    return normalize_json(report, schema=jsonschema_report())


def render_report(
    run: RunConfig,
    report: dict[str, Any],
    outcome: Outcome,
) -> str:
    match run.format:
        case "json":
            return dump_json(report, schema=jsonschema_report())
        case "csv":
            return render_csv(outcome.rows or _field_rows(report["result"]))


def emit_report(
    run: RunConfig,
    report: dict[str, Any],
    outcome: Outcome,
    *,
    logger: Optional[logging.Logger] = None,
) -> None:
    logger = logger or logging.getLogger(__name__)
    text = render_report(run, report, outcome)
    if run.out is None:
        print(text, end="")
    else:
        _write_text(pathlib.Path(run.out), text)
        logger.info(f'report written to "{run.out}"')
    if run.dump_samples is not None and outcome.samples is not None:
        _write_text(pathlib.Path(run.dump_samples), render_csv(outcome.samples))
        logger.info(f'{len(outcome.samples)} samples written to "{run.dump_samples}"')


def load_report(
    path: pathlib.Path,
    *,
    logger: Optional[logging.Logger] = None,
) -> tuple[dict[str, Any], RunConfig]:
    logger = logger or logging.getLogger(__name__)
    report = load_json(path, schema=jsonschema_report())
    run = dacite.from_dict(
        data_class=RunConfig,
        data=report["config"],
        config=dacite.Config(strict=True),
    )
    logger.debug(f"replay config: {run}")
    return report, run


def render_csv(rows: list[dict[str, Any]]) -> str:
    """Rows as CSV; floats are written with repr, independent of the locale."""
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _csv_value(value) for key, value in row.items()})
    return buffer.getvalue()


def _field_rows(result: dict[str, Any], prefix: str = "") -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    for key, value in result.items():
        field = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_field_rows(value, prefix=f"{field}."))
        else:
            rows.append({"field": field, "value": value})
    return rows


def _csv_value(value: Any) -> Any:
    if isinstance(value, (list, dict)):
        return json.dumps(value, separators=(",", ":"))
    if value is None:
        return ""
    return value


def _write_text(path: pathlib.Path, text: str) -> None:
    if not path.parent.exists():
        path.parent.mkdir(parents=True)
    with path.open(mode="w", encoding="utf-8", newline="") as file:
        file.write(text)
