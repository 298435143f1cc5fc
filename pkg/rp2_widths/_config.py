import dataclasses
import functools
import logging
import operator
import os
import pathlib
from typing import Any, Callable, Literal, Optional, get_args

import dacite
import jsonschema
import toml

CircleSampling = Literal["random", "fibonacci"]
TangencyPolicy = Literal["retry", "ignore"]


@dataclasses.dataclass(frozen=True)
class CroftonConfig:
    # pylint: disable=too-many-instance-attributes
    sampling: CircleSampling = "random"
    tangency_policy: TangencyPolicy = "retry"
    max_retries: int = 100
    tangency_tolerance: float = 1e-9
    block_size: int = 4096
    workers: int = 1


def jsonschema_crofton_config() -> dict[str, Any]:
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "sampling": {"enum": list(get_args(CircleSampling))},
            "tangency_policy": {"enum": list(get_args(TangencyPolicy))},
            "max_retries": {
                "type": "integer",
                "minimum": 0,
            },
            "tangency_tolerance": {
                "type": "number",
                "exclusiveMinimum": 0.0,
            },
            "block_size": {
                "type": "integer",
                "minimum": 1,
            },
            "workers": {
                "oneOf": [
                    {"type": "integer", "minimum": 1},
                    {"type": "string", "enum": ["auto"]},
                ],
            },
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class ScanConfig:
    refine_iterations: int = 50
    initial_step: float = 0.25
    slack: float = 0.05


def jsonschema_scan_config() -> dict[str, Any]:
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "refine_iterations": {
                "type": "integer",
                "minimum": 0,
            },
            "initial_step": {
                "type": "number",
                "exclusiveMinimum": 0.0,
            },
            "slack": {
                "type": "number",
                "minimum": 0.0,
            },
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class TraceConfig:
    resolution: int = 6
    bisection_steps: int = 50
    gradient_floor: float = 1e-8


def jsonschema_trace_config() -> dict[str, Any]:
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "resolution": {
                "type": "integer",
                "minimum": 0,
                "maximum": 9,
            },
            "bisection_steps": {
                "type": "integer",
                "minimum": 1,
            },
            "gradient_floor": {
                "type": "number",
                "minimum": 0.0,
            },
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class CalibrationConfig:
    tol: float = 1e-10
    step: float = 1e-5
    max_iterations: int = 50


def jsonschema_calibration_config() -> dict[str, Any]:
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "tol": {
                "type": "number",
                "minimum": 1e-12,
            },
            "step": {
                "type": "number",
                "minimum": 1e-7,
                "maximum": 1e-3,
            },
            "max_iterations": {
                "type": "integer",
                "minimum": 1,
            },
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class GeodesicConfig:
    chunk_arc: float = 1.0
    rtol: float = 1e-12
    atol: float = 1e-12
    drift_budget: float = 1e-9
    closure_tolerance: float = 1e-6


def jsonschema_geodesic_config() -> dict[str, Any]:
    positive = {"type": "number", "exclusiveMinimum": 0.0}
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "chunk_arc": positive,
            "rtol": positive,
            "atol": positive,
            "drift_budget": positive,
            "closure_tolerance": positive,
        },
    }
    return schema


@dataclasses.dataclass(frozen=True)
class Config:
    crofton: CroftonConfig = CroftonConfig()
    scan: ScanConfig = ScanConfig()
    trace: TraceConfig = TraceConfig()
    calibration: CalibrationConfig = CalibrationConfig()
    geodesic: GeodesicConfig = GeodesicConfig()


def jsonschema_config() -> dict[str, Any]:
    schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "crofton": jsonschema_crofton_config(),
            "scan": jsonschema_scan_config(),
            "trace": jsonschema_trace_config(),
            "calibration": jsonschema_calibration_config(),
            "geodesic": jsonschema_geodesic_config(),
        },
    }
    return schema


def load_config(
    path: Optional[pathlib.Path],
    *,
    logger: Optional[logging.Logger] = None,
) -> Config:
    logger = logger or logging.getLogger(__name__)
    if path is None:
        logger.debug("no config file: use defaults")
        return Config()
    # load TOML
    logger.info(f'load config from "{path}"')
    with path.open(encoding="utf-8") as file:
        loaded = toml.load(file)
    logger.debug(f"loaded toml: {repr(loaded)}")
    return config_from_dict(loaded, logger=logger)


def config_from_dict(
    data: dict[str, Any],
    *,
    logger: Optional[logging.Logger] = None,
) -> Config:
    logger = logger or logging.getLogger(__name__)
    # JSON Schema validation
    _validator().validate(instance=data)
    # to dataclass
    _preprocess_to_dataclass(data)
    config = dacite.from_dict(
        data_class=Config,
        data=data,
        config=dacite.Config(strict=True),
    )
    logger.debug(f"config: {repr(config)}")
    return config


def _validator() -> jsonschema.protocols.Validator:
    return jsonschema.Draft202012Validator(schema=jsonschema_config())


def _preprocess_to_dataclass(data: dict) -> None:
    # crofton.workers
    _update_value(data, ["crofton", "workers"], _resolve_workers)


def _update_value(
    data: dict,
    keys: list[str],
    converter: Callable[[Any], Any],
) -> None:
    if not keys:
        return
    try:
        parent = functools.reduce(operator.getitem, keys[:-1], data)
        parent[keys[-1]] = converter(parent[keys[-1]])
    except KeyError:
        pass


def _resolve_workers(value: int | str) -> int:
    match value:
        case "auto":
            return os.cpu_count() or 1
        case _:
            return int(value)
