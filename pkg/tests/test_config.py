import dataclasses
import logging
import os
import pathlib

import jsonschema
import pytest
import toml

from rp2_widths._config import (
    Config,
    CroftonConfig,
    config_from_dict,
    jsonschema_config,
    load_config,
)


def test_default_config(logger: logging.Logger) -> None:
    config = load_config(None, logger=logger)
    assert config == Config()
    assert config.crofton.tangency_policy == "retry"
    assert config.trace.resolution == 6
    assert config.calibration.tol == 1e-10


def test_defaults_satisfy_schema() -> None:
    jsonschema.validate(
        instance=dataclasses.asdict(Config()),
        schema=jsonschema_config(),
    )


def test_workers_auto() -> None:
    config = config_from_dict({"crofton": {"workers": "auto"}})
    assert config.crofton.workers == (os.cpu_count() or 1)


def test_partial_sections_keep_defaults() -> None:
    config = config_from_dict({"geodesic": {"chunk_arc": 0.5}})
    assert config.geodesic.chunk_arc == 0.5
    assert config.geodesic.rtol == 1e-12
    assert config.crofton == CroftonConfig()


@pytest.mark.parametrize(
    "data",
    [
        {"crofton": {"unknown": 1}},
        {"crofton": {"sampling": "grid"}},
        {"crofton": {"workers": 0}},
        {"trace": {"resolution": 12}},
        {"calibration": {"tol": 1e-14}},
        {"extra": {}},
    ],
)
def test_invalid_config(data: dict) -> None:
    with pytest.raises(jsonschema.ValidationError):
        config_from_dict(data)


def test_load_toml(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    path = tmp_path / "config.toml"
    path.write_text(
        toml.dumps(
            {
                "crofton": {"sampling": "fibonacci", "block_size": 1024},
                "scan": {"refine_iterations": 5},
            }
        ),
        encoding="utf-8",
    )
    config = load_config(path, logger=logger)
    assert config.crofton.sampling == "fibonacci"
    assert config.crofton.block_size == 1024
    assert config.scan.refine_iterations == 5
    assert config.trace == Config().trace
