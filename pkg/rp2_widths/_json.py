import json
import pathlib
from typing import Any, Optional

import jsonschema


def dump_json(
    data: Any,
    *,
    schema: Optional[dict] = None,
    indent: Optional[int] = 2,
) -> str:
    # JSON Schema validation
    if schema is not None:
        jsonschema.validate(instance=data, schema=schema)
    # no NaN or infinity in a report
    return json.dumps(data, ensure_ascii=False, indent=indent, allow_nan=False) + "\n"


def normalize_json(
    data: Any,
    *,
    schema: Optional[dict] = None,
) -> Any:
    """Round trip through JSON text; floats keep their repr, tuples become lists."""
    return json.loads(dump_json(data, schema=schema, indent=None))


def load_json(
    path: pathlib.Path,
    *,
    schema: Optional[dict] = None,
) -> Any:
    if not path.exists():
        raise FileNotFoundError(f'"{path}" does not exist')
    with path.open(encoding="utf-8") as file:
        value = json.load(file)
    # JSON Schema validation
    if schema is not None:
        jsonschema.validate(instance=value, schema=schema)
    return value
