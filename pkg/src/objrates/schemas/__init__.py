"""JSON schemas shipped with the package and a small validation helper."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import ConfigError


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files(__package__).joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name: str) -> None:
    """Validate ``obj`` and raise :class:`ConfigError` naming the offending field."""
    try:
        jsonschema.validate(obj, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
