"""Plain-text ``key = value`` run configuration files.

Blank lines and ``#`` comments are ignored. Keys must be identifiers and may
appear once. Values stay strings here; each command coerces and validates
its own keys and rejects any it does not know.
"""
from __future__ import annotations

import re

from .errors import InvalidArgumentError

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise InvalidArgumentError(f"{source}:{lineno}: bad key {key!r}")
        if key in out:
            raise InvalidArgumentError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    with open(path) as f:
        return parse_config(f.read(), str(path))


def parse_overrides(items) -> dict[str, str]:
    """``["a=1", "b=x"]`` from repeated ``--set`` flags."""
    return parse_config("\n".join(items or []), "--set")


def check_keys(values: dict, allowed, what: str):
    unknown = set(values) - set(allowed)
    if unknown:
        raise InvalidArgumentError(f"unknown {what} settings: {sorted(unknown)}")
