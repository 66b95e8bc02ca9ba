"""Flat ``key=value`` text configs for dataclass-based parameter sets."""
from __future__ import annotations

import dataclasses
import enum
import types
import typing
from pathlib import Path


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text())


def _format(value) -> str:
    if isinstance(value, enum.Enum):
        return value.name
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_kv(obj) -> str:
    """Serialize a dataclass instance as sorted-by-declaration ``key=value`` lines."""
    return "".join(f"{f.name}={_format(getattr(obj, f.name))}\n" for f in dataclasses.fields(obj))


def _coerce(tp, raw: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union or origin is types.UnionType:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if raw.lower() in ("none", ""):
            return None
        return _coerce(args[0], raw)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        for member in tp:
            if raw.lower() in (member.name.lower(), str(member.value).lower()):
                return member
        raise ValueError(f"{raw!r} is not a valid {tp.__name__}")
    if tp is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{raw!r} is not a boolean")
    if tp is int:
        return int(raw)
    if tp is float:
        return float(raw)
    return raw


def from_kv(cls, values: dict[str, str], base=None, strict: bool = True):
    """Build ``cls`` from string values, starting from ``base`` (or defaults)."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if strict and unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {k: _coerce(hints[k], v) for k, v in values.items() if k in names}
    if base is not None:
        return dataclasses.replace(base, **kwargs)
    return cls(**kwargs)
