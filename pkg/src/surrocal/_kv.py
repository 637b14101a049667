"""Shared key=value plain-text file parsing (presets and run configs)."""

from __future__ import annotations

from pathlib import Path

from .errors import ParseError


def read_kv_file(path) -> dict:
    """Parse a key=value file (one pair per line, ``#`` comments).

    Returns an ordered mapping of raw string values; duplicate keys and
    malformed lines raise with their line number.
    """
    path = Path(path)
    out: dict = {}
    with open(path) as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {raw.strip()!r}", path=str(path), line=i)
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if not key:
                raise ParseError("empty key", path=str(path), line=i)
            if key in out:
                raise ParseError(f"duplicate key {key!r}", path=str(path), line=i)
            out[key] = (value, i)
    return {k: v for k, (v, _) in out.items()}, {k: i for k, (_, i) in out.items()}


def write_kv_file(path, items, comment: str | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for key, value in items:
            fh.write(f"{key}={value}\n")
