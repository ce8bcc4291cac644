"""Plain-text key-value file parser.

Shared grammar for run-config files and synthetic-panel spec files:

* one ``key = value`` pair per line
* ``#`` starts a comment (full line or trailing)
* blank lines ignored
* keys are case-sensitive identifiers (dots allowed, e.g. ``component.1.xi``)
* values are kept as raw strings; callers convert

Duplicate keys are an error so silent overrides cannot hide typos.
"""

from __future__ import annotations

from pathlib import Path


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse key-value text into an ordered dict of raw string values."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_kv_file(path: str | Path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text())


def parse_float_list(value: str) -> list[float]:
    """Comma-separated floats, e.g. '0.25,0.10'."""
    return [float(tok) for tok in value.split(",") if tok.strip()]


def parse_str_list(value: str) -> list[str]:
    """Comma-separated tokens, whitespace-stripped."""
    return [tok.strip() for tok in value.split(",") if tok.strip()]
