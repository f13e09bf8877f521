"""Versioned CSV tables.

Every file starts with a schema line ``# aigap <kind> v<version>``, then a
header row. Readers refuse files whose kind or version they do not know.
"""
from __future__ import annotations

import csv
import io
import os
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render(kind: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# aigap {kind} v{SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_table(path, kind: str, header: Sequence[str], rows: Iterable[Sequence]):
    write_atomic(path, render(kind, header, rows))


def parse_table(text: str, kind: str, required: Sequence[str] = ()) -> list[dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# aigap "):
        raise SchemaError(f"missing '# aigap {kind}' schema line")
    parts = lines[0].split()
    if len(parts) != 4 or parts[2] != kind:
        raise SchemaError(f"expected a {kind!r} table, found {lines[0]!r}")
    if parts[3] != f"v{SCHEMA_VERSION}":
        raise SchemaError(f"unsupported {kind} schema version {parts[3]!r}")
    reader = csv.DictReader(lines[1:])
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{kind} table lacks column(s) {', '.join(missing)}")
    return list(reader)


def read_table(path, kind: str, required: Sequence[str] = ()) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_table(text, kind, required)
