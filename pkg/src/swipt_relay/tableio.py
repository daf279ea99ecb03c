"""Delimited output with a commented parameter header, and flat key-value configs."""
from __future__ import annotations

import json
import os
import sys
import tempfile
from contextlib import contextmanager

import numpy as np


def fmt(value) -> str:
    """Render one cell; floats with 17 significant digits so reruns are byte-stable."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_cell(value) -> str:
    if isinstance(value, str):
        return json.dumps(value)
    text = fmt(value)
    if text in ("nan", "inf", "-inf"):
        return "null"
    return text


def render(rows: list[dict], header: dict, form: str = "csv") -> str:
    lines = [f"# {k} = {fmt(v)}" for k, v in header.items()]
    if form == "csv":
        if rows:
            columns = list(rows[0])
            lines.append(",".join(columns))
            lines.extend(",".join(fmt(row[col]) for col in columns) for row in rows)
    elif form == "jsonl":
        lines.extend("{" + ", ".join(f"{json.dumps(k)}: {_json_cell(v)}" for k, v in row.items()) + "}" for row in rows)
    else:
        raise ValueError(f"unknown output format {form!r}")
    return "\n".join(lines) + "\n"


@contextmanager
def _atomic_target(path):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".partial-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(rows: list[dict], header: dict, path: str | None = None, form: str = "csv") -> None:
    text = render(rows, header, form)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with _atomic_target(path) as fh:
        fh.write(text)


def parse_key_values(lines) -> dict:
    """``key = value`` lines; ``#`` starts a comment, blank lines ignored."""
    out = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def read_config(path: str) -> dict:
    with open(path) as fh:
        return parse_key_values(fh)


def read_table(path: str):
    """Read a table written by :func:`write_table` (CSV form).

    Returns ``(header, rows)`` with header comment values and row cells as strings.
    """
    header_lines, body = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                header_lines.append(line[1:])
            elif line.strip():
                body.append(line.rstrip("\n"))
    header = parse_key_values(header_lines)
    if not body:
        return header, []
    columns = body[0].split(",")
    rows = [dict(zip(columns, line.split(","))) for line in body[1:]]
    return header, rows


def to_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)
