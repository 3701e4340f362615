"""Self-describing CSV files.

Every file starts with ``#`` header lines: the output kind, the ramp name,
the sha256 fingerprint of the physics configuration and the full
configuration itself (``# config: key = value``). Numbers are written with 17
significant digits, '.' as decimal point, independent of locale.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import HEADER_PREFIX, ExperimentConfig, format_value

MAGIC = "# kzopen"


class FingerprintMismatch(ValueError):
    """A file was produced by a different physics configuration."""


@dataclass
class Table:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    config_text: str = ""

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _parse_cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def render(columns: Sequence[str], rows, meta: dict,
           config: Optional[ExperimentConfig] = None) -> str:
    buf = io.StringIO()
    buf.write(f"{MAGIC} {meta.get('version', '')}".rstrip() + "\n")
    for k, v in meta.items():
        if k == "version":
            continue
        buf.write(f"# {k}: {v}\n")
    if config is not None:
        for key, value in config.items():
            buf.write(f"{HEADER_PREFIX} {key} = {format_value(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write(path, columns, rows, meta: dict,
          config: Optional[ExperimentConfig] = None) -> str:
    """Write atomically (temp file then rename); returns the path."""
    text = render(columns, rows, meta, config)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def read(path) -> Table:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    meta = {}
    body = []
    cfg_lines = []
    for line in text.splitlines():
        if line.startswith(HEADER_PREFIX):
            cfg_lines.append(line)
        elif line.startswith(MAGIC):
            meta["version"] = line[len(MAGIC):].strip()
        elif line.startswith("#"):
            k, _, v = line[1:].partition(":")
            meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError(f"{path}: no column header")
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse_cell(c) for c in r] for r in reader]
    return Table(columns, rows, meta, "\n".join(cfg_lines) + "\n")


def file_config(table: Table) -> ExperimentConfig:
    return ExperimentConfig.from_text(table.config_text, header=True)


def check_fingerprint(table: Table, expected: str, path="") -> None:
    got = table.meta.get("fingerprint")
    if got != expected:
        raise FingerprintMismatch(
            f"{path}: fingerprint {got} does not match the configuration "
            f"({expected}); refusing to mix results from different setups")
