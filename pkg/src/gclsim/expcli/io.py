"""Deterministic CSV / JSON writers for experiment outputs.

CSV layout: a '#'-prefixed header block (experiment name, column list), one
header row, then data rows at 12 significant digits. No timestamps or other
run-dependent content goes into the CSV, so identical configs produce
byte-identical files; wall-clock and diagnostics live in the JSON sidecar.
"""

from __future__ import annotations

import json
from pathlib import Path

SCHEMA_VERSION = 1


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def write_csv(path: Path, experiment: str, columns: list[str], rows) -> None:
    lines = [f"# gcl-sim output (schema v{SCHEMA_VERSION})",
             f"# experiment: {experiment}",
             f"# columns: {','.join(columns)}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt_value(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, meta: dict) -> None:
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
