"""Structured verdicts emitted by every checker.

A :class:`Report` renders as a plain-text ``key: value`` block followed by
zero or more comma-separated tables, so that output is diffable and can be
loaded by any plotting tool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}={_fmt(v)}" for k, v in value.items()) + "}"
    if hasattr(value, "item") and getattr(value, "shape", None) == ():
        return _fmt(value.item())
    return str(value)


@dataclass
class Report:
    check: str
    statement: str
    verdict: str
    values: dict[str, Any] = field(default_factory=dict)
    witness: dict[str, Any] | None = None
    params: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    # raw arrays for programmatic use; never rendered
    data: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def render(self) -> str:
        lines = [f"check: {self.check}", f"statement: {self.statement}",
                 f"verdict: {self.verdict}"]
        for k, v in self.values.items():
            lines.append(f"{k}: {_fmt(v)}")
        if self.witness:
            lines.append(f"witness: {_fmt(self.witness)}")
        for k, v in self.params.items():
            lines.append(f"param.{k}: {_fmt(v)}")
        for note in self.notes:
            lines.append(f"note: {note}")
        out = "\n".join(lines) + "\n"
        for name, (header, rows) in self.tables.items():
            out += f"\n# table: {name}\n" + render_csv(header, rows)
        return out

    def write(self, directory: str | Path, stem: str) -> list[Path]:
        """Write the key-value block and each table to ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        lines = self.render().split("\n# table:")[0]
        written = [directory / f"{stem}.txt"]
        written[0].write_text(lines)
        for name, (header, rows) in self.tables.items():
            path = directory / f"{stem}.{name}.csv"
            path.write_text(render_csv(header, rows))
            written.append(path)
        return written


def render_csv(header: list[str], rows: list[tuple]) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_fmt(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool)
                            else str(v) for v in row))
    return "\n".join(out) + "\n"
