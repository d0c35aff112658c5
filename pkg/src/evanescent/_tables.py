"""Deterministic CSV and JSON rendering of scan tables."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from evanescent._settings import OutputFormat

__all__ = ["Table", "format_cell", "render"]


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)

    @classmethod
    def from_rows(cls, header: Sequence[str], rows: Iterable[Any]) -> Table:
        """Collect objects exposing ``as_row()``."""
        return cls(tuple(header), [r.as_row() for r in rows])

    def column(self, name: str) -> list[Any]:
        i = self.header.index(name)
        return [row[i] for row in self.rows]


def format_cell(value: Any) -> str:
    """17 significant digits for numbers; None becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, float)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    # JSON has no inf or nan
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(table: Table, fmt: OutputFormat = "csv") -> str:
    """CSV with a header line, or a JSON list of one object per row."""
    if fmt == "json":
        records = [
            {key: _json_value(v) for key, v in zip(table.header, row)}
            for row in table.rows
        ]
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    writer.writerows([format_cell(v) for v in row] for row in table.rows)
    return buf.getvalue()
