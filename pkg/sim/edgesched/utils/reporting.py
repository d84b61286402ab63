from __future__ import annotations

import csv
import io
from collections.abc import Iterable
from pathlib import Path

from pydantic import BaseModel

from ..schemas.report import METRICS_HEADER, MetricsRow


def format_value(value: object, precision: int = 6) -> str:
    if isinstance(value, float):
        return f"{value:.{precision}f}"
    return str(value)


def render_metrics_csv(rows: Iterable[MetricsRow], precision: int = 6) -> str:
    """Tidy CSV with a fixed header and fixed-point floats."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for row in rows:
        data = row.model_dump()
        writer.writerow(format_value(data[name], precision) for name in METRICS_HEADER)
    return buffer.getvalue()


def write_metrics_csv(
    rows: Iterable[MetricsRow], path: Path, precision: int = 6
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_metrics_csv(rows, precision), encoding="utf-8")
    return path


def write_json(document: BaseModel, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
