"""
Report Rendering

Policy comparison rows, density sweep tables, PRR CDF exports and atomic
(write-then-rename) output files.
"""

import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from .exceptions import DomainError

logger = logging.getLogger(__name__)

ReportFormat = Literal["table", "csv", "json"]

REPORT_COLUMNS = ["policy", "prr", "relay_switches", "per"]
REPORT_HEADERS = {"policy": "Policy", "prr": "Avg PRR", "relay_switches": "Relay switches", "per": "PER"}


class ReportRow(BaseModel):
    """One policy line of a comparison report."""

    model_config = ConfigDict(frozen=True)

    policy: str
    prr: float = Field(ge=0.0, le=1.0)
    relay_switches: float = Field(ge=0.0)
    per: float = Field(ge=0.0, le=1.0)
    std_prr: float = Field(0.0, ge=0.0)
    pooled_prr: float | None = None
    runs: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_per(self) -> "ReportRow":
        if abs(self.per - (1.0 - self.prr)) > 1e-12:
            raise ValueError("per must equal 1 - prr")
        return self

    @classmethod
    def from_prr(cls, policy: str, prr: float, relay_switches: float, **kwargs) -> "ReportRow":
        return cls(policy=policy, prr=prr, relay_switches=relay_switches, per=1.0 - prr, **kwargs)


class SweepRow(BaseModel):
    """Aggregate over seeds of one (density, policy) cell."""

    model_config = ConfigDict(frozen=True)

    spawn_spacing_n: float
    policy: str
    runs: int
    mean_prr: float
    std_prr: float
    pooled_prr: float
    mean_switches: float


_report_rows = TypeAdapter(list[ReportRow])
_sweep_rows = TypeAdapter(list[SweepRow])


def format_percent(value: float) -> str:
    return f"{value * 100:.2f}%"


def _sorted_rows(rows: Sequence[ReportRow]) -> list[ReportRow]:
    return sorted(rows, key=lambda r: (-r.prr, r.policy))


def render_report(rows: Sequence[ReportRow], fmt: ReportFormat = "table") -> str:
    """
    Render a policy comparison.

    Rows are ordered by descending average PRR. The table format prints
    percentages with 2 decimals; csv and json carry raw fractions.

    Raises:
        DomainError: If rows is empty or the format is unknown
    """
    if not rows:
        raise DomainError("Cannot render an empty report")
    ordered = _sorted_rows(rows)

    if fmt == "json":
        return _report_rows.dump_json(ordered, indent=2).decode() + "\n"

    frame = pd.DataFrame([r.model_dump() for r in ordered])
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")
    if fmt == "table":
        table = frame[REPORT_COLUMNS].rename(columns=REPORT_HEADERS)
        return table.to_string(
            index=False,
            formatters={
                "Avg PRR": format_percent,
                "PER": format_percent,
                "Relay switches": lambda v: f"{v:.2f}",
            },
        ) + "\n"
    raise DomainError(f"Unknown report format {fmt!r}")


def parse_report_json(text: str) -> list[ReportRow]:
    return _report_rows.validate_json(text)


def render_sweep(rows: Sequence[SweepRow], fmt: ReportFormat = "csv") -> str:
    """Render density sweep cells ordered by density then policy."""
    ordered = sorted(rows, key=lambda r: (r.spawn_spacing_n, r.policy))
    if fmt == "json":
        return _sweep_rows.dump_json(ordered, indent=2).decode() + "\n"
    frame = pd.DataFrame([r.model_dump() for r in ordered], columns=list(SweepRow.model_fields))
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")
    return frame.to_string(index=False) + "\n"


def render_cdf(points: Sequence[tuple[float, float]], fmt: ReportFormat = "csv") -> str:
    """Render CDF points as (prr, cumulative_fraction) pairs."""
    frame = pd.DataFrame(list(points), columns=["prr", "cumulative_fraction"])
    if fmt == "json":
        return frame.to_json(orient="records", indent=2) + "\n"
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")
    return frame.to_string(index=False) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write text to a temporary sibling file, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {path}")
    return path


def write_jsonl_atomic(path: str | Path, records: Iterable[dict]) -> Path:
    """Write one JSON document per line, atomically."""
    return write_atomic(path, "".join(json.dumps(record, sort_keys=True) + "\n" for record in records))
