"""Canonical vehicle CSV: parsing, completeness filtering, derivative partitions.

File layout (UTF-8, comma separated, header first)::

    vehicle_id,product_key,derivative,series_flag,entry_weekday_hour,priority,
    config_variants,inspection_codes,parking_locations,lead_time_days

Multi-valued columns hold ``;``-joined tokens; an empty cell is an empty set.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MalformedRowError, SchemaError

COLUMNS = (
    "vehicle_id",
    "product_key",
    "derivative",
    "series_flag",
    "entry_weekday_hour",
    "priority",
    "config_variants",
    "inspection_codes",
    "parking_locations",
    "lead_time_days",
)
DERIVATIVES = ("ICE", "BEV")
TOKEN_SEP = ";"


@dataclass(frozen=True)
class VehicleRecord:
    """One vehicle as exported after leaving the TFC.

    Scalar fields may be empty (``""`` or ``None``) in a freshly parsed table;
    :func:`validate_and_filter` removes such rows as incomplete.
    """

    vehicle_id: str
    product_key: str
    derivative: str | None
    series_flag: bool | None
    entry_weekday_hour: str
    priority: int | None
    config_variants: frozenset[str] = frozenset()
    inspection_codes: frozenset[str] = frozenset()
    parking_locations: frozenset[str] = frozenset()
    lead_time_days: float | None = None

    def is_complete(self) -> bool:
        return (
            bool(self.vehicle_id)
            and bool(self.product_key)
            and self.derivative in DERIVATIVES
            and self.series_flag is not None
            and bool(self.entry_weekday_hour)
            and self.priority in (0, 1)
            and self.lead_time_days is not None
        )


@dataclass(frozen=True)
class RawTable:
    records: tuple[VehicleRecord, ...]
    source: str = ""
    rows_read: int = 0
    malformed: tuple[tuple[int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def select(self, indices: Iterable[int]) -> "RawTable":
        return RawTable(tuple(self.records[i] for i in indices), self.source, self.rows_read)


@dataclass
class FilterReport:
    removed: Counter = field(default_factory=Counter)
    removed_ids: dict[str, list[str]] = field(default_factory=dict)

    @property
    def total_removed(self) -> int:
        return sum(self.removed.values())

    def to_json(self) -> dict:
        return {"removed": dict(sorted(self.removed.items())), "total_removed": self.total_removed}


def _tokens(cell: str, column: str) -> frozenset[str]:
    if cell == "":
        return frozenset()
    parts = cell.split(TOKEN_SEP)
    if any(p.strip() == "" for p in parts):
        raise ValueError(f"empty token in {column}")
    return frozenset(p.strip() for p in parts)


def _flag(cell: str, column: str) -> int | None:
    if cell == "":
        return None
    if cell not in ("0", "1"):
        raise ValueError(f"{column} must be 0 or 1, got {cell!r}")
    return int(cell)


def parse_row(row: Sequence[str]) -> VehicleRecord:
    if len(row) != len(COLUMNS):
        raise ValueError(f"expected {len(COLUMNS)} fields, got {len(row)}")
    vals = dict(zip(COLUMNS, (c.strip() for c in row)))
    if not vals["vehicle_id"]:
        raise ValueError("missing vehicle_id")
    derivative = vals["derivative"] or None
    if derivative is not None and derivative not in DERIVATIVES:
        raise ValueError(f"derivative must be ICE or BEV, got {derivative!r}")
    series = _flag(vals["series_flag"], "series_flag")
    priority = _flag(vals["priority"], "priority")
    lead = None
    if vals["lead_time_days"]:
        lead = float(vals["lead_time_days"])
        if not (lead > 0 and math.isfinite(lead)):
            raise ValueError(f"lead_time_days must be positive and finite, got {lead!r}")
    return VehicleRecord(
        vehicle_id=vals["vehicle_id"],
        product_key=vals["product_key"],
        derivative=derivative,
        series_flag=None if series is None else bool(series),
        entry_weekday_hour=vals["entry_weekday_hour"],
        priority=priority,
        config_variants=_tokens(vals["config_variants"], "config_variants"),
        inspection_codes=_tokens(vals["inspection_codes"], "inspection_codes"),
        parking_locations=_tokens(vals["parking_locations"], "parking_locations"),
        lead_time_days=lead,
    )


def read_table(stream: io.TextIOBase, source: str = "<stream>", strict: bool = False) -> RawTable:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise SchemaError(f"{source}: empty file, no header")
    header = [h.strip().lstrip("﻿") for h in header]
    if tuple(header) != COLUMNS:
        missing = [c for c in COLUMNS if c not in header]
        extra = [c for c in header if c not in COLUMNS]
        raise SchemaError(
            f"{source}: header does not match the canonical schema"
            f" (missing={missing}, unexpected={extra})"
        )
    records: list[VehicleRecord] = []
    malformed: list[tuple[int, str]] = []
    seen: set[str] = set()
    n = 0
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        n += 1
        try:
            rec = parse_row(row)
            if rec.vehicle_id in seen:
                raise ValueError(f"duplicate vehicle_id {rec.vehicle_id!r}")
        except ValueError as exc:
            if strict:
                raise MalformedRowError(f"{source}:{line_no}: {exc}") from exc
            malformed.append((line_no, str(exc)))
            continue
        seen.add(rec.vehicle_id)
        records.append(rec)
    return RawTable(tuple(records), source, n, tuple(malformed))


def parse_csv(path: str | Path, strict: bool = False) -> RawTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return read_table(fh, str(path), strict=strict)


def _cell(rec: VehicleRecord, column: str) -> str:
    v = getattr(rec, column)
    if v is None:
        return ""
    if isinstance(v, frozenset):
        return TOKEN_SEP.join(sorted(v))
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(records: Iterable[VehicleRecord], stream: io.TextIOBase) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_cell(rec, c) for c in COLUMNS])


def write_csv(records: Iterable[VehicleRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        write_table(records, fh)


def validate_and_filter(table: RawTable) -> tuple[RawTable, FilterReport]:
    """Drop non-series vehicles and vehicles with missing scalar characteristics.

    Empty token sets are legal; only scalar fields are mandatory.
    """
    report = FilterReport()
    kept = []
    for rec in table.records:
        if rec.series_flag is False:
            reason = "non-series"
        elif not rec.is_complete():
            reason = "incomplete"
        else:
            kept.append(rec)
            continue
        report.removed[reason] += 1
        report.removed_ids.setdefault(reason, []).append(rec.vehicle_id)
    out = RawTable(tuple(kept), table.source, table.rows_read, table.malformed)
    return out, report


def partition_by_derivative(table: RawTable) -> dict[str, RawTable]:
    parts = {"ALL": table}
    for d in DERIVATIVES:
        parts[d] = RawTable(tuple(r for r in table.records if r.derivative == d),
                            table.source, table.rows_read)
    return parts
