"""Revenue-based greenhouse-gas estimation and error accounting.

Units are pinned everywhere: revenue in billions of US dollars, emission
intensity in megatonnes of CO2 equivalent per billion dollars, and estimates
in megatonnes. An enterprise's estimate is its revenue times the intensity of
its classified sector code; codes missing from the intensity table fall back
to their nearest taxonomy ancestor that is present, and every fallback is
counted.

The module also audits published case tables (rows carrying their own printed
estimates and percentage errors): it recomputes each product and each row
error, reports rows whose printed numbers disagree with their own inputs, and
recomputes the mean of the printed error column against the claimed average.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence, Union

from .corpus import EnterpriseRecord
from .errors import DataError
from .ioutil import open_atomic
from .taxonomy import Taxonomy

Source = Union[str, os.PathLike, IO[str]]

REPORT_COLUMNS = (
    "id",
    "revenue_busd",
    "code",
    "intensity",
    "estimated_mt",
    "reported_mt",
    "ape",
    "fallback_level",
)


@dataclass(frozen=True)
class IntensityEntry:
    """Emission intensity for one sector code (Mt CO2e per billion USD)."""

    code: str
    intensity: float
    region: str | None = None


class IntensityTable:
    """Lookup of per-code intensities with optional per-region overrides."""

    def __init__(self, entries: Sequence[IntensityEntry]):
        if not entries:
            raise DataError("intensity table is empty")
        self._table: dict[tuple[str, str | None], float] = {}
        for entry in entries:
            key = (entry.code, entry.region)
            if key in self._table:
                where = f"code {entry.code!r}" + (
                    f" region {entry.region!r}" if entry.region else ""
                )
                raise DataError(f"duplicate intensity entry for {where}")
            self._table[key] = entry.intensity
        self._codes = {code for code, _ in self._table}

    def __len__(self) -> int:
        return len(self._table)

    def lookup(self, code: str, region: str | None = None) -> float | None:
        """Exact lookup; a regional query falls back to the region-free entry."""
        if region is not None:
            value = self._table.get((code, region))
            if value is not None:
                return value
        return self._table.get((code, None))

    def codes(self) -> set[str]:
        return set(self._codes)


def load_intensities(source: Source) -> IntensityTable:
    """Parse the ``code,intensity[,region]`` CSV into a validated table."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return _parse_intensities(handle, str(source))
    return _parse_intensities(source, "<stream>")


def _parse_intensities(handle: IO[str], name: str) -> IntensityTable:
    reader = csv.DictReader(handle)
    if reader.fieldnames is None or not {"code", "intensity"} <= set(reader.fieldnames):
        raise DataError(f"{name}: expected a CSV header with code and intensity columns")
    entries = []
    for line_no, row in enumerate(reader, start=2):
        code = (row.get("code") or "").strip()
        if not code:
            raise DataError(f"{name}: line {line_no}: empty code")
        raw = (row.get("intensity") or "").strip()
        try:
            intensity = float(raw)
        except ValueError:
            raise DataError(f"{name}: line {line_no}: intensity {raw!r} is not a number") from None
        if not math.isfinite(intensity) or intensity < 0:
            raise DataError(f"{name}: line {line_no}: intensity must be finite and >= 0")
        region = (row.get("region") or "").strip() or None
        entries.append(IntensityEntry(code=code, intensity=intensity, region=region))
    return IntensityTable(entries)


def estimate(revenue_busd: float, intensity: float) -> float:
    """Estimated megatonnes: revenue (B$) times intensity (Mt per B$)."""
    if not math.isfinite(revenue_busd) or revenue_busd < 0:
        raise ValueError(f"revenue must be finite and >= 0, got {revenue_busd}")
    if not math.isfinite(intensity) or intensity < 0:
        raise ValueError(f"intensity must be finite and >= 0, got {intensity}")
    return revenue_busd * intensity


def mape(pairs: Sequence[tuple[float, float]]) -> float:
    """Mean absolute percentage error over (reported, estimated) pairs."""
    if len(pairs) == 0:
        raise ValueError("mape needs at least one pair")
    total = 0.0
    for reported, estimated in pairs:
        if not math.isfinite(reported) or reported <= 0:
            raise ValueError(f"reported value must be finite and > 0, got {reported}")
        if not math.isfinite(estimated):
            raise ValueError(f"estimated value must be finite, got {estimated}")
        total += abs(reported - estimated) / reported
    return 100.0 * total / len(pairs)


def resolve_intensity(
    table: IntensityTable,
    code: str,
    tax: Taxonomy | None = None,
    region: str | None = None,
) -> tuple[float, str, int] | None:
    """Intensity for ``code``, walking up to the nearest covered ancestor.

    Returns ``(intensity, code actually used, steps up)`` or ``None`` when no
    ancestor is covered. With a taxonomy the walk follows resolved parents
    (necessary for range codes such as ``31-33``); without one it falls back
    to shortening the code prefix.
    """
    if tax is not None:
        chain = tax.path_to_root(code)
    else:
        chain = [code[:length] for length in range(len(code), 0, -1)]
    for steps, candidate in enumerate(chain):
        value = table.lookup(candidate, region)
        if value is not None:
            return value, candidate, steps
    return None


@dataclass(frozen=True)
class EmissionRow:
    id: str
    revenue_busd: float
    code: str
    intensity: float
    estimated_mt: float
    reported_mt: float | None
    ape: float | None
    fallback_level: int


@dataclass
class EmissionReport:
    rows: list[EmissionRow] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    fallback_events: int = 0

    @property
    def aggregate_mape(self) -> float | None:
        pairs = [
            (row.reported_mt, row.estimated_mt)
            for row in self.rows
            if row.reported_mt is not None and row.reported_mt > 0
        ]
        return mape(pairs) if pairs else None


def build_report(
    records: Sequence[EnterpriseRecord],
    top_codes: Mapping[str, str],
    table: IntensityTable,
    tax: Taxonomy | None = None,
) -> EmissionReport:
    """Join enterprises with their classified codes and the intensity table.

    Enterprises without revenue, without a classified code, or without any
    covered ancestor are skipped with a reason. The absolute percentage error
    is filled only where a positive reported value exists.
    """
    report = EmissionReport()
    for record in records:
        code = top_codes.get(record.id)
        if code is None:
            report.skipped.append((record.id, "no classified code"))
            continue
        if record.revenue_busd is None:
            report.skipped.append((record.id, "no revenue"))
            continue
        resolved = resolve_intensity(table, code, tax)
        if resolved is None:
            report.skipped.append((record.id, f"no intensity for {code!r} or its ancestors"))
            continue
        intensity, _, fallback_level = resolved
        estimated = estimate(record.revenue_busd, intensity)
        reported = record.reported_emissions_mt
        ape = None
        if reported is not None and reported > 0:
            ape = mape([(reported, estimated)])
        if fallback_level > 0:
            report.fallback_events += 1
        report.rows.append(
            EmissionRow(
                id=record.id,
                revenue_busd=record.revenue_busd,
                code=code,
                intensity=intensity,
                estimated_mt=estimated,
                reported_mt=reported,
                ape=ape,
                fallback_level=fallback_level,
            )
        )
    return report


def write_report_csv(report: EmissionReport, path: str | os.PathLike) -> None:
    with open_atomic(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    row.id,
                    f"{row.revenue_busd:.6g}",
                    row.code,
                    f"{row.intensity:.6g}",
                    f"{row.estimated_mt:.6g}",
                    "" if row.reported_mt is None else f"{row.reported_mt:.6g}",
                    "" if row.ape is None else f"{row.ape:.4f}",
                    row.fallback_level,
                ]
            )


@dataclass(frozen=True)
class CaseRow:
    """One row of a published case table, printed figures kept verbatim."""

    company: str
    revenue_busd: float
    intensity: float
    estimated_mt: float
    reported_mt: float
    ape_pct: float
    annotation: str = ""


def load_cases(source: Source) -> list[CaseRow]:
    """Parse a case table CSV with columns company, revenue_busd, intensity,
    estimated_mt, reported_mt, ape_pct, and an optional annotation."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return _parse_cases(handle, str(source))
    return _parse_cases(source, "<stream>")


_CASE_NUMERIC = ("revenue_busd", "intensity", "estimated_mt", "reported_mt", "ape_pct")


def _parse_cases(handle: IO[str], name: str) -> list[CaseRow]:
    reader = csv.DictReader(handle)
    required = {"company", *_CASE_NUMERIC}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        missing = sorted(required - set(reader.fieldnames or ()))
        raise DataError(f"{name}: case table is missing columns {missing}")
    rows = []
    for line_no, row in enumerate(reader, start=2):
        company = (row.get("company") or "").strip()
        if not company:
            raise DataError(f"{name}: line {line_no}: empty company")
        values = {}
        for column in _CASE_NUMERIC:
            raw = (row.get(column) or "").strip()
            try:
                values[column] = float(raw)
            except ValueError:
                raise DataError(
                    f"{name}: line {line_no}: {column} {raw!r} is not a number"
                ) from None
        rows.append(
            CaseRow(
                company=company,
                annotation=(row.get("annotation") or "").strip(),
                **values,
            )
        )
    if not rows:
        raise DataError(f"{name}: case table has no rows")
    return rows


@dataclass(frozen=True)
class CaseAuditRow:
    case: CaseRow
    recomputed_estimate_mt: float
    estimate_consistent: bool
    recomputed_ape_pct: float
    ape_consistent: bool


@dataclass
class CaseAudit:
    """Recomputation of a case table against its own printed figures."""

    rows: list[CaseAuditRow]
    column_mean_ape: float
    claimed_mean_ape: float | None
    mean_diverges: bool

    @property
    def inconsistent_rows(self) -> list[CaseAuditRow]:
        return [row for row in self.rows if not (row.estimate_consistent and row.ape_consistent)]


def audit_cases(
    cases: Sequence[CaseRow],
    claimed_mean_ape: float | None = None,
    product_tolerance: float = 0.005,
    ape_tolerance_pct: float = 0.5,
    mean_tolerance: float = 0.1,
) -> CaseAudit:
    """Recompute products and row errors, and check the claimed average.

    A row is consistent when revenue times intensity matches its printed
    estimate within ``product_tolerance`` (relative) and the printed error
    matches ``100 |R - E| / R`` within ``ape_tolerance_pct`` percentage
    points. The column mean is the plain mean of the printed per-row errors;
    it diverges when it differs from the claimed average by more than
    ``mean_tolerance``.
    """
    if not cases:
        raise ValueError("case audit needs at least one row")
    rows = []
    for case in cases:
        product = estimate(case.revenue_busd, case.intensity)
        scale = max(abs(case.estimated_mt), 1e-9)
        estimate_ok = abs(product - case.estimated_mt) / scale <= product_tolerance
        row_ape = mape([(case.reported_mt, case.estimated_mt)])
        ape_ok = abs(row_ape - case.ape_pct) <= ape_tolerance_pct
        rows.append(
            CaseAuditRow(
                case=case,
                recomputed_estimate_mt=product,
                estimate_consistent=estimate_ok,
                recomputed_ape_pct=row_ape,
                ape_consistent=ape_ok,
            )
        )
    column_mean = sum(case.ape_pct for case in cases) / len(cases)
    diverges = claimed_mean_ape is not None and abs(column_mean - claimed_mean_ape) > mean_tolerance
    return CaseAudit(
        rows=rows,
        column_mean_ape=column_mean,
        claimed_mean_ape=claimed_mean_ape,
        mean_diverges=diverges,
    )


def write_case_audit_csv(audit: CaseAudit, path: str | os.PathLike) -> None:
    with open_atomic(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "company",
                "revenue_busd",
                "intensity",
                "estimated_mt",
                "recomputed_estimate_mt",
                "estimate_consistent",
                "reported_mt",
                "ape_pct",
                "recomputed_ape_pct",
                "ape_consistent",
                "annotation",
            ]
        )
        for row in audit.rows:
            case = row.case
            writer.writerow(
                [
                    case.company,
                    f"{case.revenue_busd:.6g}",
                    f"{case.intensity:.6g}",
                    f"{case.estimated_mt:.6g}",
                    f"{row.recomputed_estimate_mt:.6g}",
                    int(row.estimate_consistent),
                    f"{case.reported_mt:.6g}",
                    f"{case.ape_pct:.4f}",
                    f"{row.recomputed_ape_pct:.4f}",
                    int(row.ape_consistent),
                    case.annotation,
                ]
            )
