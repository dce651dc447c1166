"""Subjective-score aggregation and report rendering.

Scores are gated (a voice or content mismatch forces the floor score), then
aggregated per role with mean and sample (n-1) standard deviation.  The
summary column is the unweighted mean of per-role means, with the sample
standard deviation of those means; aggregation runs in full precision and
rounding happens only at display time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import EmptyInput, IncompleteGrid, ParseError, RoleSetMismatch

# Default report column order when these six roles are present.
CANONICAL_ROLE_ORDER = ("Phoebe", "Joey", "Chandler", "Rachel", "Ross", "Monica")

GATED_SCORE = 1


@dataclass(frozen=True)
class MosRecord:
    item_id: str
    role: str
    evaluator_id: str
    raw_score: int
    voice_mismatch: bool = False
    content_mismatch: bool = False

    def __post_init__(self):
        if self.raw_score not in (1, 2, 3, 4, 5):
            raise ValueError(f"raw_score must be 1..5, got {self.raw_score}")


@dataclass(frozen=True)
class ImprovementRecord:
    role: str
    system_label: str
    evaluator_id: str
    rating: float

    def __post_init__(self):
        if self.rating not in (0.0, 0.5, 1.0):
            raise ValueError(f"rating must be 0, 0.5 or 1, got {self.rating}")


@dataclass(frozen=True)
class AggCell:
    mean: float
    std: float
    n: int


def gate_score(record: MosRecord) -> int:
    """Effective score: mismatches collapse to the floor, else the raw score."""
    if record.voice_mismatch or record.content_mismatch:
        return GATED_SCORE
    return record.raw_score


def sample_std(values: list[float], mean: float) -> float:
    n = len(values)
    if n <= 1:
        return 0.0
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


def _cell(values: list[float]) -> AggCell:
    mean = sum(values) / len(values)
    return AggCell(mean=mean, std=sample_std(values, mean), n=len(values))


def summarize_means(per_role_means: dict[str, float]) -> AggCell:
    """Summary cell over per-role means: mean of means, sample std of means."""
    if not per_role_means:
        raise EmptyInput("no per-role means to summarize")
    return _cell(list(per_role_means.values()))


def aggregate_mos(records: list[MosRecord]) -> tuple[dict[str, AggCell], AggCell]:
    """(per-role cells, summary cell) over gated scores."""
    if not records:
        raise EmptyInput("no records to aggregate")
    by_role: dict[str, list[float]] = {}
    for r in records:
        by_role.setdefault(r.role, []).append(float(gate_score(r)))
    cells = {role: _cell(scores) for role, scores in by_role.items()}
    return cells, summarize_means({role: c.mean for role, c in cells.items()})


def aggregate_improvement(records: list[ImprovementRecord]) -> tuple[dict[str, AggCell], AggCell]:
    """(per-role cells, ALL cell) over improvement ratings."""
    if not records:
        raise EmptyInput("no records to aggregate")
    by_role: dict[str, list[float]] = {}
    for r in records:
        by_role.setdefault(r.role, []).append(r.rating)
    cells = {role: _cell(ratings) for role, ratings in by_role.items()}
    return cells, summarize_means({role: c.mean for role, c in cells.items()})


def ablation_delta(full: dict[str, float], ablated: dict[str, float]) -> AggCell:
    """Per-role differences (ablated - full), summarized as mean +/- sample std."""
    if set(full) != set(ablated):
        raise RoleSetMismatch(f"role sets differ: {sorted(full)} vs {sorted(ablated)}")
    if not full:
        raise EmptyInput("no roles to compare")
    return _cell([ablated[role] - full[role] for role in full])


def format_cell(cell: AggCell) -> str:
    return f"{cell.mean:.2f} ± {cell.std:.2f}"


@dataclass
class ReportRow:
    label: str
    cells: dict[str, AggCell]
    summary: AggCell


def _role_columns(rows: list[ReportRow]) -> list[str]:
    roles = set(rows[0].cells)
    for row in rows:
        if set(row.cells) != roles:
            raise IncompleteGrid(f"row {row.label!r} has roles {sorted(row.cells)}, expected {sorted(roles)}")
    ordered = [r for r in CANONICAL_ROLE_ORDER if r in roles]
    ordered += sorted(roles - set(ordered))
    return ordered


def render_report(rows: list[ReportRow], layout: str, bold_best: bool = False) -> tuple[str, str]:
    """(aligned text table, CSV) for a grid of aggregate cells.

    ``layout`` picks the summary column title: "mos" -> Average,
    "improvement" -> ALL, "ablation" -> a single delta column.
    """
    if layout not in ("mos", "improvement", "ablation"):
        raise ValueError(f"unknown layout: {layout!r}")
    if not rows:
        raise IncompleteGrid("no rows to render")

    if layout == "ablation":
        header = ["Config", "Delta"]
        table = [[row.label, format_cell(row.summary)] for row in rows]
    else:
        roles = _role_columns(rows)
        header = ["System", *roles, "Average" if layout == "mos" else "ALL"]
        table = []
        for row in rows:
            table.append([row.label] + [format_cell(row.cells[r]) for r in roles] + [format_cell(row.summary)])
        if bold_best:
            for col in range(1, len(header)):
                values = [
                    (row.cells[header[col]].mean if col <= len(roles) else row.summary.mean)
                    for row in rows
                ]
                best = max(range(len(rows)), key=lambda k: values[k])
                table[best][col] = f"**{table[best][col]}**"

    widths = [max(len(r[c]) for r in [header] + table) for c in range(len(header))]
    text_lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in [header] + table]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(table)
    return "\n".join(text_lines) + "\n", buf.getvalue()


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_bool(raw: str, field: str, lineno: int) -> bool:
    value = _BOOL_VALUES.get(raw.strip().lower())
    if value is None:
        raise ParseError(f"line {lineno}: bad boolean for {field}: {raw!r}")
    return value


MOS_CSV_FIELDS = ("item_id", "role", "evaluator_id", "raw_score", "voice_mismatch", "content_mismatch")
IMPROVEMENT_CSV_FIELDS = ("role", "system", "evaluator_id", "rating")


def read_mos_csv(text: str) -> list[MosRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(MOS_CSV_FIELDS) - set(reader.fieldnames):
        raise ParseError(f"MOS CSV must have headers {MOS_CSV_FIELDS}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            raw_score = int(row["raw_score"])
        except ValueError as e:
            raise ParseError(f"line {lineno}: bad raw_score: {row['raw_score']!r}") from e
        try:
            records.append(
                MosRecord(
                    item_id=row["item_id"],
                    role=row["role"],
                    evaluator_id=row["evaluator_id"],
                    raw_score=raw_score,
                    voice_mismatch=_parse_bool(row["voice_mismatch"], "voice_mismatch", lineno),
                    content_mismatch=_parse_bool(row["content_mismatch"], "content_mismatch", lineno),
                )
            )
        except ValueError as e:
            raise ParseError(f"line {lineno}: {e}") from e
    return records


def read_improvement_csv(text: str) -> list[ImprovementRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(IMPROVEMENT_CSV_FIELDS) - set(reader.fieldnames):
        raise ParseError(f"improvement CSV must have headers {IMPROVEMENT_CSV_FIELDS}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append(
                ImprovementRecord(
                    role=row["role"],
                    system_label=row["system"],
                    evaluator_id=row["evaluator_id"],
                    rating=float(row["rating"]),
                )
            )
        except ValueError as e:
            raise ParseError(f"line {lineno}: {e}") from e
    return records
