"""Expert annotation review: vote resolution, agreement, corrections.

Models a review workflow over labeled templates: several annotators
vote independently, disagreements resolve by majority, exact ties go to
a senior expert.  Accepted label flips are recorded in an append-only
correction ledger from which the breakdown report (per error category,
with percentages) is derived.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Label
from .templates import TemplateIndex


class ErrorCategory(str, enum.Enum):
    SYSTEM_ERROR = "system_error"
    NETWORK_ISSUE = "network_issue"
    HARDWARE_FAILURE = "hardware_failure"
    SOFTWARE_EXCEPTION = "software_exception"
    OTHER = "other"


class ResolvedBy(str, enum.Enum):
    UNANIMOUS = "unanimous"
    PANEL_CONSENSUS = "panel_consensus"
    SENIOR_OVERRIDE = "senior_override"


class MissingSeniorLabel(ValueError):
    """Votes tied exactly and no senior label supplied."""


class DegenerateAgreement(ValueError):
    """Chance agreement is 1 while observed agreement is not."""


class UnknownTemplate(KeyError):
    pass


class StaleEntry(ValueError):
    """Ledger entry whose old_label no longer matches the index."""


@dataclass(frozen=True)
class ReviewVote:
    template_id: int
    annotator_id: str
    label: Label


@dataclass(frozen=True)
class CorrectionEntry:
    template_id: int
    old_label: Label
    new_label: Label
    category: ErrorCategory
    rationale: str
    resolved_by: ResolvedBy

    def __post_init__(self) -> None:
        if self.old_label == self.new_label:
            raise ValueError("a correction must flip the label")
        # The uncategorized direction (back to normal) carries OTHER;
        # flips to anomalous must name one of the four failure kinds.
        if self.new_label is Label.NORMAL and self.category is not ErrorCategory.OTHER:
            raise ValueError("corrections to normal take category 'other'")
        if self.new_label is Label.ANOMALOUS and self.category is ErrorCategory.OTHER:
            raise ValueError("corrections to anomalous need a named category")


@dataclass(frozen=True)
class AgreementMatrix:
    """Per-template (n_normal, n_anomalous) vote counts for a fixed panel size."""

    items: tuple[tuple[int, int], ...]
    n_annotators: int

    def __post_init__(self) -> None:
        if self.n_annotators < 2:
            raise ValueError("need at least 2 annotators")
        for n_normal, n_anomalous in self.items:
            if n_normal < 0 or n_anomalous < 0 or n_normal + n_anomalous != self.n_annotators:
                raise ValueError("each item must have exactly n_annotators votes")

    @classmethod
    def from_votes(cls, votes: list[ReviewVote]) -> "AgreementMatrix":
        by_template: dict[int, Counter] = {}
        for vote in votes:
            by_template.setdefault(vote.template_id, Counter())[vote.label] += 1
        counts = [
            (c[Label.NORMAL], c[Label.ANOMALOUS])
            for _, c in sorted(by_template.items())
        ]
        sizes = {a + b for a, b in counts}
        if len(sizes) != 1:
            raise ValueError("all templates must be voted on by the same panel")
        return cls(items=tuple(counts), n_annotators=sizes.pop())


def resolve(votes: list[ReviewVote], senior_label: Label | None = None) -> tuple[Label, ResolvedBy]:
    """Resolve one template's votes: unanimity, then majority, then senior.

    Raises MissingSeniorLabel on an exact tie without a senior label.
    """
    if len(votes) < 2:
        raise ValueError("need at least 2 votes to resolve")
    template_ids = {v.template_id for v in votes}
    if len(template_ids) != 1:
        raise ValueError("votes span multiple templates")
    annotators = {v.annotator_id for v in votes}
    if len(annotators) != len(votes):
        raise ValueError("duplicate annotator vote")
    n_anomalous = sum(1 for v in votes if v.label is Label.ANOMALOUS)
    n_normal = len(votes) - n_anomalous
    if n_normal == 0:
        return Label.ANOMALOUS, ResolvedBy.UNANIMOUS
    if n_anomalous == 0:
        return Label.NORMAL, ResolvedBy.UNANIMOUS
    if n_anomalous > n_normal:
        return Label.ANOMALOUS, ResolvedBy.PANEL_CONSENSUS
    if n_normal > n_anomalous:
        return Label.NORMAL, ResolvedBy.PANEL_CONSENSUS
    if senior_label is None:
        raise MissingSeniorLabel(f"tied {n_normal}-{n_anomalous} vote needs a senior label")
    return senior_label, ResolvedBy.SENIOR_OVERRIDE


def fleiss_kappa(matrix: AgreementMatrix) -> float:
    """Fleiss' kappa over the two-category vote matrix.

    Perfect agreement returns exactly 1.0.  When chance agreement is 1
    (every vote on every item in one category) the statistic is
    undefined unless observed agreement is also 1; that case raises
    DegenerateAgreement.
    """
    n_items = len(matrix.items)
    if n_items < 2:
        raise ValueError("need at least 2 items")
    n = matrix.n_annotators
    per_item = [
        (a * (a - 1) + b * (b - 1)) / (n * (n - 1))
        for a, b in matrix.items
    ]
    p_obs = sum(per_item) / n_items
    total_votes = n_items * n
    p_normal = sum(a for a, _ in matrix.items) / total_votes
    p_anomalous = sum(b for _, b in matrix.items) / total_votes
    p_chance = p_normal * p_normal + p_anomalous * p_anomalous
    if p_obs == 1.0:
        return 1.0
    if p_chance == 1.0:
        raise DegenerateAgreement("single-category votes with imperfect agreement")
    return (p_obs - p_chance) / (1.0 - p_chance)


def apply_corrections(index: TemplateIndex, ledger: list[CorrectionEntry]) -> TemplateIndex:
    """Return a new index with ledger labels applied; the input is untouched.

    Raises UnknownTemplate for an id not in the index and StaleEntry
    when an entry's old_label no longer matches (guards double
    application of the same ledger).
    """
    labels = {t.template_id: t.label for t in index.templates}
    for entry in ledger:
        if entry.template_id not in labels:
            raise UnknownTemplate(entry.template_id)
        if labels[entry.template_id] != entry.old_label:
            raise StaleEntry(
                f"template {entry.template_id} is {labels[entry.template_id].value}, "
                f"entry expects {entry.old_label.value}"
            )
        labels[entry.template_id] = entry.new_label
    templates = tuple(
        replace(t, label=labels[t.template_id]) for t in index.templates
    )
    return TemplateIndex(
        templates=templates,
        assignment=index.assignment,
        miner_params=index.miner_params,
    )


@dataclass(frozen=True)
class ReportRow:
    direction: str
    category: str
    count: int
    percentage: float


_CATEGORY_TITLES = {
    ErrorCategory.SYSTEM_ERROR: "System Error",
    ErrorCategory.NETWORK_ISSUE: "Network Issue",
    ErrorCategory.HARDWARE_FAILURE: "Hardware Failure",
    ErrorCategory.SOFTWARE_EXCEPTION: "Software Exception",
}


def _round1(value: float) -> float:
    # round half away from zero, one decimal
    return math.floor(value * 10 + 0.5) / 10


def correction_report(ledger: list[CorrectionEntry]) -> list[ReportRow]:
    """Group the ledger into report rows with one-decimal percentages.

    Flips to anomalous get one row per named category (in fixed order),
    flips back to normal get a single uncategorized row, and a total row
    closes the report.  Zero-count rows are omitted.
    """
    if not ledger:
        raise ValueError("ledger is empty")
    total = len(ledger)
    to_anomalous = Counter(e.category for e in ledger if e.new_label is Label.ANOMALOUS)
    to_normal = sum(1 for e in ledger if e.new_label is Label.NORMAL)
    rows: list[ReportRow] = []
    for category, title in _CATEGORY_TITLES.items():
        count = to_anomalous.get(category, 0)
        if count:
            rows.append(ReportRow(
                direction="normal_to_abnormal",
                category=title,
                count=count,
                percentage=_round1(100.0 * count / total),
            ))
    if to_normal:
        rows.append(ReportRow(
            direction="abnormal_to_normal",
            category="-",
            count=to_normal,
            percentage=_round1(100.0 * to_normal / total),
        ))
    rows.append(ReportRow(direction="total", category="-", count=total, percentage=100.0))
    return rows


def render_report(rows: list[ReportRow]) -> str:
    """Aligned plain-text rendering of a correction report."""
    headers = ("Correction", "Error Category", "Count", "Percentage")
    direction_titles = {
        "normal_to_abnormal": "Normal -> Abnormal",
        "abnormal_to_normal": "Abnormal -> Normal",
        "total": "Total",
    }
    cells = [
        (direction_titles[r.direction], r.category, str(r.count), f"{r.percentage:.1f}%")
        for r in rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def report_to_json(rows: list[ReportRow]) -> list[dict]:
    return [
        {
            "direction": r.direction,
            "category": r.category,
            "count": r.count,
            "percentage": r.percentage,
        }
        for r in rows
    ]


def save_ledger_jsonl(ledger: list[CorrectionEntry], path: str | Path) -> None:
    """Write the ledger JSONL (keys: template_id, old, new, category, rationale, resolved_by)."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for entry in ledger:
            handle.write(json.dumps({
                "template_id": entry.template_id,
                "old": entry.old_label.value,
                "new": entry.new_label.value,
                "category": entry.category.value,
                "rationale": entry.rationale,
                "resolved_by": entry.resolved_by.value,
            }) + "\n")


def load_ledger_jsonl(path: str | Path) -> list[CorrectionEntry]:
    ledger = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            ledger.append(CorrectionEntry(
                template_id=row["template_id"],
                old_label=Label.from_string(row["old"]),
                new_label=Label.from_string(row["new"]),
                category=ErrorCategory(row["category"]),
                rationale=row["rationale"],
                resolved_by=ResolvedBy(row["resolved_by"]),
            ))
    return ledger
