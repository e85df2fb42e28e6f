"""Precision/Recall/F1 at session and template granularity.

Anomalous is the positive class throughout.  Degenerate 0/0 ratios
evaluate to 0 by convention, and missing predictions fail loudly
instead of defaulting to normal (silent defaults inflate precision).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .corpus import Label
from .templates import TemplateIndex

if TYPE_CHECKING:
    from .dataset import Session


class MissingPrediction(KeyError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def accumulate(pairs: Iterable[tuple[Label, Label]]) -> ConfusionMatrix:
    """Count (predicted, truth) pairs into a confusion matrix."""
    tp = fp = tn = fn = 0
    for predicted, truth in pairs:
        if truth is Label.ANOMALOUS:
            if predicted is Label.ANOMALOUS:
                tp += 1
            else:
                fn += 1
        else:
            if predicted is Label.ANOMALOUS:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def prf1(m: ConfusionMatrix) -> tuple[float, float, float]:
    """(precision, recall, f1) with 0/0 -> 0."""
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate_session(predictions: dict[int, Label], sessions: "list[Session]") -> ConfusionMatrix:
    """Score session predictions against the any-anomalous session labels."""
    pairs = []
    for session in sessions:
        if session.session_id not in predictions:
            raise MissingPrediction(session.session_id)
        pairs.append((predictions[session.session_id], session.label))
    return accumulate(pairs)


def evaluate_template(predictions: dict[int, Label], index: TemplateIndex) -> ConfusionMatrix:
    """Score template predictions against the (corrected) template labels."""
    pairs = []
    for template in index.templates:
        if template.template_id not in predictions:
            raise MissingPrediction(template.template_id)
        pairs.append((predictions[template.template_id], template.label))
    return accumulate(pairs)


def metrics_report(granularity: str, m: ConfusionMatrix) -> dict:
    precision, recall, f1 = prf1(m)
    return {
        "granularity": granularity,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "tp": m.tp,
        "fp": m.fp,
        "tn": m.tn,
        "fn": m.fn,
    }


def render_metrics(report: dict) -> str:
    """Aligned text table in F1, Pre, Rec column order."""
    header = f"{'granularity':<12}  {'F1':>6}  {'Pre':>6}  {'Rec':>6}"
    row = (
        f"{report['granularity']:<12}  {report['f1']:>6.3f}  "
        f"{report['precision']:>6.3f}  {report['recall']:>6.3f}"
    )
    return header + "\n" + row


def save_metrics_json(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
