"""Training/test split construction.

Chronological splitting, anomaly-rate-controlled sampling of a
template-level training set, fixed-window session building, and
exclusion of test sessions that overlap the training records.  All
randomness flows through explicit seeds.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Label, LogRecord
from .templates import TemplateIndex


class DegenerateSplit(ValueError):
    pass


class InsufficientPool(ValueError):
    def __init__(self, label: Label, needed: int, available: int):
        self.label = label
        super().__init__(
            f"pool has {available} {label.value} records, need {needed}"
        )


@dataclass(frozen=True)
class Session:
    session_id: int
    record_refs: tuple[int, ...]
    label: Label

    def __post_init__(self) -> None:
        if not self.record_refs:
            raise ValueError("a session needs at least one record")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    template_train_size: int = 2000
    anomaly_rate: float = 0.15
    window_size: int = 100
    test_size: int = 8000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if not 0.0 < self.anomaly_rate < 1.0:
            raise ValueError("anomaly_rate must be in (0, 1)")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")


def _ceil_fraction(n: int, fraction: float) -> int:
    # ceil(n * fraction), tolerating float noise around exact integers
    raw = n * fraction
    nearest = round(raw)
    if abs(raw - nearest) < 1e-6:
        return nearest
    return math.ceil(raw)


def chronological_split(corpus: Corpus, train_fraction: float) -> tuple[Corpus, Corpus]:
    """First ceil(n * fraction) records to train, the rest to test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n_train = _ceil_fraction(len(corpus), train_fraction)
    train = corpus.records[:n_train]
    test = corpus.records[n_train:]
    if not train or not test:
        raise DegenerateSplit(f"{len(corpus)} records cannot split at {train_fraction}")
    return (
        Corpus(records=train, name=corpus.name),
        Corpus(records=test, name=corpus.name),
    )


def sample_template_set(
    pool: list[tuple[LogRecord, Label]],
    size: int,
    anomaly_rate: float,
    rng_seed: int,
) -> list[LogRecord]:
    """Sample an exact anomaly-rate-controlled set without replacement.

    Returns round(size * anomaly_rate) anomalous and the remainder
    normal records, shuffled deterministically by seed.  Raises
    InsufficientPool naming the deficient class.
    """
    n_anomalous = round(size * anomaly_rate)
    n_normal = size - n_anomalous
    anomalous = [r for r, label in pool if label is Label.ANOMALOUS]
    normal = [r for r, label in pool if label is Label.NORMAL]
    if len(anomalous) < n_anomalous:
        raise InsufficientPool(Label.ANOMALOUS, n_anomalous, len(anomalous))
    if len(normal) < n_normal:
        raise InsufficientPool(Label.NORMAL, n_normal, len(normal))
    rng = random.Random(rng_seed)
    picked = rng.sample(anomalous, n_anomalous) + rng.sample(normal, n_normal)
    rng.shuffle(picked)
    return picked


def build_sampling_pool(
    corpus: Corpus,
    index: TemplateIndex,
    mode: str = "record",
) -> list[tuple[LogRecord, Label]]:
    """Pool for sample_template_set, labeled at template granularity.

    mode "record": every record, paired with its template's label.
    mode "template": one representative record (the first member) per
    template, so sampling draws over unique templates.
    """
    if mode not in ("record", "template"):
        raise ValueError(f"unknown pool mode: {mode!r}")
    labels = {t.template_id: t.label for t in index.templates}
    if mode == "record":
        return [
            (record, labels[index.assignment[record.seq_index]])
            for record in corpus.records
        ]
    seen: set[int] = set()
    pool = []
    for record in corpus.records:
        template_id = index.assignment[record.seq_index]
        if template_id in seen:
            continue
        seen.add(template_id)
        pool.append((record, labels[template_id]))
    return pool


def build_sessions(records: list[LogRecord], window_size: int) -> list[Session]:
    """Chunk ordered records into consecutive fixed windows.

    The trailing partial window is kept.  A session is anomalous iff any
    member record is.
    """
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    sessions = []
    for start in range(0, len(records), window_size):
        chunk = records[start:start + window_size]
        label = (
            Label.ANOMALOUS
            if any(r.label is Label.ANOMALOUS for r in chunk)
            else Label.NORMAL
        )
        sessions.append(Session(
            session_id=len(sessions),
            record_refs=tuple(r.seq_index for r in chunk),
            label=label,
        ))
    return sessions


def exclude_leakage(test_sessions: list[Session], train_record_set: set[int]) -> list[Session]:
    """Drop every test session that shares a record with the training set."""
    return [
        session for session in test_sessions
        if not train_record_set.intersection(session.record_refs)
    ]


def split_manifest(
    train: Corpus,
    test: Corpus,
    train_fraction: float,
    rng_seed: int = 0,
) -> dict:
    """Audit manifest: seed, fraction, counts, and partition digests."""
    return {
        "seed": rng_seed,
        "train_fraction": train_fraction,
        "n_train": len(train),
        "n_test": len(test),
        "train_digest": _corpus_digest(train),
        "test_digest": _corpus_digest(test),
    }


def _corpus_digest(corpus: Corpus) -> str:
    digest = hashlib.sha256()
    for record in corpus.records:
        digest.update(f"{record.seq_index}\t{record.timestamp}\t{record.content}\n".encode())
    return digest.hexdigest()


def save_sessions_jsonl(sessions: list[Session], path: str | Path) -> None:
    """Write the session export JSONL (keys: session_id, seqs, label)."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for session in sessions:
            handle.write(json.dumps({
                "session_id": session.session_id,
                "seqs": list(session.record_refs),
                "label": session.label.value,
            }) + "\n")


def load_sessions_jsonl(path: str | Path) -> list[Session]:
    sessions = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            sessions.append(Session(
                session_id=row["session_id"],
                record_refs=tuple(row["seqs"]),
                label=Label.from_string(row["label"]),
            ))
    return sessions
