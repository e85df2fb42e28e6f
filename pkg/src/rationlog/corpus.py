"""Raw supercomputer log ingestion.

Reads the public whitespace-delimited BGL/Spirit layout into ordered,
labeled records.  A leading alert tag of ``-`` marks a line as normal;
anything else is an alert and the record starts out labeled anomalous.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path


class Label(str, enum.Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"

    @classmethod
    def from_string(cls, raw: str) -> "Label":
        value = raw.strip().lower()
        if value == "normal":
            return cls.NORMAL
        if value == "anomalous":
            return cls.ANOMALOUS
        raise ValueError(f"not a label: {raw!r}")


class ParseError(ValueError):
    """A raw log line that does not fit the expected layout."""


class TooFewFields(ParseError):
    pass


class BadTimestamp(ParseError):
    pass


class EmptyCorpus(ValueError):
    """A source file yielded zero parseable records."""


# Header layout of one raw line:
#   <alert_tag> <unix_ts> <date> <node> <fulltime> <node> <subsystem>
#   <component> <severity> <content...>
_HEADER_FIELDS = 9
NORMAL_ALERT_TAG = "-"


@dataclass(frozen=True)
class LogRecord:
    seq_index: int
    timestamp: int
    alert_tag: str
    content: str
    label: Label
    source_dataset: str = ""

    def __post_init__(self) -> None:
        if self.seq_index < 0:
            raise ValueError("seq_index must be non-negative")
        if not self.content.strip():
            raise ValueError("content must be non-empty")


@dataclass(frozen=True)
class Corpus:
    records: tuple[LogRecord, ...]
    name: str
    skipped: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def parse_raw_line(line: str, seq_index: int, source_dataset: str = "") -> LogRecord:
    """Parse one whitespace-delimited raw line into a LogRecord.

    Raises TooFewFields (< 10 tokens) or BadTimestamp (second token is
    not an integer).
    """
    tokens = line.split()
    if len(tokens) < _HEADER_FIELDS + 1:
        raise TooFewFields(f"expected at least {_HEADER_FIELDS + 1} tokens, got {len(tokens)}")
    try:
        timestamp = int(tokens[1])
    except ValueError:
        raise BadTimestamp(f"not an integer timestamp: {tokens[1]!r}") from None
    alert_tag = tokens[0]
    label = Label.NORMAL if alert_tag == NORMAL_ALERT_TAG else Label.ANOMALOUS
    content = " ".join(tokens[_HEADER_FIELDS:])
    return LogRecord(
        seq_index=seq_index,
        timestamp=timestamp,
        alert_tag=alert_tag,
        content=content,
        label=label,
        source_dataset=source_dataset,
    )


def load_corpus(path: str | Path, name: str = "") -> Corpus:
    """Load a raw log file, skipping (and counting) unparseable lines.

    Records are stably re-sorted by (timestamp, seq_index); real syslog
    streams interleave slightly out of order.  Invalid UTF-8 bytes are
    replaced, never fatal.  Raises EmptyCorpus when nothing parses.
    """
    path = Path(path)
    if not name:
        name = path.stem
    records: list[LogRecord] = []
    skipped = 0
    with path.open("r", encoding="utf-8", errors="replace") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                records.append(parse_raw_line(line, len(records), source_dataset=name))
            except ParseError:
                skipped += 1
    if not records:
        raise EmptyCorpus(f"no parseable records in {path}")
    records.sort(key=lambda r: (r.timestamp, r.seq_index))
    return Corpus(records=tuple(records), name=name, skipped=skipped)


def save_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write the internal corpus JSONL (keys: seq, ts, tag, content, label, src)."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in corpus.records:
            handle.write(json.dumps({
                "seq": record.seq_index,
                "ts": record.timestamp,
                "tag": record.alert_tag,
                "content": record.content,
                "label": record.label.value,
                "src": record.source_dataset,
            }) + "\n")


def load_corpus_jsonl(path: str | Path, name: str = "") -> Corpus:
    """Reload a corpus from the internal JSONL format."""
    records: list[LogRecord] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            records.append(LogRecord(
                seq_index=row["seq"],
                timestamp=row["ts"],
                alert_tag=row["tag"],
                content=row["content"],
                label=Label.from_string(row["label"]),
                source_dataset=row["src"],
            ))
    if not records:
        raise EmptyCorpus(f"no records in {path}")
    records.sort(key=lambda r: (r.timestamp, r.seq_index))
    if not name:
        name = records[0].source_dataset
    return Corpus(records=tuple(records), name=name)
