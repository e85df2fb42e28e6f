"""Teacher-model distillation of step-by-step log analyses.

Builds prompts asking an external chat-completion endpoint for a three
phase analysis of a log line (key parameters, implications, conclusion)
ending in an explicit verdict, filters responses whose verdict
contradicts the known label, and materializes (log, analysis, label)
triplets plus the length statistics the brevity reward needs.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import httpx

from .corpus import Label

logger = logging.getLogger(__name__)

_LOG_OPEN = "[LOG]"
_LOG_CLOSE = "[/LOG]"
_SENTENCE_MARKS = ".!?"
_VERDICT_PREFIX = "verdict:"

_VERDICT_WORDS = {
    "normal": Label.NORMAL,
    "abnormal": Label.ANOMALOUS,
    "anomalous": Label.ANOMALOUS,
    "anomaly": Label.ANOMALOUS,
}

_LABEL_TO_VERDICT = {Label.NORMAL: "normal", Label.ANOMALOUS: "abnormal"}


class DistillError(ValueError):
    pass


class VerdictMismatch(DistillError):
    pass


class TooShort(DistillError):
    pass


@dataclass(frozen=True)
class CotTriplet:
    log_text: str
    cot_analysis: str
    label: Label

    def __post_init__(self) -> None:
        if not self.log_text.strip():
            raise ValueError("log_text must be non-empty")
        if not self.cot_analysis.strip():
            raise ValueError("cot_analysis must be non-empty")
        marks = sum(self.cot_analysis.count(ch) for ch in _SENTENCE_MARKS)
        if marks < 2:
            raise TooShort(
                f"analysis has {marks} sentence mark(s), need at least 2"
            )


@dataclass(frozen=True)
class LengthStats:
    target_length: float
    std_dev: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.target_length > 0:
            raise ValueError("target_length must be positive")
        if self.std_dev < 0:
            raise ValueError("std_dev must be non-negative")


def build_prompt(log_text: str, label: Label) -> str:
    """Fixed teacher prompt embedding the log between [LOG] fences.

    Fence sequences occurring inside the log itself are escaped so the
    prompt stays unambiguous and distinct logs yield distinct prompts.
    """
    if not log_text.strip():
        raise ValueError("log_text must be non-empty")
    escaped = log_text.replace(_LOG_OPEN, "[ LOG]").replace(_LOG_CLOSE, "[/ LOG]")
    verdict = _LABEL_TO_VERDICT[label]
    return (
        "You are an expert log analyst. Analyze the following log entry "
        "step by step in exactly three phases:\n"
        "1. Identify the key parameters in the log.\n"
        "2. Reason about what those parameters imply about system state.\n"
        "3. Draw a conclusion about whether the behavior is normal or abnormal.\n"
        f"This log entry is known to be {verdict}; your analysis must "
        f"support that conclusion and your final line must be exactly "
        f"'verdict: {verdict}'.\n"
        f"{_LOG_OPEN}{escaped}{_LOG_CLOSE}"
    )


def parse_teacher_response(raw: str, expected_label: Label, log_text: str) -> CotTriplet:
    """Extract the analysis body and verdict; enforce label consistency.

    The verdict is the last 'verdict:' line; the body is everything
    before it.  A missing or contradicting verdict raises
    VerdictMismatch, a body under two sentences raises TooShort.
    """
    if not raw.strip():
        raise ValueError("raw response must be non-empty")
    verdict_at = raw.lower().rfind(_VERDICT_PREFIX)
    if verdict_at == -1:
        raise VerdictMismatch("response has no verdict line")
    verdict_text = raw[verdict_at + len(_VERDICT_PREFIX):].strip().strip(".!").lower()
    verdict = _VERDICT_WORDS.get(verdict_text)
    if verdict is None:
        raise VerdictMismatch(f"unrecognized verdict {verdict_text!r}")
    if verdict is not expected_label:
        raise VerdictMismatch(
            f"teacher said {verdict.value}, expected {expected_label.value}"
        )
    body = raw[:verdict_at].strip()
    if not body:
        raise TooShort("response has no analysis body before the verdict")
    return CotTriplet(log_text=log_text, cot_analysis=body, label=expected_label)


def length_stats(triplets: list[CotTriplet]) -> LengthStats:
    """Mean and population std of whitespace token counts."""
    if not triplets:
        raise ValueError("need at least one triplet")
    lengths = [len(t.cot_analysis.split()) for t in triplets]
    mean = sum(lengths) / len(lengths)
    variance = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    return LengthStats(target_length=mean, std_dev=math.sqrt(variance), n=len(lengths))


class TeacherClient:
    """Thin chat-completion client with retry.

    Talks to any endpoint speaking the common chat-completion JSON shape
    (POST {base_url}/chat/completions).  The API key comes from the
    TEACHER_API_KEY environment variable unless passed explicitly.  A
    custom httpx transport can be injected for tests.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.max_attempts = max_attempts
        self.backoff = backoff
        key = api_key if api_key is not None else os.environ.get("TEACHER_API_KEY", "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(
            timeout=timeout, headers=headers, transport=transport
        )

    def complete(self, prompt: str) -> str:
        url = f"{self.base_url}/chat/completions"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._client.post(url, json=body)
                response.raise_for_status()
                payload = response.json()
                return payload["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning("teacher request failed (attempt %d): %s", attempt + 1, exc)
        raise DistillError(f"teacher endpoint failed after {self.max_attempts} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "TeacherClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def distill_logs(
    client: TeacherClient,
    items: list[tuple[str, Label]],
    parallelism: int = 4,
) -> tuple[list[CotTriplet], list[str]]:
    """Distill one analysis per (log, label) item.

    Responses failing the label-consistency or length filters are
    re-requested once, then dropped.  Returns (triplets in input order,
    dropped log texts).
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def one(item: tuple[str, Label]) -> CotTriplet | None:
        log_text, label = item
        prompt = build_prompt(log_text, label)
        for _ in range(2):
            raw = client.complete(prompt)
            try:
                return parse_teacher_response(raw, label, log_text)
            except DistillError as exc:
                logger.warning("rejected teacher response for %r: %s", log_text, exc)
        return None

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        results = list(pool.map(one, items))
    triplets = [t for t in results if t is not None]
    dropped = [items[i][0] for i, t in enumerate(results) if t is None]
    return triplets, dropped


def save_triplets_jsonl(triplets: list[CotTriplet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            row = {"log": t.log_text, "cot": t.cot_analysis, "label": t.label.value}
            fh.write(json.dumps(row) + "\n")


def load_triplets_jsonl(path: str | Path) -> list[CotTriplet]:
    """Load triplets, re-validating every stored row."""
    triplets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            triplets.append(
                CotTriplet(
                    log_text=row["log"],
                    cot_analysis=row["cot"],
                    label=Label.from_string(row["label"]),
                )
            )
    return triplets


def save_length_stats(stats: LengthStats, path: str | Path) -> None:
    payload = {
        "target_length": stats.target_length,
        "std_dev": stats.std_dev,
        "n": stats.n,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_length_stats(path: str | Path) -> LengthStats:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return LengthStats(
        target_length=payload["target_length"],
        std_dev=payload["std_dev"],
        n=payload["n"],
    )
