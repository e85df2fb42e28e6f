"""Multi-faceted reward for structured anomaly-analysis completions.

A completion must wrap its reasoning in <think>...</think> followed by
<answer>...</answer>.  Malformed outputs are gated: they receive a flat
penalty and every other component is zeroed.  Well-formed outputs earn
a format reward, an (optionally asymmetric) answer reward, and a
weighted thinking reward built from factual grounding against the
source log, bigram-perplexity coherence, and closeness to a target
analysis length.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Label
from .distill import LengthStats
from .perplexity import PerplexityScorer, ScorerUnavailable

_ANSWER_WORDS = {
    "normal": Label.NORMAL,
    "abnormal": Label.ANOMALOUS,
    "anomalous": Label.ANOMALOUS,
    "anomaly": Label.ANOMALOUS,
}


@dataclass(frozen=True)
class ModelOutput:
    raw: str
    think: str | None
    answer: Label | None
    well_formed: bool


@dataclass(frozen=True)
class RewardConfig:
    """Reward magnitudes and toggles; orderings validated at construction.

    enable_asymmetric=False is the symmetric-answer ablation (equal
    credit and equal penalty for both classes); enable_thinking=False
    drops the thinking reward entirely.
    """

    r_format: float = 0.5
    r_malformed: float = -1.0
    r_tp: float = 2.0
    r_tn: float = 1.0
    r_fn: float = -2.0
    r_fp: float = -1.0
    w_grounding: float = 0.4
    w_coherence: float = 0.3
    w_brevity: float = 0.3
    lambda_think: float = 0.5
    brevity_sigma_factor: float = 0.5
    enable_asymmetric: bool = True
    enable_thinking: bool = True

    def __post_init__(self) -> None:
        weights = (self.w_grounding, self.w_coherence, self.w_brevity)
        if min(weights) < 0:
            raise ValueError("thinking weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("thinking weights must sum to 1")
        if self.lambda_think < 0:
            raise ValueError("lambda_think must be non-negative")
        if self.brevity_sigma_factor <= 0:
            raise ValueError("brevity_sigma_factor must be positive")
        if self.enable_asymmetric:
            if not (self.r_tp > self.r_tn > 0):
                raise ValueError("asymmetric config needs r_tp > r_tn > 0")
            if not (self.r_fn < self.r_fp < 0):
                raise ValueError("asymmetric config needs r_fn < r_fp < 0")
        else:
            if self.r_tp != self.r_tn or self.r_fn != self.r_fp:
                raise ValueError("symmetric config needs r_tp == r_tn and r_fn == r_fp")

    @classmethod
    def symmetric(cls, **overrides) -> "RewardConfig":
        """The symmetric-answer ablation with unit credit and unit penalty."""
        base = dict(r_tp=1.0, r_tn=1.0, r_fn=-1.0, r_fp=-1.0, enable_asymmetric=False)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "r_format": self.r_format,
            "r_malformed": self.r_malformed,
            "r_tp": self.r_tp,
            "r_tn": self.r_tn,
            "r_fn": self.r_fn,
            "r_fp": self.r_fp,
            "w_grounding": self.w_grounding,
            "w_coherence": self.w_coherence,
            "w_brevity": self.w_brevity,
            "lambda_think": self.lambda_think,
            "brevity_sigma_factor": self.brevity_sigma_factor,
            "enable_asymmetric": self.enable_asymmetric,
            "enable_thinking": self.enable_thinking,
        }


def load_reward_config(path: str | Path) -> RewardConfig:
    """Load a config JSON mirroring the RewardConfig field names."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return RewardConfig(**payload)


def save_reward_config(cfg: RewardConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class RewardBreakdown:
    format: float
    answer: float
    grounding: float
    coherence: float
    brevity: float
    think: float
    total: float

    def to_dict(self) -> dict:
        return {
            "format": self.format,
            "answer": self.answer,
            "grounding": self.grounding,
            "coherence": self.coherence,
            "brevity": self.brevity,
            "think": self.think,
            "total": self.total,
        }


def parse_output(raw: str) -> ModelOutput:
    """Split a completion into think and answer sections.

    Well-formed means: the first <think>...</think> pair is followed by
    an <answer>...</answer> pair, both sections are non-empty, and the
    answer text normalizes to a label.  Anything else is malformed;
    malformedness is a value here, not an error.
    """
    think: str | None = None
    answer: Label | None = None
    well_formed = False
    open_think = raw.find("<think>")
    if open_think != -1:
        close_think = raw.find("</think>", open_think + len("<think>"))
        if close_think != -1:
            think = raw[open_think + len("<think>"):close_think]
            open_answer = raw.find("<answer>", close_think + len("</think>"))
            if open_answer != -1:
                close_answer = raw.find("</answer>", open_answer + len("<answer>"))
                if close_answer != -1:
                    answer_text = raw[open_answer + len("<answer>"):close_answer]
                    if think.strip() and answer_text.strip():
                        answer = _ANSWER_WORDS.get(answer_text.strip().lower())
                        well_formed = answer is not None
    return ModelOutput(raw=raw, think=think, answer=answer, well_formed=well_formed)


def format_reward(out: ModelOutput, cfg: RewardConfig) -> float:
    """r_format when well-formed, else 0 (the penalty is applied by gating)."""
    return cfg.r_format if out.well_formed else 0.0


def answer_reward(predicted: Label, truth: Label, cfg: RewardConfig) -> float:
    if truth is Label.ANOMALOUS:
        return cfg.r_tp if predicted is Label.ANOMALOUS else cfg.r_fn
    return cfg.r_fp if predicted is Label.ANOMALOUS else cfg.r_tn


def bleu2(candidate: list[str], reference: list[str]) -> float:
    """BLEU capped at bigrams.

    Geometric mean of modified 1- and 2-gram precisions; add-one
    smoothing only for an order with zero matches; brevity penalty
    min(1, exp(1 - |ref|/|cand|)).  Returns 0 for an empty candidate or
    when no unigram matches.
    """
    if not candidate:
        return 0.0
    ref_unigrams = Counter(reference)
    cand_unigrams = Counter(candidate)
    m1 = sum(min(count, ref_unigrams[tok]) for tok, count in cand_unigrams.items())
    if m1 == 0:
        return 0.0
    p1 = m1 / len(candidate)
    ref_bigrams = Counter(zip(reference, reference[1:]))
    cand_bigrams = Counter(zip(candidate, candidate[1:]))
    m2 = sum(min(count, ref_bigrams[gram]) for gram, count in cand_bigrams.items())
    total2 = max(len(candidate) - 1, 0)
    if m2 == 0:
        p2 = (m2 + 1) / (total2 + 1)
    else:
        p2 = m2 / total2
    brevity_penalty = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    return brevity_penalty * math.sqrt(p1 * p2)


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    """LCS-based F1: R = LCS/|ref|, P = LCS/|cand|, 0 when LCS is 0."""
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2 * precision * recall / (precision + recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    # one-row DP over the shorter sequence
    if len(b) > len(a):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            prev_row = row[j]
            if x == y:
                row[j] = prev_diag + 1
            elif row[j - 1] > row[j]:
                row[j] = row[j - 1]
            prev_diag = prev_row
    return row[len(b)]


def _text_tokens(text: str) -> list[str]:
    return text.lower().split()


def grounding_reward(analysis: str, log_text: str) -> float:
    """Mean of bleu2 and rouge_l between analysis and source log tokens."""
    analysis_tokens = _text_tokens(analysis)
    log_tokens = _text_tokens(log_text)
    return 0.5 * bleu2(analysis_tokens, log_tokens) + 0.5 * rouge_l(analysis_tokens, log_tokens)


def coherence_reward(analysis: str, scorer: PerplexityScorer | None) -> float:
    """1 / (1 + ln p) for scorer perplexity p >= 1."""
    if scorer is None:
        raise ScorerUnavailable("no perplexity scorer configured")
    perplexity = scorer.perplexity(analysis)
    return 1.0 / (1.0 + math.log(perplexity))


def brevity_reward(analysis: str, stats: LengthStats, sigma_factor: float) -> float:
    """Gaussian closeness of token count to the corpus target length."""
    length = len(analysis.split())
    if length == 0:
        raise ValueError("cannot score an empty analysis")
    sigma = sigma_factor * stats.target_length
    deviation = length - stats.target_length
    return math.exp(-(deviation * deviation) / (2.0 * sigma * sigma))


_GATED = RewardBreakdown(
    format=0.0, answer=0.0, grounding=0.0, coherence=0.0, brevity=0.0, think=0.0, total=0.0,
)


def total_reward(
    raw_output: str,
    truth: Label,
    log_text: str,
    stats: LengthStats,
    cfg: RewardConfig,
    scorer: PerplexityScorer | None = None,
) -> RewardBreakdown:
    """Compose the full reward; malformed outputs are gated to r_malformed.

    With thinking disabled, the thinking components are zeroed and total
    is format + answer.
    """
    out = parse_output(raw_output)
    if not out.well_formed:
        return replace(_GATED, total=cfg.r_malformed)
    fmt = format_reward(out, cfg)
    ans = answer_reward(out.answer, truth, cfg)
    if not cfg.enable_thinking:
        return RewardBreakdown(
            format=fmt, answer=ans,
            grounding=0.0, coherence=0.0, brevity=0.0, think=0.0,
            total=fmt + ans,
        )
    grounding = grounding_reward(out.think, log_text)
    coherence = coherence_reward(out.think, scorer)
    brevity = brevity_reward(out.think, stats, cfg.brevity_sigma_factor)
    think = cfg.w_grounding * grounding + cfg.w_coherence * coherence + cfg.w_brevity * brevity
    return RewardBreakdown(
        format=fmt, answer=ans,
        grounding=grounding, coherence=coherence, brevity=brevity, think=think,
        total=fmt + ans + cfg.lambda_think * think,
    )


def score_record(
    log_text: str,
    output: str,
    truth: Label,
    cfg: RewardConfig,
    stats: LengthStats,
    scorer: PerplexityScorer | None = None,
) -> dict:
    """One batch-scoring row: the breakdown plus parse metadata.

    This is the single scoring path shared by the CLI batch command and
    the HTTP service, so both produce bit-identical numbers.
    """
    out = parse_output(output)
    breakdown = total_reward(output, truth, log_text, stats, cfg, scorer)
    row = breakdown.to_dict()
    row["well_formed"] = out.well_formed
    row["verdict"] = out.answer.value if out.answer is not None else None
    return row
