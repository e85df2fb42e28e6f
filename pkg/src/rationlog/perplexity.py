"""Word-bigram perplexity scoring with add-k smoothing.

Desk-scale stand-in for a neural fluency model: train on the distilled
analysis corpus, then score how predictable a text's word sequence is.
Perplexity is always >= 1, so downstream coherence mappings stay in
(0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Protocol

_START = "<s>"
_END = "</s>"
_UNK = "<unk>"


class ScorerUnavailable(RuntimeError):
    """The perplexity scorer is missing or was never trained."""


class PerplexityScorer(Protocol):
    def perplexity(self, text: str) -> float: ...


class BigramScorer:
    """Add-k smoothed word-bigram model over lowercased whitespace tokens."""

    def __init__(self, texts: Iterable[str], k: float = 0.1):
        if k <= 0:
            raise ValueError("smoothing k must be positive")
        self.k = k
        self.bigrams: Counter = Counter()
        self.contexts: Counter = Counter()
        vocab: set[str] = set()
        n_texts = 0
        for text in texts:
            tokens = text.lower().split()
            if not tokens:
                continue
            n_texts += 1
            vocab.update(tokens)
            sequence = [_START] + tokens + [_END]
            for prev, cur in zip(sequence, sequence[1:]):
                self.bigrams[(prev, cur)] += 1
                self.contexts[prev] += 1
        if n_texts == 0:
            raise ScorerUnavailable("no non-empty training texts")
        self.vocab = vocab | {_END, _UNK}

    def perplexity(self, text: str) -> float:
        tokens = [t if t in self.vocab else _UNK for t in text.lower().split()]
        if not tokens:
            raise ValueError("cannot score empty text")
        sequence = [_START] + tokens + [_END]
        v = len(self.vocab)
        log_prob = 0.0
        for prev, cur in zip(sequence, sequence[1:]):
            numerator = self.bigrams[(prev, cur)] + self.k
            denominator = self.contexts[prev] + self.k * v
            log_prob += math.log(numerator / denominator)
        return math.exp(-log_prob / (len(sequence) - 1))
