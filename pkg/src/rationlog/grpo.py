"""Group-relative advantage math and a desk-scale training loop.

The mock policy here is a logistic model over keyword-presence
features, not a language model.  It exists so reward-shaping effects
(asymmetric answer credit, thinking-reward grounding) can be measured
in seconds.  Group standardization makes advantages invariant to the
scale of a two-valued reward distribution, so a policy that only ever
produced well-formed outputs would train identically under asymmetric
and symmetric answer rewards; the malformed-output rate below is the
fixed reward anchor that lets the answer-gap size matter, mirroring the
format failures a real policy exhibits during RL.
"""

from __future__ import annotations

import json
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import Label
from .distill import LengthStats
from .metrics import accumulate, prf1
from .perplexity import BigramScorer, PerplexityScorer
from .rewards import RewardConfig, total_reward


class NonFiniteUpdate(RuntimeError):
    pass


@dataclass(frozen=True)
class RewardGroup:
    prompt_id: int
    rewards: tuple[float, ...]
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if len(self.rewards) < 2:
            raise ValueError("a reward group needs at least 2 rollouts")
        if not all(math.isfinite(r) for r in self.rewards):
            raise ValueError("rewards must be finite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def group_advantages(group: RewardGroup) -> list[float]:
    """A_i = (r_i - mean) / (popstd + epsilon); all-equal groups give exact zeros."""
    rewards = group.rewards
    if all(r == rewards[0] for r in rewards):
        return [0.0] * len(rewards)
    mean = sum(rewards) / len(rewards)
    variance = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    denom = math.sqrt(variance) + group.epsilon
    return [(r - mean) / denom for r in rewards]


def clipped_surrogate(ratio: float, advantage: float, clip_eps: float) -> float:
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    if not 0 < clip_eps < 1:
        raise ValueError("clip_eps must be in (0, 1)")
    clipped = min(max(ratio, 1.0 - clip_eps), 1.0 + clip_eps)
    return min(ratio * advantage, clipped * advantage)


@dataclass(frozen=True)
class RewardContext:
    """Everything total_reward needs besides the completion itself."""

    cfg: RewardConfig
    stats: LengthStats
    scorer: PerplexityScorer | None = None


_THINK_LEAD = ("the", "entry", "reports")
_THINK_FILLER = (
    "which", "suggests", "routine", "operation", "under", "current",
    "load", "so", "the", "component", "state", "looks", "consistent",
)


@dataclass(frozen=True)
class MockPolicy:
    """Logistic verdict head over keyword-presence features.

    grounding_level controls how much of the source log the templated
    think text quotes; malform_rate is the chance a sampled completion
    drops its answer tag and falls into the format gate.
    """

    keywords: tuple[str, ...]
    theta: tuple[float, ...]
    temperature: float = 1.0
    grounding_level: float = 0.8
    think_length: int = 24
    malform_rate: float = 0.0

    def __post_init__(self) -> None:
        if len(self.theta) != len(self.keywords) + 1:
            raise ValueError("theta must have one weight per keyword plus a bias")
        if not all(math.isfinite(w) for w in self.theta):
            raise ValueError("theta must be finite")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not 0.0 <= self.grounding_level <= 1.0:
            raise ValueError("grounding_level must be in [0, 1]")
        if self.think_length < 8:
            raise ValueError("think_length must be at least 8")
        if not 0.0 <= self.malform_rate < 1.0:
            raise ValueError("malform_rate must be in [0, 1)")

    @classmethod
    def initial(cls, keywords: tuple[str, ...], bias: float = 0.0, **kw) -> "MockPolicy":
        theta = (bias,) + (0.0,) * len(keywords)
        return cls(keywords=keywords, theta=theta, **kw)

    def features(self, log_text: str) -> np.ndarray:
        tokens = set(log_text.lower().split())
        feats = [1.0] + [1.0 if kw in tokens else 0.0 for kw in self.keywords]
        return np.asarray(feats)

    def verdict_prob(self, log_text: str) -> float:
        z = float(np.dot(self.features(log_text), self.theta)) / self.temperature
        z = min(max(z, -60.0), 60.0)
        p = 1.0 / (1.0 + math.exp(-z))
        return min(max(p, 1e-6), 1.0 - 1e-6)

    def think_text(self, log_text: str) -> str:
        """Deterministic templated analysis quoting part of the log."""
        log_tokens = log_text.split()
        budget = self.think_length - len(_THINK_LEAD)
        n_quote = round(self.grounding_level * min(len(log_tokens), budget))
        quoted = log_tokens[:n_quote]
        tokens = list(_THINK_LEAD) + quoted
        i = 0
        while len(tokens) < self.think_length:
            tokens.append(_THINK_FILLER[i % len(_THINK_FILLER)])
            i += 1
        return " ".join(tokens) + "."

    def sample_output(self, log_text: str, rng: random.Random) -> tuple[str, Label | None]:
        """One completion: (raw text, sampled verdict or None if malformed)."""
        think = self.think_text(log_text)
        if self.malform_rate and rng.random() < self.malform_rate:
            return f"<think>{think}</think>", None
        p = self.verdict_prob(log_text)
        verdict = Label.ANOMALOUS if rng.random() < p else Label.NORMAL
        word = "abnormal" if verdict is Label.ANOMALOUS else "normal"
        return f"<think>{think}</think><answer>{word}</answer>", verdict


def rollout(
    policy: MockPolicy,
    log_text: str,
    truth: Label,
    group_size: int,
    rng_seed: int,
    context: RewardContext,
    prompt_id: int = 0,
) -> tuple[RewardGroup, list[Label | None]]:
    """Sample and score a group of completions; deterministic under seed."""
    if group_size < 2:
        raise ValueError("group_size must be at least 2")
    rng = random.Random(rng_seed)
    rewards = []
    verdicts = []
    for _ in range(group_size):
        raw, verdict = policy.sample_output(log_text, rng)
        breakdown = total_reward(raw, truth, log_text, context.stats, context.cfg, context.scorer)
        rewards.append(breakdown.total)
        verdicts.append(verdict)
    return RewardGroup(prompt_id=prompt_id, rewards=tuple(rewards)), verdicts


def default_context(policy: MockPolicy, dataset: list[tuple[str, Label]], cfg: RewardConfig) -> RewardContext:
    """Length stats and a bigram scorer fitted to the policy's own think texts."""
    texts = [policy.think_text(log) for log, _ in dataset]
    lengths = [len(t.split()) for t in texts]
    mean = sum(lengths) / len(lengths)
    variance = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    stats = LengthStats(target_length=mean, std_dev=math.sqrt(variance), n=len(lengths))
    return RewardContext(cfg=cfg, stats=stats, scorer=BigramScorer(texts))


def _probe_metrics(policy: MockPolicy, probe: list[tuple[str, Label]]) -> tuple[float, float]:
    pairs = []
    for log_text, truth in probe:
        predicted = Label.ANOMALOUS if policy.verdict_prob(log_text) > 0.5 else Label.NORMAL
        pairs.append((predicted, truth))
    precision, recall, _ = prf1(accumulate(pairs))
    return precision, recall


def train_mock(
    policy: MockPolicy,
    dataset: list[tuple[str, Label]],
    cfg: RewardConfig,
    steps: int,
    lr: float,
    group_size: int = 8,
    rng_seed: int = 0,
    probe: list[tuple[str, Label]] | None = None,
    context: RewardContext | None = None,
) -> tuple[MockPolicy, list[dict]]:
    """REINFORCE on the verdict head with group-standardized advantages.

    Per step: pick a prompt, roll out a group, turn rewards into
    advantages, and move theta along the Bernoulli score function
    weighted by each sample's advantage.  Malformed samples carry no
    verdict so they contribute no gradient, but they still shift the
    group baseline.  Emits per-step mean reward plus precision/recall
    of the thresholded verdict head on the probe set.
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not lr >= 0:
        raise ValueError("lr must be non-negative")
    if context is None:
        context = default_context(policy, dataset, cfg)
    if probe is None:
        probe = dataset
    rng = random.Random(rng_seed)
    theta = np.asarray(policy.theta, dtype=float)
    current = policy
    history = []
    for step in range(steps):
        log_text, truth = dataset[rng.randrange(len(dataset))]
        p = current.verdict_prob(log_text)
        group, verdicts = rollout(
            current, log_text, truth, group_size, rng.randrange(2**31), context, prompt_id=step,
        )
        advantages = group_advantages(group)
        score = 0.0
        for adv, verdict in zip(advantages, verdicts):
            if verdict is None:
                continue
            v = 1.0 if verdict is Label.ANOMALOUS else 0.0
            score += adv * (v - p)
        score /= group_size
        with np.errstate(over="ignore"):
            # overflow is detected explicitly right below
            theta = theta + lr * score * current.features(log_text) / current.temperature
        if not np.all(np.isfinite(theta)):
            raise NonFiniteUpdate(
                f"theta became non-finite at step {step} (lr={lr}, rewards={group.rewards})"
            )
        current = replace(current, theta=tuple(float(w) for w in theta))
        precision, recall = _probe_metrics(current, probe)
        history.append(
            {
                "step": step,
                "mean_reward": sum(group.rewards) / len(group.rewards),
                "probe_precision": precision,
                "probe_recall": recall,
            }
        )
    return current, history


def save_training_log(history: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in history:
            fh.write(json.dumps(row) + "\n")


# synthetic corpus for the desk-scale loop: keywords exclusive to each
# class (at staggered frequencies, so rare anomalies are learned late)
# plus contested keywords appearing under both labels
_ANOMALOUS_SHAPES = (
    # (keyword, template, frequency multiplier)
    ("panic", "kernel panic on node {}", 1.0),
    ("fatal", "fatal ecc error at address {}", 1.0),
    ("corruption", "data corruption flagged on volume {}", 0.5),
    ("watchdog", "watchdog reset fired on core {}", 0.5),
    ("deadlock", "scheduler deadlock detected in queue {}", 0.3),
    ("overheat", "thermal overheat threshold crossed on board {}", 0.3),
)
_NORMAL_SHAPES = (
    ("heartbeat", "heartbeat check ok from node {}", 1.0),
    ("success", "backup job success in {} seconds", 1.0),
    ("completed", "scrub cycle completed on volume {}", 1.0),
    ("idle", "idle poll finished for rack {}", 0.5),
)
_AMBIGUOUS_SHAPES = (
    # (keyword, template, anomalous count per 20 logs)
    ("timeout", "link timeout waiting on peer {}", 9),
    ("retry", "retry storm observed on queue {}", 10),
    ("degraded", "degraded read performance on disk {}", 8),
)

SIM_KEYWORDS = tuple(k for k, _, _ in _ANOMALOUS_SHAPES) + tuple(
    k for k, _, _ in _NORMAL_SHAPES
) + tuple(k for k, _, _ in _AMBIGUOUS_SHAPES)


def synthetic_reward_dataset(
    rng_seed: int = 0,
    per_shape: int = 10,
) -> tuple[list[tuple[str, Label]], list[tuple[str, Label]], tuple[str, ...]]:
    """Build (train, probe, keywords) for the mock loop.

    Exclusive shapes appear per_shape times in one class; ambiguous
    shapes appear 2*per_shape times split between classes at a fixed
    anomalous count, so their class evidence is genuinely contested.
    """
    rng = random.Random(rng_seed)

    def build(count_scale: float, id_base: int) -> list[tuple[str, Label]]:
        items = []
        n = max(2, round(per_shape * count_scale))
        next_id = id_base
        for _, shape, mult in _ANOMALOUS_SHAPES:
            for _ in range(max(2, round(n * mult))):
                items.append((shape.format(next_id), Label.ANOMALOUS))
                next_id += 1
        for _, shape, mult in _NORMAL_SHAPES:
            for _ in range(max(2, round(n * mult))):
                items.append((shape.format(next_id), Label.NORMAL))
                next_id += 1
        for _, shape, anomalous_per_20 in _AMBIGUOUS_SHAPES:
            total = 2 * n
            n_anom = round(total * anomalous_per_20 / 20)
            for j in range(total):
                label = Label.ANOMALOUS if j < n_anom else Label.NORMAL
                items.append((shape.format(next_id), label))
                next_id += 1
        rng.shuffle(items)
        return items

    train = build(1.0, id_base=0)
    probe = build(0.5, id_base=100_000)
    return train, probe, SIM_KEYWORDS


@dataclass(frozen=True)
class SimConfig:
    pairs: int = 20
    steps: int = 250
    lr: float = 0.8
    group_size: int = 8
    malform_rate: float = 0.25
    initial_bias: float = -1.0
    temperature: float = 1.0
    grounding_level: float = 0.8
    per_shape: int = 10
    rng_seed: int = 0
    r_malformed: float = -2.0
    log_dir: str | None = None

    @classmethod
    def from_json(cls, path: str | Path) -> "SimConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**payload)


def run_pair(sim: SimConfig, pair_seed: int) -> dict:
    """Train one asymmetric and one symmetric run from identical seeds."""
    train, probe, keywords = synthetic_reward_dataset(rng_seed=sim.rng_seed, per_shape=sim.per_shape)
    results = {}
    for name, cfg in (
        ("asymmetric", RewardConfig(r_malformed=sim.r_malformed)),
        ("symmetric", RewardConfig.symmetric(r_malformed=sim.r_malformed)),
    ):
        policy = MockPolicy.initial(
            keywords,
            bias=sim.initial_bias,
            temperature=sim.temperature,
            grounding_level=sim.grounding_level,
            malform_rate=sim.malform_rate,
        )
        trained, history = train_mock(
            policy, train, cfg,
            steps=sim.steps, lr=sim.lr, group_size=sim.group_size,
            rng_seed=pair_seed, probe=probe,
        )
        results[name] = {"history": history, "final": history[-1]}
        if sim.log_dir is not None:
            path = Path(sim.log_dir) / f"grpo_{name}_seed{pair_seed}.jsonl"
            save_training_log(history, path)
    return results


def run_simulation(sim: SimConfig) -> dict:
    """Paired asymmetric-vs-symmetric runs; summary of final probe recall."""
    recalls_a = []
    recalls_s = []
    wins = 0
    for pair in range(sim.pairs):
        results = run_pair(sim, pair_seed=sim.rng_seed + pair)
        ra = results["asymmetric"]["final"]["probe_recall"]
        rs = results["symmetric"]["final"]["probe_recall"]
        recalls_a.append(ra)
        recalls_s.append(rs)
        if ra > rs:
            wins += 1
    return {
        "pairs": sim.pairs,
        "asymmetric_wins": wins,
        "median_recall_asymmetric": statistics.median(recalls_a),
        "median_recall_symmetric": statistics.median(recalls_s),
        "recalls_asymmetric": recalls_a,
        "recalls_symmetric": recalls_s,
    }
