"""Log anomaly detection substrate: corpus ingestion, template mining,
annotation correction, dataset construction, CoT distillation tooling,
a multi-faceted reward function, a desk-scale GRPO harness, and a
dual-granularity evaluator."""

from .annotations import (
    AgreementMatrix,
    CorrectionEntry,
    ErrorCategory,
    ResolvedBy,
    ReviewVote,
    apply_corrections,
    correction_report,
    fleiss_kappa,
    resolve,
)
from .corpus import Corpus, Label, LogRecord, load_corpus, parse_raw_line
from .dataset import (
    Session,
    SplitSpec,
    build_sessions,
    chronological_split,
    exclude_leakage,
    sample_template_set,
)
from .distill import (
    CotTriplet,
    LengthStats,
    TeacherClient,
    build_prompt,
    distill_logs,
    length_stats,
    parse_teacher_response,
)
from .grpo import (
    MockPolicy,
    RewardGroup,
    SimConfig,
    clipped_surrogate,
    default_context,
    group_advantages,
    rollout,
    run_simulation,
    synthetic_reward_dataset,
    train_mock,
)
from .metrics import ConfusionMatrix, accumulate, evaluate_session, evaluate_template, prf1
from .perplexity import BigramScorer, ScorerUnavailable
from .rewards import (
    ModelOutput,
    RewardBreakdown,
    RewardConfig,
    answer_reward,
    bleu2,
    brevity_reward,
    coherence_reward,
    format_reward,
    grounding_reward,
    parse_output,
    rouge_l,
    score_record,
    total_reward,
)
from .templates import (
    LogTemplate,
    MinerParams,
    TemplateIndex,
    mask_tokens,
    match_template,
    mine_templates,
    relabel_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementMatrix",
    "BigramScorer",
    "ConfusionMatrix",
    "Corpus",
    "CorrectionEntry",
    "CotTriplet",
    "ErrorCategory",
    "Label",
    "LengthStats",
    "LogRecord",
    "LogTemplate",
    "MinerParams",
    "MockPolicy",
    "ModelOutput",
    "ResolvedBy",
    "ReviewVote",
    "RewardBreakdown",
    "RewardConfig",
    "RewardGroup",
    "ScorerUnavailable",
    "Session",
    "SimConfig",
    "SplitSpec",
    "TeacherClient",
    "TemplateIndex",
    "accumulate",
    "answer_reward",
    "apply_corrections",
    "bleu2",
    "brevity_reward",
    "build_prompt",
    "build_sessions",
    "chronological_split",
    "clipped_surrogate",
    "coherence_reward",
    "correction_report",
    "default_context",
    "distill_logs",
    "evaluate_session",
    "evaluate_template",
    "exclude_leakage",
    "fleiss_kappa",
    "format_reward",
    "grounding_reward",
    "group_advantages",
    "length_stats",
    "load_corpus",
    "mask_tokens",
    "match_template",
    "mine_templates",
    "parse_output",
    "parse_raw_line",
    "parse_teacher_response",
    "prf1",
    "relabel_corpus",
    "resolve",
    "rollout",
    "rouge_l",
    "run_simulation",
    "sample_template_set",
    "score_record",
    "synthetic_reward_dataset",
    "total_reward",
    "train_mock",
]
