# Anatomy of the multi-faceted reward: format gating, asymmetric answer
# credit, and the three-part thinking score.
#
# Run from the repository root:
#   python3 demos/03_reward_anatomy.py

from rationlog import (
    BigramScorer,
    Label,
    LengthStats,
    RewardConfig,
    total_reward,
)

LOG = "instruction cache parity error corrected"

# The brevity target and the coherence model both come from a distilled
# analysis corpus; a handful of lines stands in for it here.
REFERENCE_ANALYSES = [
    "the entry reports a corrected parity error in the instruction cache "
    "so execution continues normally",
    "the entry reports a watchdog reset on one core which points at a "
    "hung kernel thread",
    "the entry reports a routine heartbeat check from a healthy node",
]
stats = LengthStats(target_length=14.0, std_dev=3.0, n=len(REFERENCE_ANALYSES))
scorer = BigramScorer(REFERENCE_ANALYSES)
cfg = RewardConfig()


def show(tag, raw, truth):
    b = total_reward(raw, truth, LOG, stats, cfg, scorer)
    print(f"{tag:22s} fmt {b.format:+.2f}  ans {b.answer:+.2f}  "
          f"gnd {b.grounding:.2f}  coh {b.coherence:.2f}  brv {b.brevity:.2f}"
          f"  -> total {b.total:+.3f}")


# --- 1. gating -----------------------------------------------------------
# Without the <think>/<answer> structure nothing else is even looked at:
# the completion takes the flat malformed penalty.

print(f"log: {LOG!r}\n")
show("missing tags", "looks normal to me", Label.NORMAL)
show("unfinished think", "<think>the cache", Label.NORMAL)

# --- 2. answer asymmetry ----------------------------------------------------
# A caught anomaly out-earns a correct pass, and a missed anomaly costs
# more than a false alarm. The asymmetry exists because missed failures
# dominate real labeling errors.

analysis = "the entry reports a corrected instruction cache parity error so the node stays healthy"
wrapped = f"<think>{analysis}</think><answer>{{}}</answer>"
print()
show("caught anomaly", wrapped.format("abnormal"), Label.ANOMALOUS)
show("correct pass", wrapped.format("normal"), Label.NORMAL)
show("false alarm", wrapped.format("abnormal"), Label.NORMAL)
show("missed anomaly", wrapped.format("normal"), Label.ANOMALOUS)

# --- 3. thinking quality ------------------------------------------------------
# Same verdict, different reasoning. Grounding measures overlap with the
# source log; coherence is inverse log-perplexity under the reference
# bigram model; brevity is a Gaussian around the target length.

print()
show("grounded analysis", wrapped.format("normal"), Label.NORMAL)
hallucinated = "the disk array rebuild finished early and the fans spun down quietly afterwards"
show("hallucinated", f"<think>{hallucinated}</think><answer>normal</answer>", Label.NORMAL)
rambling = analysis + " and furthermore " + " ".join(["indeed"] * 30)
show("rambling", f"<think>{rambling}</think><answer>normal</answer>", Label.NORMAL)

# --- 4. ablations ---------------------------------------------------------
# Both levers that the reward exposes can be switched off: symmetric
# answer credit, and no thinking evaluation at all.

print()
sym = RewardConfig.symmetric()
b = total_reward(wrapped.format("abnormal"), Label.ANOMALOUS, LOG, stats, sym, scorer)
print(f"symmetric config:    caught anomaly total {b.total:+.3f} "
      f"(answer {b.answer:+.2f}, no extra credit)")
no_te = RewardConfig(enable_thinking=False)
b = total_reward(wrapped.format("abnormal"), Label.ANOMALOUS, LOG, stats, no_te, scorer)
print(f"thinking disabled:   caught anomaly total {b.total:+.3f} "
      f"(think component zeroed)")
