# Template mining and expert correction, end to end on the bundled corpus.
#
# Run from the repository root:
#   python3 demos/01_mine_and_correct.py

from pathlib import Path

from rationlog import (
    AgreementMatrix,
    CorrectionEntry,
    ErrorCategory,
    Label,
    MinerParams,
    ResolvedBy,
    ReviewVote,
    apply_corrections,
    correction_report,
    fleiss_kappa,
    load_corpus,
    match_template,
    mine_templates,
    resolve,
)
from rationlog.annotations import render_report

ROOT = Path(__file__).resolve().parent.parent

# --- 1. ingest ---------------------------------------------------------
# The loader parses the whitespace-delimited raw format: an alert tag
# ("-" means normal), an epoch timestamp, a fixed header, then the
# free-text message content. Unparseable lines are counted, not fatal.

corpus = load_corpus(ROOT / "data" / "synthetic_bgl.log")
n_anomalous = sum(1 for r in corpus if r.label is Label.ANOMALOUS)
print(f"loaded {len(corpus)} records ({corpus.skipped} skipped), "
      f"{n_anomalous} tagged anomalous")

# --- 2. mine ------------------------------------------------------------
# Mining buckets lines by token count, walks a fixed-depth prefix tree to
# find candidate clusters, and merges on positional token similarity.
# Digit-bearing tokens are masked to <*> first, so "core.1" and "core.9"
# land in one template.

index = mine_templates(corpus, MinerParams(similarity_threshold=0.5))
print(f"\nmined {len(index.templates)} templates:")
for template in index.templates[:8]:
    print(f"  [{template.template_id:2d}] {template.label.value:9s} "
          f"x{template.member_count:3d}  {template.template_text}")
if len(index.templates) > 8:
    print(f"  ... and {len(index.templates) - 8} more")

# Matching a fresh line finds the best template above the threshold.
probe = corpus.records[0].content
matched = match_template(index, probe)
print(f"\n{probe!r} -> template {matched}")

# --- 3. review votes ----------------------------------------------------
# Suppose three reviewers re-examine one template the miner labeled
# normal. Two see a failure signature; majority wins. Exact ties would
# need a senior label instead.

target = next(t for t in index.templates if t.label is Label.NORMAL)
votes = [
    ReviewVote(template_id=target.template_id, annotator_id="a1", label=Label.ANOMALOUS),
    ReviewVote(template_id=target.template_id, annotator_id="a2", label=Label.ANOMALOUS),
    ReviewVote(template_id=target.template_id, annotator_id="a3", label=Label.NORMAL),
]
decided, how = resolve(votes)
print(f"\npanel decided {decided.value} ({how.value}) "
      f"for template {target.template_id}: {target.template_text!r}")

# Agreement across a whole review round is summarized by Fleiss' kappa.
matrix = AgreementMatrix(items=((1, 2), (3, 0), (0, 3), (2, 1)), n_annotators=3)
print(f"panel agreement kappa = {fleiss_kappa(matrix):.3f}")

# --- 4. corrections -----------------------------------------------------
# Accepted flips go into an append-only ledger; applying it produces a
# new index and the per-category breakdown report.

ledger = [CorrectionEntry(
    template_id=target.template_id,
    old_label=Label.NORMAL,
    new_label=Label.ANOMALOUS,
    category=ErrorCategory.SYSTEM_ERROR,
    rationale="panel saw a failure signature the alert tag missed",
    resolved_by=ResolvedBy.PANEL_CONSENSUS,
)]
corrected = apply_corrections(index, ledger)
flipped = next(t for t in corrected.templates if t.template_id == target.template_id)
print(f"\nafter correction, template {flipped.template_id} is {flipped.label.value}")
print()
print(render_report(correction_report(ledger)))
