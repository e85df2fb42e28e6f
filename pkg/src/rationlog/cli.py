"""Command-line pipeline driver.

Subcommands cover the full path from raw log file to metrics report:
ingest, mine, correct, split, sessions, distill, score, grpo-sim, eval,
serve.  Exit codes: 0 success, 1 domain error, 2 usage error.  The
RATIONLOG_CONFIG environment variable supplies a default reward-config
path for `score` and `serve`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import annotations, corpus, dataset, distill, grpo, metrics, rewards, templates
from .corpus import Label
from .perplexity import BigramScorer


def _resolve_reward_config(path_arg: str | None) -> rewards.RewardConfig:
    path = path_arg or os.environ.get("RATIONLOG_CONFIG")
    if path:
        return rewards.load_reward_config(path)
    return rewards.RewardConfig()


def _scoring_context(args) -> tuple[rewards.RewardConfig, distill.LengthStats, BigramScorer | None]:
    cfg = _resolve_reward_config(args.reward_config)
    scorer = None
    stats = None
    if args.triplets:
        triplets = distill.load_triplets_jsonl(args.triplets)
        stats = distill.length_stats(triplets)
        scorer = BigramScorer([t.cot_analysis for t in triplets])
    if args.stats:
        stats = distill.load_length_stats(args.stats)
    if stats is None:
        raise ValueError("need --triplets or --stats to derive length statistics")
    return cfg, stats, scorer


def cmd_ingest(args) -> int:
    loaded = corpus.load_corpus(args.file, name=args.name or Path(args.file).stem)
    corpus.save_corpus_jsonl(loaded, args.out)
    print(f"ingested {len(loaded)} records ({loaded.skipped} skipped) -> {args.out}")
    return 0


def cmd_mine(args) -> int:
    loaded = corpus.load_corpus_jsonl(args.corpus)
    params = templates.MinerParams(
        tree_depth=args.depth,
        similarity_threshold=args.threshold,
        max_children=args.max_children,
    )
    index = templates.mine_templates(loaded, params)
    templates.save_templates_jsonl(index, args.templates_out)
    if args.assignments_out:
        templates.save_assignments_json(index, args.assignments_out)
    print(f"mined {len(index.templates)} templates from {len(loaded)} records -> {args.templates_out}")
    return 0


def cmd_correct(args) -> int:
    index = templates.load_templates_jsonl(args.templates)
    ledger = annotations.load_ledger_jsonl(args.ledger)
    corrected = annotations.apply_corrections(index, ledger)
    templates.save_templates_jsonl(corrected, args.templates_out)
    rows = annotations.correction_report(ledger)
    print(annotations.render_report(rows))
    if args.report_out:
        Path(args.report_out).write_text(
            json.dumps(annotations.report_to_json(rows), indent=2) + "\n", encoding="utf-8"
        )
    print(f"applied {len(ledger)} corrections -> {args.templates_out}")
    return 0


def cmd_split(args) -> int:
    loaded = corpus.load_corpus_jsonl(args.corpus)
    train, test = dataset.chronological_split(loaded, args.fraction)
    corpus.save_corpus_jsonl(train, args.train_out)
    corpus.save_corpus_jsonl(test, args.test_out)
    print(f"split {len(loaded)} records into {len(train)} train / {len(test)} test")
    return 0


def cmd_sessions(args) -> int:
    loaded = corpus.load_corpus_jsonl(args.corpus)
    sessions = dataset.build_sessions(list(loaded.records), args.window)
    if args.exclude_train:
        train = corpus.load_corpus_jsonl(args.exclude_train)
        train_seqs = {r.seq_index for r in train.records}
        before = len(sessions)
        sessions = dataset.exclude_leakage(sessions, train_seqs)
        print(f"leakage exclusion dropped {before - len(sessions)} sessions", file=sys.stderr)
    dataset.save_sessions_jsonl(sessions, args.out)
    print(f"built {len(sessions)} sessions (window {args.window}) -> {args.out}")
    return 0


def cmd_distill(args) -> int:
    index = templates.load_templates_jsonl(args.templates)
    items = [(t.example_content, t.label) for t in index.templates]
    if args.limit is not None:
        items = items[: args.limit]
    with distill.TeacherClient(args.endpoint, args.model, timeout=args.timeout) as client:
        triplets, dropped = distill.distill_logs(client, items, parallelism=args.parallelism)
    if not triplets:
        raise ValueError("teacher produced no usable triplets")
    distill.save_triplets_jsonl(triplets, args.out)
    stats = distill.length_stats(triplets)
    distill.save_length_stats(stats, args.stats_out)
    print(
        f"distilled {len(triplets)} triplets ({len(dropped)} dropped) -> {args.out}; "
        f"target length {stats.target_length:.1f}"
    )
    return 0


def cmd_score(args) -> int:
    cfg, stats, scorer = _scoring_context(args)
    rows_out = []
    with open(args.batch, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            scored = rewards.score_record(
                row["log"], row["output"], Label.from_string(row["truth"]), cfg, stats, scorer,
            )
            rows_out.append(scored)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for scored in rows_out:
            sink.write(json.dumps(scored) + "\n")
    finally:
        if args.out:
            sink.close()
            print(f"scored {len(rows_out)} rows -> {args.out}")
    return 0


def cmd_grpo_sim(args) -> int:
    sim = grpo.SimConfig.from_json(args.config) if args.config else grpo.SimConfig()
    summary = grpo.run_simulation(sim)
    text = json.dumps(summary, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_eval(args) -> int:
    raw = json.loads(Path(args.predictions).read_text(encoding="utf-8"))
    predictions = {int(key): Label.from_string(value) for key, value in raw.items()}
    if args.granularity == "session":
        if not args.sessions:
            raise ValueError("session granularity needs --sessions")
        sessions = dataset.load_sessions_jsonl(args.sessions)
        matrix = metrics.evaluate_session(predictions, sessions)
    else:
        if not args.templates:
            raise ValueError("template granularity needs --templates")
        index = templates.load_templates_jsonl(args.templates)
        matrix = metrics.evaluate_template(predictions, index)
    report = metrics.metrics_report(args.granularity, matrix)
    print(metrics.render_metrics(report))
    if args.out:
        metrics.save_metrics_json(report, args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg, stats, scorer = _scoring_context(args)
    app = create_app(stats, scorer=scorer, configs={"default": cfg})
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_scoring_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--triplets", help="triplet JSONL; supplies length stats and the coherence scorer")
    sub.add_argument("--stats", help="length-stats JSON (overrides stats from --triplets)")
    sub.add_argument("--reward-config", help="reward config JSON (default: $RATIONLOG_CONFIG or built-ins)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rationlog", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="parse a raw log file into corpus JSONL")
    p.add_argument("file")
    p.add_argument("--name", default="")
    p.add_argument("--out", default="corpus.jsonl")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("mine", help="mine templates from a corpus")
    p.add_argument("--corpus", default="corpus.jsonl")
    p.add_argument("--templates-out", default="templates.jsonl")
    p.add_argument("--assignments-out")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-children", type=int, default=100)
    p.set_defaults(func=cmd_mine)

    p = subs.add_parser("correct", help="apply an expert correction ledger to templates")
    p.add_argument("--ledger", required=True)
    p.add_argument("--templates", default="templates.jsonl")
    p.add_argument("--templates-out", default="templates_corrected.jsonl")
    p.add_argument("--report-out")
    p.set_defaults(func=cmd_correct)

    p = subs.add_parser("split", help="chronological train/test split")
    p.add_argument("--corpus", default="corpus.jsonl")
    p.add_argument("--train-out", default="train.jsonl")
    p.add_argument("--test-out", default="test.jsonl")
    p.add_argument("--fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_split)

    p = subs.add_parser("sessions", help="group records into fixed-size windows")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--corpus", default="test.jsonl")
    p.add_argument("--out", default="sessions.jsonl")
    p.add_argument("--exclude-train", help="corpus JSONL whose records must not leak into sessions")
    p.set_defaults(func=cmd_sessions)

    p = subs.add_parser("distill", help="collect step-by-step analyses from a teacher endpoint")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--model", default="teacher")
    p.add_argument("--templates", default="templates.jsonl")
    p.add_argument("--out", default="triplets.jsonl")
    p.add_argument("--stats-out", default="length_stats.json")
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_distill)

    p = subs.add_parser("score", help="score a batch of completions")
    p.add_argument("--batch", required=True, help="JSONL rows with keys log, output, truth")
    p.add_argument("--out", help="output JSONL (default: stdout)")
    _add_scoring_args(p)
    p.set_defaults(func=cmd_score)

    p = subs.add_parser("grpo-sim", help="paired asymmetric-vs-symmetric mock training runs")
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--out", help="summary JSON path")
    p.set_defaults(func=cmd_grpo_sim)

    p = subs.add_parser("eval", help="precision/recall/F1 report")
    p.add_argument("--granularity", choices=("session", "template"), required=True)
    p.add_argument("--predictions", required=True, help="JSON map id -> label")
    p.add_argument("--sessions", help="sessions JSONL (session granularity)")
    p.add_argument("--templates", help="templates JSONL (template granularity)")
    p.add_argument("--out", help="metrics JSON path")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("serve", help="run the HTTP reward-scoring service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    _add_scoring_args(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
