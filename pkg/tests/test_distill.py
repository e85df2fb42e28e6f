"""Teacher prompting, response filtering, length stats, client retry."""

import json
import math

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from rationlog.corpus import Label
from rationlog.distill import (
    CotTriplet,
    DistillError,
    LengthStats,
    TeacherClient,
    TooShort,
    VerdictMismatch,
    build_prompt,
    distill_logs,
    length_stats,
    load_length_stats,
    load_triplets_jsonl,
    parse_teacher_response,
    save_length_stats,
    save_triplets_jsonl,
)

LOG = "instruction cache parity error corrected"

GOOD_BODY = (
    "The entry reports a corrected parity error in the instruction cache. "
    "Correctable errors are handled by hardware and do not interrupt execution."
)


def chat_reply(text):
    return {"choices": [{"message": {"content": text}}]}


# ---------------------------------------------------------------- prompt

def test_prompt_structure():
    prompt = build_prompt(LOG, Label.NORMAL)
    assert prompt.count("[LOG]") == 1
    assert prompt.count("[/LOG]") == 1
    assert prompt.index("[LOG]") < prompt.index(LOG) < prompt.index("[/LOG]")
    # three numbered phases, stated verdict expectation
    for phase in ("1.", "2.", "3."):
        assert phase in prompt
    assert "'verdict: normal'" in prompt


def test_prompt_verdict_tracks_label():
    assert "'verdict: abnormal'" in build_prompt(LOG, Label.ANOMALOUS)


def test_prompt_escapes_fences_inside_log():
    tricky = "payload [LOG] nested [/LOG] end"
    prompt = build_prompt(tricky, Label.NORMAL)
    assert prompt.count("[LOG]") == 1
    assert prompt.count("[/LOG]") == 1
    assert "[ LOG]" in prompt and "[/ LOG]" in prompt


def test_prompt_distinct_for_distinct_logs():
    assert build_prompt("alpha beta", Label.NORMAL) != build_prompt(
        "alpha gamma", Label.NORMAL
    )


def test_prompt_rejects_blank_log():
    with pytest.raises(ValueError):
        build_prompt("   ", Label.NORMAL)


# ---------------------------------------------------------------- parsing

def test_parse_accepts_matching_verdict():
    raw = GOOD_BODY + "\nverdict: normal"
    triplet = parse_teacher_response(raw, Label.NORMAL, LOG)
    assert triplet.log_text == LOG
    assert triplet.cot_analysis == GOOD_BODY
    assert triplet.label is Label.NORMAL


def test_parse_accepts_case_and_punctuation():
    raw = GOOD_BODY + "\nVerdict: Abnormal."
    triplet = parse_teacher_response(raw, Label.ANOMALOUS, LOG)
    assert triplet.label is Label.ANOMALOUS


def test_parse_uses_last_verdict_line():
    raw = (
        "A naive reading might end with verdict: abnormal here. "
        + GOOD_BODY
        + "\nverdict: normal"
    )
    triplet = parse_teacher_response(raw, Label.NORMAL, LOG)
    assert triplet.label is Label.NORMAL


def test_parse_rejects_contradicting_verdict():
    raw = GOOD_BODY + "\nverdict: abnormal"
    with pytest.raises(VerdictMismatch):
        parse_teacher_response(raw, Label.NORMAL, LOG)


def test_parse_rejects_missing_verdict():
    with pytest.raises(VerdictMismatch):
        parse_teacher_response(GOOD_BODY, Label.NORMAL, LOG)


def test_parse_rejects_unknown_verdict_word():
    raw = GOOD_BODY + "\nverdict: inconclusive"
    with pytest.raises(VerdictMismatch):
        parse_teacher_response(raw, Label.NORMAL, LOG)


def test_parse_rejects_empty_body():
    with pytest.raises(TooShort):
        parse_teacher_response("verdict: normal", Label.NORMAL, LOG)


def test_parse_rejects_single_sentence_body():
    raw = "Just one sentence here.\nverdict: normal"
    with pytest.raises(TooShort):
        parse_teacher_response(raw, Label.NORMAL, LOG)


def test_triplet_requires_two_sentence_marks():
    with pytest.raises(TooShort):
        CotTriplet(log_text=LOG, cot_analysis="no marks at all", label=Label.NORMAL)
    ok = CotTriplet(log_text=LOG, cot_analysis="First! Second?", label=Label.NORMAL)
    assert ok.cot_analysis == "First! Second?"


# ---------------------------------------------------------------- length stats

def make_triplet(n_tokens):
    body = " ".join(["token"] * (n_tokens - 2)) + " done. Finished."
    return CotTriplet(log_text=LOG, cot_analysis=body, label=Label.NORMAL)


def test_length_stats_mean_and_population_std():
    stats = length_stats([make_triplet(10), make_triplet(20)])
    assert stats.target_length == 15.0
    assert math.isclose(stats.std_dev, 5.0, abs_tol=1e-12)
    assert stats.n == 2


def test_length_stats_single_triplet_zero_std():
    stats = length_stats([make_triplet(12)])
    assert stats.target_length == 12.0
    assert stats.std_dev == 0.0


def test_length_stats_rejects_empty():
    with pytest.raises(ValueError):
        length_stats([])


@given(st.lists(st.integers(4, 80), min_size=1, max_size=15), st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_length_stats_permutation_invariant(sizes, rng):
    triplets = [make_triplet(n) for n in sizes]
    shuffled = list(triplets)
    rng.shuffle(shuffled)
    a, b = length_stats(triplets), length_stats(shuffled)
    assert math.isclose(a.target_length, b.target_length, abs_tol=1e-9)
    assert math.isclose(a.std_dev, b.std_dev, abs_tol=1e-9)


def test_length_stats_validation():
    with pytest.raises(ValueError):
        LengthStats(target_length=0.0, std_dev=1.0, n=1)
    with pytest.raises(ValueError):
        LengthStats(target_length=10.0, std_dev=-0.1, n=1)
    with pytest.raises(ValueError):
        LengthStats(target_length=10.0, std_dev=1.0, n=0)


# ---------------------------------------------------------------- client

def test_client_posts_chat_shape_and_bearer(monkeypatch):
    monkeypatch.setenv("TEACHER_API_KEY", "sk-teacher-test")
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=chat_reply("fine. done.\nverdict: normal"))

    client = TeacherClient(
        base_url="https://teacher.example/v1",
        model="analyst-large",
        transport=httpx.MockTransport(handler),
    )
    with client:
        text = client.complete("describe")
    assert text == "fine. done.\nverdict: normal"
    assert seen["url"] == "https://teacher.example/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-teacher-test"
    assert seen["body"]["model"] == "analyst-large"
    assert seen["body"]["messages"] == [{"role": "user", "content": "describe"}]


def test_client_retries_then_succeeds():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(200, json=chat_reply("ok"))

    client = TeacherClient(
        base_url="https://teacher.example/v1",
        model="m",
        api_key="k",
        max_attempts=3,
        backoff=0.0,
        transport=httpx.MockTransport(handler),
    )
    with client:
        assert client.complete("p") == "ok"
    assert calls["n"] == 3


def test_client_exhausts_attempts():
    def handler(request):
        return httpx.Response(500)

    client = TeacherClient(
        base_url="https://teacher.example/v1",
        model="m",
        api_key="k",
        max_attempts=2,
        backoff=0.0,
        transport=httpx.MockTransport(handler),
    )
    with client:
        with pytest.raises(DistillError):
            client.complete("p")


def test_client_rejects_zero_attempts():
    with pytest.raises(ValueError):
        TeacherClient(base_url="u", model="m", max_attempts=0)


# ---------------------------------------------------------------- distill loop

def scripted_client(script):
    """Client whose responses follow `script` keyed by log text, popping per call."""

    def handler(request):
        body = json.loads(request.content)
        prompt = body["messages"][0]["content"]
        for log_text, replies in script.items():
            if log_text in prompt:
                reply = replies.pop(0) if len(replies) > 1 else replies[0]
                return httpx.Response(200, json=chat_reply(reply))
        raise AssertionError(f"no scripted reply for prompt: {prompt!r}")

    return TeacherClient(
        base_url="https://teacher.example/v1",
        model="m",
        api_key="k",
        backoff=0.0,
        transport=httpx.MockTransport(handler),
    )


def test_distill_keeps_consistent_responses_in_order():
    script = {
        "first log line": [GOOD_BODY + "\nverdict: normal"],
        "second log line": [GOOD_BODY + "\nverdict: abnormal"],
    }
    items = [("first log line", Label.NORMAL), ("second log line", Label.ANOMALOUS)]
    with scripted_client(script) as client:
        triplets, dropped = distill_logs(client, items, parallelism=2)
    assert dropped == []
    assert [t.log_text for t in triplets] == ["first log line", "second log line"]
    assert [t.label for t in triplets] == [Label.NORMAL, Label.ANOMALOUS]


def test_distill_rerequests_once_then_keeps():
    script = {
        "flaky log line": [
            GOOD_BODY + "\nverdict: abnormal",  # first reply contradicts
            GOOD_BODY + "\nverdict: normal",
        ],
    }
    with scripted_client(script) as client:
        triplets, dropped = distill_logs(
            client, [("flaky log line", Label.NORMAL)], parallelism=1
        )
    assert dropped == []
    assert len(triplets) == 1
    assert triplets[0].label is Label.NORMAL


def test_distill_drops_after_two_failures():
    script = {
        "hopeless log line": [GOOD_BODY + "\nverdict: abnormal"],
        "good log line": [GOOD_BODY + "\nverdict: normal"],
    }
    items = [
        ("hopeless log line", Label.NORMAL),
        ("good log line", Label.NORMAL),
    ]
    with scripted_client(script) as client:
        triplets, dropped = distill_logs(client, items, parallelism=1)
    assert dropped == ["hopeless log line"]
    assert [t.log_text for t in triplets] == ["good log line"]


def test_distill_rejects_bad_parallelism():
    with scripted_client({}) as client:
        with pytest.raises(ValueError):
            distill_logs(client, [], parallelism=0)


# ---------------------------------------------------------------- files

def test_triplets_jsonl_round_trip(tmp_path):
    triplets = [
        CotTriplet(log_text=LOG, cot_analysis=GOOD_BODY, label=Label.NORMAL),
        CotTriplet(log_text="kernel panic", cot_analysis="Bad. Fatal.", label=Label.ANOMALOUS),
    ]
    path = tmp_path / "cot.jsonl"
    save_triplets_jsonl(triplets, path)
    assert load_triplets_jsonl(path) == triplets
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert set(rows[0]) == {"log", "cot", "label"}


def test_triplets_jsonl_revalidates(tmp_path):
    path = tmp_path / "cot.jsonl"
    path.write_text(json.dumps({"log": LOG, "cot": "too short", "label": "normal"}) + "\n")
    with pytest.raises(TooShort):
        load_triplets_jsonl(path)


def test_length_stats_json_round_trip(tmp_path):
    stats = length_stats([make_triplet(10), make_triplet(20), make_triplet(18)])
    path = tmp_path / "stats.json"
    save_length_stats(stats, path)
    loaded = load_length_stats(path)
    assert loaded == stats
