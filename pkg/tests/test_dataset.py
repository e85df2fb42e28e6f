"""Split construction: chronology, rate control, sessions, leakage."""

import pytest
from hypothesis import given, settings, strategies as st

from rationlog.corpus import Corpus, Label, LogRecord
from rationlog.dataset import (
    DegenerateSplit,
    InsufficientPool,
    Session,
    SplitSpec,
    build_sampling_pool,
    build_sessions,
    chronological_split,
    exclude_leakage,
    load_sessions_jsonl,
    sample_template_set,
    save_sessions_jsonl,
    split_manifest,
)
from rationlog.templates import MinerParams, mine_templates


def record(i, label=Label.NORMAL, content=None):
    return LogRecord(
        seq_index=i,
        timestamp=1117838570 + i,
        alert_tag="-" if label is Label.NORMAL else "KERNDTLB",
        content=content or f"instruction cache parity error corrected {i}",
        label=label,
    )


def corpus_of(n, anomalous_at=()):
    records = tuple(
        record(i, Label.ANOMALOUS if i in anomalous_at else Label.NORMAL)
        for i in range(n)
    )
    return Corpus(records=records, name="t")


# ---------------------------------------------------------------- chronological

def test_split_eighty_twenty_on_ten():
    train, test = chronological_split(corpus_of(10), 0.8)
    assert [r.seq_index for r in train.records] == list(range(8))
    assert [r.seq_index for r in test.records] == [8, 9]


def test_split_rounds_up_train_side():
    # 7 records at 0.8 -> ceil(5.6) = 6 train, 1 test
    train, test = chronological_split(corpus_of(7), 0.8)
    assert len(train) == 6 and len(test) == 1


def test_split_rejects_degenerate():
    with pytest.raises(DegenerateSplit):
        chronological_split(corpus_of(1), 0.5)
    with pytest.raises(ValueError):
        chronological_split(corpus_of(10), 1.0)


@given(st.integers(2, 400), st.floats(0.05, 0.95))
@settings(max_examples=80, deadline=None)
def test_split_partitions_in_order(n, fraction):
    corpus = corpus_of(n)
    try:
        train, test = chronological_split(corpus, fraction)
    except DegenerateSplit:
        return
    combined = list(train.records) + list(test.records)
    assert combined == list(corpus.records)
    assert max(r.timestamp for r in train.records) <= min(
        r.timestamp for r in test.records
    )


# ---------------------------------------------------------------- rate control

def big_pool(n_normal, n_anomalous):
    pool = []
    for i in range(n_normal):
        pool.append((record(i), Label.NORMAL))
    for i in range(n_anomalous):
        pool.append((record(n_normal + i, Label.ANOMALOUS), Label.ANOMALOUS))
    return pool


def test_sample_exact_class_counts():
    pool = big_pool(n_normal=1800, n_anomalous=400)
    picked = sample_template_set(pool, size=2000, anomaly_rate=0.15, rng_seed=0)
    assert len(picked) == 2000
    labels = [r.label for r in picked]
    assert labels.count(Label.ANOMALOUS) == 300
    assert labels.count(Label.NORMAL) == 1700


def test_sample_has_no_duplicates():
    pool = big_pool(n_normal=60, n_anomalous=20)
    picked = sample_template_set(pool, size=40, anomaly_rate=0.25, rng_seed=3)
    assert len({r.seq_index for r in picked}) == 40


def test_sample_insufficient_anomalous_names_class():
    pool = big_pool(n_normal=1700, n_anomalous=299)
    with pytest.raises(InsufficientPool) as err:
        sample_template_set(pool, size=2000, anomaly_rate=0.15, rng_seed=0)
    assert err.value.label is Label.ANOMALOUS
    assert "299" in str(err.value)


def test_sample_insufficient_normal_names_class():
    pool = big_pool(n_normal=10, n_anomalous=50)
    with pytest.raises(InsufficientPool) as err:
        sample_template_set(pool, size=40, anomaly_rate=0.25, rng_seed=0)
    assert err.value.label is Label.NORMAL


def test_sample_is_seed_deterministic():
    pool = big_pool(n_normal=100, n_anomalous=30)
    first = sample_template_set(pool, size=60, anomaly_rate=0.2, rng_seed=11)
    second = sample_template_set(pool, size=60, anomaly_rate=0.2, rng_seed=11)
    other = sample_template_set(pool, size=60, anomaly_rate=0.2, rng_seed=12)
    assert first == second
    assert [r.seq_index for r in first] != [r.seq_index for r in other]


@given(
    st.integers(20, 120),
    st.floats(0.05, 0.6),
    st.integers(0, 2**31 - 1),
)
@settings(max_examples=60, deadline=None)
def test_sample_rate_property(size, rate, seed):
    pool = big_pool(n_normal=200, n_anomalous=120)
    picked = sample_template_set(pool, size=size, anomaly_rate=rate, rng_seed=seed)
    n_anomalous = sum(1 for r in picked if r.label is Label.ANOMALOUS)
    assert n_anomalous == round(size * rate)
    assert len(picked) == size


# ---------------------------------------------------------------- pools

def pool_corpus():
    lines = [
        "instruction cache parity error corrected",
        "instruction cache parity error corrected",
        "machine check interrupt raised",
        "machine check interrupt raised",
        "machine check interrupt raised",
    ]
    records = tuple(
        LogRecord(
            seq_index=i,
            timestamp=1117838570 + i,
            alert_tag="-" if i < 2 else "KERNMC",
            content=text,
            label=Label.NORMAL if i < 2 else Label.ANOMALOUS,
        )
        for i, text in enumerate(lines)
    )
    return Corpus(records=records, name="pool")


def test_record_pool_labels_via_templates():
    corpus = pool_corpus()
    index = mine_templates(corpus, MinerParams())
    pool = build_sampling_pool(corpus, index, mode="record")
    assert len(pool) == 5
    assert [label for _, label in pool] == [
        Label.NORMAL, Label.NORMAL,
        Label.ANOMALOUS, Label.ANOMALOUS, Label.ANOMALOUS,
    ]


def test_template_pool_one_representative_each():
    corpus = pool_corpus()
    index = mine_templates(corpus, MinerParams())
    pool = build_sampling_pool(corpus, index, mode="template")
    assert len(pool) == 2
    assert [r.seq_index for r, _ in pool] == [0, 2]


def test_pool_rejects_unknown_mode():
    corpus = pool_corpus()
    index = mine_templates(corpus, MinerParams())
    with pytest.raises(ValueError):
        build_sampling_pool(corpus, index, mode="session")


# ---------------------------------------------------------------- sessions

def test_sessions_of_250_records_window_100():
    sessions = build_sessions(list(corpus_of(250).records), window_size=100)
    assert [len(s.record_refs) for s in sessions] == [100, 100, 50]
    assert [s.session_id for s in sessions] == [0, 1, 2]
    flattened = [ref for s in sessions for ref in s.record_refs]
    assert flattened == list(range(250))


def test_session_label_is_any_member_anomalous():
    records = list(corpus_of(6, anomalous_at={4}).records)
    sessions = build_sessions(records, window_size=3)
    assert [s.label for s in sessions] == [Label.NORMAL, Label.ANOMALOUS]


def test_sessions_reject_bad_window():
    with pytest.raises(ValueError):
        build_sessions(list(corpus_of(5).records), window_size=0)


def test_empty_session_rejected():
    with pytest.raises(ValueError):
        Session(session_id=0, record_refs=(), label=Label.NORMAL)


@given(st.integers(1, 300), st.integers(1, 50))
@settings(max_examples=80, deadline=None)
def test_sessions_partition_records(n, window):
    records = list(corpus_of(n).records)
    sessions = build_sessions(records, window_size=window)
    assert all(len(s.record_refs) == window for s in sessions[:-1])
    assert 1 <= len(sessions[-1].record_refs) <= window
    flattened = [ref for s in sessions for ref in s.record_refs]
    assert flattened == [r.seq_index for r in records]


# ---------------------------------------------------------------- leakage

def test_exclude_leakage_drops_overlap():
    sessions = build_sessions(list(corpus_of(9).records), window_size=3)
    kept = exclude_leakage(sessions, train_record_set={4})
    assert [s.session_id for s in kept] == [0, 2]
    for session in kept:
        assert not {4}.intersection(session.record_refs)


def test_exclude_leakage_keeps_all_when_disjoint():
    sessions = build_sessions(list(corpus_of(9).records), window_size=3)
    assert exclude_leakage(sessions, {100, 200}) == sessions


@given(
    st.integers(1, 200),
    st.integers(1, 40),
    st.sets(st.integers(0, 220), max_size=60),
)
@settings(max_examples=80, deadline=None)
def test_exclude_leakage_invariant(n, window, train_set):
    sessions = build_sessions(list(corpus_of(n).records), window_size=window)
    kept = exclude_leakage(sessions, train_set)
    for session in kept:
        assert not train_set.intersection(session.record_refs)
    # dropped sessions all overlap
    dropped = [s for s in sessions if s not in kept]
    for session in dropped:
        assert train_set.intersection(session.record_refs)


# ---------------------------------------------------------------- manifest / io

def test_manifest_digests_detect_change():
    train, test = chronological_split(corpus_of(10), 0.8)
    manifest = split_manifest(train, test, 0.8, rng_seed=7)
    assert manifest["n_train"] == 8 and manifest["n_test"] == 2
    assert manifest["seed"] == 7
    again = split_manifest(train, test, 0.8, rng_seed=7)
    assert manifest == again
    other_train, other_test = chronological_split(corpus_of(11), 0.8)
    other = split_manifest(other_train, other_test, 0.8, rng_seed=7)
    assert other["train_digest"] != manifest["train_digest"]


def test_split_spec_validation():
    spec = SplitSpec()
    assert spec.train_fraction == 0.8
    assert spec.template_train_size == 2000
    assert spec.anomaly_rate == 0.15
    with pytest.raises(ValueError):
        SplitSpec(train_fraction=1.0)
    with pytest.raises(ValueError):
        SplitSpec(anomaly_rate=0.0)
    with pytest.raises(ValueError):
        SplitSpec(window_size=0)


def test_sessions_jsonl_round_trip(tmp_path):
    sessions = build_sessions(list(corpus_of(7, anomalous_at={6}).records), 3)
    path = tmp_path / "sessions.jsonl"
    save_sessions_jsonl(sessions, path)
    assert load_sessions_jsonl(path) == sessions
