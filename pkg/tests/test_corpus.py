import pytest
from hypothesis import given, strategies as st

from rationlog.corpus import (
    BadTimestamp,
    Corpus,
    EmptyCorpus,
    Label,
    LogRecord,
    TooFewFields,
    load_corpus,
    load_corpus_jsonl,
    parse_raw_line,
    save_corpus_jsonl,
)

NORMAL_LINE = (
    "- 1117838570 2005.06.03 R02 2005-06-03-15.42.50 R02 RAS KERNEL INFO "
    "instruction cache parity error corrected"
)
ALERT_LINE = (
    "KERNDTLB 1117838573 2005.06.03 R23 2005-06-03-15.42.53 R23 RAS KERNEL FATAL "
    "data TLB error interrupt"
)


def test_parse_normal_line() -> None:
    rec = parse_raw_line(NORMAL_LINE, 0)
    assert rec.label is Label.NORMAL
    assert rec.timestamp == 1117838570
    assert rec.content == "instruction cache parity error corrected"
    assert rec.alert_tag == "-"
    assert rec.seq_index == 0


def test_parse_alert_line() -> None:
    rec = parse_raw_line(ALERT_LINE, 1)
    assert rec.label is Label.ANOMALOUS
    assert rec.alert_tag == "KERNDTLB"
    assert rec.content == "data TLB error interrupt"


def test_parse_too_few_fields() -> None:
    with pytest.raises(TooFewFields):
        parse_raw_line("- 1117838570 short", 2)


def test_parse_bad_timestamp() -> None:
    bad = NORMAL_LINE.replace("1117838570", "notanepoch")
    with pytest.raises(BadTimestamp):
        parse_raw_line(bad, 0)


def test_label_iff_dash_tag() -> None:
    for tag in ("-", "KERNDTLB", "APPSEV", "x"):
        line = f"{tag} 1 a b c d e f g payload here"
        rec = parse_raw_line(line, 0)
        assert (rec.label is Label.NORMAL) == (tag == "-")


def test_load_corpus_three_valid_lines(tmp_path) -> None:
    later = NORMAL_LINE.replace("1117838570", "1117838580")
    path = tmp_path / "logs.txt"
    path.write_text("\n".join([NORMAL_LINE, ALERT_LINE, later]) + "\n")
    corpus = load_corpus(path, name="t")
    assert len(corpus) == 3
    assert [r.seq_index for r in corpus] == [0, 1, 2]
    assert corpus.skipped == 0


def test_load_corpus_counts_malformed(tmp_path) -> None:
    path = tmp_path / "logs.txt"
    path.write_text("\n".join([NORMAL_LINE, "garbage", ALERT_LINE]) + "\n")
    corpus = load_corpus(path, name="t")
    assert len(corpus) == 2
    assert corpus.skipped == 1


def test_load_corpus_empty_file(tmp_path) -> None:
    path = tmp_path / "logs.txt"
    path.write_text("")
    with pytest.raises(EmptyCorpus):
        load_corpus(path, name="t")


def test_load_corpus_resorts_out_of_order(tmp_path) -> None:
    late = NORMAL_LINE.replace("1117838570", "1117838999")
    path = tmp_path / "logs.txt"
    path.write_text("\n".join([late, ALERT_LINE]) + "\n")
    corpus = load_corpus(path, name="t")
    stamps = [r.timestamp for r in corpus]
    assert stamps == sorted(stamps)


def test_load_corpus_invalid_utf8_not_fatal(tmp_path) -> None:
    path = tmp_path / "logs.txt"
    path.write_bytes(NORMAL_LINE.encode() + b" \xff\xfe tail\n")
    corpus = load_corpus(path, name="t")
    assert len(corpus) == 1


def test_record_rejects_empty_content() -> None:
    with pytest.raises(ValueError):
        LogRecord(seq_index=0, timestamp=1, alert_tag="-", content="  ", label=Label.NORMAL)


def test_label_serialization() -> None:
    assert Label.NORMAL.value == "normal"
    assert Label.ANOMALOUS.value == "anomalous"
    assert Label.from_string("anomalous") is Label.ANOMALOUS
    with pytest.raises(ValueError):
        Label.from_string("weird")


contents = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd")), min_size=1, max_size=12
)


@st.composite
def corpora(draw) -> Corpus:
    n = draw(st.integers(min_value=1, max_value=20))
    records = []
    for i in range(n):
        records.append(
            LogRecord(
                seq_index=i,
                timestamp=draw(st.integers(min_value=0, max_value=10**9)),
                alert_tag=draw(st.sampled_from(["-", "KERNDTLB", "APPSEV"])),
                content=draw(contents),
                label=draw(st.sampled_from([Label.NORMAL, Label.ANOMALOUS])),
                source_dataset="hyp",
            )
        )
    records.sort(key=lambda r: (r.timestamp, r.seq_index))
    return Corpus(records=tuple(records), name="hyp")


@given(corpora())
def test_jsonl_round_trip(corpus) -> None:
    import os
    import tempfile

    fd, path = tempfile.mkstemp(suffix=".jsonl")
    os.close(fd)
    try:
        save_corpus_jsonl(corpus, path)
        again = load_corpus_jsonl(path, name=corpus.name)
        assert again.records == corpus.records
    finally:
        os.unlink(path)


def test_save_load_round_trip(tmp_path) -> None:
    path = tmp_path / "logs.txt"
    path.write_text("\n".join([NORMAL_LINE, ALERT_LINE]) + "\n")
    corpus = load_corpus(path, name="rt")
    out = tmp_path / "corpus.jsonl"
    save_corpus_jsonl(corpus, out)
    again = load_corpus_jsonl(out, name="rt")
    assert again.records == corpus.records
    assert again.name == corpus.name
