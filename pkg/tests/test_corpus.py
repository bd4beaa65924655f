import unicodedata
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyvocab.corpus import (
    META,
    CorpusError,
    FrequencyTable,
    SentenceCorpus,
    count_token_frequencies,
    draw_sample,
    load_corpus,
    normalize_text,
    save_corpus,
    temperature_sample,
)
from polyvocab.ulm import UNK, UnigramVocab, viterbi_tokenize


def test_blank_lines_are_dropped(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("hello\n\nworld\n", encoding="utf-8")
    c = load_corpus(p, "en")
    assert c.line_count == 2
    assert c.sentences == ("hello", "world")


def test_file_without_text_gives_empty_corpus(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("\n  \n\n", encoding="utf-8")
    assert load_corpus(p, "en").line_count == 0


def test_decomposed_accent_is_composed(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("café\n", encoding="utf-8")
    got = load_corpus(p, "fr").sentences[0]
    assert got == unicodedata.normalize("NFC", "café")
    assert [ord(ch) for ch in got] == [ord("c"), ord("a"), ord("f"), 0xE9]


def test_invalid_utf8_reports_offset(tmp_path):
    p = tmp_path / "c.txt"
    p.write_bytes(b"ok\n\xff\n")
    with pytest.raises(CorpusError, match="byte offset 3"):
        load_corpus(p, "xx")


def test_whitespace_runs_become_one_marker():
    assert normalize_text("  a \t b\n c ") == f"a{META}b{META}c"


@given(st.text(max_size=40))
def test_normalization_is_idempotent(s):
    once = normalize_text(s)
    assert normalize_text(once) == once


def test_save_load_round_trip(tmp_path):
    c = SentenceCorpus("en", ("a b", "c"))
    save_corpus(c, tmp_path / "x.txt")
    assert load_corpus(tmp_path / "x.txt", "en") == c


@pytest.mark.parametrize(
    "counts,t,total,expected",
    [
        ({"A": 80, "B": 20}, 1, 100, {"A": 80, "B": 20}),
        ({"A": 80, "B": 20}, 2, 99, {"A": 66, "B": 33}),
        ({"A": 50, "B": 50}, 3.7, 10, {"A": 5, "B": 5}),
    ],
)
def test_temperature_quotas(counts, t, total, expected):
    assert temperature_sample(counts, t, total) == expected


counts_st = st.dictionaries(
    st.text("abcdefgh", min_size=1, max_size=3), st.integers(1, 10_000), min_size=1, max_size=8
)


@given(counts_st, st.floats(0.1, 50), st.integers(1, 100_000))
def test_quotas_sum_to_total(counts, t, total):
    q = temperature_sample(counts, t, total)
    assert sum(q.values()) == total
    assert set(q) == set(counts)


@given(counts_st, st.integers(1, 10_000))
def test_unit_temperature_is_proportional(counts, total):
    q = temperature_sample(counts, 1.0, total)
    mass = sum(counts.values())
    for k, v in q.items():
        assert abs(v - total * counts[k] / mass) < 1.0


@given(counts_st, st.integers(1, 10_000))
def test_huge_temperature_is_uniform(counts, total):
    q = temperature_sample(counts, 1e6, total)
    n = len(counts)
    for v in q.values():
        assert abs(v - total / n) <= 1.0


def test_temperature_rejects_bad_input():
    with pytest.raises(ValueError):
        temperature_sample({}, 1, 10)
    with pytest.raises(ValueError):
        temperature_sample({"a": 1}, 0, 10)
    with pytest.raises(ValueError):
        temperature_sample({"a": 0}, 1, 10)


def test_full_draw_is_a_permutation():
    c = SentenceCorpus("x", tuple(f"s{i}" for i in range(10)))
    assert sorted(draw_sample(c, 10, seed=3).sentences) == sorted(c.sentences)


def test_upsampling_repeats_two_or_three_times():
    c = SentenceCorpus("x", ("a", "b", "c", "d"))
    got = Counter(draw_sample(c, 10, seed=1).sentences)
    assert sum(got.values()) == 10
    assert set(got.values()) <= {2, 3}
    assert list(got.values()).count(3) == 2


def test_zero_quota_is_empty():
    c = SentenceCorpus("x", tuple("abcdefghij"))
    assert draw_sample(c, 0).line_count == 0


@given(st.integers(1, 12), st.integers(0, 60), st.integers(0, 5))
def test_draw_multiplicities_differ_by_at_most_one(n, quota, seed):
    c = SentenceCorpus("x", tuple(f"w{i}" for i in range(n)))
    got = Counter(draw_sample(c, quota, seed).sentences)
    mult = [got.get(s, 0) for s in c.sentences]
    assert sum(mult) == quota
    assert max(mult) - min(mult) <= 1


def test_draw_is_seeded():
    c = SentenceCorpus("x", tuple(f"w{i}" for i in range(50)))
    assert draw_sample(c, 30, 7) == draw_sample(c, 30, 7)
    assert draw_sample(c, 30, 7) != draw_sample(c, 30, 8)


def char_vocab():
    # single characters dominate, so "ab" splits into a + b
    return UnigramVocab({UNK: -5.0, "a": -0.7, "b": -1.0, "ab": -4.0})


def test_counts_with_character_vocab():
    freq = count_token_frequencies(SentenceCorpus("x", ("ab", "a")), char_vocab())
    assert freq.counts == {"a": 2, "b": 1}
    assert freq.total == 3


def test_counts_on_empty_corpus():
    freq = count_token_frequencies(SentenceCorpus("x", ()), char_vocab())
    assert freq.counts == {} and freq.total == 0


def test_counts_prefer_whole_token_when_more_probable():
    import math

    v = UnigramVocab({UNK: -9.0, "aa": math.log(0.5), "a": math.log(0.3)})
    assert math.log(0.5) > 2 * math.log(0.3)
    freq = count_token_frequencies(SentenceCorpus("x", ("aa",)), v)
    assert freq.counts == {"aa": 1}


@settings(max_examples=30)
@given(st.lists(st.text("abc ", min_size=1, max_size=10), max_size=8))
def test_count_total_matches_segmentation_lengths(sents):
    corpus = SentenceCorpus("x", tuple(sents))
    v = char_vocab()
    freq = count_token_frequencies(corpus, v)
    assert freq.total == sum(len(viterbi_tokenize(v, s)) for s in corpus.sentences)


def test_frequency_table_round_trip(tmp_path):
    t = FrequencyTable({"a": 3, "b": 1, "c": 3}, 7)
    t.save(tmp_path / "f.tsv")
    assert (tmp_path / "f.tsv").read_text() == "a\t3\nc\t3\nb\t1\n"
    assert FrequencyTable.load(tmp_path / "f.tsv") == t


def test_frequency_table_validates_total():
    with pytest.raises(ValueError):
        FrequencyTable({"a": 2}, 3)
