import hashlib
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import best_split_score
from polyvocab.assembly import (
    AssemblyError,
    build_cluster_corpus,
    export_vocab,
    import_vocab,
    merge_vocabs,
    train_cluster_vocabs,
)
from polyvocab.clustering import ClusterAssignment
from polyvocab.corpus import META, SentenceCorpus, draw_sample
from polyvocab.synthetic import CYRILLIC, LATIN, zipf_corpus
from polyvocab.ulm import UNK, UnigramVocab, VocabError, viterbi_tokenize


def assignment(*groups):
    return ClusterAssignment([frozenset(g) for g in groups], np.zeros((len(groups), 1)), 0.0)


def uniform(tokens):
    tokens = list(tokens)
    return UnigramVocab({t: -math.log(len(tokens)) for t in tokens})


def lang_corpus(lang, n):
    return SentenceCorpus(lang, tuple(f"{lang} line {i}" for i in range(n)))


def test_singleton_cluster_is_the_language_sample():
    c = lang_corpus("en", 30)
    got = build_cluster_corpus(assignment({"en"}), {"en": c}, 2.0, 45, seed=3)
    assert got[0].sentences == draw_sample(c, 45, 3).sentences


def test_equal_members_split_evenly():
    corpora = {"a": lang_corpus("a", 40), "b": lang_corpus("b", 40)}
    got = build_cluster_corpus(assignment({"a", "b"}), corpora, 1.0, 100)
    origin = Counter(s.split(META)[0] for s in got[0].sentences)
    assert origin == {"a": 50, "b": 50}


def test_temperature_shares_inside_cluster():
    corpora = {"a": lang_corpus("a", 80), "b": lang_corpus("b", 20)}
    got = build_cluster_corpus(assignment({"a", "b"}), corpora, 2.0, 99)
    origin = Counter(s.split(META)[0] for s in got[0].sentences)
    assert origin == {"a": 66, "b": 33}


def test_per_cluster_line_counts():
    corpora = {x: lang_corpus(x, 10) for x in "abc"}
    got = build_cluster_corpus(assignment({"a", "b"}, {"c"}), corpora, 1.0, {0: 8, 1: 3})
    assert got[0].line_count == 8 and got[1].line_count == 3


def test_cluster_corpus_needs_every_member():
    with pytest.raises(AssemblyError):
        build_cluster_corpus(assignment({"a", "zz"}), {"a": lang_corpus("a", 3)}, 1.0, 5)


def disjoint_corpora():
    return {
        0: zipf_corpus("lat", 150, 200, seed=1, alphabet=LATIN),
        1: zipf_corpus("cyr", 150, 200, seed=1, alphabet=CYRILLIC),
    }


def test_cluster_vocab_sizes():
    vocabs = train_cluster_vocabs({0: disjoint_corpora()[0]}, {0: 50})
    assert len(vocabs[0]) == 50


def test_disjoint_scripts_share_only_specials():
    vocabs = train_cluster_vocabs(disjoint_corpora(), {0: 120, 1: 120})
    assert set(vocabs[0]) & set(vocabs[1]) <= {UNK, META}
    merged = merge_vocabs(vocabs)
    assert all(f > 0.95 for f in merged.unique_fractions().values())


def test_capacity_below_protected_set():
    with pytest.raises(AssemblyError):
        train_cluster_vocabs({0: disjoint_corpora()[0]}, {0: 5})


def test_merge_small_union():
    m = merge_vocabs({0: uniform("abc"), 1: uniform("bcd")})
    assert len(m) == 4 and m.overlap_count == 2
    assert m.provenance["b"] == {0, 1} and m.provenance["a"] == {0}


def test_merge_identical_vocabs():
    v = uniform(["x", "y", "z", UNK])
    m = merge_vocabs({i: v for i in range(3)})
    assert len(m) == 4 and m.overlap_count == 4 * 2


def test_merge_keeps_max_then_renormalizes():
    a = UnigramVocab({"s": math.log(0.9), "t": math.log(0.1)})
    b = UnigramVocab({"s": math.log(0.2), "u": math.log(0.8)})
    m = merge_vocabs({0: a, 1: b})
    z = 0.9 + 0.1 + 0.8
    assert m.entries["s"] == pytest.approx(math.log(0.9 / z))
    assert m.entries["u"] == pytest.approx(math.log(0.8 / z))
    assert math.fsum(math.exp(v) for v in m.entries.values()) == pytest.approx(1.0)


@given(st.lists(st.sets(st.text("abcde", min_size=1, max_size=2), min_size=1), min_size=1, max_size=6))
def test_merge_size_identity(sets):
    m = merge_vocabs({i: uniform(sorted(s)) for i, s in enumerate(sets)})
    assert len(m) == sum(len(s) for s in sets) - m.overlap_count
    assert len(m) == len(set().union(*sets))


def test_merged_tokens_are_reachable():
    vocabs = train_cluster_vocabs(disjoint_corpora(), {0: 150, 1: 150})
    merged = merge_vocabs(vocabs)
    uni = merged.to_unigram()
    checked = 0
    for v in vocabs.values():
        for tok in v.ordered_tokens()[1:101]:
            if merged.entries[tok] > best_split_score(tok, merged.entries):
                assert viterbi_tokenize(uni, tok).tokens == (tok,)
                checked += 1
    assert checked > 50


def test_special_tokens_lead():
    m = merge_vocabs({0: uniform(["a", META, UNK]), 1: uniform(["b", UNK])})
    assert m.ordered_tokens()[:2] == [UNK, META]


def test_export_import_round_trip(tmp_path):
    m = merge_vocabs(train_cluster_vocabs(disjoint_corpora(), {0: 80, 1: 80}))
    export_vocab(m, tmp_path / "v.vocab")
    back = import_vocab(tmp_path / "v.vocab")
    assert back == m
    assert back.overlap_count == m.overlap_count


def test_export_is_byte_stable(tmp_path):
    m = merge_vocabs({0: uniform(["a", "b", "c", UNK]), 1: uniform(["c", "d", UNK])})
    digests = []
    for name in ("a.vocab", "b.vocab"):
        export_vocab(m, tmp_path / name)
        data = (tmp_path / name).read_bytes() + (tmp_path / f"{name}.provenance.json").read_bytes()
        digests.append(hashlib.sha256(data).hexdigest())
    assert digests[0] == digests[1]


def test_duplicate_lines_rejected(tmp_path):
    m = merge_vocabs({0: uniform([UNK, "a", "b"])})
    export_vocab(m, tmp_path / "v.vocab")
    p = tmp_path / "v.vocab"
    p.write_text(p.read_text() + "a\t-1.0\n")
    with pytest.raises(VocabError, match="duplicate"):
        import_vocab(p)


def test_export_requires_unk():
    with pytest.raises(AssemblyError):
        export_vocab(merge_vocabs({0: uniform("ab")}), "/nonexistent/x.vocab")
