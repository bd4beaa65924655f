import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import alp_by_hand, best_allocation
from polyvocab.capacity import (
    ALPLadder,
    AllocationError,
    CapacityAllocation,
    build_alp_ladder,
    cluster_capacity,
    compute_alp,
    greedy_allocate,
    load_ladders,
    rescale,
    save_ladders,
)
from polyvocab.clustering import ClusterAssignment
from polyvocab.corpus import SentenceCorpus
from polyvocab.ulm import UNK, UnigramVocab

CHARS = UnigramVocab({UNK: -5.0, "a": -0.7, "b": -1.0, "ab": -4.0})


def assignment(*groups):
    return ClusterAssignment([frozenset(g) for g in groups], np.zeros((len(groups), 1)), 0.0)


# --- ALP ---------------------------------------------------------------------


def test_alp_two_sentence_fixture():
    alp = compute_alp(SentenceCorpus("x", ("ab", "a")), CHARS)
    want = 0.5 * ((math.log(2 / 3) + math.log(1 / 3)) + math.log(2 / 3))
    assert alp == pytest.approx(want, abs=1e-12)
    assert alp == pytest.approx(-0.9548, abs=1e-4)
    assert alp == pytest.approx(alp_by_hand([["a", "b"], ["a"]]))


def test_alp_single_token_distribution_is_zero():
    assert compute_alp(SentenceCorpus("x", ("a", "a", "a")), CHARS) == 0.0


@settings(max_examples=30)
@given(st.lists(st.text("ab", min_size=1, max_size=6), min_size=1, max_size=8), st.randoms())
def test_alp_order_and_duplication_invariant(sents, rnd):
    base = compute_alp(SentenceCorpus("x", tuple(sents)), CHARS)
    shuffled = list(sents)
    rnd.shuffle(shuffled)
    assert compute_alp(SentenceCorpus("x", tuple(shuffled)), CHARS) == pytest.approx(base)
    assert compute_alp(SentenceCorpus("x", tuple(sents * 2)), CHARS) == pytest.approx(base)


def test_alp_rejects_empty_corpus():
    with pytest.raises(ValueError):
        compute_alp(SentenceCorpus("x", ()), CHARS)


# --- ladders -----------------------------------------------------------------


def test_single_size_ladder():
    lad = build_alp_ladder(SentenceCorpus("x", ("ab ab", "ba ab")), [8])
    assert len(lad.points) == 1 and lad.points[0][0] == 8


def test_one_character_corpus_saturates():
    lad = build_alp_ladder(SentenceCorpus("x", ("a",) * 20), [2, 3, 4])
    alps = {a for _, a in lad.points}
    assert alps == {0.0}


def test_word_level_vocab_beats_character_level():
    words = [f"w{chr(97 + i % 26)}{chr(97 + i // 26)}q" for i in range(50)]
    corpus = SentenceCorpus("x", tuple(" ".join(words[(i * 7) % 50 : (i * 7) % 50 + 5]) for i in range(200)))
    lad = build_alp_ladder(corpus, [31, 200])
    (_, char_alp), (_, word_alp) = lad.points
    assert word_alp >= char_alp


def test_ladder_interpolation_and_range():
    lad = ALPLadder("x", ((10, -5.0), (20, -3.0)))
    assert lad.alp_at(15) == pytest.approx(-4.0)
    with pytest.raises(AllocationError):
        lad.alp_at(25)


def test_ladders_round_trip(tmp_path):
    lads = [ALPLadder("x", ((1, -2.0), (3, -1.5))), ALPLadder("y", ((1, -4.0),))]
    save_ladders(lads, tmp_path / "l.json")
    assert load_ladders(tmp_path / "l.json") == lads


# --- greedy allocation --------------------------------------------------------


def ladder_from_gains(lang, gains, floor=1, chunk=1):
    pts, alp = [(floor, -10.0)], -10.0
    for i, g in enumerate(gains, 1):
        alp += g
        pts.append((floor + i * chunk, alp))
    return ALPLadder(lang, tuple(pts))


def test_greedy_two_language_example():
    lads = [ladder_from_gains("A", [2.0, 0.5]), ladder_from_gains("B", [1.0, 0.9])]
    alloc = greedy_allocate(lads, total=2 + 3, chunk=1, min_floor=1)
    assert alloc.budgets == {"A": 2, "B": 3}
    got = sum(lad.alp_at(alloc.budgets[lad.language]) for lad in lads)
    assert got == pytest.approx(-20 + best_allocation({"A": [0, 2, 2.5], "B": [0, 1, 1.9]}, 3))


def test_identical_ladders_split_evenly():
    lads = [ALPLadder(l, ((100, -9.0), (500, -5.0), (900, -4.0))) for l in "xyz"]
    alloc = greedy_allocate(lads, total=1500, chunk=10, min_floor=100)
    assert set(alloc.budgets.values()) == {500}


def test_total_at_floor_gives_floor_to_all():
    lads = [ladder_from_gains(l, [1.0, 1.0], floor=5) for l in "ab"]
    assert greedy_allocate(lads, 10, 1, 5).budgets == {"a": 5, "b": 5}


def test_greedy_refuses_to_extrapolate():
    lads = [ladder_from_gains("a", [1.0]), ladder_from_gains("b", [1.0])]
    with pytest.raises(AllocationError, match="exhausted"):
        greedy_allocate(lads, 2 + 3, 1, 1)


def test_greedy_rejects_ladder_above_floor():
    with pytest.raises(AllocationError):
        greedy_allocate([ALPLadder("a", ((50, -1.0), (60, -0.5)))], 55, 1, 10)


def test_partial_final_chunk():
    lads = [ladder_from_gains(l, [3.0, 2.0, 1.0], floor=10, chunk=10) for l in "ab"]
    alloc = greedy_allocate(lads, 20 + 25, chunk=10, min_floor=10)
    assert alloc.total == 45 and sum(alloc.budgets.values()) == 45


@st.composite
def concave_instance(draw):
    n_lang = draw(st.integers(1, 4))
    n_chunks = draw(st.integers(1, 6))
    gains = {}
    for i in range(n_lang):
        g = sorted(draw(st.lists(st.integers(0, 100), min_size=n_chunks, max_size=n_chunks)), reverse=True)
        gains[f"L{i}"] = [x / 10 for x in g]
    grant = draw(st.integers(0, n_lang * n_chunks))
    return gains, grant


@settings(max_examples=300)
@given(concave_instance())
def test_greedy_optimal_on_concave_ladders(case):
    gains, grant = case
    floor, chunk = 2000, 1000
    lads = [ladder_from_gains(l, g, floor, chunk) for l, g in gains.items()]
    alloc = greedy_allocate(lads, floor * len(lads) + grant * chunk, chunk, floor)
    got = sum(lad.alp_at(alloc.budgets[lad.language]) + 10 for lad in lads)
    tables = {l: [sum(g[:i]) for i in range(len(g) + 1)] for l, g in gains.items()}
    assert got == pytest.approx(best_allocation(tables, grant), abs=1e-9)


@settings(max_examples=200)
@given(concave_instance(), st.integers(0, 999))
def test_greedy_conserves_budget(case, extra):
    gains, grant = case
    lads = [ladder_from_gains(l, g, 2000, 1000) for l, g in gains.items()]
    total = 2000 * len(lads) + min(grant * 1000 + extra, sum(len(g) for g in gains.values()) * 1000)
    alloc = greedy_allocate(lads, total, 1000, 2000)
    assert sum(alloc.budgets.values()) == total
    assert min(alloc.budgets.values()) >= 2000


# --- rescale -----------------------------------------------------------------


def alloc(**b):
    return CapacityAllocation(b, sum(b.values()))


def test_rescale_proportional():
    assert rescale(alloc(en=100, zh=300), 800, min_floor=1).budgets == {"en": 200, "zh": 600}


def test_rescale_clamps_to_floor():
    assert rescale(alloc(A=2000, B=6000), 4000, 2000).budgets == {"A": 2000, "B": 2000}


def test_rescale_same_total_is_identity():
    a = alloc(x=2500, y=7000, z=2000)
    assert rescale(a, a.total, 2000) == a


budgets_st = st.dictionaries(st.sampled_from("abcdefgh"), st.integers(1, 100_000), min_size=1)


@settings(max_examples=300)
@given(budgets_st, st.integers(1, 500), st.integers(0, 1_000_000))
def test_rescale_contract(budgets, floor, extra):
    a = CapacityAllocation(budgets, sum(budgets.values()))
    new_total = floor * len(budgets) + extra
    r = rescale(a, new_total, floor)
    assert sum(r.budgets.values()) == new_total
    assert min(r.budgets.values()) >= floor
    assert rescale(r, new_total, floor) == r


@settings(max_examples=100)
@given(budgets_st, st.integers(1, 500), st.integers(0, 100_000))
def test_rescale_commutes_with_relabeling(budgets, floor, extra):
    # relabeling that preserves id order keeps tie-breaks identical
    rename = {k: f"z{k}" for k in budgets}
    a = CapacityAllocation(budgets, sum(budgets.values()))
    b = CapacityAllocation({rename[k]: v for k, v in budgets.items()}, a.total)
    total = floor * len(budgets) + extra
    ra, rb = rescale(a, total, floor), rescale(b, total, floor)
    assert {rename[k]: v for k, v in ra.budgets.items()} == rb.budgets


def test_rescale_below_floor_total_fails():
    with pytest.raises(AllocationError):
        rescale(alloc(a=5, b=5), 3, 2)


# --- cluster capacity ---------------------------------------------------------


def test_cluster_capacity_sums_members():
    a = alloc(ja=40000, **{"zh-TW": 30000, "zh-CN": 32722})
    assert cluster_capacity(a, assignment({"ja", "zh-TW", "zh-CN"})) == {0: 102_722}


def test_singleton_clusters_equal_budgets():
    a = alloc(x=3, y=7)
    assert cluster_capacity(a, assignment({"x"}, {"y"})) == {0: 3, 1: 7}


def test_two_cluster_summation():
    assert cluster_capacity(alloc(A=3, B=5, C=2), assignment({"A", "B"}, {"C"})) == {0: 8, 1: 2}


def test_cluster_capacity_requires_full_coverage():
    with pytest.raises(AllocationError):
        cluster_capacity(alloc(A=3, B=5), assignment({"A"}))


def test_allocation_round_trip(tmp_path):
    a = alloc(b=7, a=3)
    a.save(tmp_path / "a.tsv", tmp_path / "a.json", chunk=1)
    assert (tmp_path / "a.tsv").read_text() == "a\t3\nb\t7\n"
    assert CapacityAllocation.load(tmp_path / "a.tsv") == a
