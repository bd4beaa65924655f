"""Tokenization diagnostics: fertility, length deltas, coverage, cluster overlap."""

from __future__ import annotations

import csv
import io
import itertools
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass

from .assembly import MultilingualVocab
from .corpus import LanguageId, SentenceCorpus
from .ulm import UnigramVocab, tokenize_corpus


def _as_unigram(vocab: UnigramVocab | MultilingualVocab) -> UnigramVocab:
    return vocab.to_unigram() if isinstance(vocab, MultilingualVocab) else vocab


@dataclass(frozen=True)
class TokenizationStats:
    language: LanguageId
    total_tokens: int
    total_sentences: int

    @property
    def avg_tokens_per_sentence(self) -> float:
        return self.total_tokens / self.total_sentences if self.total_sentences else 0.0


@dataclass(frozen=True)
class CoverageCurve:
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        ranks = [r for r, _ in self.points]
        fracs = [f for _, f in self.points]
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise ValueError("ranks must strictly increase")
        if any(b < a for a, b in zip(fracs, fracs[1:])):
            raise ValueError("cumulative fractions must not decrease")


def fertility(vocab: UnigramVocab | MultilingualVocab, corpus: SentenceCorpus) -> TokenizationStats:
    segs = tokenize_corpus(_as_unigram(vocab), corpus.sentences)
    return TokenizationStats(corpus.language, sum(map(len, segs)), len(segs))


def relative_length_diff(
    vocab_a: UnigramVocab | MultilingualVocab,
    vocab_b: UnigramVocab | MultilingualVocab,
    corpus: SentenceCorpus,
) -> float:
    """Percent change in average sequence length going from ``vocab_a`` to ``vocab_b``."""
    avg_a = fertility(vocab_a, corpus).avg_tokens_per_sentence
    avg_b = fertility(vocab_b, corpus).avg_tokens_per_sentence
    return relative_diff(avg_a, avg_b)


def relative_diff(avg_a: float, avg_b: float) -> float:
    if avg_a == 0:
        raise ZeroDivisionError("baseline average length is zero")
    return 100.0 * (avg_b - avg_a) / avg_a


def coverage_from_counts(counts: Mapping[str, int]) -> CoverageCurve:
    occ = sorted(counts.values(), reverse=True)
    total = sum(occ)
    if total == 0:
        raise ValueError("no token occurrences")
    cum = itertools.accumulate(occ)
    return CoverageCurve(tuple((r, c / total) for r, c in enumerate(cum, 1)))


def coverage_curve(vocab: UnigramVocab | MultilingualVocab, corpus: SentenceCorpus) -> CoverageCurve:
    """Cumulative share of token occurrences covered by the top-n token types."""
    if corpus.line_count == 0:
        raise ValueError("coverage of an empty corpus is undefined")
    counts: Counter[str] = Counter()
    for seg in tokenize_corpus(_as_unigram(vocab), corpus.sentences):
        counts.update(seg)
    return coverage_from_counts(counts)


def utilization_at(curve: CoverageCurve, p: float) -> int:
    """Smallest rank whose cumulative fraction reaches ``p``."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    for rank, frac in curve.points:
        # final fraction may land a hair under 1.0
        if frac >= p or rank == curve.points[-1][0]:
            return rank
    raise ValueError("empty curve")


@dataclass(frozen=True)
class OverlapReport:
    unique_fraction: dict[str, float]
    intersections: dict[tuple[str, str], int]


def overlap_report(cluster_vocabs: Mapping) -> OverlapReport:
    """Per-cluster fraction of tokens found in no other cluster, and pairwise intersections."""
    if len(cluster_vocabs) < 2:
        raise ValueError("need at least two vocabularies")
    sets = {str(k): set(v.entries if hasattr(v, "entries") else v) for k, v in cluster_vocabs.items()}
    names = sorted(sets)
    unique = {}
    for n in names:
        others = set().union(*(sets[m] for m in names if m != n))
        unique[n] = len(sets[n] - others) / len(sets[n]) if sets[n] else 0.0
    inter = {}
    for a, b in itertools.combinations(names, 2):
        inter[(a, b)] = inter[(b, a)] = len(sets[a] & sets[b])
    return OverlapReport(unique, inter)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def fertility_csv(stats: list[TokenizationStats]) -> str:
    rows = [
        (s.language, f"{s.avg_tokens_per_sentence:.6f}", s.total_tokens, s.total_sentences)
        for s in sorted(stats, key=lambda s: s.language)
    ]
    return _csv(rows, ("language", "avg_tokens_per_sentence", "total_tokens", "total_sentences"))


def coverage_csv(curve: CoverageCurve) -> str:
    return _csv(((r, f"{f:.9f}") for r, f in curve.points), ("rank", "cumulative_fraction"))


def overlap_csv(report: OverlapReport) -> str:
    names = sorted(report.unique_fraction)
    rows = [(a, b, report.intersections[(a, b)]) for a, b in itertools.combinations(names, 2)]
    return _csv(rows, ("cluster_a", "cluster_b", "intersection"))
