"""Average log probability, ALP ladders, and vocabulary capacity allocation."""

from __future__ import annotations

import bisect
import json
import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from ._util import largest_remainder
from .clustering import ClusterAssignment
from .corpus import LanguageId, SentenceCorpus
from .ulm import TrainerConfig, UnigramVocab, tokenize_corpus, train_unigram_sizes


class AllocationError(ValueError):
    pass


def compute_alp(corpus: SentenceCorpus, vocab: UnigramVocab) -> float:
    """Mean over sentences of the summed log unigram probability of their tokens.

    The unigram distribution is counted on the tokenized corpus itself.
    """
    if corpus.line_count == 0:
        raise ValueError("ALP of an empty corpus is undefined")
    segs = tokenize_corpus(vocab, corpus.sentences)
    counts: Counter[str] = Counter()
    for seg in segs:
        counts.update(seg)
    total = sum(counts.values())
    logp = {t: math.log(c / total) for t, c in counts.items()}
    return math.fsum(logp[t] * c for t, c in counts.items()) / len(segs)


@dataclass(frozen=True)
class ALPLadder:
    language: LanguageId
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        sizes = [s for s, _ in self.points]
        if not sizes:
            raise AllocationError(f"empty ALP ladder for {self.language!r}")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise AllocationError(f"ladder sizes for {self.language!r} must strictly increase")
        if not all(math.isfinite(a) for _, a in self.points):
            raise AllocationError(f"non-finite ALP in ladder for {self.language!r}")

    @property
    def min_size(self) -> int:
        return self.points[0][0]

    @property
    def max_size(self) -> int:
        return self.points[-1][0]

    def alp_at(self, size: float) -> float:
        """Piecewise-linear ALP; raises outside the sampled range."""
        if not self.min_size <= size <= self.max_size:
            raise AllocationError(
                f"size {size} outside ladder range [{self.min_size}, {self.max_size}] "
                f"for {self.language!r}"
            )
        sizes = [s for s, _ in self.points]
        i = bisect.bisect_left(sizes, size)
        if sizes[i] == size:
            return self.points[i][1]
        (s0, a0), (s1, a1) = self.points[i - 1], self.points[i]
        return a0 + (a1 - a0) * (size - s0) / (s1 - s0)

    def to_dict(self) -> dict:
        return {"language": self.language, "points": [list(p) for p in self.points]}

    @classmethod
    def from_dict(cls, d: Mapping) -> ALPLadder:
        return cls(d["language"], tuple((int(s), float(a)) for s, a in d["points"]))


def build_alp_ladder(
    corpus: SentenceCorpus,
    sizes: Sequence[int],
    config: TrainerConfig | None = None,
) -> ALPLadder:
    """Train a vocabulary at every size and record its ALP on ``corpus``."""
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise AllocationError("ladder sizes must strictly increase")
    try:
        vocabs = train_unigram_sizes(corpus, sizes, config)
    except ValueError as exc:
        raise AllocationError(f"{corpus.language}: ladder training failed: {exc}") from exc
    points = [(int(size), compute_alp(corpus, vocabs[int(size)])) for size in sizes]
    return ALPLadder(corpus.language, tuple(points))


@dataclass
class CapacityAllocation:
    budgets: dict[LanguageId, int]
    total: int

    def __post_init__(self):
        if any(b <= 0 for b in self.budgets.values()):
            raise AllocationError("budgets must be positive")
        if sum(self.budgets.values()) != self.total:
            raise AllocationError(f"budgets sum to {sum(self.budgets.values())}, not {self.total}")

    def to_tsv(self) -> str:
        return "".join(f"{lang}\t{self.budgets[lang]}\n" for lang in sorted(self.budgets))

    def save(self, tsv_path: str | Path, json_path: str | Path, **meta) -> None:
        Path(tsv_path).write_text(self.to_tsv(), encoding="utf-8")
        Path(json_path).write_text(
            json.dumps({"total": self.total, **meta}, indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, tsv_path: str | Path) -> CapacityAllocation:
        budgets = {}
        for line in Path(tsv_path).read_text(encoding="utf-8").splitlines():
            lang, b = line.split("\t")
            budgets[lang] = int(b)
        return cls(budgets, sum(budgets.values()))


def greedy_allocate(
    ladders: Sequence[ALPLadder],
    total: int,
    chunk: int = 1000,
    min_floor: int = 2000,
) -> CapacityAllocation:
    """Start every language at ``min_floor``, then hand out ``chunk`` tokens at a time.

    Each chunk goes to the language whose ALP rises most; equal gains go to
    the language with the smaller budget, then the smaller id. A final
    partial chunk covers any remainder.
    """
    if chunk <= 0 or min_floor <= 0:
        raise AllocationError("chunk and min_floor must be positive")
    by_lang = {lad.language: lad for lad in ladders}
    if len(by_lang) != len(ladders) or not ladders:
        raise AllocationError("need one ladder per language")
    if total < min_floor * len(by_lang):
        raise AllocationError(
            f"total {total} cannot give {len(by_lang)} languages a floor of {min_floor}"
        )
    for lad in ladders:
        if lad.min_size > min_floor:
            raise AllocationError(
                f"ladder for {lad.language!r} starts at {lad.min_size}, above the floor {min_floor}"
            )
    budgets = dict.fromkeys(by_lang, min_floor)
    remaining = total - min_floor * len(by_lang)
    while remaining > 0:
        step = min(chunk, remaining)
        best = None
        for lang in sorted(budgets):
            lad, b = by_lang[lang], budgets[lang]
            if b + step > lad.max_size:
                continue
            gain = lad.alp_at(b + step) - lad.alp_at(b)
            key = (-gain, b, lang)
            if best is None or key < best:
                best = key
        if best is None:
            raise AllocationError(
                f"{remaining} tokens left but every ladder is exhausted; extend ladder sizes"
            )
        budgets[best[2]] += step
        remaining -= step
    return CapacityAllocation(budgets, total)


def rescale(allocation: CapacityAllocation, new_total: int, min_floor: int = 2000) -> CapacityAllocation:
    """Scale budgets to ``new_total``, then lift languages to the floor.

    The floor deficit is taken from languages above the floor in proportion
    to their excess.
    """
    n = len(allocation.budgets)
    if new_total < min_floor * n:
        raise AllocationError(f"new total {new_total} cannot give {n} languages a floor of {min_floor}")
    scaled = largest_remainder(allocation.budgets, new_total)
    deficit = sum(max(min_floor - b, 0) for b in scaled.values())
    if deficit:
        excess = {k: b - min_floor for k, b in scaled.items() if b > min_floor}
        take = largest_remainder(excess, deficit)
        scaled = {k: max(b, min_floor) - take.get(k, 0) for k, b in scaled.items()}
    return CapacityAllocation(scaled, new_total)


def cluster_capacity(allocation: CapacityAllocation, clusters: ClusterAssignment) -> dict[int, int]:
    """Sum member budgets per cluster id."""
    caps = dict.fromkeys(range(clusters.k), 0)
    seen: set[str] = set()
    for cid, members in enumerate(clusters.clusters):
        for lang in members:
            if lang not in allocation.budgets:
                raise AllocationError(f"cluster member {lang!r} has no budget")
            caps[cid] += allocation.budgets[lang]
            seen.add(lang)
    missing = set(allocation.budgets) - seen
    if missing:
        raise AllocationError(f"languages missing from clusters: {sorted(missing)}")
    return caps


def save_ladders(ladders: Sequence[ALPLadder], path: str | Path) -> None:
    Path(path).write_text(json.dumps([lad.to_dict() for lad in ladders], indent=1) + "\n", encoding="utf-8")


def load_ladders(path: str | Path) -> list[ALPLadder]:
    return [ALPLadder.from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]
