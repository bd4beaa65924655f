"""Corpus ingestion: normalization, temperature sampling, frequency counting."""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ._util import derive_rng, largest_remainder

if TYPE_CHECKING:
    from .ulm import UnigramVocab

#: Word-boundary meta-symbol that replaces spaces.
META = "▁"

LanguageId = str


class CorpusError(ValueError):
    """Raised for unreadable or malformed corpus input."""


def normalize_text(text: str) -> str:
    """NFKC-compose, collapse whitespace runs, and mark word boundaries.

    The function is idempotent.
    """
    text = unicodedata.normalize("NFKC", text)
    return " ".join(text.split()).replace(" ", META)


@dataclass(frozen=True)
class SentenceCorpus:
    """Normalized sentences of one language.

    Sentences are normalized on construction and empty ones are dropped, so a
    corpus is always canonical.
    """

    language: LanguageId
    sentences: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.language:
            raise ValueError("language id must be non-empty")
        normed = tuple(s for s in map(normalize_text, self.sentences) if s)
        object.__setattr__(self, "sentences", normed)

    @property
    def line_count(self) -> int:
        return len(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


@dataclass
class FrequencyTable:
    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("frequency table counts must be >= 1")
        if self.total != sum(self.counts.values()):
            raise ValueError("total must equal the sum of counts")

    def probability(self, token: str) -> float:
        return self.counts.get(token, 0) / self.total if self.total else 0.0

    def sorted_items(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_tsv(self) -> str:
        return "".join(f"{tok}\t{cnt}\n" for tok, cnt in self.sorted_items())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> FrequencyTable:
        counts: dict[str, int] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            try:
                tok, cnt = line.split("\t")
                counts[tok] = int(cnt)
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed frequency line") from exc
        return cls(counts, sum(counts.values()))


def load_corpus(path: str | Path, language: LanguageId) -> SentenceCorpus:
    """Read a UTF-8 file with one sentence per line."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from exc
    return SentenceCorpus(language, tuple(text.split("\n")))


def save_corpus(corpus: SentenceCorpus, path: str | Path) -> None:
    Path(path).write_text("".join(s + "\n" for s in corpus.sentences), encoding="utf-8")


def temperature_sample(
    line_counts: Mapping[LanguageId, int],
    t: float,
    total_lines: int,
    seed: int = 0,
) -> dict[LanguageId, int]:
    """Per-language line quotas proportional to ``p_i ** (1/t)``.

    ``p_i`` is each language's share of lines. Rounding uses largest
    remainders with ties broken by language id, so ``seed`` does not change
    the result; it is accepted for interface symmetry with ``draw_sample``.
    """
    if not line_counts:
        raise ValueError("need at least one language")
    if t <= 0:
        raise ValueError("temperature must be positive")
    if total_lines <= 0:
        raise ValueError("total_lines must be positive")
    if any(c <= 0 for c in line_counts.values()):
        raise ValueError("line counts must be positive")
    mass = math.fsum(line_counts.values())
    # log-space keeps huge t from underflowing to an all-zero weight vector
    logs = {k: math.log(c / mass) / t for k, c in line_counts.items()}
    top = max(logs.values())
    weights = {k: math.exp(v - top) for k, v in logs.items()}
    return largest_remainder(weights, total_lines)


def draw_sample(corpus: SentenceCorpus, quota: int, seed: int = 0) -> SentenceCorpus:
    """Draw ``quota`` lines; repeats full passes when up-sampling."""
    if quota < 0:
        raise ValueError("quota must be nonnegative")
    n = corpus.line_count
    if quota == 0:
        return SentenceCorpus(corpus.language, ())
    if n == 0:
        raise ValueError(f"cannot draw {quota} lines from empty corpus {corpus.language!r}")
    rng = derive_rng(seed, corpus.language)
    passes, rest = divmod(quota, n)
    idx = np.concatenate([np.tile(np.arange(n), passes), rng.choice(n, size=rest, replace=False)])
    idx = rng.permutation(idx)
    return SentenceCorpus(corpus.language, tuple(corpus.sentences[i] for i in idx))


def count_token_frequencies(corpus: SentenceCorpus, vocab: UnigramVocab) -> FrequencyTable:
    """Viterbi-tokenize the corpus and count token occurrences."""
    from .ulm import tokenize_corpus

    counts: Counter[str] = Counter()
    for seg in tokenize_corpus(vocab, corpus.sentences):
        counts.update(seg)
    return FrequencyTable(dict(counts), sum(counts.values()))
