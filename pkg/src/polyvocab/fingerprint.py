"""Shared lexicon and per-language lexical fingerprints."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .corpus import FrequencyTable, LanguageId
from .ulm import UnigramVocab

Mode = Literal["binary", "neglogprob"]
FINGERPRINT_HEADER = "#fingerprints v1"


class FingerprintError(ValueError):
    pass


@dataclass(frozen=True)
class SharedLexicon:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if list(self.tokens) != sorted(set(self.tokens)):
            raise FingerprintError("lexicon tokens must be sorted and unique")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class LexicalFingerprint:
    language: LanguageId
    values: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def build_shared_lexicon(vocabs: Iterable[UnigramVocab]) -> SharedLexicon:
    """Sorted union of all vocabulary tokens."""
    vocabs = list(vocabs)
    if not vocabs:
        raise FingerprintError("need at least one vocabulary")
    union: set[str] = set()
    for v in vocabs:
        union.update(v.entries)
    return SharedLexicon(tuple(sorted(union)))


def build_fingerprint(
    language: LanguageId,
    vocab: UnigramVocab,
    freq: FrequencyTable,
    lexicon: SharedLexicon,
    mode: Mode = "neglogprob",
) -> LexicalFingerprint:
    """Vector over the lexicon: membership (binary) or ``-log p`` of each vocab token.

    In ``neglogprob`` mode a vocab token that never occurs in ``freq`` is
    smoothed to a count of 0.5 so that it stays distinguishable from absent
    tokens.
    """
    if mode not in ("binary", "neglogprob"):
        raise FingerprintError(f"unknown fingerprint mode {mode!r}")
    values = np.zeros(len(lexicon), dtype=np.float64)
    total = max(freq.total, 1)
    for tok in vocab.entries:
        i = lexicon.index.get(tok)
        if i is None:
            raise FingerprintError(f"token {tok!r} of {language!r} is missing from the lexicon")
        if mode == "binary":
            values[i] = 1.0
        else:
            count = freq.counts.get(tok, 0) or 0.5
            values[i] = -math.log(count / total)
            # a token with p == 1 would encode as 0 == absent
            if values[i] == 0.0:
                values[i] = np.nextafter(0.0, 1.0)
    return LexicalFingerprint(language, values)


def fingerprint_matrix(fps: Sequence[LexicalFingerprint]) -> np.ndarray:
    dims = {fp.dim for fp in fps}
    if len(dims) > 1:
        raise FingerprintError(f"fingerprints have mixed dimensions {sorted(dims)}")
    return np.vstack([fp.values for fp in fps])


def save_fingerprints(fps: Sequence[LexicalFingerprint], path: str | Path, mode: Mode) -> None:
    dim = fingerprint_matrix(fps).shape[1]
    lines = [f"{FINGERPRINT_HEADER} dim={dim} mode={mode}"]
    for fp in fps:
        nz = np.flatnonzero(fp.values)
        lines.append(fp.language + "\t" + ",".join(f"{i}:{float(fp.values[i])!r}" for i in nz))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_fingerprints(path: str | Path) -> tuple[list[LexicalFingerprint], str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 4 or " ".join(head[:2]) != FINGERPRINT_HEADER:
        raise FingerprintError(f"{path}:1: bad fingerprint header")
    dim = int(head[2].removeprefix("dim="))
    mode = head[3].removeprefix("mode=")
    fps = []
    for lineno, line in enumerate(lines[1:], 2):
        lang, _, body = line.partition("\t")
        values = np.zeros(dim)
        for pair in filter(None, body.split(",")):
            try:
                i, v = pair.split(":")
                values[int(i)] = float(v)
            except (ValueError, IndexError) as exc:
                raise FingerprintError(f"{path}:{lineno}: bad pair {pair!r}") from exc
        fps.append(LexicalFingerprint(lang, values))
    return fps, mode
