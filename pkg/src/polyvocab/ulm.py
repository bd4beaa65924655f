"""Unigram language model: seed vocabulary, EM, likelihood pruning, Viterbi decoding."""

from __future__ import annotations

import copy
import logging
import math
import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from types import MappingProxyType

import numpy as np

from . import _kernels
from .corpus import META, SentenceCorpus

log = logging.getLogger(__name__)

UNK = "<unk>"
VOCAB_HEADER = "#ulm-vocab v1"

# Score for uncovered characters when the vocab has no UNK entry.
UNK_PENALTY = 10.0
# Pseudo-count added to every token in the M-step; keeps zero-count tokens finite.
EM_PSEUDO_COUNT = 1e-12

_NEG_INF = float("-inf")
_BOUNDARY = re.compile(f"(?={META})")


class VocabError(ValueError):
    """Raised for invalid vocabularies or malformed vocab files."""


def _fmt(x: float) -> str:
    return format(x, ".17g")


class UnigramVocab:
    """Token -> log-probability table.

    Instances are treated as immutable. Single-codepoint tokens (other than
    the UNK token) form the required character set.
    """

    def __init__(self, entries: Mapping[str, float], unk_token: str = UNK):
        table: dict[str, float] = {}
        for tok, lp in entries.items():
            if not tok:
                raise VocabError("empty token")
            lp = float(lp)
            if not math.isfinite(lp):
                raise VocabError(f"non-finite log prob for {tok!r}")
            if lp > 1e-9:
                raise VocabError(f"positive log prob {lp} for {tok!r}")
            table[tok] = min(lp, 0.0)
        self.entries = MappingProxyType(table)
        self.unk_token = unk_token
        self.max_len = max((len(t) for t in table), default=1)
        if unk_token in table:
            self.unk_score = table[unk_token]
        else:
            self.unk_score = min(table.values(), default=0.0) - UNK_PENALTY

    @cached_property
    def _prefixes(self) -> frozenset[str]:
        return frozenset(t[:i] for t in self.entries for i in range(1, len(t) + 1))

    @cached_property
    def splittable(self) -> bool:
        """True when no token can span a word boundary."""
        return not any(META in t[1:] for t in self.entries if t != self.unk_token)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: object) -> bool:
        return token in self.entries

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnigramVocab):
            return NotImplemented
        return self.unk_token == other.unk_token and dict(self.entries) == dict(other.entries)

    def __repr__(self) -> str:
        return f"UnigramVocab(size={len(self)}, unk={self.unk_token!r})"

    def __reduce__(self):
        # the read-only mapping proxy cannot be pickled; rebuild from a plain dict
        return (type(self), (dict(self.entries), self.unk_token))

    def log_prob(self, token: str) -> float:
        return self.entries[token]

    @property
    def required_chars(self) -> frozenset[str]:
        return frozenset(t for t in self.entries if len(t) == 1 and t != self.unk_token)

    @property
    def protected(self) -> frozenset[str]:
        prot = set(self.required_chars)
        if self.unk_token in self.entries:
            prot.add(self.unk_token)
        return frozenset(prot)

    def validate(self, tol: float = 1e-6) -> None:
        """Check the distribution invariants of a finished vocabulary."""
        if self.unk_token not in self.entries:
            raise VocabError(f"UNK token {self.unk_token!r} missing")
        mass = math.fsum(math.exp(v) for v in self.entries.values())
        if abs(mass - 1.0) > tol:
            raise VocabError(f"probabilities sum to {mass}, not 1")

    def ordered_tokens(self) -> list[str]:
        """UNK first, then by descending log prob, then token."""
        rest = sorted(
            (t for t in self.entries if t != self.unk_token),
            key=lambda t: (-self.entries[t], t),
        )
        return ([self.unk_token] if self.unk_token in self.entries else []) + rest

    def to_tsv(self) -> str:
        lines = [VOCAB_HEADER]
        lines += [f"{t}\t{_fmt(self.entries[t])}" for t in self.ordered_tokens()]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def from_tsv(cls, text: str, source: str = "<string>") -> UnigramVocab:
        entries, unk = parse_vocab_tsv(text, source)
        return cls(entries, unk_token=unk)

    @classmethod
    def load(cls, path: str | Path) -> UnigramVocab:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise VocabError(f"cannot read vocab {path}: {exc}") from exc
        return cls.from_tsv(text, str(path))


def parse_vocab_tsv(text: str, source: str = "<string>") -> tuple[dict[str, float], str]:
    """Parse the vocab TSV format; the first entry is the UNK token."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != VOCAB_HEADER:
        raise VocabError(f"{source}:1: missing header {VOCAB_HEADER!r}")
    entries: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            raise VocabError(f"{source}:{lineno}: expected 'token<TAB>log_prob'")
        tok, raw = parts
        if tok in entries:
            raise VocabError(f"{source}:{lineno}: duplicate token {tok!r}")
        try:
            entries[tok] = float(raw)
        except ValueError as exc:
            raise VocabError(f"{source}:{lineno}: bad log prob {raw!r}") from exc
    if not entries:
        raise VocabError(f"{source}: no entries")
    return entries, next(iter(entries))


@dataclass(frozen=True)
class Segmentation:
    tokens: tuple[str, ...]
    score: float
    surfaces: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self) -> str:
        """The input string, with UNK spans substituted back."""
        return "".join(self.surfaces)


def _edges(vocab: UnigramVocab, text: str) -> list[list[tuple[int, str]]]:
    """Outgoing lattice edges ``(end, token)`` for every start position."""
    entries, prefixes = vocab.entries, vocab._prefixes
    n = len(text)
    out: list[list[tuple[int, str]]] = []
    for i in range(n):
        here: list[tuple[int, str]] = []
        if text[i] not in entries:
            here.append((i + 1, vocab.unk_token))
        for j in range(i + 1, min(n, i + vocab.max_len) + 1):
            sub = text[i:j]
            if sub not in prefixes:
                break
            if sub in entries:
                here.append((j, sub))
        out.append(here)
    return out


def _score(vocab: UnigramVocab, token: str, length: int) -> float:
    if length == 1 and token == vocab.unk_token:
        return vocab.unk_score
    return vocab.entries[token]


def _viterbi(vocab: UnigramVocab, text: str, exclude_whole: bool = False):
    """Backward DP: best suffix parse per position.

    Ties: higher score, then fewer tokens, then longer token at the leftmost
    position (i.e. leftmost-longest).
    """
    n = len(text)
    edges = _edges(vocab, text)
    best = [0.0] * (n + 1)
    count = [0] * (n + 1)
    nxt: list[tuple[int, str] | None] = [None] * (n + 1)
    for i in range(n - 1, -1, -1):
        b_s, b_c, b_e = _NEG_INF, 0, None
        for j, tok in edges[i]:
            if exclude_whole and i == 0 and j == n:
                continue
            s = _score(vocab, tok, j - i) + best[j]
            c = count[j] + 1
            if b_e is None or s > b_s or (s == b_s and (c < b_c or (c == b_c and j > b_e[0]))):
                b_s, b_c, b_e = s, c, (j, tok)
        best[i], count[i], nxt[i] = b_s, b_c, b_e
    tokens, surfaces = [], []
    i = 0
    while i < n:
        j, tok = nxt[i]
        tokens.append(tok)
        surfaces.append(text[i:j])
        i = j
    return tokens, surfaces, best[0]


def viterbi_tokenize(vocab: UnigramVocab, text: str) -> Segmentation:
    """Most probable segmentation of ``text`` under ``vocab``.

    Characters with no covering token become the UNK token.
    """
    tokens, surfaces, score = _viterbi(vocab, text)
    return Segmentation(tuple(tokens), score, tuple(surfaces))


def sentence_log_prob(vocab: UnigramVocab, sentence: str) -> float:
    return _viterbi(vocab, sentence)[2]


def split_units(sentence: str) -> list[str]:
    """Split a normalized sentence at word boundaries (before each META)."""
    return [u for u in _BOUNDARY.split(sentence) if u]


def _units(vocab: UnigramVocab, sentences: Iterable[str]) -> Counter[str]:
    units: Counter[str] = Counter()
    if vocab.splittable:
        for s in sentences:
            units.update(split_units(s))
    else:
        units.update(sentences)
    return units


def tokenize_corpus(vocab: UnigramVocab, sentences: Iterable[str]) -> list[list[str]]:
    """Viterbi-tokenize many sentences, caching repeated words."""
    cache: dict[str, list[str]] = {}

    def tok(unit: str) -> list[str]:
        hit = cache.get(unit)
        if hit is None:
            hit = cache[unit] = _viterbi(vocab, unit)[0]
        return hit

    out = []
    for s in sentences:
        if vocab.splittable:
            toks: list[str] = []
            for u in split_units(s):
                toks.extend(tok(u))
            out.append(toks)
        else:
            out.append(list(tok(s)))
    return out


class _Lattices:
    """Flat lattice arrays for training units and, optionally, for every token's own string.

    Token ids index the vocabulary the lattices were built from; ``restrict``
    drops edges of tokens that have since been pruned.
    """

    def __init__(self, vocab: UnigramVocab, units: Counter[str], with_tokens: bool = False):
        self.tokens = list(vocab.entries)
        self.ids = {t: i for i, t in enumerate(self.tokens)}
        self.unk_token = vocab.unk_token
        self.weights = np.array(list(units.values()), dtype=np.float64)
        self.units = self._flatten(vocab, list(units))
        self.owners = np.zeros(0, dtype=np.int64)
        self.owned = self._flatten(vocab, [])
        if with_tokens:
            protected = vocab.protected
            own = [t for t in self.tokens if t not in protected]
            self.owners = np.array([self.ids[t] for t in own], dtype=np.int64)
            self.owned = self._flatten(vocab, own)

    def _flatten(self, vocab: UnigramVocab, strings: list[str]) -> dict[str, np.ndarray]:
        entries, prefixes, ids = vocab.entries, vocab._prefixes, self.ids
        unk_id = ids.get(vocab.unk_token, -1)
        max_len = vocab.max_len
        rows: list[int] = []
        add = rows.extend
        for k, s in enumerate(strings):
            n = len(s)
            for i in range(n):
                if s[i] not in entries:
                    add((i, i + 1, unk_id, k))
                for j in range(i + 1, min(n, i + max_len) + 1):
                    sub = s[i:j]
                    if sub not in prefixes:
                        break
                    tid = ids.get(sub)
                    if tid is not None:
                        add((i, j, tid, k))
        arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
        flat = {
            "starts": arr[:, 0].copy(),
            "ends": arr[:, 1].copy(),
            "toks": arr[:, 2].copy(),
            "owner": arr[:, 3].copy(),
            "lengths": np.array([len(s) for s in strings], dtype=np.int64),
        }
        flat["offsets"] = self._offsets(flat["owner"], len(strings))
        return flat

    def copy(self) -> _Lattices:
        new = copy.copy(self)
        new.units = dict(self.units)
        new.owned = dict(self.owned)
        return new

    @staticmethod
    def _offsets(owner: np.ndarray, n: int) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(np.bincount(owner, minlength=n))]).astype(np.int64)

    def restrict(self, vocab: UnigramVocab) -> None:
        alive = np.zeros(len(self.tokens) + 1, dtype=bool)
        alive[-1] = True  # toks == -1 indexes here
        alive[[self.ids[t] for t in vocab.entries]] = True
        for flat in (self.units, self.owned):
            keep = alive[flat["toks"]]
            for key in ("starts", "ends", "toks", "owner"):
                flat[key] = flat[key][keep]
            flat["offsets"] = self._offsets(flat["owner"], len(flat["lengths"]))
        owner_alive = alive[self.owners]
        if not owner_alive.all():
            flat = self.owned
            keep_rows = np.flatnonzero(owner_alive)
            remap = np.full(len(self.owners), -1, dtype=np.int64)
            remap[keep_rows] = np.arange(len(keep_rows))
            keep = owner_alive[flat["owner"]]
            for key in ("starts", "ends", "toks"):
                flat[key] = flat[key][keep]
            flat["owner"] = remap[flat["owner"][keep]]
            flat["lengths"] = flat["lengths"][keep_rows]
            flat["offsets"] = self._offsets(flat["owner"], len(keep_rows))
            self.owners = self.owners[keep_rows]

    def _scores(self, vocab: UnigramVocab) -> np.ndarray:
        scores = np.full(len(self.tokens), -np.inf)
        for t, lp in vocab.entries.items():
            scores[self.ids[t]] = lp
        return scores

    def expected_counts(self, vocab: UnigramVocab) -> tuple[np.ndarray, float]:
        """Forward-backward expected counts (indexed by token id) and marginal log-likelihood."""
        u = self.units
        counts = np.zeros(len(self.tokens))
        loglik = _kernels.estep(
            u["starts"], u["ends"], u["toks"], u["offsets"], u["lengths"], self.weights,
            self._scores(vocab), vocab.unk_score, counts,
        )
        return counts, float(loglik)

    def counts_dict(self, vocab: UnigramVocab, counts: np.ndarray) -> dict[str, float]:
        return {t: float(counts[self.ids[t]]) for t in vocab.entries}

    def losses(self, vocab: UnigramVocab, counts: np.ndarray) -> dict[str, float]:
        o = self.owned
        out = np.zeros(len(self.tokens))
        total = math.fsum(counts[self.ids[t]] for t in vocab.entries)
        _kernels.prune_losses(
            self.owners, o["starts"], o["ends"], o["toks"], o["offsets"], o["lengths"],
            self._scores(vocab), vocab.unk_score, counts, total, out,
        )
        return {self.tokens[i]: float(out[i]) for i in self.owners}


def _normalize_counts(counts: Mapping[str, float], unk_token: str) -> UnigramVocab:
    total = math.fsum(counts.values()) + EM_PSEUDO_COUNT * len(counts)
    return UnigramVocab(
        {t: math.log((c + EM_PSEUDO_COUNT) / total) for t, c in counts.items()},
        unk_token=unk_token,
    )


def em_step(corpus: SentenceCorpus, vocab: UnigramVocab) -> UnigramVocab:
    """One EM iteration over the full segmentation lattice."""
    lat = _Lattices(vocab, _units(vocab, corpus.sentences))
    counts, _ = lat.expected_counts(vocab)
    return _normalize_counts(lat.counts_dict(vocab, counts), vocab.unk_token)


def corpus_log_likelihood(corpus: SentenceCorpus, vocab: UnigramVocab) -> float:
    """Marginal log-likelihood: sum over sentences of log of all-path probability."""
    lat = _Lattices(vocab, _units(vocab, corpus.sentences))
    return lat.expected_counts(vocab)[1]


def _renormalize(vocab: UnigramVocab, keep: Iterable[str]) -> UnigramVocab:
    keep = list(keep)
    top = max(vocab.entries[t] for t in keep)
    logz = top + math.log(math.fsum(math.exp(vocab.entries[t] - top) for t in keep))
    return UnigramVocab({t: vocab.entries[t] - logz for t in keep}, unk_token=vocab.unk_token)


def pruning_losses(corpus: SentenceCorpus, vocab: UnigramVocab) -> dict[str, float]:
    """Approximate corpus log-likelihood lost by removing each removable token.

    Every expected occurrence of the token is replaced by its best
    segmentation without it; the replacement pieces' probabilities are
    re-estimated from the shifted counts. Tokens with zero expected count
    lose nothing.
    """
    lat = _Lattices(vocab, _units(vocab, corpus.sentences), with_tokens=True)
    counts, _ = lat.expected_counts(vocab)
    return lat.losses(vocab, counts)


def _prune_to(vocab: UnigramVocab, losses: Mapping[str, float], n_keep: int) -> UnigramVocab:
    ranked = sorted(losses, key=lambda t: (-losses[t], t))
    keep = set(vocab.protected) | set(ranked[: max(n_keep, 0)])
    return _renormalize(vocab, (t for t in vocab.entries if t in keep))


def prune(corpus: SentenceCorpus, vocab: UnigramVocab, keep_fraction: float = 0.8) -> UnigramVocab:
    """Keep the ``keep_fraction`` most valuable removable tokens plus all protected ones."""
    if not 0.0 < keep_fraction < 1.0:
        raise ValueError("keep_fraction must be in (0, 1)")
    removable = len(vocab) - len(vocab.protected)
    n_keep = math.ceil(keep_fraction * removable - 1e-9)
    return _prune_to(vocab, pruning_losses(corpus, vocab), n_keep)


def _char_coverage(char_counts: Counter[str], coverage: float) -> set[str]:
    total = sum(char_counts.values())
    required: set[str] = set()
    acc = 0
    for ch, cnt in sorted(char_counts.items(), key=lambda kv: (-kv[1], kv[0])):
        if acc >= coverage * total:
            break
        required.add(ch)
        acc += cnt
    return required


def make_seed_vocab(
    corpus: SentenceCorpus,
    max_token_len: int = 16,
    max_seed_size: int = 1_000_000,
    *,
    min_count: int = 2,
    character_coverage: float = 0.9995,
    unk_token: str = UNK,
) -> UnigramVocab:
    """Initial vocabulary from frequent bounded-length substrings.

    Candidates never cross a word boundary and never contain characters below
    the coverage threshold. Scores are ``count * length``.
    """
    if corpus.line_count == 0:
        raise ValueError(f"cannot build a seed vocabulary from empty corpus {corpus.language!r}")
    if max_token_len < 1:
        raise ValueError("max_token_len must be >= 1")
    units: Counter[str] = Counter()
    for s in corpus.sentences:
        units.update(split_units(s))
    chars: Counter[str] = Counter()
    for u, w in units.items():
        for ch in u:
            chars[ch] += w
    required = _char_coverage(chars, character_coverage)
    uncovered = sum(c for ch, c in chars.items() if ch not in required)

    subs: Counter[str] = Counter()
    for u, w in units.items():
        n = len(u)
        for i in range(n):
            if u[i] not in required:
                continue
            for j in range(i + 2, min(n, i + max_token_len) + 1):
                if u[j - 1] not in required:
                    break
                subs[u[i:j]] += w
    candidates = [(s, c * len(s)) for s, c in subs.items() if c >= min_count]
    candidates.sort(key=lambda kv: (-kv[1], kv[0]))
    candidates = candidates[:max_seed_size]

    scores = {ch: float(chars[ch]) for ch in required}
    scores.update((s, float(v)) for s, v in candidates)
    scores[unk_token] = float(max(uncovered, 1))
    total = math.fsum(scores.values())
    return UnigramVocab({t: math.log(v / total) for t, v in scores.items()}, unk_token=unk_token)


@dataclass(frozen=True)
class TrainerConfig:
    max_token_len: int = 16
    min_count: int = 2
    max_seed_size: int = 1_000_000
    character_coverage: float = 0.9995
    em_steps: int = 2
    keep_fraction: float = 0.8
    final_em_steps: int = 2
    unk_token: str = UNK

    @classmethod
    def from_dict(cls, d: Mapping | None) -> TrainerConfig:
        return cls(**(d or {}))


def train_unigram(
    corpus: SentenceCorpus, target_size: int, config: TrainerConfig | None = None
) -> UnigramVocab:
    """Seed, then alternate EM and pruning until exactly ``target_size`` tokens remain.

    Each round prunes to ``keep_fraction`` of the removable tokens, never
    below the target. If the seed is already no larger than ``target_size``
    it is only EM-refined.
    """
    return train_unigram_sizes(corpus, [target_size], config)[target_size]


def train_unigram_sizes(
    corpus: SentenceCorpus, sizes: Iterable[int], config: TrainerConfig | None = None
) -> dict[int, UnigramVocab]:
    """Train at several target sizes while sharing the common pruning trajectory.

    Each result equals ``train_unigram(corpus, size, config)``: the shared run
    forks wherever the floor for a size would first clamp a pruning step.
    """
    cfg = config or TrainerConfig()
    pending = sorted(set(sizes), reverse=True)
    vocab = make_seed_vocab(
        corpus,
        cfg.max_token_len,
        cfg.max_seed_size,
        min_count=cfg.min_count,
        character_coverage=cfg.character_coverage,
        unk_token=cfg.unk_token,
    )
    n_protected = len(vocab.protected)
    if not pending or pending[-1] < n_protected:
        raise ValueError(
            f"target size {pending[-1] if pending else None} is smaller than the protected set "
            f"({n_protected} tokens) for {corpus.language!r}"
        )
    lat = _Lattices(vocab, _units(vocab, corpus.sentences), with_tokens=True)

    def run_em(lat: _Lattices, v: UnigramVocab, steps: int) -> tuple[UnigramVocab, np.ndarray]:
        for _ in range(steps):
            counts, _ = lat.expected_counts(v)
            v = _normalize_counts(lat.counts_dict(v, counts), v.unk_token)
        return v, lat.expected_counts(v)[0]

    out: dict[int, UnigramVocab] = {}
    vocab, counts = run_em(lat, vocab, cfg.em_steps)
    while pending:
        size = pending[0]
        if len(vocab) <= size:
            out[size] = run_em(lat, vocab, cfg.final_em_steps)[0]
            pending.pop(0)
            continue
        removable = len(vocab) - n_protected
        n_keep = min(math.ceil(cfg.keep_fraction * removable - 1e-9), removable - 1)
        losses = lat.losses(vocab, counts)
        if size - n_protected > n_keep:
            # the floor binds: finish this size on a fork of the shared state
            fork = lat.copy()
            v = _prune_to(vocab, losses, size - n_protected)
            fork.restrict(v)
            v, _ = run_em(fork, v, cfg.em_steps)
            out[size] = run_em(fork, v, cfg.final_em_steps)[0]
            pending.pop(0)
            continue
        vocab = _prune_to(vocab, losses, n_keep)
        lat.restrict(vocab)
        log.debug("%s: pruned to %d tokens", corpus.language, len(vocab))
        vocab, counts = run_em(lat, vocab, cfg.em_steps)
    return out
