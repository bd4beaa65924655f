"""Synthetic corpora for tests and demos.

Three toy "languages" with disjoint scripts: a Latin-script language with a
Zipfian word distribution, a dense script written without spaces, and an
agglutinative language built from stems and suffix chains.
"""

from __future__ import annotations

import numpy as np

from ._util import derive_rng
from .corpus import META, SentenceCorpus

LATIN = "abcdefghijklmnopqrstuvwxyz"
CYRILLIC = "абвгдежзийклмнопрстуфхцчшщыэюя"
GEORGIAN = "".join(chr(c) for c in range(0x10D0, 0x10F1))
DENSE = "".join(chr(c) for c in range(0x4E00, 0x4E00 + 160))


def _zipf_probs(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def random_lexicon(rng: np.random.Generator, n_types: int, alphabet: str, lo: int = 2, hi: int = 9) -> list[str]:
    """``n_types`` distinct random words over ``alphabet``."""
    words: list[str] = []
    seen: set[str] = set()
    letters = np.array(list(alphabet))
    while len(words) < n_types:
        w = "".join(rng.choice(letters, size=int(rng.integers(lo, hi + 1))))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def zipf_corpus(
    language: str,
    n_sentences: int,
    n_types: int,
    s: float = 1.1,
    seed: int = 0,
    alphabet: str = LATIN,
    words_per_sentence: tuple[int, int] = (6, 14),
    lexicon_seed: int | None = None,
) -> SentenceCorpus:
    """Space-separated sentences whose words follow a Zipf(s) law over a random lexicon.

    ``lexicon_seed`` fixes the word list independently of the sentence draw,
    so held-out text can share a lexicon with training text.
    """
    lex = random_lexicon(derive_rng(seed if lexicon_seed is None else lexicon_seed, language, "lex"), n_types, alphabet)
    rng = derive_rng(seed, language, "text")
    p = _zipf_probs(n_types, s)
    lo, hi = words_per_sentence
    lengths = rng.integers(lo, hi + 1, size=n_sentences)
    draws = rng.choice(n_types, size=int(lengths.sum()), p=p)
    out, pos = [], 0
    for n in lengths:
        out.append(" ".join(lex[i] for i in draws[pos : pos + n]))
        pos += n
    return SentenceCorpus(language, tuple(out))


def dense_corpus(
    language: str,
    n_sentences: int,
    n_types: int = 1500,
    s: float = 1.1,
    seed: int = 0,
    lexicon_seed: int | None = None,
) -> SentenceCorpus:
    """Words of 1-3 characters from a large character set, written without spaces."""
    lex = random_lexicon(derive_rng(seed if lexicon_seed is None else lexicon_seed, language, "lex"), n_types, DENSE, 1, 3)
    rng = derive_rng(seed, language, "text")
    p = _zipf_probs(n_types, s)
    out = []
    for n in rng.integers(8, 20, size=n_sentences):
        out.append("".join(lex[i] for i in rng.choice(n_types, size=int(n), p=p)))
    return SentenceCorpus(language, tuple(out))


def agglutinative_corpus(
    language: str,
    n_sentences: int,
    n_stems: int = 800,
    n_suffixes: int = 40,
    seed: int = 0,
    alphabet: str = GEORGIAN,
    lexicon_seed: int | None = None,
) -> SentenceCorpus:
    """Words are a stem followed by 0-4 suffixes; stems and suffixes are Zipfian."""
    lrng = derive_rng(seed if lexicon_seed is None else lexicon_seed, language, "lex")
    stems = random_lexicon(lrng, n_stems, alphabet, 3, 6)
    suffixes = random_lexicon(lrng, n_suffixes, alphabet, 2, 3)
    rng = derive_rng(seed, language, "text")
    p_stem = _zipf_probs(n_stems, 1.0)
    p_suf = _zipf_probs(n_suffixes, 0.8)
    out = []
    for n in rng.integers(4, 10, size=n_sentences):
        words = []
        for _ in range(int(n)):
            w = stems[rng.choice(n_stems, p=p_stem)]
            for _ in range(int(rng.integers(0, 5))):
                w += suffixes[rng.choice(n_suffixes, p=p_suf)]
            words.append(w)
        out.append(" ".join(words))
    return SentenceCorpus(language, tuple(out))


def three_script_corpora(
    seed: int = 0,
    lines: tuple[int, int, int] = (3000, 2000, 300),
    lexicon_seed: int | None = None,
) -> dict[str, SentenceCorpus]:
    """High-resource Latin, mid-resource dense script, low-resource agglutinative."""
    n_lat, n_dense, n_agg = lines
    lex = lexicon_seed
    return {
        "lat": zipf_corpus("lat", n_lat, 3000, seed=seed, lexicon_seed=lex),
        "dns": dense_corpus("dns", n_dense, seed=seed, lexicon_seed=lex),
        "agg": agglutinative_corpus("agg", n_agg, seed=seed, lexicon_seed=lex),
    }


def write_toy_dataset(
    directory,
    seed: int = 0,
    lines: tuple[int, int, int] = (600, 400, 100),
    eval_lines: tuple[int, int, int] = (200, 200, 100),
    **overrides,
):
    """Write train/eval text files for the three toy languages plus a pipeline config.

    Returns the path of ``config.json``. ``overrides`` replace config fields.
    """
    import json
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    train = three_script_corpora(seed, lines, lexicon_seed=seed)
    held = three_script_corpora(seed + 1000, eval_lines, lexicon_seed=seed)
    for lang in train:
        for corpus, suffix in ((train[lang], "train"), (held[lang], "eval")):
            text = "".join(s.replace(META, " ") + "\n" for s in corpus.sentences)
            (out / f"{lang}.{suffix}.txt").write_text(text, encoding="utf-8")
    config = {
        "languages": {lang: f"{lang}.train.txt" for lang in sorted(train)},
        "eval_corpora": {lang: f"{lang}.eval.txt" for lang in sorted(train)},
        "lang_vocab_size": 300,
        "temperature": 2.0,
        "total_lines": 1000,
        "capacity": 800,
        "k": 2,
        "chunk": 50,
        "floor": 200,
        "seed": seed,
        "restarts": 3,
    }
    config.update(overrides)
    path = out / "config.json"
    path.write_text(json.dumps(config, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
