"""Group languages by the tokens their vocabularies share."""

import numpy as np

from polyvocab.clustering import best_of_restarts
from polyvocab.corpus import SentenceCorpus, count_token_frequencies
from polyvocab.fingerprint import build_fingerprint, build_shared_lexicon, fingerprint_matrix
from polyvocab.synthetic import CYRILLIC, LATIN, zipf_corpus
from polyvocab.ulm import train_unigram

def dialect(name, base_id, seed, alphabet, lexicon_seed):
    """Fresh sentences over the word list of ``base_id``, relabelled as ``name``."""
    c = zipf_corpus(base_id, 400, 300, seed=seed, alphabet=alphabet, lexicon_seed=lexicon_seed)
    return SentenceCorpus(name, c.sentences)


# four languages: two pairs, each pair sharing a script and a word list
corpora = {
    "lat_a": dialect("lat_a", "lat", 1, LATIN, 10),
    "lat_b": dialect("lat_b", "lat", 2, LATIN, 10),
    "cyr_a": dialect("cyr_a", "cyr", 3, CYRILLIC, 20),
    "cyr_b": dialect("cyr_b", "cyr", 4, CYRILLIC, 20),
}

vocabs = {lang: train_unigram(c, 200) for lang, c in corpora.items()}

# one shared coordinate system: the union of every vocabulary
lexicon = build_shared_lexicon(vocabs.values())
print("shared lexicon size:", len(lexicon))

fps = []
for lang in sorted(corpora):
    freq = count_token_frequencies(corpora[lang], vocabs[lang])
    fps.append(build_fingerprint(lang, vocabs[lang], freq, lexicon, "neglogprob"))

# pairwise distances make the block structure visible
m = fingerprint_matrix(fps)
d = np.sqrt(((m[:, None, :] - m[None, :, :]) ** 2).sum(-1))
print("languages:", [fp.language for fp in fps])
print(np.round(d, 1))

result = best_of_restarts(fps, k=2, seeds=range(5))
for cid, members in enumerate(result.clusters):
    print(f"cluster {cid}: {sorted(members)}")
print("inertia:", round(result.inertia, 2))
