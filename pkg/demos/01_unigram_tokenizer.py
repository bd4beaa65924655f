"""Train a small unigram-LM tokenizer and look at how it segments text."""

from polyvocab.corpus import SentenceCorpus
from polyvocab.synthetic import zipf_corpus
from polyvocab.ulm import (
    corpus_log_likelihood,
    em_step,
    make_seed_vocab,
    train_unigram,
    viterbi_tokenize,
)

# a Zipfian "language": 400 random words, sentences of 6-14 words
corpus = zipf_corpus("demo", 800, 400, seed=0)
print(corpus.sentences[0])  # spaces are already turned into the "▁" marker

# the seed vocabulary holds every frequent substring (up to 16 chars, count >= 2)
seed = make_seed_vocab(corpus)
print("seed size:", len(seed))

# a couple of EM steps on the seed; the marginal likelihood only goes up
ll = corpus_log_likelihood(corpus, seed)
v = seed
for step in range(3):
    v = em_step(corpus, v)
    new = corpus_log_likelihood(corpus, v)
    print(f"EM step {step}: log-likelihood {ll:.1f} -> {new:.1f}")
    ll = new

# full training: EM + pruning down to a fixed size
vocab = train_unigram(corpus, 300)
print("trained size:", len(vocab))
print("most probable tokens:", vocab.ordered_tokens()[1:11])

# Viterbi segmentation of a training sentence and of unseen text
for text in (corpus.sentences[1], "zzz qqq " + corpus.sentences[2].replace("▁", " ")):
    text = SentenceCorpus("x", (text,)).sentences[0]  # normalize
    seg = viterbi_tokenize(vocab, text)
    print(f"{len(seg)} tokens, score {seg.score:.2f}:", " ".join(seg.tokens))
