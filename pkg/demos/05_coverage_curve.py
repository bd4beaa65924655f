"""How many token types does it take to cover 99% of running text?"""

from polyvocab.analysis import coverage_curve, utilization_at
from polyvocab.synthetic import zipf_corpus
from polyvocab.ulm import train_unigram_sizes

train = zipf_corpus("zipf", 6000, 15000, s=1.1, seed=0)
held_out = zipf_corpus("zipf", 1500, 15000, s=1.1, seed=1, lexicon_seed=0)

# one shared pruning run yields all three sizes
vocabs = train_unigram_sizes(train, [2500, 5000, 10000])
for size, vocab in sorted(vocabs.items()):
    curve = coverage_curve(vocab, held_out)
    u = utilization_at(curve, 0.99)
    print(f"|V|={size:>6}: 50% at {utilization_at(curve, 0.5):>5}, 99% at {u:>5} ({u / size:.0%} of the vocabulary)")
