"""Split a token budget between languages by where extra tokens help most."""

import numpy as np

from polyvocab.capacity import build_alp_ladder, cluster_capacity, greedy_allocate, rescale
from polyvocab.clustering import ClusterAssignment
from polyvocab.synthetic import three_script_corpora

corpora = three_script_corpora(seed=0, lines=(1500, 1000, 200))

# ALP (average per-sentence log probability) at several vocabulary sizes
sizes = [200, 300, 400, 500]
ladders = [build_alp_ladder(corpora[lang], sizes) for lang in sorted(corpora)]
for lad in ladders:
    print(lad.language, " ".join(f"{s}:{a:.1f}" for s, a in lad.points))

# everyone starts at the floor; 50-token chunks go to the biggest ALP gain
alloc = greedy_allocate(ladders, total=900, chunk=50, min_floor=200)
print("greedy budgets:", alloc.budgets)

# the same shares scaled to a larger target, never below the floor
print("rescaled to 1500:", rescale(alloc, 1500, min_floor=200).budgets)

# cluster capacity is the sum of its members' budgets
clusters = ClusterAssignment([frozenset({"agg", "dns"}), frozenset({"lat"})], np.zeros((2, 1)), 0.0)
print("cluster capacities:", cluster_capacity(alloc, clusters))
