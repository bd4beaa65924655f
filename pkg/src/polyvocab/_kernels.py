"""Compiled inner loops for unigram training.

Lattices are stored flat: edge arrays ``starts``, ``ends``, ``toks`` grouped
per string by ``offsets``; edges of one string are ordered by start. A token
id of -1 marks an UNK edge scored by ``unk_score``.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def _lae(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def estep(starts, ends, toks, offsets, lengths, weights, scores, unk_score, counts):
    """Accumulate expected token counts into ``counts``; return the marginal log-likelihood."""
    loglik = 0.0
    for u in range(lengths.shape[0]):
        n = lengths[u]
        a, b = offsets[u], offsets[u + 1]
        w = weights[u]
        alpha = np.full(n + 1, NEG_INF)
        alpha[0] = 0.0
        for e in range(a, b):
            t = toks[e]
            s = unk_score if t < 0 else scores[t]
            alpha[ends[e]] = _lae(alpha[ends[e]], alpha[starts[e]] + s)
        beta = np.full(n + 1, NEG_INF)
        beta[n] = 0.0
        for e in range(b - 1, a - 1, -1):
            t = toks[e]
            s = unk_score if t < 0 else scores[t]
            beta[starts[e]] = _lae(beta[starts[e]], beta[ends[e]] + s)
        z = alpha[n]
        loglik += w * z
        for e in range(a, b):
            t = toks[e]
            if t >= 0:
                counts[t] += w * math.exp(alpha[starts[e]] + scores[t] + beta[ends[e]] - z)
    return loglik


@njit(cache=True)
def prune_losses(owners, starts, ends, toks, offsets, lengths, scores, unk_score, counts, total, out):
    """Likelihood loss of removing each owner token.

    For every owner string the best segmentation that avoids the whole-string
    edge stands in for the removed token; its pieces absorb the token's count.
    """
    for u in range(owners.shape[0]):
        owner = owners[u]
        c = counts[owner]
        if c <= 0.0 or total <= 0.0:
            out[owner] = 0.0
            continue
        n = lengths[u]
        a, b = offsets[u], offsets[u + 1]
        best = np.full(n + 1, NEG_INF)
        nums = np.zeros(n + 1, np.int64)
        nxt_end = np.full(n + 1, -1, np.int64)
        nxt_tok = np.full(n + 1, -1, np.int64)
        best[n] = 0.0
        for e in range(b - 1, a - 1, -1):
            i, j, t = starts[e], ends[e], toks[e]
            if i == 0 and j == n:
                continue
            if best[j] == NEG_INF:
                continue
            s = (unk_score if t < 0 else scores[t]) + best[j]
            k = nums[j] + 1
            if nxt_end[i] < 0 or s > best[i] or (s == best[i] and (k < nums[i] or (k == nums[i] and j > nxt_end[i]))):
                best[i] = s
                nums[i] = k
                nxt_end[i] = j
                nxt_tok[i] = t
        if nxt_end[0] < 0:
            out[owner] = np.inf
            continue
        m = nums[0]
        lp_tok = math.log(c) - math.log(total)
        log_new_total = math.log(total + c * (m - 1))
        lp_alt = 0.0
        i = 0
        while i < n:
            t = nxt_tok[i]
            base = counts[t] if t >= 0 else 0.0
            lp_alt += math.log(base + c) - log_new_total
            i = nxt_end[i]
        out[owner] = c * (lp_tok - lp_alt)
