"""K-Means over lexical fingerprints."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .corpus import LanguageId
from .fingerprint import LexicalFingerprint, fingerprint_matrix

Metric = Literal["euclidean", "cosine"]


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterAssignment:
    clusters: list[frozenset[LanguageId]]
    centroids: np.ndarray
    inertia: float
    seed: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.clusters)

    def cluster_of(self, language: LanguageId) -> int:
        for cid, members in enumerate(self.clusters):
            if language in members:
                return cid
        raise KeyError(language)

    def to_tsv(self) -> str:
        rows = [f"{cid}\t{lang}" for cid, m in enumerate(self.clusters) for lang in sorted(m)]
        return "\n".join(rows) + "\n"

    def save(self, tsv_path: str | Path, json_path: str | Path) -> None:
        Path(tsv_path).write_text(self.to_tsv(), encoding="utf-8")
        meta = {
            "k": self.k,
            "seed": self.seed,
            "inertia": self.inertia,
            "centroids": self.centroids.tolist(),
        }
        Path(json_path).write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, tsv_path: str | Path, json_path: str | Path) -> ClusterAssignment:
        meta = json.loads(Path(json_path).read_text(encoding="utf-8"))
        groups: dict[int, set[str]] = {}
        for line in Path(tsv_path).read_text(encoding="utf-8").splitlines():
            cid, lang = line.split("\t")
            groups.setdefault(int(cid), set()).add(lang)
        clusters = [frozenset(groups[c]) for c in range(meta["k"])]
        return cls(clusters, np.asarray(meta["centroids"]), meta["inertia"], meta["seed"])


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] - 2.0 * x @ c.T + (c * c).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        mass = closest.sum()
        if mass > 0:
            nxt = int(rng.choice(n, p=closest / mass))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        closest = np.minimum(closest, _sq_dists(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def _repair_empty(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int) -> None:
    """Give every empty cluster the point farthest from its own centroid."""
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        d = ((x - centroids[labels]) ** 2).sum(1)
        d[sizes[labels] < 2] = -1.0
        p = int(np.argmax(d))
        labels[p] = c
        centroids[c] = x[p]


def _update(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.vstack([x[labels == c].mean(0) for c in range(k)])


def kmeans(
    fingerprints: Sequence[LexicalFingerprint],
    k: int = 8,
    seed: int = 0,
    max_iters: int = 300,
    metric: Metric = "euclidean",
) -> ClusterAssignment:
    """Lloyd's algorithm with seeded k-means++ initialization."""
    x = fingerprint_matrix(fingerprints).astype(np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ClusteringError(f"k={k} must be between 1 and the number of languages ({n})")
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x = x / np.where(norms > 0, norms, 1.0)
    elif metric != "euclidean":
        raise ClusteringError(f"unknown metric {metric!r}")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(x, k, rng)
    labels = np.full(n, -1)
    history: list[float] = []
    for _ in range(max_iters):
        new = np.argmin(_sq_dists(x, centroids), axis=1)
        _repair_empty(x, new, centroids, k)
        if np.array_equal(new, labels):
            break
        labels = new
        centroids = _update(x, labels, k)
        history.append(float(((x - centroids[labels]) ** 2).sum()))

    langs = [fp.language for fp in fingerprints]
    groups = [frozenset(langs[i] for i in np.flatnonzero(labels == c)) for c in range(k)]
    order = sorted(range(k), key=lambda c: min(groups[c]))
    inertia = float(((x - centroids[labels]) ** 2).sum())
    return ClusterAssignment([groups[c] for c in order], centroids[order], inertia, seed, history)


def best_of_restarts(
    fingerprints: Sequence[LexicalFingerprint],
    k: int,
    seeds: Sequence[int],
    max_iters: int = 300,
    metric: Metric = "euclidean",
) -> ClusterAssignment:
    """Lowest-inertia run over ``seeds``; ties go to the lowest seed."""
    if not seeds:
        raise ClusteringError("need at least one seed")
    runs = [kmeans(fingerprints, k, s, max_iters, metric) for s in sorted(set(seeds))]
    return min(runs, key=lambda r: (r.inertia, r.seed))
