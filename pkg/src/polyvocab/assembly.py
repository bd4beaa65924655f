"""Per-cluster corpora and vocabularies, and the merged multilingual vocabulary."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import ClusterAssignment
from .corpus import META, LanguageId, SentenceCorpus, draw_sample, temperature_sample
from .ulm import UNK, TrainerConfig, UnigramVocab, VocabError, parse_vocab_tsv, train_unigram

log = logging.getLogger(__name__)


class AssemblyError(ValueError):
    pass


def cluster_name(cid: int) -> str:
    return f"c{cid}"


@dataclass
class MultilingualVocab:
    entries: dict[str, float]
    provenance: dict[str, frozenset[int]]
    source_sizes: dict[int, int]
    unk_token: str = UNK
    specials: tuple[str, ...] = field(default=(UNK, META))

    @property
    def overlap_count(self) -> int:
        return sum(self.source_sizes.values()) - len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultilingualVocab):
            return NotImplemented
        return (
            self.entries == other.entries
            and self.provenance == other.provenance
            and self.source_sizes == other.source_sizes
            and self.unk_token == other.unk_token
        )

    def ordered_tokens(self) -> list[str]:
        """Special tokens first at fixed positions, the rest by descending log prob."""
        head = [t for t in self.specials if t in self.entries]
        pinned = set(head)
        rest = sorted(
            (t for t in self.entries if t not in pinned), key=lambda t: (-self.entries[t], t)
        )
        return head + rest

    def to_unigram(self) -> UnigramVocab:
        return UnigramVocab(self.entries, unk_token=self.unk_token)

    def unique_fractions(self) -> dict[int, float]:
        """Share of each cluster's tokens that no other cluster produced."""
        unique = dict.fromkeys(self.source_sizes, 0)
        for cids in self.provenance.values():
            if len(cids) == 1:
                unique[next(iter(cids))] += 1
        return {c: unique[c] / n for c, n in self.source_sizes.items()}


def build_cluster_corpus(
    clusters: ClusterAssignment,
    corpora: Mapping[LanguageId, SentenceCorpus],
    t: float,
    lines: int | Mapping[int, int],
    seed: int = 0,
) -> dict[int, SentenceCorpus]:
    """Temperature-sample ``lines`` lines per cluster from its member corpora.

    ``lines`` is either one count for every cluster or a per-cluster mapping.
    """
    out = {}
    for cid, members in enumerate(clusters.clusters):
        n_lines = lines[cid] if isinstance(lines, Mapping) else lines
        missing = [m for m in sorted(members) if m not in corpora]
        if missing:
            raise AssemblyError(f"cluster {cid}: no corpus for {missing}")
        counts = {m: corpora[m].line_count for m in members}
        if any(c == 0 for c in counts.values()):
            raise AssemblyError(f"cluster {cid}: empty member corpus")
        quotas = temperature_sample(counts, t, n_lines, seed)
        sentences: list[str] = []
        for m in sorted(members):
            sentences.extend(draw_sample(corpora[m], quotas[m], seed).sentences)
        out[cid] = SentenceCorpus(cluster_name(cid), tuple(sentences))
    return out


def train_cluster_vocabs(
    cluster_corpora: Mapping[int, SentenceCorpus],
    capacities: Mapping[int, int],
    config: TrainerConfig | None = None,
) -> dict[int, UnigramVocab]:
    out = {}
    for cid in sorted(cluster_corpora):
        cap = capacities[cid]
        try:
            vocab = train_unigram(cluster_corpora[cid], cap, config)
        except ValueError as exc:
            raise AssemblyError(f"cluster {cid}: {exc}") from exc
        if len(vocab) < cap:
            log.warning("cluster %d: seed vocabulary only reached %d of %d tokens", cid, len(vocab), cap)
        out[cid] = vocab
    return out


def merge_vocabs(cluster_vocabs: Mapping[int, UnigramVocab]) -> MultilingualVocab:
    """Union of cluster vocabularies; shared tokens keep their highest log prob."""
    if not cluster_vocabs:
        raise AssemblyError("nothing to merge")
    unk_tokens = {v.unk_token for v in cluster_vocabs.values()}
    if len(unk_tokens) != 1:
        raise AssemblyError(f"cluster vocabs disagree on the UNK token: {sorted(unk_tokens)}")
    best: dict[str, float] = {}
    prov: dict[str, set[int]] = {}
    for cid in sorted(cluster_vocabs):
        for tok, lp in cluster_vocabs[cid].entries.items():
            if tok not in best or lp > best[tok]:
                best[tok] = lp
            prov.setdefault(tok, set()).add(cid)
    top = max(best.values())
    logz = top + math.log(math.fsum(math.exp(v - top) for v in best.values()))
    return MultilingualVocab(
        {t: v - logz for t, v in best.items()},
        {t: frozenset(c) for t, c in prov.items()},
        {cid: len(v) for cid, v in cluster_vocabs.items()},
        unk_token=unk_tokens.pop(),
    )


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".provenance.json")


def export_vocab(vocab: MultilingualVocab, path: str | Path) -> None:
    """Write the vocab TSV plus a ``.provenance.json`` sidecar."""
    path = Path(path)
    order = vocab.ordered_tokens()
    if order[0] != vocab.unk_token:
        raise AssemblyError("UNK token missing from merged vocabulary")
    lines = ["#ulm-vocab v1"] + [f"{t}\t{format(vocab.entries[t], '.17g')}" for t in order]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    side = {
        "provenance": {str(i): sorted(vocab.provenance[t]) for i, t in enumerate(order)},
        "source_sizes": {str(c): n for c, n in sorted(vocab.source_sizes.items())},
        "overlap_count": vocab.overlap_count,
    }
    _sidecar(path).write_text(json.dumps(side, sort_keys=True) + "\n", encoding="utf-8")


def import_vocab(path: str | Path) -> MultilingualVocab:
    path = Path(path)
    try:
        entries, unk = parse_vocab_tsv(path.read_text(encoding="utf-8"), str(path))
        side = json.loads(_sidecar(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VocabError(f"cannot read merged vocab {path}: {exc}") from exc
    tokens = list(entries)
    prov_raw = side["provenance"]
    if len(prov_raw) != len(tokens):
        raise VocabError(f"{path}: provenance covers {len(prov_raw)} of {len(tokens)} tokens")
    provenance = {tokens[int(i)]: frozenset(cids) for i, cids in prov_raw.items()}
    sizes = {int(c): n for c, n in side["source_sizes"].items()}
    return MultilingualVocab(entries, provenance, sizes, unk_token=unk)
