"""File-based pipeline stages with a content-hashed manifest.

Stages talk to each other only through files in a work directory. Every run
appends a record to ``manifest.json`` holding the hashes of the stage's
inputs and outputs; an input whose current hash differs from the hash its
producing stage recorded is treated as tampered or stale.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ._util import sha256_bytes, sha256_file
from .analysis import (
    coverage_csv,
    coverage_from_counts,
    fertility,
    fertility_csv,
    overlap_csv,
    overlap_report,
    utilization_at,
)
from .assembly import (
    build_cluster_corpus,
    cluster_name,
    export_vocab,
    import_vocab,
    merge_vocabs,
    train_cluster_vocabs,
)
from .capacity import (
    CapacityAllocation,
    build_alp_ladder,
    cluster_capacity,
    greedy_allocate,
    load_ladders,
    rescale,
    save_ladders,
)
from .clustering import ClusterAssignment, best_of_restarts
from .corpus import (
    FrequencyTable,
    SentenceCorpus,
    count_token_frequencies,
    draw_sample,
    load_corpus,
    save_corpus,
    temperature_sample,
)
from .fingerprint import build_fingerprint, build_shared_lexicon, load_fingerprints, save_fingerprints
from .ulm import TrainerConfig, UnigramVocab, tokenize_corpus, train_unigram

log = logging.getLogger(__name__)

STAGES = (
    "sample",
    "train-langs",
    "fingerprint",
    "cluster",
    "ladder",
    "allocate",
    "train-clusters",
    "merge",
    "analyze",
)
MANIFEST = "manifest.json"


class PipelineError(Exception):
    exit_code = 1


class ConfigError(PipelineError):
    exit_code = 2


class MissingArtifactError(PipelineError):
    exit_code = 3


class DataError(PipelineError):
    exit_code = 4


@dataclass
class PipelineConfig:
    languages: dict[str, str]
    lang_vocab_size: int = 30_000
    temperature: float = 2.0
    total_lines: int = 1_000_000_000
    capacity: int = 1_000_000
    allocation_total: int | None = None
    k: int = 8
    chunk: int = 1000
    floor: int = 2000
    ladder_sizes: list[int] | None = None
    seed: int = 0
    restarts: int = 5
    fingerprint_mode: str = "neglogprob"
    metric: str = "euclidean"
    max_iters: int = 300
    eval_corpora: dict[str, str] | None = None
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    workers: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: str | Path = ".") -> PipelineConfig:
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "languages" not in data:
            raise ConfigError("config needs a 'languages' mapping")
        kw = dict(data)
        try:
            kw["trainer"] = TrainerConfig.from_dict(kw.get("trainer"))
        except TypeError as exc:
            raise ConfigError(f"bad trainer settings: {exc}") from exc
        return cls(**kw, base_dir=Path(base_dir))

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("workers")
        return sha256_bytes(json.dumps(d, sort_keys=True).encode())

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def langs(self) -> list[str]:
        return sorted(self.languages)

    @property
    def greedy_total(self) -> int:
        return self.allocation_total or self.capacity

    def ladder(self) -> list[int]:
        if self.ladder_sizes:
            return sorted(self.ladder_sizes)
        top = self.greedy_total - self.floor * (len(self.languages) - 1)
        sizes, s = [], self.floor
        while s < top:
            sizes.append(s)
            s *= 2
        return sizes + [top]

    def restart_seeds(self) -> list[int]:
        return [self.seed + i for i in range(max(self.restarts, 1))]

    def validate(self) -> None:
        try:
            self._validate()
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc

    def _validate(self) -> None:
        if not isinstance(self.languages, dict) or not self.languages:
            raise ConfigError("no languages configured")
        for lang, p in self.languages.items():
            if not lang:
                raise ConfigError("empty language id")
            if not self.resolve(p).is_file():
                raise ConfigError(f"corpus for {lang!r} not found: {self.resolve(p)}")
        for lang, p in (self.eval_corpora or {}).items():
            if not self.resolve(p).is_file():
                raise ConfigError(f"eval corpus for {lang!r} not found: {self.resolve(p)}")
        n = len(self.languages)
        if self.capacity < self.floor * n or self.greedy_total < self.floor * n:
            raise ConfigError(f"capacity must be at least floor x languages = {self.floor * n}")
        if not 1 <= self.k <= n:
            raise ConfigError(f"k={self.k} must be between 1 and the number of languages ({n})")
        if self.temperature <= 0 or self.total_lines <= 0:
            raise ConfigError("temperature and total_lines must be positive")
        if self.chunk <= 0 or self.floor <= 0 or self.lang_vocab_size <= 0:
            raise ConfigError("chunk, floor and lang_vocab_size must be positive")
        if self.fingerprint_mode not in ("binary", "neglogprob"):
            raise ConfigError(f"unknown fingerprint mode {self.fingerprint_mode!r}")
        if self.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        lad = self.ladder()
        if lad[0] > self.floor:
            raise ConfigError("ladder sizes must start at or below the floor")


# --- manifest -------------------------------------------------------------


class Manifest:
    def __init__(self, workdir: Path):
        self.path = workdir / MANIFEST
        self.workdir = workdir
        self.records: list[dict] = []
        if self.path.exists():
            try:
                self.records = json.loads(self.path.read_text(encoding="utf-8"))["records"]
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"corrupt manifest {self.path}: {exc}") from exc

    def save(self) -> None:
        self.path.write_text(json.dumps({"records": self.records}, indent=1) + "\n", encoding="utf-8")

    def producer_hash(self, rel: str) -> str | None:
        """Hash recorded for ``rel`` by the most recent stage that wrote it."""
        for rec in reversed(self.records):
            if rel in rec["outputs"]:
                return rec["outputs"][rel]
        return None

    def last(self, stage: str) -> dict | None:
        for rec in reversed(self.records):
            if rec["stage"] == stage:
                return rec
        return None


# --- stage bodies -----------------------------------------------------------


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _load_inputs(cfg: PipelineConfig) -> dict[str, SentenceCorpus]:
    return {lang: load_corpus(cfg.resolve(cfg.languages[lang]), lang) for lang in cfg.langs}


def _load_samples(cfg: PipelineConfig, wd: Path) -> dict[str, SentenceCorpus]:
    return {lang: load_corpus(wd / "samples" / f"{lang}.txt", lang) for lang in cfg.langs}


def _train_job(args: tuple[SentenceCorpus, int, TrainerConfig]) -> UnigramVocab:
    corpus, size, trainer = args
    return train_unigram(corpus, size, trainer)


def _ladder_job(args: tuple[SentenceCorpus, list[int], TrainerConfig]):
    corpus, sizes, trainer = args
    return build_alp_ladder(corpus, sizes, trainer)


def stage_sample(cfg: PipelineConfig, wd: Path) -> None:
    corpora = _load_inputs(cfg)
    empty = [lang for lang, c in corpora.items() if c.line_count == 0]
    if empty:
        raise DataError(f"empty corpora: {empty}")
    quotas = temperature_sample(
        {lang: c.line_count for lang, c in corpora.items()}, cfg.temperature, cfg.total_lines, cfg.seed
    )
    (wd / "samples").mkdir(exist_ok=True)
    for lang, corpus in corpora.items():
        save_corpus(draw_sample(corpus, quotas[lang], cfg.seed), wd / "samples" / f"{lang}.txt")
    _write_json(wd / "samples" / "quotas.json", quotas)


def stage_train_langs(cfg: PipelineConfig, wd: Path) -> None:
    samples = _load_samples(cfg, wd)
    jobs = [(samples[lang], cfg.lang_vocab_size, cfg.trainer) for lang in cfg.langs]
    (wd / "lang_vocabs").mkdir(exist_ok=True)
    for lang, vocab in zip(cfg.langs, _map(_train_job, jobs, cfg.workers)):
        vocab.save(wd / "lang_vocabs" / f"{lang}.vocab")


def stage_fingerprint(cfg: PipelineConfig, wd: Path) -> None:
    samples = _load_samples(cfg, wd)
    vocabs = {lang: UnigramVocab.load(wd / "lang_vocabs" / f"{lang}.vocab") for lang in cfg.langs}
    lexicon = build_shared_lexicon(vocabs[lang] for lang in cfg.langs)
    (wd / "freqs").mkdir(exist_ok=True)
    fps = []
    for lang in cfg.langs:
        freq = count_token_frequencies(samples[lang], vocabs[lang])
        freq.save(wd / "freqs" / f"{lang}.tsv")
        fps.append(build_fingerprint(lang, vocabs[lang], freq, lexicon, cfg.fingerprint_mode))
    save_fingerprints(fps, wd / "fingerprints.txt", cfg.fingerprint_mode)


def stage_cluster(cfg: PipelineConfig, wd: Path) -> None:
    fps, _ = load_fingerprints(wd / "fingerprints.txt")
    result = best_of_restarts(fps, cfg.k, cfg.restart_seeds(), cfg.max_iters, cfg.metric)
    result.save(wd / "clusters.tsv", wd / "clusters.json")


def stage_ladder(cfg: PipelineConfig, wd: Path) -> None:
    samples = _load_samples(cfg, wd)
    jobs = [(samples[lang], cfg.ladder(), cfg.trainer) for lang in cfg.langs]
    save_ladders(_map(_ladder_job, jobs, cfg.workers), wd / "ladders.json")


def stage_allocate(cfg: PipelineConfig, wd: Path) -> None:
    ladders = load_ladders(wd / "ladders.json")
    alloc = greedy_allocate(ladders, cfg.greedy_total, cfg.chunk, cfg.floor)
    alloc = rescale(alloc, cfg.capacity, cfg.floor)
    alloc.save(
        wd / "allocation.tsv",
        wd / "allocation.json",
        chunk=cfg.chunk,
        floor=cfg.floor,
        seed=cfg.seed,
        greedy_total=cfg.greedy_total,
    )


def stage_train_clusters(cfg: PipelineConfig, wd: Path) -> None:
    clusters = ClusterAssignment.load(wd / "clusters.tsv", wd / "clusters.json")
    alloc = CapacityAllocation.load(wd / "allocation.tsv")
    quotas = json.loads((wd / "samples" / "quotas.json").read_text(encoding="utf-8"))
    caps = cluster_capacity(alloc, clusters)
    lines = {cid: sum(quotas[m] for m in members) for cid, members in enumerate(clusters.clusters)}
    corpora = build_cluster_corpus(clusters, _load_inputs(cfg), cfg.temperature, lines, cfg.seed)
    (wd / "cluster_corpora").mkdir(exist_ok=True)
    (wd / "cluster_vocabs").mkdir(exist_ok=True)
    cids = sorted(corpora)
    for cid in cids:
        save_corpus(corpora[cid], wd / "cluster_corpora" / f"{cluster_name(cid)}.txt")
    if cfg.workers > 1:
        jobs = [(corpora[cid], caps[cid], cfg.trainer) for cid in cids]
        vocabs = dict(zip(cids, _map(_train_job, jobs, cfg.workers)))
    else:
        vocabs = train_cluster_vocabs(corpora, caps, cfg.trainer)
    for cid in cids:
        vocabs[cid].save(wd / "cluster_vocabs" / f"{cluster_name(cid)}.vocab")


def _cluster_vocab_paths(wd: Path) -> list[Path]:
    meta = json.loads((wd / "clusters.json").read_text(encoding="utf-8"))
    return [wd / "cluster_vocabs" / f"{cluster_name(c)}.vocab" for c in range(meta["k"])]


def stage_merge(cfg: PipelineConfig, wd: Path) -> None:
    vocabs = {cid: UnigramVocab.load(p) for cid, p in enumerate(_cluster_vocab_paths(wd))}
    export_vocab(merge_vocabs(vocabs), wd / "final.vocab")


def stage_analyze(cfg: PipelineConfig, wd: Path) -> None:
    merged = import_vocab(wd / "final.vocab")
    vocab = merged.to_unigram()
    eval_paths = cfg.eval_corpora or cfg.languages
    corpora = {lang: load_corpus(cfg.resolve(p), lang) for lang, p in sorted(eval_paths.items())}
    reports = wd / "reports"
    reports.mkdir(exist_ok=True)

    stats = [fertility(vocab, c) for c in corpora.values()]
    (reports / "fertility.csv").write_text(fertility_csv(stats), encoding="utf-8")

    counts: dict[str, int] = {}
    for c in corpora.values():
        for seg in tokenize_corpus(vocab, c.sentences):
            for tok in seg:
                counts[tok] = counts.get(tok, 0) + 1
    curve = coverage_from_counts(counts)
    (reports / "coverage.csv").write_text(coverage_csv(curve), encoding="utf-8")

    cluster_vocabs = {
        cluster_name(cid): UnigramVocab.load(p) for cid, p in enumerate(_cluster_vocab_paths(wd))
    }
    if len(cluster_vocabs) >= 2:
        overlap = overlap_report(cluster_vocabs)
        (reports / "overlap.csv").write_text(overlap_csv(overlap), encoding="utf-8")
        unique = overlap.unique_fraction
    else:
        (reports / "overlap.csv").write_text("cluster_a,cluster_b,intersection\n", encoding="utf-8")
        unique = {name: 1.0 for name in cluster_vocabs}
    summary = {
        "final_size": len(merged),
        "overlap_count": merged.overlap_count,
        "source_sizes": {cluster_name(c): n for c, n in sorted(merged.source_sizes.items())},
        "unique_fraction": unique,
        "avg_tokens_per_sentence": {s.language: s.avg_tokens_per_sentence for s in stats},
        "utilization_at_0.99": utilization_at(curve, 0.99),
        "types_used": len(curve.points),
    }
    _write_json(reports / "summary.json", summary)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


# --- stage I/O declarations --------------------------------------------------


def _stage_io(stage: str, cfg: PipelineConfig, wd: Path) -> tuple[list[str], list[str]]:
    """Workdir-relative upstream artifacts and outputs of a stage."""
    langs = cfg.langs
    samples = [f"samples/{l}.txt" for l in langs] + ["samples/quotas.json"]
    lang_vocabs = [f"lang_vocabs/{l}.vocab" for l in langs]
    clusters = ["clusters.tsv", "clusters.json"]
    cluster_vocabs = [f"cluster_vocabs/{cluster_name(c)}.vocab" for c in range(cfg.k)]
    final = ["final.vocab", "final.vocab.provenance.json"]
    table = {
        "sample": ([], samples),
        "train-langs": (samples, lang_vocabs),
        "fingerprint": (samples + lang_vocabs, [f"freqs/{l}.tsv" for l in langs] + ["fingerprints.txt"]),
        "cluster": (["fingerprints.txt"], clusters),
        "ladder": (samples, ["ladders.json"]),
        "allocate": (["ladders.json"], ["allocation.tsv", "allocation.json"]),
        "train-clusters": (
            clusters + ["allocation.tsv", "samples/quotas.json"],
            [f"cluster_corpora/{cluster_name(c)}.txt" for c in range(cfg.k)] + cluster_vocabs,
        ),
        "merge": (clusters + cluster_vocabs, final),
        "analyze": (
            clusters + cluster_vocabs + final,
            [f"reports/{n}" for n in ("fertility.csv", "coverage.csv", "overlap.csv", "summary.json")],
        ),
    }
    return table[stage]


def _external_inputs(stage: str, cfg: PipelineConfig) -> dict[str, Path]:
    """Source corpora a stage reads, keyed by a workdir-independent label."""
    if stage in ("sample", "train-clusters"):
        return {f"corpus:{l}": cfg.resolve(cfg.languages[l]) for l in cfg.langs}
    if stage == "analyze":
        paths = cfg.eval_corpora or cfg.languages
        return {f"eval:{l}": cfg.resolve(paths[l]) for l in sorted(paths)}
    return {}


_BODIES: dict[str, Callable[[PipelineConfig, Path], None]] = {
    "sample": stage_sample,
    "train-langs": stage_train_langs,
    "fingerprint": stage_fingerprint,
    "cluster": stage_cluster,
    "ladder": stage_ladder,
    "allocate": stage_allocate,
    "train-clusters": stage_train_clusters,
    "merge": stage_merge,
    "analyze": stage_analyze,
}


def run_stage(stage: str, cfg: PipelineConfig, workdir: str | Path) -> dict:
    """Run one stage after verifying its upstream artifacts; returns the manifest record.

    A stage whose config, seed and input hashes match its previous run, and
    whose outputs are intact, is not re-executed; a ``noop`` record is added.
    """
    if stage not in _BODIES:
        raise ConfigError(f"unknown stage {stage!r}")
    cfg.validate()
    wd = Path(workdir)
    wd.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(wd)
    upstream, outputs = _stage_io(stage, cfg, wd)

    inputs: dict[str, str] = {}
    for rel in upstream:
        path = wd / rel
        if not path.exists():
            raise MissingArtifactError(f"stage {stage!r} needs {rel}; run its upstream stage first")
        digest = sha256_file(path)
        recorded = manifest.producer_hash(rel)
        if recorded is None:
            raise MissingArtifactError(f"{rel} exists but no manifest record produced it")
        if digest != recorded:
            raise DataError(f"{rel} changed since it was produced (hash mismatch); rerun its stage")
        inputs[rel] = digest
    for label, path in _external_inputs(stage, cfg).items():
        inputs[label] = sha256_file(path)

    record = {"stage": stage, "config_hash": cfg.digest(), "seed": cfg.seed, "inputs": inputs}
    prev = manifest.last(stage)
    if (
        prev is not None
        and all(prev[key] == record[key] for key in ("config_hash", "seed", "inputs"))
        and all((wd / rel).exists() and sha256_file(wd / rel) == h for rel, h in prev["outputs"].items())
    ):
        record.update(status="noop", outputs=prev["outputs"])
        log.info("%s: inputs unchanged, skipping", stage)
    else:
        log.info("%s: running", stage)
        try:
            _BODIES[stage](cfg, wd)
        except (ValueError, KeyError, OSError) as exc:
            raise DataError(f"stage {stage!r} failed: {exc}") from exc
        record.update(status="ran", outputs={rel: sha256_file(wd / rel) for rel in outputs})
    manifest.records.append(record)
    manifest.save()
    return record


def run_all(cfg: PipelineConfig, workdir: str | Path) -> list[dict]:
    return [run_stage(stage, cfg, workdir) for stage in STAGES]


def joint_baseline(cfg: PipelineConfig, capacity: int | None = None) -> UnigramVocab:
    """Single vocabulary trained on the pooled temperature sample (no clustering)."""
    corpora = _load_inputs(cfg)
    quotas = temperature_sample(
        {lang: c.line_count for lang, c in corpora.items()}, cfg.temperature, cfg.total_lines, cfg.seed
    )
    pooled = []
    for lang in cfg.langs:
        pooled.extend(draw_sample(corpora[lang], quotas[lang], cfg.seed).sentences)
    return train_unigram(SentenceCorpus("joint", tuple(pooled)), capacity or cfg.capacity, cfg.trainer)


def read_freqs(wd: Path, lang: str) -> FrequencyTable:
    return FrequencyTable.load(wd / "freqs" / f"{lang}.tsv")
