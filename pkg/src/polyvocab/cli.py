"""Command-line entry point: one subcommand per pipeline stage, plus tokenize and run-all.

Without ``--config`` the bundled three-language toy corpus is used.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from .corpus import normalize_text
from .pipeline import STAGES, DataError, MissingArtifactError, PipelineConfig, PipelineError, run_stage
from .ulm import UnigramVocab, VocabError, viterbi_tokenize

EXIT_OK = 0


def toy_config_path() -> Path:
    return Path(str(resources.files("polyvocab") / "data" / "toy" / "config.json"))


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config or toy_config_path())
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    return cfg


def _cmd_stage(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    rec = run_stage(args.command, cfg, args.workdir)
    print(f"{rec['stage']}: {rec['status']}")
    return EXIT_OK


def _cmd_run_all(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    stages = [args.stage_only] if args.stage_only else STAGES
    for stage in stages:
        rec = run_stage(stage, cfg, args.workdir)
        print(f"{rec['stage']}: {rec['status']}")
    return EXIT_OK


def _cmd_tokenize(args: argparse.Namespace) -> int:
    for path in (args.vocab, args.input):
        if path and not Path(path).is_file():
            raise MissingArtifactError(f"no such file: {path}")
    try:
        vocab = UnigramVocab.load(args.vocab)
        text = Path(args.input).read_text(encoding="utf-8") if args.input else None
    except OSError as exc:
        raise MissingArtifactError(str(exc)) from exc
    except (UnicodeDecodeError, VocabError) as exc:
        raise DataError(str(exc)) from exc
    if text is None:
        text = args.text if args.text is not None else sys.stdin.read()
    for line in text.splitlines():
        norm = normalize_text(line)
        tokens = viterbi_tokenize(vocab, norm).tokens if norm else ()
        print(args.delimiter.join(tokens))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyvocab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON (default: bundled toy corpus)")
    common.add_argument("--workdir", default="work", help="directory for artifacts and manifest")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--workers", type=int, help="parallel processes for per-language work")

    for stage in STAGES:
        p = sub.add_parser(stage, parents=[common], help=f"run the {stage} stage")
        p.set_defaults(func=_cmd_stage)

    p = sub.add_parser("run-all", parents=[common], help="run every stage in order")
    p.add_argument("--stage-only", choices=STAGES, help="run just this stage")
    p.set_defaults(func=_cmd_run_all)

    p = sub.add_parser("tokenize", help="segment text with a trained vocab")
    p.add_argument("vocab", help="vocab TSV (per-language, per-cluster or merged)")
    p.add_argument("text", nargs="?", help="text to tokenize; reads stdin if omitted")
    p.add_argument("--input", help="file to tokenize, one sentence per line")
    p.add_argument("--delimiter", default=" ", help="separator between tokens")
    p.set_defaults(func=_cmd_tokenize)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
