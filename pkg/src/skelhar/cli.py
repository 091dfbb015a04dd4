"""``skelhar`` command line: run / inspect / synth.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .dataset import Corpus, EmptyCorpusError, MalformedLineError, describe, generate_synthetic_corpus, load_corpus, save_cache
from .evaluation import ExperimentResult, run_loso_experiment
from .reports import write_cell_reports, write_grid, write_results

log = logging.getLogger("skelhar")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class DataError(RuntimeError):
    pass


def load_experiment_corpus(config: ExperimentConfig) -> Corpus:
    if config.synthetic is not None:
        s = config.synthetic
        return generate_synthetic_corpus(s.seed, s.subjects, s.classes, s.frames_per_recording)
    try:
        return load_corpus(config.corpus_path)
    except (OSError, EmptyCorpusError, MalformedLineError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load corpus {config.corpus_path}: {exc}") from exc


def _run_cell(args) -> tuple[str, str, ExperimentResult]:
    corpus, config, method, mode = args
    res = run_loso_experiment(
        corpus,
        config.method_spec(method),
        mode,
        config.scene_policy,
        config.seed,
        config.include_random_still,
    )
    return method, mode, res


def run_grid(config: ExperimentConfig, corpus: Optional[Corpus] = None) -> dict[tuple[str, str], ExperimentResult]:
    """Run every (method, mode) cell and write the report files to ``config.out``."""
    started = time.perf_counter()
    if corpus is None:
        corpus = load_experiment_corpus(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    work = [(corpus, config, method, mode) for method in config.methods for mode in config.modes]
    if config.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            finished = list(pool.map(_run_cell, work))
    else:
        finished = [_run_cell(w) for w in work]
    cells = {(method, mode): res for method, mode, res in finished}

    write_grid(out / "grid.csv", cells, config.methods, config.modes)
    write_results(out / "results.csv", cells)
    for (method, mode), res in cells.items():
        write_cell_reports(out, method, mode, res, config.svg)
        log.info("%s / %s: accuracy %.2f%%", method, mode, 100 * res.report.accuracy)

    manifest = {
        "config": config.to_dict(),
        "seed": config.seed,
        "corpus": {"provenance": corpus.provenance, "recordings": len(corpus), "frames": corpus.n_frames},
        "versions": {"skelhar": __version__, "python": platform.python_version(), "numpy": np.__version__},
        "svm_coding": "one_vs_rest",
        "wall_time_s": round(time.perf_counter() - started, 3),
        "argv": sys.argv,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return cells


def _print_grid(cells, config: ExperimentConfig):
    width = max(len(m) for m in config.modes)
    print(f"{'mode':<{width}}  " + "  ".join(f"{m.upper():>8}" for m in config.methods))
    for mode in config.modes:
        row = [f"{100 * cells[(m, mode)].report.accuracy:7.2f}%" for m in config.methods]
        print(f"{mode:<{width}}  " + "  ".join(row))


def cmd_run(args) -> int:
    overrides = {("run", "seed"): args.seed, ("run", "out"): args.out, ("run", "jobs"): args.jobs}
    try:
        if args.config:
            config = load_config(args.config, overrides=overrides)
        else:
            config = parse_config("", overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cells = run_grid(config)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _print_grid(cells, config)
    print(f"reports written to {config.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            corpus = load_corpus(args.path)
    except (OSError, EmptyCorpusError, MalformedLineError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    info = describe(corpus)
    print(f"provenance: {info['provenance']}")
    print(f"subjects:   {len(info['subjects'])} {info['subjects']}")
    print(f"scenes:     {len(info['scenes'])} {', '.join(info['scenes'])}")
    print(f"labels:     {len(info['labels'])}")
    for name in info["labels"]:
        print(f"  - {name}")
    print(f"recordings: {info['recordings']}")
    print(f"frames:     {info['frames']}")
    for s in info["subjects"]:
        print(f"  subject {s}: {info['recordings_per_subject'][s]} recordings, {info['frames_per_subject'][s]} frames")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.out is None:
        print("config error: synth needs --out DIR", file=sys.stderr)
        return EXIT_CONFIG
    try:
        corpus = generate_synthetic_corpus(args.seed if args.seed is not None else 7, args.subjects, args.classes, args.frames)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = save_cache(corpus, args.out)
    print(f"wrote {len(paths)} recordings to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skelhar", description="Skeleton-based activity recognition experiments on CAD-60.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the method x preconditioning grid with leave-one-subject-out")
    run.add_argument("--config", type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--jobs", type=int)
    run.set_defaults(func=cmd_run)

    inspect = sub.add_parser("inspect", help="summarize a corpus directory")
    inspect.add_argument("path", type=Path)
    inspect.set_defaults(func=cmd_inspect)

    synth = sub.add_parser("synth", help="write a synthetic corpus as JSON recordings")
    synth.add_argument("--out", type=Path)
    synth.add_argument("--seed", type=int)
    synth.add_argument("--subjects", type=int, default=4)
    synth.add_argument("--classes", type=int, default=3)
    synth.add_argument("--frames", type=int, default=60)
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
