"""Command-line entry point: ``tabweave <subcommand> [options] INPUT...``.

Exit codes: 0 success, 1 input or output error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import FORMAT_VERSIONS, __version__
from .annotate import extract_features, classify_rule_based, nearest_region
from .bayes import read_training_jsonl, train, write_training_jsonl
from .config import build_config, load_config_file
from .detection import DetectionParams, detect_tables
from .errors import ConfigError, InputError, TabweaveError
from .grid import load_document
from .pipeline import STAGES, Corpus, cmd_pipeline

log = logging.getLogger("tabweave")

# flag dest -> config key
_OVERRIDES = {
    "min_cells": "min_cells", "bridge_rows": "bridge_rows", "bridge_cols": "bridge_cols",
    "morphology": "morphology", "model": "model", "taxonomy": "taxonomy", "lexicon": "lexicon",
    "tau": "tau", "epsilon": "epsilon", "seed": "layout_seed", "iterations": "layout_iterations",
    "step": "layout_step", "recommend": "recommend", "include_zero": "include_zero",
    "out": "output", "delimiter": "delimiter", "encoding": "encoding",
    "dataset_name": "dataset_name", "provider": "provider", "jobs": "jobs",
    "figures": "figures", "timings": "timings",
}


def _version_text() -> str:
    formats = ", ".join(f"{k}={v}" for k, v in sorted(FORMAT_VERSIONS.items()))
    return f"tabweave {__version__} (formats: {formats})"


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("inputs", nargs="+", help="CSV or grid-JSON documents")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("-o", "--out", default=S, help="output directory (default: out)")
    p.add_argument("-j", "--jobs", type=int, default=S, help="documents processed in parallel")
    p.add_argument("--delimiter", default=S, help="CSV delimiter (use 'tab' for tabs)")
    p.add_argument("--encoding", default=S, help="input encoding (only utf-8 is supported)")
    g = p.add_argument_group("detection")
    g.add_argument("--min-cells", type=int, default=S)
    g.add_argument("--bridge-rows", type=int, default=S)
    g.add_argument("--bridge-cols", type=int, default=S)
    g.add_argument("--morphology", action=argparse.BooleanOptionalAction, default=S)
    g = p.add_argument_group("classification and matching")
    g.add_argument("--model", default=S, help="naive Bayes model file (default: rule-based)")
    g.add_argument("--taxonomy", default=S, help="concept taxonomy JSON (default: bundled)")
    g.add_argument("--lexicon", default=S, help="synonym lexicon JSON (default: bundled)")
    g.add_argument("--tau", type=float, default=S, help="correspondence threshold in (0, 1]")
    g = p.add_argument_group("clustering")
    g.add_argument("--epsilon", type=float, default=S, help="cluster edge threshold")
    g.add_argument("--seed", type=int, default=S, help="layout seed")
    g.add_argument("--iterations", type=int, default=S, help="layout iterations")
    g.add_argument("--step", type=float, default=S, help="initial layout step")
    g.add_argument("--recommend", type=int, default=S, help="recommendations per document")
    g.add_argument("--include-zero", action=argparse.BooleanOptionalAction, default=S,
                   help="also recommend documents with zero similarity")
    g = p.add_argument_group("output")
    g.add_argument("--dataset-name", default=S)
    g.add_argument("--provider", default=S)
    g.add_argument("--figures", action=argparse.BooleanOptionalAction, default=S,
                   help="also render PNG figures")
    g.add_argument("--timings", action=argparse.BooleanOptionalAction, default=S,
                   help="record per-document timings in run_report.json")


def build_parser() -> argparse.ArgumentParser:
    # -v/-q are accepted before or after the subcommand
    noise = argparse.ArgumentParser(add_help=False)
    noise.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                       help="more log output on stderr")
    noise.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS,
                       help="only errors on stderr")
    parser = argparse.ArgumentParser(prog="tabweave", parents=[noise],
                                     description="Recover tables from spreadsheets, match, cluster and export them.")
    parser.add_argument("--version", action="version", version=_version_text())
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "detect": "write regions.json",
        "annotate": "write annotations.json",
        "match": "write correspondences.json",
        "cluster": "write similarity.csv, clusters.json, layout.json and clusters.svg",
        "flatten": "write flat/*.csv, including integrated tables",
        "export": "write a bundle/ with metadata.xml and CSV files",
        "pipeline": "run every stage and write run_report.json",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text, description=text, parents=[noise]))

    t = sub.add_parser("train", help="train a naive Bayes cell classifier", parents=[noise],
                       description="Train from JSON-lines examples, or from documents labelled by the rules.")
    t.add_argument("inputs", nargs="+", help=".jsonl example files or documents")
    t.add_argument("--model-out", required=True, help="where to write the model")
    t.add_argument("--examples-out", help="also write the collected examples as JSON lines")
    t.add_argument("--alpha", type=float, default=1.0, help="Laplace smoothing constant")
    t.add_argument("--delimiter", default=",")
    t.add_argument("--min-cells", type=int, default=4)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    level = logging.ERROR if quiet else (logging.DEBUG if verbose > 1 else
                                         logging.INFO if verbose else logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def self_label(path: str, delimiter: str = ",", min_cells: int = 4):
    """Rule-labelled (features, role) examples for every cell near a detected table."""
    doc = load_document(path, delimiter=delimiter)
    examples = []
    for sheet in doc.sheets:
        regions = detect_tables(sheet.grid, DetectionParams(min_cells=min_cells))
        if not regions:
            continue
        for i in range(sheet.grid.n):
            for j in range(sheet.grid.m):
                region = nearest_region(regions, i, j)
                f = extract_features(sheet.grid, region, i, j, regions)
                examples.append((f, classify_rule_based(f)))
    return examples


def _cmd_train(args) -> str:
    if args.alpha <= 0:
        raise ConfigError(f"alpha: {args.alpha} is below the allowed range")
    examples = []
    for path in args.inputs:
        if path.endswith(".jsonl"):
            examples += read_training_jsonl(path)
        else:
            examples += self_label(path, args.delimiter, args.min_cells)
    try:
        model = train(examples, alpha=args.alpha)
    except ValueError as exc:
        raise InputError(f"no training examples in {', '.join(args.inputs)}") from exc
    model.save(args.model_out)
    if args.examples_out:
        write_training_jsonl(args.examples_out, examples)
    return f"train: {len(examples)} example(s) -> {args.model_out}"


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(getattr(args, "verbose", 0), getattr(args, "quiet", False))
    try:
        if args.command == "train":
            print(_cmd_train(args))
            return 0
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {_OVERRIDES[k]: v for k, v in vars(args).items() if k in _OVERRIDES}
        cfg = build_config(file_values, overrides)
        corpus = Corpus(args.inputs, cfg)
        out = Path(cfg.output)
        stage = cmd_pipeline if args.command == "pipeline" else STAGES[args.command]
        result = stage(corpus, out)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except TabweaveError as exc:
        log.error("%s", exc)
        return 1
    print(f"{result.summary} -> {out}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
