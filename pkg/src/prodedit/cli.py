"""Command-line entry points: build-benchmark, stats, edit-eval, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import benchmark as bm
from . import evaluation as ev
from .catalog import load_catalog, sample_products
from .config import RunConfig, load_config, validate_for_build
from .errors import ConfigError, ProdEditError
from .model import TinyTransformer
from .pipeline import RunManifest, run_stage_pipeline

logger = logging.getLogger(__name__)


def cmd_build(cfg: RunConfig) -> int:
    try:
        validate_for_build(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    catalog = load_catalog(cfg.paths.catalog)
    if cfg.sample_size is not None and cfg.sample_size < len(catalog):
        catalog = sample_products(catalog, cfg.sample_size, cfg.seed)
    manifest = RunManifest()
    candidates = run_stage_pipeline(
        catalog,
        cfg.students,
        cfg.judge,
        cfg.scorer,
        cfg.corrector,
        cfg.pipeline,
        manifest,
    )
    samples = bm.assemble_samples(candidates, cfg.judge)
    Path(cfg.paths.benchmark).parent.mkdir(parents=True, exist_ok=True)
    bm.write_benchmark(samples, cfg.paths.benchmark)
    table = bm.compute_stats(samples)
    stats_text = bm.render_stats(table)
    Path(cfg.paths.stats).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.paths.stats).write_text(stats_text + "\n", encoding="utf-8")
    Path(cfg.paths.stats).with_suffix(".json").write_text(
        json.dumps(table.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(stats_text)
    print(f"wrote {len(samples)} samples to {cfg.paths.benchmark}")
    if manifest.errors:
        print(
            f"{len(manifest.errors)} item(s) failed; first: "
            f"{manifest.errors[0]['item_id']} at {manifest.errors[0]['stage']}: "
            f"{manifest.errors[0]['error']}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_stats(cfg: RunConfig) -> int:
    if not Path(cfg.paths.benchmark).exists():
        print(f"benchmark file not found: {cfg.paths.benchmark}", file=sys.stderr)
        return 2
    samples = bm.read_benchmark(cfg.paths.benchmark)
    print(bm.render_stats(bm.compute_stats(samples)))
    return 0


def cmd_edit_eval(cfg: RunConfig, method: str, model_path: str) -> int:
    if not Path(cfg.paths.benchmark).exists():
        print(f"benchmark file not found: {cfg.paths.benchmark}", file=sys.stderr)
        return 2
    if not Path(model_path).exists():
        print(f"model checkpoint not found: {model_path}", file=sys.stderr)
        return 2
    samples = bm.read_benchmark(cfg.paths.benchmark)
    model = TinyTransformer.load(model_path)
    Path(cfg.paths.outcomes).parent.mkdir(parents=True, exist_ok=True)
    outcomes = ev.run_experiment(
        model,
        method,
        samples,
        edit_cfg=cfg.edit,
        eval_cfg=cfg.metrics,
        model_id=Path(model_path).stem,
        outcome_path=cfg.paths.outcomes,
    )
    print(f"{len(outcomes)} outcome(s) in {cfg.paths.outcomes}")
    return 0


def cmd_report(cfg: RunConfig, outcome_paths: list[str] | None = None) -> int:
    paths = [Path(p) for p in (outcome_paths or [cfg.paths.outcomes])]
    existing = [p for p in paths if p.exists()]
    if not existing:
        print("no outcome files found", file=sys.stderr)
        return 2
    outcomes = []
    for path in existing:
        outcomes.extend(ev.read_outcomes(path))
    if not outcomes:
        print("outcome files contain no outcomes", file=sys.stderr)
        return 2
    report = ev.aggregate(outcomes)
    text = ev.render_report(report)
    print(text)
    Path(cfg.paths.report).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.paths.report).write_text(text + "\n", encoding="utf-8")
    Path(cfg.paths.report).with_suffix(".json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodedit",
        description="Build product knowledge-editing benchmarks and evaluate edits.",
    )
    parser.add_argument("--config", required=True, help="path to the run config YAML")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-benchmark", help="run the pipeline and write the benchmark")
    sub.add_parser("stats", help="print dataset statistics for the benchmark")
    edit = sub.add_parser("edit-eval", help="edit and evaluate a model on the benchmark")
    edit.add_argument("--method", required=True, choices=list(ev.METHODS))
    edit.add_argument("--model", required=True, help="path to a toy model checkpoint")
    report = sub.add_parser("report", help="aggregate outcomes into a report")
    report.add_argument("outcomes", nargs="*", help="outcome files (default: config path)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "build-benchmark":
            return cmd_build(cfg)
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "edit-eval":
            return cmd_edit_eval(cfg, args.method, args.model)
        if args.command == "report":
            return cmd_report(cfg, args.outcomes or None)
    except ProdEditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
