"""Reliability / locality / portability metrics and experiment aggregation.

Metrics are token-level greedy-argmax accuracies under teacher forcing (REL,
POR) and post-vs-pre top-1 agreement over a fixed decoding horizon (LOC).
Each sample is evaluated edit -> measure -> revert, with the revert
guaranteed on every path.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmark import EditSample
from .editing import (
    CovStats,
    EditConfig,
    EditRequest,
    WeightDelta,
    apply_delta,
    estimate_covariance,
    ft_update,
    lora_update,
    memit_update,
    revert_delta,
    rome_update,
)
from .errors import MetricError, ProdEditError
from .model import TinyTransformer

logger = logging.getLogger(__name__)

METHODS = ("ft", "lora", "rome", "memit")


@dataclass(frozen=True)
class EditOutcome:
    sample_id: str
    method: str
    model_id: str
    kind: str
    rel: float
    loc: float | None = None
    por: float | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "method": self.method,
            "model_id": self.model_id,
            "kind": self.kind,
            "rel": self.rel,
            "loc": self.loc,
            "por": self.por,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EditOutcome":
        return cls(**d)


@dataclass
class EvalConfig:
    locality_horizon: int = 20
    cov_samples: int = 2000
    cov_corpus: list[str] = field(default_factory=list)
    seed: int = 0


def target_token_accuracy(model: TinyTransformer, prompt: str, target: str) -> float:
    """Fraction of target positions where the greedy top-1 equals the target token."""
    prompt_ids = model.tokenizer.encode(prompt)
    target_ids = model.tokenizer.encode(target)
    if not target_ids:
        raise MetricError(f"target {target!r} tokenizes to zero tokens")
    if not prompt_ids:
        raise MetricError("prompt tokenizes to zero tokens")
    ids = prompt_ids + target_ids
    logits = model.forward(ids).logits
    positions = np.arange(len(prompt_ids) - 1, len(ids) - 1)
    predicted = logits[positions].argmax(axis=-1)
    return float((predicted == np.asarray(target_ids)).mean())


def evaluate_sample(
    model: TinyTransformer,
    delta: WeightDelta,
    sample: EditSample,
    cfg: EvalConfig | None = None,
    method: str = "",
    model_id: str = "",
) -> EditOutcome:
    """Measure REL/LOC/POR for one sample; model weights are always restored."""
    cfg = cfg or EvalConfig()

    pre_continuations = []
    for probe in sample.locality:
        ids = model.tokenizer.encode(probe.prompt)
        pre_continuations.append(model.greedy_continue(ids, cfg.locality_horizon))

    apply_delta(model, delta)
    try:
        rel = target_token_accuracy(model, sample.edit_prompt, sample.target_new)
        loc = None
        if sample.locality:
            agreements = []
            for probe, pre in zip(sample.locality, pre_continuations):
                ids = model.tokenizer.encode(probe.prompt)
                post = model.greedy_continue(ids, cfg.locality_horizon)
                agreements.append(
                    float(np.mean([a == b for a, b in zip(pre, post)])) if pre else 1.0
                )
            loc = float(np.mean(agreements))
        por = None
        if sample.portability:
            por = float(
                np.mean(
                    [
                        target_token_accuracy(model, probe.prompt, probe.target)
                        for probe in sample.portability
                    ]
                )
            )
    finally:
        revert_delta(model, delta)
    return EditOutcome(
        sample_id=sample.sample_id,
        method=method or delta.method.lower(),
        model_id=model_id,
        kind=sample.kind,
        rel=rel,
        loc=loc,
        por=por,
    )


def default_cov_corpus(samples: list[EditSample], seed: int = 0) -> list[str]:
    """Locality prompts from the benchmark plus a seeded synthetic filler corpus."""
    corpus = [probe.prompt for sample in samples for probe in sample.locality]
    rng = np.random.default_rng(seed)
    for _ in range(32):
        length = int(rng.integers(40, 120))
        chars = rng.integers(32, 127, size=length)
        corpus.append("".join(chr(c) for c in chars))
    return corpus


def compute_delta(
    model: TinyTransformer,
    method: str,
    sample: EditSample,
    edit_cfg: EditConfig,
    covs: dict[int, CovStats],
) -> WeightDelta:
    request = EditRequest(
        subject=sample.subject, prompt=sample.edit_prompt, target=sample.target_new
    )
    if method == "ft":
        return ft_update(model, request, edit_cfg)
    if method == "lora":
        return lora_update(model, request, edit_cfg)
    if method == "rome":
        return rome_update(model, request, covs[edit_cfg.layer], edit_cfg)
    if method == "memit":
        layers = edit_cfg.memit_layers(model.n_layers)
        return memit_update(model, [request], [covs[l] for l in layers], edit_cfg)
    raise ValueError(f"unknown editing method {method!r}; expected one of {METHODS}")


def run_experiment(
    model: TinyTransformer,
    method: str,
    samples: list[EditSample],
    edit_cfg: EditConfig | None = None,
    eval_cfg: EvalConfig | None = None,
    model_id: str = "toy",
    outcome_path: str | Path | None = None,
) -> list[EditOutcome]:
    """Sequential per-sample edit -> evaluate -> revert over a benchmark.

    Resumable: outcomes already present in ``outcome_path`` are kept and
    their samples skipped. Per-sample failures are logged and the run
    continues.
    """
    if method not in METHODS:
        raise ValueError(f"unknown editing method {method!r}; expected one of {METHODS}")
    edit_cfg = edit_cfg or EditConfig()
    eval_cfg = eval_cfg or EvalConfig()

    done: dict[str, EditOutcome] = {}
    if outcome_path is not None and Path(outcome_path).exists():
        for outcome in read_outcomes(outcome_path):
            if outcome.method == method and outcome.model_id == model_id:
                done[outcome.sample_id] = outcome

    covs: dict[int, CovStats] = {}
    if method in ("rome", "memit"):
        layers = (
            (edit_cfg.layer,)
            if method == "rome"
            else edit_cfg.memit_layers(model.n_layers)
        )
        corpus = eval_cfg.cov_corpus or default_cov_corpus(samples, eval_cfg.seed)
        for layer in layers:
            covs[layer] = estimate_covariance(model, layer, corpus, eval_cfg.cov_samples)

    outcomes: list[EditOutcome] = []
    for sample in samples:
        if sample.sample_id in done:
            outcomes.append(done[sample.sample_id])
            continue
        try:
            delta = compute_delta(model, method, sample, edit_cfg, covs)
            outcome = evaluate_sample(
                model, delta, sample, eval_cfg, method=method, model_id=model_id
            )
        except ProdEditError as exc:
            logger.warning("sample %s skipped: %s", sample.sample_id, exc)
            continue
        outcomes.append(outcome)
        if outcome_path is not None:
            append_outcome(outcome, outcome_path)
    return outcomes


def append_outcome(outcome: EditOutcome, path: str | Path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(outcome.to_dict(), ensure_ascii=False) + "\n")


def read_outcomes(path: str | Path) -> list[EditOutcome]:
    outcomes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                outcomes.append(EditOutcome.from_dict(json.loads(line)))
    return outcomes


def _mean_pct(values: list[float]) -> float | None:
    return float(np.mean(values)) * 100.0 if values else None


@dataclass
class AggregateReport:
    """Per-(method, model) REL/LOC/POR means x100 with feature/intention splits."""

    cells: dict = field(default_factory=dict)  # (method, model) -> metrics dict
    counts: dict = field(default_factory=dict)  # (method, model) -> sample count

    @property
    def methods(self) -> list[str]:
        return sorted({m for m, _ in self.cells})

    @property
    def models(self) -> list[str]:
        return sorted({mid for _, mid in self.cells})

    def to_dict(self) -> dict:
        return {
            "cells": {
                f"{method}/{model}": metrics
                for (method, model), metrics in sorted(self.cells.items())
            },
            "counts": {
                f"{method}/{model}": count
                for (method, model), count in sorted(self.counts.items())
            },
        }


def aggregate(outcomes: list[EditOutcome]) -> AggregateReport:
    groups: dict[tuple[str, str], list[EditOutcome]] = {}
    for outcome in outcomes:
        groups.setdefault((outcome.method, outcome.model_id), []).append(outcome)

    report = AggregateReport()
    for key, group in groups.items():
        metrics = {}
        for metric in ("rel", "loc", "por"):
            defined = [getattr(o, metric) for o in group if getattr(o, metric) is not None]
            metrics[metric] = _mean_pct(defined)
            for kind in ("feature", "intention"):
                kind_values = [
                    getattr(o, metric)
                    for o in group
                    if o.kind == kind and getattr(o, metric) is not None
                ]
                metrics[f"{metric}_{kind}"] = _mean_pct(kind_values)
        report.cells[key] = metrics
        report.counts[key] = len(group)
    return report


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_report(report: AggregateReport) -> str:
    """Aligned text table: methods x models with REL/LOC/POR rows and splits."""
    models = report.models
    header = ["Method", "Metric"] + models + ["Total/Avg.", "Feature", "Intention"]
    rows = [header]
    count_row = ["#", ""]
    for model in models:
        count_row.append(
            f"{sum(c for (m, mid), c in report.counts.items() if mid == model):,}"
        )
    total = sum(report.counts.values())
    count_row += [f"{total:,}", "", ""]
    rows.append(count_row)
    for method in report.methods:
        for metric in ("rel", "loc", "por"):
            row = [method.upper() if metric == "rel" else "", metric.upper()]
            values, weights = [], []
            for model in models:
                cell = report.cells.get((method, model))
                value = cell.get(metric) if cell else None
                row.append(_fmt(value))
                if value is not None:
                    values.append(value)
                    weights.append(report.counts[(method, model)])
            avg = (
                float(np.average(values, weights=weights)) if values else None
            )
            row.append(_fmt(avg))
            for kind in ("feature", "intention"):
                kind_vals, kind_weights = [], []
                for model in models:
                    cell = report.cells.get((method, model))
                    value = cell.get(f"{metric}_{kind}") if cell else None
                    if value is not None:
                        kind_vals.append(value)
                        kind_weights.append(report.counts[(method, model)])
                row.append(
                    _fmt(
                        float(np.average(kind_vals, weights=kind_weights))
                        if kind_vals
                        else None
                    )
                )
            rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(
                cell.ljust(widths[j]) if j < 2 else cell.rjust(widths[j])
                for j, cell in enumerate(row)
            ).rstrip()
        )
        if i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines)


def multiple_choice_accuracy(
    model: TinyTransformer, items: list[tuple[str, list[str], int]]
) -> float:
    """Generic hook for multiple-choice benchmarks.

    Each item is (prompt, choices, answer_index); a choice is scored by its
    mean target NLL and the lowest-NLL choice wins.
    """
    if not items:
        raise MetricError("no multiple-choice items supplied")
    correct = 0
    for prompt, choices, answer_index in items:
        prompt_ids = model.tokenizer.encode(prompt)
        nlls = [
            model.target_nll(prompt_ids, model.tokenizer.encode(choice))
            for choice in choices
        ]
        if int(np.argmin(nlls)) == answer_index:
            correct += 1
    return correct / len(items)
