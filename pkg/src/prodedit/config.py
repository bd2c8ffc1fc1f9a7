"""Run configuration: one YAML file drives every CLI command."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends import BackendConfig
from .editing import EditConfig, OptimizerConfig
from .errors import ConfigError
from .evaluation import EvalConfig
from .pipeline import PipelineConfig


@dataclass
class Paths:
    catalog: str = ""
    transcripts: str = ""
    benchmark: str = "benchmark.jsonl"
    stats: str = "stats.txt"
    outcomes: str = "outcomes.jsonl"
    checkpoints: str = "checkpoints"
    report: str = "report.txt"


@dataclass
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    students: list[BackendConfig] = field(default_factory=list)
    judge: BackendConfig | None = None
    scorer: BackendConfig | None = None
    corrector: BackendConfig | None = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    edit: EditConfig = field(default_factory=EditConfig)
    metrics: EvalConfig = field(default_factory=EvalConfig)
    sample_size: int | None = None
    seed: int = 0


def _backend_from_dict(d: dict, default_transcript: str) -> BackendConfig:
    return BackendConfig(
        kind=d.get("kind", "replay"),
        model_id=d.get("model_id", ""),
        endpoint=d.get("endpoint"),
        credentials_env=d.get("credentials_env", ""),
        transcript_path=d.get("transcript_path", default_transcript) or None,
        record=bool(d.get("record", False)),
        max_concurrency=int(d.get("max_concurrency", 4)),
        max_retries=int(d.get("max_retries", 2)),
        backoff_base=float(d.get("backoff_base", 0.5)),
    )


def load_config(path: str | Path) -> RunConfig:
    base = Path(path).parent
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}

    def resolve(p: str) -> str:
        return str((base / p)) if p and not Path(p).is_absolute() else p

    paths_raw = raw.get("paths", {})
    paths = Paths(
        catalog=resolve(paths_raw.get("catalog", "")),
        transcripts=resolve(paths_raw.get("transcripts", "")),
        benchmark=resolve(paths_raw.get("benchmark", "benchmark.jsonl")),
        stats=resolve(paths_raw.get("stats", "stats.txt")),
        outcomes=resolve(paths_raw.get("outcomes", "outcomes.jsonl")),
        checkpoints=resolve(paths_raw.get("checkpoints", "checkpoints")),
        report=resolve(paths_raw.get("report", "report.txt")),
    )

    backends_raw = raw.get("backends", {})
    students = [
        _backend_from_dict(d, paths.transcripts)
        for d in backends_raw.get("students", [])
    ]
    roles = {}
    for role in ("judge", "scorer", "corrector"):
        d = backends_raw.get(role)
        roles[role] = _backend_from_dict(d, paths.transcripts) if d else None

    pipeline_raw = raw.get("pipeline", {})
    pipeline = PipelineConfig(
        plausibility_threshold=float(pipeline_raw.get("threshold", 0.5)),
        max_tokens=int(pipeline_raw.get("max_tokens", 256)),
        temperature=float(pipeline_raw.get("temperature", 0.0)),
        seed=int(pipeline_raw.get("seed", 0)),
        checkpoint_dir=paths.checkpoints,
    )

    edit_raw = raw.get("edit", {})
    opt_raw = edit_raw.get("optimizer", {})
    edit = EditConfig(
        layer=int(edit_raw.get("layer", 2)),
        layers=tuple(edit_raw.get("layers", ())),
        n_prefixes=int(edit_raw.get("n_prefixes", 0)),
        prefix_seed=int(edit_raw.get("prefix_seed", 0)),
        optimizer=OptimizerConfig(
            steps=int(opt_raw.get("steps", 25)),
            step_size=float(opt_raw.get("step_size", 0.5)),
            clamp_factor=float(opt_raw.get("clamp_factor", 4.0)),
        ),
        ft_steps=int(edit_raw.get("ft_steps", 50)),
        ft_step_size=float(edit_raw.get("ft_step_size", 5e-3)),
        lora_rank=int(edit_raw.get("lora_rank", 4)),
        lora_scale=float(edit_raw.get("lora_scale", 1.0)),
        lora_steps=int(edit_raw.get("lora_steps", 50)),
        lora_step_size=float(edit_raw.get("lora_step_size", 5e-2)),
        lora_seed=int(edit_raw.get("lora_seed", 0)),
    )

    metrics_raw = raw.get("metrics", {})
    metrics = EvalConfig(
        locality_horizon=int(metrics_raw.get("locality_horizon", 20)),
        cov_samples=int(metrics_raw.get("cov_samples", 2000)),
        seed=int(metrics_raw.get("seed", raw.get("seed", 0))),
    )

    return RunConfig(
        paths=paths,
        students=students,
        judge=roles["judge"],
        scorer=roles["scorer"],
        corrector=roles["corrector"],
        pipeline=pipeline,
        edit=edit,
        metrics=metrics,
        sample_size=raw.get("pipeline", {}).get("sample_size"),
        seed=int(raw.get("seed", 0)),
    )


def validate_for_build(cfg: RunConfig) -> None:
    if not cfg.paths.catalog or not Path(cfg.paths.catalog).exists():
        raise ConfigError(f"catalog file not found: {cfg.paths.catalog!r}")
    if not cfg.students:
        raise ConfigError("at least one student backend is required")
    for role, backend in (
        ("judge", cfg.judge),
        ("scorer", cfg.scorer),
        ("corrector", cfg.corrector),
    ):
        if backend is None:
            raise ConfigError(f"backend role {role!r} is not bound")
    for backend in [*cfg.students, cfg.judge, cfg.scorer, cfg.corrector]:
        if backend.kind == "replay" and not Path(backend.transcript_path).exists():
            raise ConfigError(
                f"replay transcript not found: {backend.transcript_path!r}"
            )
