"""Walk through the benchmark-building pipeline on the shipped fixtures.

Everything here replays pre-recorded model transcripts, so the run is fully
offline and deterministic. Outputs land in demos/out/.
"""

import logging
from pathlib import Path

from prodedit.backends import BackendConfig
from prodedit.benchmark import assemble_samples, compute_stats, render_stats, write_benchmark
from prodedit.catalog import load_catalog
from prodedit.pipeline import PipelineConfig, RunManifest, run_stage_pipeline

HERE = Path(__file__).parent
FIXTURES = HERE.parent / "fixtures"
OUT = HERE / "out"

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


def replay(model_id):
    return BackendConfig(
        kind="replay",
        model_id=model_id,
        transcript_path=str(FIXTURES / "transcripts.jsonl"),
    )


def main():
    OUT.mkdir(exist_ok=True)

    catalog = load_catalog(FIXTURES / "catalog_25.jsonl")
    print(f"Loaded {len(catalog)} products across "
          f"{len({p.category for p in catalog})} categories.\n")

    print("Stage 1-4: claim generation, judging, conceptualization, correction.")
    print("Each claim a student model makes is checked by the judge; wrong claims")
    print("are abstracted to broader concepts and paired with a correction.\n")
    manifest = RunManifest()
    candidates = run_stage_pipeline(
        catalog,
        students=[replay("student-a")],
        judge=replay("judge-x"),
        scorer=replay("scorer-v"),
        corrector=replay("corrector-c"),
        cfg=PipelineConfig(),
        manifest=manifest,
    )
    print(f"{len(candidates)} wrong claims survived judging:")
    for candidate in candidates:
        kept = ", ".join(c.text for c in candidate.kept_concepts) or "(none)"
        print(f"  - [{candidate.claim.kind}] {candidate.product.title}")
        print(f"      claimed:   {candidate.claim.text}")
        print(f"      corrected: {candidate.correction.corrected_text}")
        print(f"      concepts:  {kept}")

    print("\nStage 5: attach locality and portability probes, fan out concepts.")
    samples = assemble_samples(candidates, replay("judge-x"))
    write_benchmark(samples, OUT / "benchmark.jsonl")
    print(f"Wrote {len(samples)} edit samples to {OUT / 'benchmark.jsonl'}\n")

    print(render_stats(compute_stats(samples)))


if __name__ == "__main__":
    main()
