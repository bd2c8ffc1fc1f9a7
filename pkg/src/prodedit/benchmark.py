"""Benchmark assembly: edit samples, locality/portability probes, statistics.

Benchmark files are versioned JSON lines: a header line carrying the schema
version, then one sample per line.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backends import BackendConfig, GenRequest, complete
from .catalog import Category
from .errors import SchemaVersionError
from .pipeline import EditCandidate

logger = logging.getLogger(__name__)

SCHEMA_NAME = "prodedit-benchmark"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LocalityProbe:
    prompt: str
    # Filled at evaluation time with the pre-edit model's continuation.
    reference_completion: str = ""


@dataclass(frozen=True)
class PortabilityProbe:
    prompt: str
    replaced_subject: str
    target: str


@dataclass(frozen=True)
class EditSample:
    sample_id: str
    kind: str  # "feature" | "intention"
    category: Category
    subject: str
    edit_prompt: str
    target_new: str
    ground_truth: str
    source_model: str
    locality: tuple[LocalityProbe, ...] = ()
    portability: tuple[PortabilityProbe, ...] = ()

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "kind": self.kind,
            "category": self.category.value,
            "subject": self.subject,
            "edit_prompt": self.edit_prompt,
            "target_new": self.target_new,
            "ground_truth": self.ground_truth,
            "source_model": self.source_model,
            "locality": [
                {"prompt": p.prompt, "reference_completion": p.reference_completion}
                for p in self.locality
            ],
            "portability": [
                {
                    "prompt": p.prompt,
                    "replaced_subject": p.replaced_subject,
                    "target": p.target,
                }
                for p in self.portability
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EditSample":
        return cls(
            sample_id=d["sample_id"],
            kind=d["kind"],
            category=Category(d["category"]),
            subject=d["subject"],
            edit_prompt=d["edit_prompt"],
            target_new=d["target_new"],
            ground_truth=d["ground_truth"],
            source_model=d["source_model"],
            locality=tuple(LocalityProbe(**p) for p in d.get("locality", [])),
            portability=tuple(PortabilityProbe(**p) for p in d.get("portability", [])),
        )


def make_edit_prompt(subject: str, kind: str) -> str:
    """Cloze-shaped edit prompt the edited model must complete with the target."""
    if not subject:
        raise ValueError("subject must be nonempty")
    if kind == "feature":
        return f"One feature of {subject} is"
    if kind == "intention":
        return f"The intention of buying {subject} is to"
    raise ValueError(f"unknown claim kind: {kind!r}")


_NEIGHBOR_SENTENCE = re.compile(r"^The (.+?) of (.+) is (.+)$", re.DOTALL)


def build_locality_probe(
    product, judge: BackendConfig, max_tokens: int = 256
) -> LocalityProbe | None:
    """Distracting-neighbor probe from an unrelated attribute of the product.

    Returns None when the product has no usable attribute text or the judge
    cannot produce a template-conforming sentence.
    """
    description = product.description
    if not description and product.details:
        description = "; ".join(f"{k}: {v}" for k, v in product.details.items())
    if not description:
        return None
    prompt = prompts.render_prompt(
        "locality_distracting_neighbor",
        {"product": product.title, "description": description},
    )
    response = complete(GenRequest(prompt, judge.model_id, max_tokens), judge)
    sentence = response.text.strip().splitlines()[0].strip() if response.text.strip() else ""
    match = _NEIGHBOR_SENTENCE.match(sentence)
    if not match:
        logger.warning(
            "locality sentence for %s does not match the template: %r",
            product.product_id,
            sentence[:80],
        )
        return None
    attribute = match.group(1).strip()
    return LocalityProbe(prompt=f"The {attribute} of {product.title} is")


def build_portability_probe(
    subject: str, edit_prompt: str, target_new: str, judge: BackendConfig,
    max_tokens: int = 64,
) -> PortabilityProbe | None:
    """Subject-replacement probe; None when the judge returns the subject unchanged."""
    prompt = prompts.render_prompt("portability_subject_replace", {"product": subject})
    response = complete(GenRequest(prompt, judge.model_id, max_tokens), judge)
    lines = [ln.strip() for ln in response.text.splitlines() if ln.strip()]
    if not lines:
        return None
    replaced = lines[0]
    if replaced == subject or subject not in edit_prompt:
        return None
    return PortabilityProbe(
        prompt=edit_prompt.replace(subject, replaced, 1),
        replaced_subject=replaced,
        target=target_new,
    )


def assemble_samples(
    candidates: list[EditCandidate], judge: BackendConfig
) -> list[EditSample]:
    """Build one sample per candidate plus one per kept concept.

    Probes are attached when constructible; a sample with no probes is still
    emitted.
    """
    samples: list[EditSample] = []
    for candidate in candidates:
        base_id = candidate.claim.claim_id
        subjects = [(base_id, candidate.product.title)]
        subjects += [
            (f"{base_id}-c{i}", concept.text)
            for i, concept in enumerate(candidate.kept_concepts)
        ]
        try:
            locality = build_locality_probe(candidate.product, judge)
        except Exception as exc:  # noqa: BLE001 - probe loss is non-fatal
            logger.warning("locality probe failed for %s: %s", base_id, exc)
            locality = None
        for sample_id, subject in subjects:
            edit_prompt = make_edit_prompt(subject, candidate.claim.kind)
            target_new = candidate.correction.corrected_text
            ground_truth = candidate.claim.text
            local_probes: tuple[LocalityProbe, ...] = ()
            if locality is not None and target_new not in locality.prompt and (
                ground_truth not in locality.prompt
            ):
                local_probes = (locality,)
            try:
                portability = build_portability_probe(
                    subject, edit_prompt, target_new, judge
                )
            except Exception as exc:  # noqa: BLE001
                logger.warning("portability probe failed for %s: %s", sample_id, exc)
                portability = None
            samples.append(
                EditSample(
                    sample_id=sample_id,
                    kind=candidate.claim.kind,
                    category=candidate.product.category,
                    subject=subject,
                    edit_prompt=edit_prompt,
                    target_new=target_new,
                    ground_truth=ground_truth,
                    source_model=candidate.claim.source_model,
                    locality=local_probes,
                    portability=(portability,) if portability else (),
                )
            )
    return samples


def write_benchmark(samples: list[EditSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps({"schema": SCHEMA_NAME, "version": SCHEMA_VERSION}) + "\n"
        )
        for sample in samples:
            fh.write(json.dumps(sample.to_dict(), ensure_ascii=False) + "\n")


def read_benchmark(
    path: str | Path, errors: list[str] | None = None
) -> list[EditSample]:
    """Load a benchmark file; corrupt sample lines are collected, not fatal."""
    samples: list[EditSample] = []
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        if header_line:
            header = json.loads(header_line)
            version = header.get("version")
            if header.get("schema") != SCHEMA_NAME or version != SCHEMA_VERSION:
                raise SchemaVersionError(version, SCHEMA_VERSION)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(EditSample.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                message = f"line {lineno}: corrupt sample: {exc}"
                logger.warning("%s: %s", path, message)
                if errors is not None:
                    errors.append(message)
    return samples


@dataclass
class StatsTable:
    """Per-category feature/intention/total counts plus grand totals."""

    rows: dict[Category, dict[str, int]] = field(default_factory=dict)

    @property
    def totals(self) -> dict[str, int]:
        out = {"feature": 0, "intention": 0, "total": 0}
        for counts in self.rows.values():
            for key in out:
                out[key] += counts[key]
        return out

    def to_dict(self) -> dict:
        return {
            "rows": {
                cat.display_name: dict(counts) for cat, counts in self.rows.items()
            },
            "totals": self.totals,
        }


def compute_stats(samples: list[EditSample]) -> StatsTable:
    table = StatsTable(
        rows={c: {"feature": 0, "intention": 0, "total": 0} for c in Category}
    )
    for sample in samples:
        counts = table.rows[sample.category]
        counts[sample.kind] += 1
        counts["total"] += 1
    return table


def render_stats(table: StatsTable) -> str:
    """Aligned text rendering: category rows, Feature/Intention/Total columns."""
    header = ("Product Category", "Feature", "Intention", "Total")
    rows = [header]
    for cat in Category:
        counts = table.rows.get(cat, {"feature": 0, "intention": 0, "total": 0})
        rows.append(
            (
                cat.display_name,
                f"{counts['feature']:,}",
                f"{counts['intention']:,}",
                f"{counts['total']:,}",
            )
        )
    totals = table.totals
    rows.append(
        ("Total", f"{totals['feature']:,}", f"{totals['intention']:,}", f"{totals['total']:,}")
    )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(
                cell.ljust(widths[0]) if j == 0 else cell.rjust(widths[j])
                for j, cell in enumerate(row)
            ).rstrip()
        )
        if i == 0 or i == len(rows) - 2:
            lines.append("-" * (sum(widths) + 6))
    return "\n".join(lines)
