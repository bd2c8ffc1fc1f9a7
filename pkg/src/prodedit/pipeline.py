"""Claim generation, judging, conceptualization, and correction stages.

Each product flows through: student generation -> judge ruling -> (for wrong
claims) conceptualization + plausibility scoring + correction, yielding one
edit candidate per incorrect claim. Stage outputs are checkpointed as JSON
lines so a rerun resumes without repeating backend calls.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backends import BackendConfig, GenRequest, complete, plausibility
from .catalog import ProductRecord
from .errors import DegenerateCorrectionError, ParseError, VerdictParseError

logger = logging.getLogger(__name__)

INTENTION_PREFIX = "The intention of buying this is to"
MAX_FEATURES_PER_CALL = 3
MAX_CONCEPTS = 5

_LIST_MARKER = re.compile(r"^\s*(?:[-*•]|\(?\d+[.)\]]?|\[\s*\d+\s*\])\s*")


@dataclass(frozen=True)
class Claim:
    claim_id: str
    product_id: str
    kind: str  # "feature" | "intention"
    text: str
    source_model: str
    prefix_compliant: bool = True


@dataclass(frozen=True)
class Verdict:
    claim_id: str
    is_correct: bool
    judge_model: str
    explanation: str | None = None
    suggested_correction: str | None = None


@dataclass(frozen=True)
class Concept:
    text: str
    plausibility: float
    kept: bool


@dataclass(frozen=True)
class ConceptSet:
    claim_id: str
    concepts: tuple[Concept, ...] = ()


@dataclass(frozen=True)
class Correction:
    claim_id: str
    corrected_text: str
    corrector_model: str
    used_image: bool = False


@dataclass(frozen=True)
class EditCandidate:
    """Everything needed to build benchmark samples for one wrong claim."""

    product: ProductRecord
    claim: Claim
    verdict: Verdict
    concepts: ConceptSet
    correction: Correction

    @property
    def kept_concepts(self) -> list[Concept]:
        return [c for c in self.concepts.concepts if c.kept]


@dataclass
class PipelineConfig:
    plausibility_threshold: float = 0.5
    max_tokens: int = 256
    temperature: float = 0.0
    seed: int = 0
    checkpoint_dir: str | None = None


def _normalize(text: str) -> str:
    return " ".join(text.split())


def parse_feature_lines(completion: str) -> list[str]:
    """Split a student completion into cleaned feature strings.

    List markers and numbering are stripped; lines without any letters are
    treated as noise (the hallucination failure mode) and dropped.
    """
    features = []
    for line in completion.splitlines():
        cleaned = _normalize(_LIST_MARKER.sub("", line.strip()))
        if cleaned and any(ch.isalpha() for ch in cleaned):
            features.append(cleaned)
    return features


def generate_features(
    product: ProductRecord, student: BackendConfig, cfg: PipelineConfig | None = None
) -> list[Claim]:
    cfg = cfg or PipelineConfig()
    prompt = prompts.render_prompt("student_feature", {"name": product.title})
    response = complete(
        GenRequest(prompt, student.model_id, cfg.max_tokens, cfg.temperature), student
    )
    lines = parse_feature_lines(response.text)
    if not lines:
        logger.warning(
            "no parseable feature lines for product %s (model %s)",
            product.product_id,
            student.model_id,
        )
        return []
    if len(lines) > MAX_FEATURES_PER_CALL:
        logger.warning(
            "model %s returned %d feature lines for %s; keeping first %d",
            student.model_id,
            len(lines),
            product.product_id,
            MAX_FEATURES_PER_CALL,
        )
        lines = lines[:MAX_FEATURES_PER_CALL]
    return [
        Claim(
            claim_id=f"{product.product_id}:{student.model_id}:feature:{i}",
            product_id=product.product_id,
            kind="feature",
            text=text,
            source_model=student.model_id,
        )
        for i, text in enumerate(lines)
    ]


def generate_intention(
    product: ProductRecord, student: BackendConfig, cfg: PipelineConfig | None = None
) -> Claim:
    cfg = cfg or PipelineConfig()
    prompt = prompts.render_prompt("student_intention", {"name": product.title})
    response = complete(
        GenRequest(prompt, student.model_id, cfg.max_tokens, cfg.temperature), student
    )
    text = _normalize(response.text)
    if not text:
        raise ParseError(
            f"empty intention completion for product {product.product_id}"
        )
    return Claim(
        claim_id=f"{product.product_id}:{student.model_id}:intention:0",
        product_id=product.product_id,
        kind="intention",
        text=text,
        source_model=student.model_id,
        prefix_compliant=text.startswith(INTENTION_PREFIX),
    )


_CORRECTION_MARKER = re.compile(r"corrected[^:]*:\s*", re.IGNORECASE)


def parse_verdict(claim_id: str, completion: str, judge_model: str) -> Verdict:
    """Interpret a judge completion as yes/no plus explanation and correction."""
    stripped = completion.strip()
    lowered = stripped.lower()
    if lowered.startswith("yes"):
        return Verdict(claim_id=claim_id, is_correct=True, judge_model=judge_model)
    if lowered.startswith("no"):
        remainder = stripped[2:].lstrip(".,:; ")
        match = _CORRECTION_MARKER.search(remainder)
        if match:
            explanation = remainder[: match.start()].strip()
            suggestion = remainder[match.end() :].strip() or None
        else:
            explanation = remainder.strip()
            suggestion = None
        return Verdict(
            claim_id=claim_id,
            is_correct=False,
            judge_model=judge_model,
            explanation=explanation or stripped,
            suggested_correction=suggestion,
        )
    raise VerdictParseError(
        f"judge completion for {claim_id} is neither yes nor no: {stripped[:80]!r}"
    )


def _judge_prompt(claim: Claim, product: ProductRecord) -> str:
    if claim.kind == "feature":
        return prompts.render_prompt(
            "judge_feature", {"name": product.title, "feature": claim.text}
        )
    # The generic detail-checking template is bound to the intention slot.
    return prompts.render_prompt(
        "judge_intention",
        {
            "name": product.title,
            "detail_key": "intention of buying",
            "detail_value": claim.text,
        },
    )


def judge_claim(
    claim: Claim,
    product: ProductRecord,
    judge: BackendConfig,
    cfg: PipelineConfig | None = None,
) -> Verdict:
    """Ask the judge to rule on a claim; one automatic retry on a parse failure."""
    cfg = cfg or PipelineConfig()
    prompt = _judge_prompt(claim, product)
    last_error: VerdictParseError | None = None
    for attempt in range(2):
        req = GenRequest(prompt, judge.model_id, cfg.max_tokens, cfg.temperature)
        response = complete(req, judge)
        try:
            return parse_verdict(claim.claim_id, response.text, judge.model_id)
        except VerdictParseError as exc:
            last_error = exc
            if attempt == 0:
                logger.warning("re-judging %s after parse failure", claim.claim_id)
    raise last_error


def association_statement(concept: str, claim: Claim) -> str:
    """Declarative sentence tying a concept to the claim, for the scorer."""
    if claim.kind == "feature":
        return f"A {concept} has the feature: {claim.text}."
    body = claim.text
    if body.startswith(INTENTION_PREFIX):
        body = "to" + body[len(INTENTION_PREFIX) :]
    return f"People buy a {concept} in order {body.rstrip('.')}."


def conceptualize(
    product: ProductRecord,
    claim: Claim,
    judge: BackendConfig,
    scorer: BackendConfig,
    cfg: PipelineConfig | None = None,
) -> ConceptSet:
    cfg = cfg or PipelineConfig()
    prompt = prompts.render_prompt(
        "conceptualize", {"product": product.title, "feature_or_intention": claim.text}
    )
    response = complete(
        GenRequest(prompt, judge.model_id, cfg.max_tokens, cfg.temperature), judge
    )
    lines = [
        _normalize(_LIST_MARKER.sub("", line.strip()))
        for line in response.text.splitlines()
    ]
    lines = [ln for ln in lines if ln and any(ch.isalpha() for ch in ln)]
    concepts = []
    for text in lines[:MAX_CONCEPTS]:
        score = plausibility(association_statement(text, claim), scorer)
        concepts.append(
            Concept(text=text, plausibility=score, kept=score >= cfg.plausibility_threshold)
        )
    return ConceptSet(claim_id=claim.claim_id, concepts=tuple(concepts))


def propose_correction(
    product: ProductRecord,
    claim: Claim,
    corrector: BackendConfig,
    cfg: PipelineConfig | None = None,
) -> Correction:
    cfg = cfg or PipelineConfig()
    template = "correct_feature" if claim.kind == "feature" else "correct_intention"
    prompt = prompts.render_prompt(
        template, {"name": product.title, "feature_or_intention": claim.text}
    )
    image = product.image_uri
    req = GenRequest(
        prompt, corrector.model_id, cfg.max_tokens, cfg.temperature, image_uri=image
    )
    response = complete(req, corrector)
    corrected = _normalize(response.text)
    if not corrected or corrected == _normalize(claim.text):
        raise DegenerateCorrectionError(
            f"corrector echoed the original claim for {claim.claim_id}"
        )
    return Correction(
        claim_id=claim.claim_id,
        corrected_text=corrected,
        corrector_model=corrector.model_id,
        used_image=image is not None,
    )


class CheckpointStore:
    """Append-only JSONL store of per-item stage results, keyed by item id."""

    def __init__(self, directory: str | Path, stage: str):
        self.path = Path(directory) / f"{stage}.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._done: dict[str, dict] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = json.loads(line)
                        self._done[rec["item_id"]] = rec["payload"]

    def get(self, item_id: str) -> dict | None:
        return self._done.get(item_id)

    def put(self, item_id: str, payload: dict) -> None:
        with self._lock:
            if item_id in self._done:
                return
            self._done[item_id] = payload
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps({"item_id": item_id, "payload": payload}, ensure_ascii=False)
                    + "\n"
                )


@dataclass
class RunManifest:
    """Per-item failures collected across a pipeline run."""

    errors: list[dict] = field(default_factory=list)

    def record(self, item_id: str, stage: str, exc: Exception) -> None:
        logger.warning("pipeline item %s failed at %s: %s", item_id, stage, exc)
        self.errors.append({"item_id": item_id, "stage": stage, "error": str(exc)})


def _candidate_to_payload(candidate: EditCandidate) -> dict:
    return {
        "product": candidate.product.to_dict(),
        "claim": candidate.claim.__dict__,
        "verdict": candidate.verdict.__dict__,
        "concepts": [c.__dict__ for c in candidate.concepts.concepts],
        "correction": candidate.correction.__dict__,
    }


def _candidate_from_payload(payload: dict) -> EditCandidate:
    return EditCandidate(
        product=ProductRecord.from_dict(payload["product"]),
        claim=Claim(**payload["claim"]),
        verdict=Verdict(**payload["verdict"]),
        concepts=ConceptSet(
            claim_id=payload["claim"]["claim_id"],
            concepts=tuple(Concept(**c) for c in payload["concepts"]),
        ),
        correction=Correction(**payload["correction"]),
    )


def run_stage_pipeline(
    products: list[ProductRecord],
    students: list[BackendConfig],
    judge: BackendConfig,
    scorer: BackendConfig,
    corrector: BackendConfig,
    cfg: PipelineConfig,
    manifest: RunManifest | None = None,
) -> list[EditCandidate]:
    """Run generation -> judging -> conceptualization -> correction end to end.

    Work items are (product, student) pairs; each incorrect claim yields one
    EditCandidate. Completed items are checkpointed and skipped on rerun.
    """
    manifest = manifest if manifest is not None else RunManifest()
    store = None
    if cfg.checkpoint_dir:
        store = CheckpointStore(cfg.checkpoint_dir, "candidates")

    candidates: list[EditCandidate] = []
    for product in products:
        for student in students:
            item_id = f"{product.product_id}:{student.model_id}"
            if store is not None:
                cached = store.get(item_id)
                if cached is not None:
                    candidates.extend(
                        _candidate_from_payload(p) for p in cached["candidates"]
                    )
                    continue
            try:
                item_candidates = _run_item(
                    product, student, judge, scorer, corrector, cfg, manifest
                )
            except Exception as exc:  # noqa: BLE001 - run never aborts on one item
                manifest.record(item_id, "item", exc)
                continue
            candidates.extend(item_candidates)
            if store is not None:
                store.put(
                    item_id,
                    {"candidates": [_candidate_to_payload(c) for c in item_candidates]},
                )
    return candidates


def _run_item(
    product: ProductRecord,
    student: BackendConfig,
    judge: BackendConfig,
    scorer: BackendConfig,
    corrector: BackendConfig,
    cfg: PipelineConfig,
    manifest: RunManifest,
) -> list[EditCandidate]:
    claims: list[Claim] = []
    try:
        claims.extend(generate_features(product, student, cfg))
    except Exception as exc:  # noqa: BLE001
        manifest.record(product.product_id, "generate_features", exc)
    try:
        claims.append(generate_intention(product, student, cfg))
    except Exception as exc:  # noqa: BLE001
        manifest.record(product.product_id, "generate_intention", exc)

    candidates = []
    for claim in claims:
        try:
            verdict = judge_claim(claim, product, judge, cfg)
        except Exception as exc:  # noqa: BLE001
            manifest.record(claim.claim_id, "judge_claim", exc)
            continue
        if verdict.is_correct:
            continue
        try:
            concepts = conceptualize(product, claim, judge, scorer, cfg)
        except Exception as exc:  # noqa: BLE001
            manifest.record(claim.claim_id, "conceptualize", exc)
            concepts = ConceptSet(claim_id=claim.claim_id)
        try:
            correction = propose_correction(product, claim, corrector, cfg)
        except DegenerateCorrectionError as exc:
            manifest.record(claim.claim_id, "propose_correction", exc)
            continue
        except Exception as exc:  # noqa: BLE001
            manifest.record(claim.claim_id, "propose_correction", exc)
            continue
        candidates.append(
            EditCandidate(
                product=product,
                claim=claim,
                verdict=verdict,
                concepts=concepts,
                correction=correction,
            )
        )
    return candidates
