"""Pipeline stage parsing and the end-to-end staged run over replay scripts."""

import pytest

from prodedit import prompts
from prodedit.backends import call_counter
from prodedit.errors import DegenerateCorrectionError, ParseError, VerdictParseError
from prodedit.pipeline import (
    INTENTION_PREFIX,
    Claim,
    PipelineConfig,
    association_statement,
    conceptualize,
    generate_features,
    generate_intention,
    judge_claim,
    parse_feature_lines,
    parse_verdict,
    propose_correction,
    run_stage_pipeline,
    RunManifest,
)


def feature_claim(text, product_id="B0TEST001"):
    return Claim(
        claim_id=f"{product_id}:s:feature:0",
        product_id=product_id,
        kind="feature",
        text=text,
        source_model="s",
    )


class TestFeatureParsing:
    def test_plain_lines(self):
        assert parse_feature_lines("A\nB\nC") == ["A", "B", "C"]

    def test_markers_stripped(self):
        assert parse_feature_lines("1. A\n2. B") == ["A", "B"]
        assert parse_feature_lines("- A\n* B\n• C") == ["A", "B", "C"]

    def test_pure_noise_yields_nothing(self):
        noise = "[ 1 ]  [ 3 ]  [ 5 ]  [ 7 ]  [ 9 ]  [ 11 ]  [ 13 ]  [ 15 ]"
        assert parse_feature_lines(noise) == []

    def test_generate_features(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_feature", {"name": product.title}),
            "Ceramic coating\nOven safe\nDishwasher safe",
        )
        claims = generate_features(product, backend.config)
        assert [c.text for c in claims] == [
            "Ceramic coating",
            "Oven safe",
            "Dishwasher safe",
        ]
        assert all(c.kind == "feature" for c in claims)

    def test_surplus_lines_discarded(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_feature", {"name": product.title}),
            "A\nB\nC\nD\nE",
        )
        assert len(generate_features(product, backend.config)) == 3

    def test_garbage_completion_yields_zero_claims(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_feature", {"name": product.title}),
            "[ 1 ]  [ 3 ]  [ 5 ]",
        )
        assert generate_features(product, backend.config) == []


class TestIntention:
    def test_compliant(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_intention", {"name": product.title}),
            "The intention of buying this is to listen to music and take calls",
        )
        claim = generate_intention(product, backend.config)
        assert claim.kind == "intention"
        assert claim.prefix_compliant

    def test_noncompliant_flagged_not_dropped(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_intention", {"name": product.title}),
            "Cooking dinner at home",
        )
        claim = generate_intention(product, backend.config)
        assert not claim.prefix_compliant
        assert claim.text == "Cooking dinner at home"

    def test_whitespace_normalized(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_intention", {"name": product.title}),
            "  The intention of buying this is to   cook \n\n",
        )
        claim = generate_intention(product, backend.config)
        assert claim.text == "The intention of buying this is to cook"
        assert claim.prefix_compliant

    def test_empty_completion(self, product, scripted):
        backend = scripted("student-a")
        backend.script(
            prompts.render_prompt("student_intention", {"name": product.title}), "\n  "
        )
        with pytest.raises(ParseError):
            generate_intention(product, backend.config)


class TestVerdictParsing:
    def test_yes(self):
        verdict = parse_verdict("c1", "yes", "judge")
        assert verdict.is_correct
        assert verdict.explanation is None
        assert verdict.suggested_correction is None

    def test_no_with_correction(self):
        verdict = parse_verdict(
            "c1",
            "No. This laptop has 12GB RAM, not 4GB. Corrected: Up to 12GB RAM",
            "judge",
        )
        assert not verdict.is_correct
        assert "12GB RAM" in verdict.explanation
        assert "Up to 12GB RAM" in verdict.suggested_correction

    def test_neither_raises(self):
        with pytest.raises(VerdictParseError):
            parse_verdict("c1", "maybe", "judge")

    def test_rejudge_once_then_give_up(self, product, scripted):
        backend = scripted("judge-x")
        claim = feature_claim("Adjustable Height")
        backend.script(
            prompts.render_prompt(
                "judge_feature", {"name": product.title, "feature": claim.text}
            ),
            "maybe",
        )
        counter = call_counter(backend.config)
        with pytest.raises(VerdictParseError):
            judge_claim(claim, product, backend.config)
        assert counter.calls == 2

    def test_judge_intention_binding(self, product, scripted):
        backend = scripted("judge-x")
        claim = Claim(
            claim_id="c1",
            product_id=product.product_id,
            kind="intention",
            text=f"{INTENTION_PREFIX} cook",
            source_model="s",
        )
        backend.script(
            prompts.render_prompt(
                "judge_intention",
                {
                    "name": product.title,
                    "detail_key": "intention of buying",
                    "detail_value": claim.text,
                },
            ),
            "yes",
        )
        assert judge_claim(claim, product, backend.config).is_correct


class TestConceptualize:
    def test_concepts_scored_and_thresholded(self, product, scripted):
        judge = scripted("judge-x", "judge.jsonl")
        scorer = scripted("scorer-v", "scorer.jsonl")
        claim = feature_claim("Adjustable Height")
        judge.script(
            prompts.render_prompt(
                "conceptualize",
                {"product": product.title, "feature_or_intention": claim.text},
            ),
            "White Wood Chairs\nKids Furniture Set",
        )
        scorer.script(
            association_statement("White Wood Chairs", claim), "0.9", max_tokens=8
        )
        scorer.script(
            association_statement("Kids Furniture Set", claim), "0.2", max_tokens=8
        )
        concepts = conceptualize(product, claim, judge.config, scorer.config)
        assert [c.kept for c in concepts.concepts] == [True, False]
        assert concepts.concepts[0].plausibility == 0.9

    def test_at_most_five(self, product, scripted):
        judge = scripted("judge-x", "judge.jsonl")
        scorer = scripted("scorer-v", "scorer.jsonl")
        claim = feature_claim("whatever")
        lines = [f"Concept number {i}" for i in range(7)]
        judge.script(
            prompts.render_prompt(
                "conceptualize",
                {"product": product.title, "feature_or_intention": claim.text},
            ),
            "\n".join(lines),
        )
        for line in lines[:5]:
            scorer.script(association_statement(line, claim), "0.6", max_tokens=8)
        concepts = conceptualize(product, claim, judge.config, scorer.config)
        assert len(concepts.concepts) == 5

    def test_all_below_threshold(self, product, scripted):
        judge = scripted("judge-x", "judge.jsonl")
        scorer = scripted("scorer-v", "scorer.jsonl")
        claim = feature_claim("whatever")
        judge.script(
            prompts.render_prompt(
                "conceptualize",
                {"product": product.title, "feature_or_intention": claim.text},
            ),
            "Alpha thing\nBeta thing",
        )
        scorer.script(association_statement("Alpha thing", claim), "0.1", max_tokens=8)
        scorer.script(association_statement("Beta thing", claim), "0.2", max_tokens=8)
        concepts = conceptualize(product, claim, judge.config, scorer.config)
        assert all(not c.kept for c in concepts.concepts)

    def test_intention_statement_strips_prefix(self):
        claim = Claim(
            claim_id="c",
            product_id="p",
            kind="intention",
            text=f"{INTENTION_PREFIX} cook dinner.",
            source_model="s",
        )
        statement = association_statement("frying pan", claim)
        assert statement == "People buy a frying pan in order to cook dinner."


class TestCorrection:
    def test_correction(self, product, scripted):
        backend = scripted("corrector-c")
        claim = feature_claim("made from high-quality stainless steel")
        backend.script(
            prompts.render_prompt(
                "correct_feature",
                {"name": product.title, "feature_or_intention": claim.text},
            ),
            "Durable eco-friendly ceramic nonstick coating",
            image_uri=product.image_uri,
        )
        correction = propose_correction(product, claim, backend.config)
        assert "ceramic" in correction.corrected_text
        assert correction.used_image is (product.image_uri is not None)

    def test_echo_is_degenerate(self, product, scripted):
        backend = scripted("corrector-c")
        claim = feature_claim("Adjustable Height")
        backend.script(
            prompts.render_prompt(
                "correct_feature",
                {"name": product.title, "feature_or_intention": claim.text},
            ),
            "Adjustable Height",
            image_uri=product.image_uri,
        )
        with pytest.raises(DegenerateCorrectionError):
            propose_correction(product, claim, backend.config)


def script_two_product_run(scripted, products, wrong_product_id):
    """Transcripts for 2 products x 1 student with exactly one wrong feature."""
    student = scripted("student-a", "t.jsonl")
    judge = scripted("judge-x", "t.jsonl")
    scorer = scripted("scorer-v", "t.jsonl")
    corrector = scripted("corrector-c", "t.jsonl")
    for product in products:
        student.script(
            prompts.render_prompt("student_feature", {"name": product.title}),
            "Good feature one\nGood feature two",
        )
        intent = f"{INTENTION_PREFIX} use it daily"
        student.script(
            prompts.render_prompt("student_intention", {"name": product.title}), intent
        )
        wrong = product.product_id == wrong_product_id
        judge.script(
            prompts.render_prompt(
                "judge_feature", {"name": product.title, "feature": "Good feature one"}
            ),
            "No. That is wrong. Corrected: Better feature" if wrong else "yes",
        )
        judge.script(
            prompts.render_prompt(
                "judge_feature", {"name": product.title, "feature": "Good feature two"}
            ),
            "yes",
        )
        judge.script(
            prompts.render_prompt(
                "judge_intention",
                {
                    "name": product.title,
                    "detail_key": "intention of buying",
                    "detail_value": intent,
                },
            ),
            "yes",
        )
        if wrong:
            judge.script(
                prompts.render_prompt(
                    "conceptualize",
                    {
                        "product": product.title,
                        "feature_or_intention": "Good feature one",
                    },
                ),
                "General gadget",
            )
            claim = feature_claim("Good feature one", product.product_id)
            scorer.script(
                association_statement("General gadget", claim), "0.8", max_tokens=8
            )
            corrector.script(
                prompts.render_prompt(
                    "correct_feature",
                    {
                        "name": product.title,
                        "feature_or_intention": "Good feature one",
                    },
                ),
                "A genuinely better feature",
                image_uri=product.image_uri,
            )
    return student, judge, scorer, corrector


class TestStagePipeline:
    def _products(self):
        from prodedit.catalog import Category, ProductRecord

        return [
            ProductRecord(
                product_id=f"B0RUN00{i}",
                title=f"Pipeline Test Product {i}",
                category=Category.ELECTRONICS,
                description=f"Description {i}",
            )
            for i in (1, 2)
        ]

    def test_all_yes_yields_zero_candidates(self, scripted, tmp_path):
        products = self._products()
        student, judge, scorer, corrector = script_two_product_run(
            scripted, products, wrong_product_id=None
        )
        candidates = run_stage_pipeline(
            products,
            [student.config],
            judge.config,
            scorer.config,
            corrector.config,
            PipelineConfig(),
        )
        assert candidates == []

    def test_one_wrong_feature_one_candidate(self, scripted):
        products = self._products()
        student, judge, scorer, corrector = script_two_product_run(
            scripted, products, wrong_product_id="B0RUN002"
        )
        candidates = run_stage_pipeline(
            products,
            [student.config],
            judge.config,
            scorer.config,
            corrector.config,
            PipelineConfig(),
        )
        assert len(candidates) == 1
        candidate = candidates[0]
        assert candidate.claim.kind == "feature"
        assert candidate.claim.product_id == "B0RUN002"
        assert candidate.correction.corrected_text == "A genuinely better feature"
        assert [c.text for c in candidate.kept_concepts] == ["General gadget"]

    def test_checkpoint_resume_zero_backend_calls(self, scripted, tmp_path):
        products = self._products()
        student, judge, scorer, corrector = script_two_product_run(
            scripted, products, wrong_product_id="B0RUN002"
        )
        cfg = PipelineConfig(checkpoint_dir=str(tmp_path / "ckpt"))
        args = (
            products,
            [student.config],
            judge.config,
            scorer.config,
            corrector.config,
            cfg,
        )
        first = run_stage_pipeline(*args)
        calls_after_first = sum(
            call_counter(c).calls
            for c in (student.config, judge.config, scorer.config, corrector.config)
        )
        second = run_stage_pipeline(*args)
        calls_after_second = sum(
            call_counter(c).calls
            for c in (student.config, judge.config, scorer.config, corrector.config)
        )
        assert calls_after_second == calls_after_first
        assert second == first

    def test_per_item_error_recorded_not_fatal(self, scripted):
        products = self._products()
        # Script only the first product; the second hits cache misses.
        student, judge, scorer, corrector = script_two_product_run(
            scripted, products[:1], wrong_product_id=None
        )
        manifest = RunManifest()
        candidates = run_stage_pipeline(
            products,
            [student.config],
            judge.config,
            scorer.config,
            corrector.config,
            PipelineConfig(),
            manifest,
        )
        assert candidates == []
        assert manifest.errors
