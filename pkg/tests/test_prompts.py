"""Golden tests pinning every prompt template byte-for-byte."""

import pytest

from prodedit.errors import TemplateError
from prodedit.prompts import TEMPLATES, render_prompt

# Expected renderings are written out literally here so any drift in the
# template constants fails loudly.

GOLDEN = {
    "student_feature": (
        {"name": "JBL Reference 410 Headphone -Black"},
        "Consider this product: JBL Reference 410 Headphone -Black.\n"
        "What are the features of it?\n"
        "Please ONLY give AT MOST 3 features and start each feature with a new line.",
    ),
    "student_intention": (
        {"name": "JBL Reference 410 Headphone -Black"},
        "A customer buys a product: JBL Reference 410 Headphone -Black. "
        "What is the intention of buying it?\n"
        "Please be concise and ONLY answer in ONE sentence. "
        "Start with 'The intention of buying this is to'.",
    ),
    "judge_feature": (
        {"name": "Frying Pan", "feature": "stainless steel body"},
        "Consider this product: Frying Pan.\n"
        "Do you think it has this feature: stainless steel body?\n"
        "Please first answer yes or no. If it is yes, just return 'yes'. "
        "If it is no, please provide a brief explanation and corrected features.\n"
        "Answer:",
    ),
    "judge_intention": (
        {
            "name": "Frying Pan",
            "detail_key": "intention of buying",
            "detail_value": "to cook",
        },
        "A customer buys a product: Frying Pan. Consider this product: Frying Pan.\n"
        "Do you think the product's intention of buying is to cook?\n"
        "Please first answer yes or no. If it is yes, just return 'yes'. "
        "If it is no, please provide a brief explanation and corrected product detail.\n"
        "Answer:",
    ),
    "correct_feature": (
        {"name": "Frying Pan", "feature_or_intention": "stainless steel body"},
        "Consider this product:\n"
        "Frying Pan\n"
        "Currently, somebody has identified a wrong feature: stainless steel body\n"
        "Please suggest a better, modified, concise, and most importantly, "
        "a correct feature.",
    ),
    "correct_intention": (
        {"name": "Frying Pan", "feature_or_intention": "to swim"},
        "Consider this product:\n"
        "Frying Pan\n"
        "Currently, somebody has identified a wrong intention for buying this item: "
        "to swim\n"
        "Please suggest a better, modified, and correct intention.",
    ),
    "conceptualize": (
        {"product": "Frying Pan", "feature_or_intention": "stainless steel body"},
        "Please replace this product with another term: Frying Pan.\n"
        "You should not change the meaning of it. You can use a synonym or a "
        "general term.\n"
        "It should be the same as the original product, which all of them should "
        "not have this feature/intention: stainless steel body.\n"
        "Please return at most 5 conceptualized products/product categories. "
        "They should be reasonable, and each of them should be separated by a "
        "new line.",
    ),
    "portability_subject_replace": (
        {"product": "Frying Pan"},
        "Please replace this subject with another term: Frying Pan.\n"
        "You should not change the meaning of it. You can use a synonym or a "
        "general term. Please only return the new subject.",
    ),
    "locality_distracting_neighbor": (
        {"product": "Frying Pan", "description": "A ceramic pan."},
        "Consider this product: Frying Pan.\n"
        "Here is a description of the product: A ceramic pan..\n"
        "Please construct a sentence using the description based on the following "
        "template: The [ATTRIBUTE] of [PRODUCT] is xxx.\n"
        "Please make sure the attribute is easily inferable from the product name.",
    ),
}


@pytest.mark.parametrize("template_id", sorted(TEMPLATES))
def test_golden(template_id):
    bindings, expected = GOLDEN[template_id]
    assert render_prompt(template_id, bindings) == expected


def test_every_template_has_a_golden():
    assert set(GOLDEN) == set(TEMPLATES)


def test_feature_prompt_contains_key_phrases():
    text = render_prompt("student_feature", {"name": "X"})
    assert "Consider this product: X." in text
    assert "AT MOST 3 features" in text


def test_intention_prompt_contains_prefix_instruction():
    text = render_prompt("student_intention", {"name": "X"})
    assert "Start with 'The intention of buying this is to'" in text


def test_missing_placeholder():
    with pytest.raises(TemplateError) as exc:
        render_prompt("judge_feature", {"name": "X"})
    assert exc.value.missing == "feature"


def test_unknown_template_id():
    with pytest.raises(KeyError):
        render_prompt("no_such_template", {})
