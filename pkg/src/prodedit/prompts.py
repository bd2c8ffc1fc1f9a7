"""Prompt templates for every LLM call in the pipeline.

Template text is frozen; the golden tests in tests/test_prompts.py pin the
exact bytes. Rendering is strict: every placeholder must be bound.
"""

from __future__ import annotations

import string

from .errors import TemplateError

STUDENT_FEATURE = (
    "Consider this product: {name}.\n"
    "What are the features of it?\n"
    "Please ONLY give AT MOST 3 features and start each feature with a new line."
)

STUDENT_INTENTION = (
    "A customer buys a product: {name}. What is the intention of buying it?\n"
    "Please be concise and ONLY answer in ONE sentence. "
    "Start with 'The intention of buying this is to'."
)

JUDGE_FEATURE = (
    "Consider this product: {name}.\n"
    "Do you think it has this feature: {feature}?\n"
    "Please first answer yes or no. If it is yes, just return 'yes'. "
    "If it is no, please provide a brief explanation and corrected features.\n"
    "Answer:"
)

JUDGE_INTENTION = (
    "A customer buys a product: {name}. Consider this product: {name}.\n"
    "Do you think the product's {detail_key} is {detail_value}?\n"
    "Please first answer yes or no. If it is yes, just return 'yes'. "
    "If it is no, please provide a brief explanation and corrected product detail.\n"
    "Answer:"
)

CORRECT_FEATURE = (
    "Consider this product:\n"
    "{name}\n"
    "Currently, somebody has identified a wrong feature: {feature_or_intention}\n"
    "Please suggest a better, modified, concise, and most importantly, "
    "a correct feature."
)

CORRECT_INTENTION = (
    "Consider this product:\n"
    "{name}\n"
    "Currently, somebody has identified a wrong intention for buying this item: "
    "{feature_or_intention}\n"
    "Please suggest a better, modified, and correct intention."
)

CONCEPTUALIZE = (
    "Please replace this product with another term: {product}.\n"
    "You should not change the meaning of it. You can use a synonym or a general term.\n"
    "It should be the same as the original product, which all of them should not "
    "have this feature/intention: {feature_or_intention}.\n"
    "Please return at most 5 conceptualized products/product categories. "
    "They should be reasonable, and each of them should be separated by a new line."
)

PORTABILITY_SUBJECT_REPLACE = (
    "Please replace this subject with another term: {product}.\n"
    "You should not change the meaning of it. You can use a synonym or a general "
    "term. Please only return the new subject."
)

LOCALITY_DISTRACTING_NEIGHBOR = (
    "Consider this product: {product}.\n"
    "Here is a description of the product: {description}.\n"
    "Please construct a sentence using the description based on the following "
    "template: The [ATTRIBUTE] of [PRODUCT] is xxx.\n"
    "Please make sure the attribute is easily inferable from the product name."
)

TEMPLATES: dict[str, str] = {
    "student_feature": STUDENT_FEATURE,
    "student_intention": STUDENT_INTENTION,
    "judge_feature": JUDGE_FEATURE,
    "judge_intention": JUDGE_INTENTION,
    "correct_feature": CORRECT_FEATURE,
    "correct_intention": CORRECT_INTENTION,
    "conceptualize": CONCEPTUALIZE,
    "portability_subject_replace": PORTABILITY_SUBJECT_REPLACE,
    "locality_distracting_neighbor": LOCALITY_DISTRACTING_NEIGHBOR,
}


def template_placeholders(template_id: str) -> set[str]:
    text = TEMPLATES[template_id]
    return {
        name for _, name, _, _ in string.Formatter().parse(text) if name is not None
    }


def render_prompt(template_id: str, bindings: dict[str, str]) -> str:
    """Instantiate a template; raises TemplateError on any unbound placeholder."""
    if template_id not in TEMPLATES:
        raise KeyError(f"unknown template id: {template_id!r}")
    for name in template_placeholders(template_id):
        if name not in bindings:
            raise TemplateError(template_id, name)
    return TEMPLATES[template_id].format(**bindings)
