from __future__ import annotations

import pytest

from analogy_agents.errors import MissingVariable, PreconditionViolation
from analogy_agents.memory import Phase
from analogy_agents.prompts import render_prompt, system_prompt

VARS = {"target": "household fan", "source": "ejector", "documents": "[documents]"}

OPENERS = {
    Phase.A: (
        "Hello. The field of the product we are developing is referred to as the 'target domain,' and the "
        "field of reference products for development is referred to as the 'source domain.' The target "
        "domain for this session is household fan. The source domain is ejector. Read the following "
        "documents about the target domain and the source domain, and provide your thoughts on the core "
        "functional similarities between the two domains, starting with what you believe to be the most "
        "essential similarities. However, do not discuss the differences between the two domains, the "
        "challenges within each domain, their possible solutions yet. Please respond within 170 words."
    ),
    Phase.B: (
        "Thank you. Next, please share your thoughts on how the mechanisms in the source domain that produce "
        "the common functionalities differ from those in the target domain, starting with the most "
        "significant differences. However, do not discuss the challenges within each domain or their "
        "solutions yet. Please respond within 170 words."
    ),
    Phase.C: (
        "Thank you. Now, let's consider how applying the discussed differences in mechanisms to the target "
        "domain could help solve its challenges. Please share your thoughts on what aspects of the source "
        "domain's mechanisms should be adapted and how they should be integrated into the target domain to "
        "address the challenges in the target domain. Additionally, explain what functionalities or "
        "mechanisms of the target domain should be retained and what should be discarded, in order of "
        "importance, starting with the most critical points. Please respond within 170 words."
    ),
    Phase.D: (
        "Thank you. Now, let’s consider whether applying the source domain's mechanisms to the target "
        "domain in the manner discussed could lead to any unforeseen significant challenges. If you believe "
        "such challenges might arise, please share your thoughts, listing them in order of severity. If you "
        "do not believe any major challenges would arise, please state that as your answer. Please respond "
        "within 170 words."
    ),
    Phase.E: (
        "Thank you. Now, let's consider the opposite perspective. Could applying the source domain's "
        "mechanisms to the target domain create additional opportunities beyond merely solving the target "
        "domain's existing challenges? If you believe such new opportunities exist, please share your "
        "thoughts, listing them in order of importance. If you do not believe any additional opportunities "
        "would be generated, please state that as your answer. Please respond within 170 words."
    ),
}


@pytest.mark.parametrize("phase", list(OPENERS))
def test_openers_verbatim(phase):
    text = render_prompt(phase, VARS)
    assert text.split("\n\n")[0] == OPENERS[phase]


def test_phase_a_names_domains_and_carries_documents():
    text = render_prompt(Phase.A, VARS)
    assert "The target domain for this session is household fan." in text
    assert text.endswith("[documents]")


def test_phase_d_mentions_unforeseen_challenges():
    assert "unforeseen significant challenges" in render_prompt(Phase.D, VARS)


def test_missing_source_variable():
    with pytest.raises(MissingVariable):
        render_prompt(Phase.B, {"target": "household fan"})


def test_phase_a_without_documents():
    with pytest.raises(MissingVariable):
        render_prompt(Phase.A, {"target": "household fan", "source": "ejector"})


def test_later_rounds_use_continuation():
    text = render_prompt(Phase.C, {**VARS, "word_limit": 120}, round_no=2)
    assert "continue the discussion" in text and "120 words" in text


def test_preparation_has_no_opener():
    with pytest.raises(PreconditionViolation):
        render_prompt(Phase.PREPARATION, VARS)


def test_system_prompt_prohibits_outside_knowledge():
    text = system_prompt("agent_1", "household fan", "ejector", persona="You are careful.",
                         prohibited=("BrandX",))
    assert text.startswith("You are careful.")
    assert "must not use knowledge from your training" in text
    assert "internet" in text and "BrandX" in text
