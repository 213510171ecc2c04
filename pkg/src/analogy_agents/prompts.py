"""Prompt templates for the facilitator, the agents and the rubric judge.

Facilitator openers use ``string.Template`` placeholders: ``$target``,
``$source``, ``$word_limit`` and, for Phase A, ``$documents``.
"""

from __future__ import annotations

from string import Template

from .errors import MissingVariable, PreconditionViolation
from .memory import Phase

PHASE_OPENERS: dict[Phase, str] = {
    Phase.A: (
        "Hello. The field of the product we are developing is referred to as the 'target domain,' "
        "and the field of reference products for development is referred to as the 'source domain.' "
        "The target domain for this session is $target. The source domain is $source. "
        "Read the following documents about the target domain and the source domain, and provide "
        "your thoughts on the core functional similarities between the two domains, starting with "
        "what you believe to be the most essential similarities. However, do not discuss the "
        "differences between the two domains, the challenges within each domain, their possible "
        "solutions yet. Please respond within $word_limit words.\n\n$documents"
    ),
    Phase.B: (
        "Thank you. Next, please share your thoughts on how the mechanisms in the source domain that "
        "produce the common functionalities differ from those in the target domain, starting with the "
        "most significant differences. However, do not discuss the challenges within each domain or "
        "their solutions yet. Please respond within $word_limit words."
    ),
    Phase.C: (
        "Thank you. Now, let's consider how applying the discussed differences in mechanisms to the "
        "target domain could help solve its challenges. Please share your thoughts on what aspects of "
        "the source domain's mechanisms should be adapted and how they should be integrated into the "
        "target domain to address the challenges in the target domain. Additionally, explain what "
        "functionalities or mechanisms of the target domain should be retained and what should be "
        "discarded, in order of importance, starting with the most critical points. Please respond "
        "within $word_limit words."
    ),
    Phase.D: (
        "Thank you. Now, let’s consider whether applying the source domain's mechanisms to the "
        "target domain in the manner discussed could lead to any unforeseen significant challenges. "
        "If you believe such challenges might arise, please share your thoughts, listing them in order "
        "of severity. If you do not believe any major challenges would arise, please state that as "
        "your answer. Please respond within $word_limit words."
    ),
    Phase.E: (
        "Thank you. Now, let's consider the opposite perspective. Could applying the source domain's "
        "mechanisms to the target domain create additional opportunities beyond merely solving the "
        "target domain's existing challenges? If you believe such new opportunities exist, please "
        "share your thoughts, listing them in order of importance. If you do not believe any "
        "additional opportunities would be generated, please state that as your answer. Please "
        "respond within $word_limit words."
    ),
}

CONTINUATION = (
    "Please continue the discussion on the same question, responding to points raised so far and "
    "sharpening your own position. Please respond within $word_limit words."
)

# subject of each phase; used as the topic of generated ideas
PHASE_TOPICS: dict[Phase, str] = {
    Phase.PREPARATION: "what the reviewed documents imply for the target domain",
    Phase.A: "functional similarities between the target domain and the source domain",
    Phase.B: "mechanical differences between the target domain and the source domain",
    Phase.C: "transferring source-domain solutions to the target domain",
    Phase.D: "new challenges raised by the proposed solution transfer",
    Phase.E: "new opportunities created by the proposed solution transfer",
}


def render_prompt(phase: Phase, template_vars: dict, round_no: int = 1) -> str:
    """Facilitator prompt for ``phase``; the opener in round 1, a continuation after."""
    phase = Phase(phase)
    if phase not in PHASE_OPENERS:
        raise PreconditionViolation(f"no facilitator prompt for phase {phase.value}")
    values = {"word_limit": 170, **template_vars}
    template = Template(PHASE_OPENERS[phase] if round_no == 1 else CONTINUATION)
    for name in ("target", "source"):
        if not values.get(name):
            raise MissingVariable(name)
    try:
        return template.substitute(values)
    except KeyError as exc:
        raise MissingVariable(exc.args[0]) from None


# --- agent prompts -------------------------------------------------------------------

SYSTEM_CLAUSE = (
    "You are $agent_id, a member of a product development team discussing the $target "
    "(target domain) and the $source (source domain). Base every statement and reflection only on "
    "the technical documents you have reviewed and on logical conclusions or associations drawn "
    "from the discussion so far and your own reflections. You must not use knowledge from your "
    "training about existing commercial products in the target domain, and you must not use any "
    "information from the internet."
)
PROHIBITED_NAMES = " Do not draw on anything you know about: $names."


def system_prompt(agent_id: str, target: str, source: str, persona: str = "",
                  prohibited: tuple[str, ...] = ()) -> str:
    text = Template(SYSTEM_CLAUSE).substitute(agent_id=agent_id, target=target, source=source)
    if prohibited:
        text += Template(PROHIBITED_NAMES).substitute(names=", ".join(prohibited))
    if persona:
        text = persona.strip() + "\n\n" + text
    return text


def statement_prompt(memory_text: str, thought_text: str | None, facilitator_prompt: str) -> str:
    parts = []
    if memory_text:
        parts.append("# Your memory\n\n" + memory_text)
    if thought_text is not None:
        parts.append("# Your current thoughts\n\n" + thought_text)
    parts.append("# Facilitator\n\n" + facilitator_prompt)
    return "\n\n".join(parts)


REACTION = (
    "$peer just said:\n\"$statement\"\n\n"
    "Give your view of $peer's opinion: what you agree with, and what you find contradictory or "
    "missing. Please respond within $word_limit words."
)


def reaction_prompt(memory_text: str, thought_text: str | None, peer: str, statement: str,
                    word_limit: int) -> str:
    ask = Template(REACTION).substitute(peer=peer, statement=statement, word_limit=word_limit)
    return statement_prompt(memory_text, thought_text, ask)


# --- internal-state prompts ----------------------------------------------------------

IDEA_MARKER = "TASK: IDEA GENERATION"
IDEA = (
    IDEA_MARKER + "\n"
    "Using your memory and current thoughts, propose $k distinct ideas about $topic. "
    "Each idea must be a self-contained technical point of at most $idea_words words. "
    "Write them as a numbered list (1., 2., ...), one idea per item, with no other text."
)
IDEA_REMINDER = (
    "Your reply could not be read as a list. Reply again with exactly $k items, each on its own "
    "line starting with its number and a period, for example \"1. ...\"."
)

SCORE_MARKER = "TASK: IDEA SCORING"
SCORE = (
    SCORE_MARKER + "\n"
    "Rate the idea below on three criteria, each as an integer from 1 to 10.\n"
    "novelty: how far the idea adds content that does not already appear in the conversation or "
    "in your earlier reflections.\n"
    "importance: how much the idea matters given the discussion and reflections so far.\n"
    "consensus: how closely the idea matches the view held by most participants so far.\n\n"
    "Idea: $idea\n\n"
    "Answer on one line in exactly this form: novelty: <n>, importance: <n>, consensus: <n>"
)
SCORE_REMINDER = (
    "Your reply did not contain all three ratings. Answer again on one line in exactly this form: "
    "novelty: <n>, importance: <n>, consensus: <n>"
)

CRITIQUE_MARKER = "TASK: CRITIQUE"
NO_ISSUES = "NO ISSUES FOUND"
CRITIQUE = (
    CRITIQUE_MARKER + "\n"
    "Examine the idea below for technical ambiguities or contradictions, judged against your "
    "memory and current thoughts.\n\nIdea: $idea\n\n"
    "If there are none, reply exactly: " + NO_ISSUES + ". Otherwise list each problem on its own "
    "line starting with \"- \"."
)
CRITIQUE_REMINDER = "Reply again: either exactly " + NO_ISSUES + " or a list of problems, one per line starting with \"- \"."

REVISE_MARKER = "TASK: REVISION"
REVISE = (
    REVISE_MARKER + "\n"
    "Rewrite the idea so that it resolves the problems listed.\n\nIdea: $idea\n\nProblems:\n$critique\n\n"
    "Reply with the revised idea only, in at most $idea_words words."
)
REVISE_REMINDER = "Reply again with the revised idea text only."

ASSESS_MARKER = "TASK: PEER ASSESSMENT"
ASSESS = (
    ASSESS_MARKER + "\n"
    "Consider what $peer has said in the conversation, in light of your current thoughts on $topic.\n\n"
    "$peer's statements:\n$statements\n\n"
    "List the points you agree with or find interesting, then the points that contain "
    "contradictions or missing information. Use exactly this layout:\n"
    "AGREE:\n- ...\nCONTRADICTORY OR MISSING:\n- ...\n"
    "Write \"- none\" under a heading that has no points."
)
ASSESS_REMINDER = "Reply again using exactly the two headings AGREE: and CONTRADICTORY OR MISSING:, each followed by \"- \" bullets."

PARSE_RETRY = "Your previous reply could not be used. "


def fill(template: str, **values) -> str:
    try:
        return Template(template).substitute(values)
    except KeyError as exc:
        raise MissingVariable(exc.args[0]) from None


# --- judge --------------------------------------------------------------------------

JUDGE_MARKER = "TASK: RUBRIC JUDGEMENT"
JUDGE_SYSTEM = (
    "You are a strict technical reviewer. You grade a proposed solution against a fixed rubric. "
    "Judge only what the text states; do not give credit for implications it does not spell out."
)
JUDGE = (
    JUDGE_MARKER + "\n"
    "Rubric:\n$criteria\n\n"
    "Proposed solution by $agent:\n\"\"\"\n$solution\n\"\"\"\n\n"
    "For every criterion give the points awarded (0 up to that criterion's maximum) and a short "
    "reason. Answer with one line per criterion in exactly this form:\n"
    "C<number>: <points> | <reason>"
)
JUDGE_REMINDER = "Reply again with exactly one line per criterion, C1 to C$n, in the form C<number>: <points> | <reason>."
