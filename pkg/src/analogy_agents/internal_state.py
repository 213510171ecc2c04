"""Idea generation, intrinsic-reward selection, introspection and peer assessment.

The reward of an idea is the weighted sum of its three 1-10 ratings::

    reward = alpha * novelty + beta * importance + gamma * consensus

and the agent keeps the idea with the highest reward.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import prompts
from .errors import EmptyList, NoPeerStatements, ParseError, PreconditionViolation
from .llm_backend import LLM
from .memory import Phase, RecordKind, StructuredMemory
from .thought import CurrentThought, PeerAssessment, clean_bullet, section_for

logger = logging.getLogger(__name__)

SCORE_MIN, SCORE_MAX = 1, 10
DEFAULT_IDEAS_PER_STEP = 3
DEFAULT_IDEA_WORDS = 80


@dataclass(frozen=True)
class MotivationWeights:
    alpha: float = 1.0  # novelty
    beta: float = 1.0  # importance
    gamma: float = 1.0  # consensus

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise PreconditionViolation("motivation weights must be non-negative")
        if max(self.alpha, self.beta, self.gamma) <= 0:
            raise PreconditionViolation("at least one motivation weight must be positive")

    def __add__(self, other: MotivationWeights) -> MotivationWeights:
        return MotivationWeights(self.alpha + other.alpha, self.beta + other.beta, self.gamma + other.gamma)

    def scaled(self, c: float) -> MotivationWeights:
        return MotivationWeights(c * self.alpha, c * self.beta, c * self.gamma)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class IdeaScores:
    novelty: int
    importance: int
    consensus: int

    def __post_init__(self) -> None:
        for name in ("novelty", "importance", "consensus"):
            value = getattr(self, name)
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise PreconditionViolation(f"{name} score {value} outside [{SCORE_MIN}, {SCORE_MAX}]")

    def to_dict(self) -> dict:
        return {"novelty": self.novelty, "importance": self.importance, "consensus": self.consensus}


@dataclass
class Idea:
    text: str
    topic: str
    scores: IdeaScores | None = None
    refined: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "topic": self.topic,
            "scores": self.scores.to_dict() if self.scores else None,
            "refined": self.refined,
            "notes": list(self.notes),
        }


# --- pure selection ---------------------------------------------------------------------


def intrinsic_reward(scores: IdeaScores, weights: MotivationWeights) -> float:
    return weights.alpha * scores.novelty + weights.beta * scores.importance + weights.gamma * scores.consensus


def select_top(ideas: Sequence[Idea], weights: MotivationWeights, m: int = 1) -> list[Idea]:
    """The ``m`` highest-reward ideas, best first; ties go to the earlier idea."""
    if not ideas:
        raise EmptyList("no ideas to select from")
    if any(i.scores is None for i in ideas):
        raise PreconditionViolation("every idea must be scored before selection")
    ranked = sorted(range(len(ideas)), key=lambda k: (-intrinsic_reward(ideas[k].scores, weights), k))
    return [ideas[k] for k in ranked[:max(1, m)]]


def select_idea(ideas: Sequence[Idea], weights: MotivationWeights) -> Idea:
    if not ideas:
        raise EmptyList("no ideas to select from")
    best = 0
    best_reward = None
    for k, idea in enumerate(ideas):
        if idea.scores is None:
            raise PreconditionViolation("every idea must be scored before selection")
        r = intrinsic_reward(idea.scores, weights)
        if best_reward is None or r > best_reward:
            best, best_reward = k, r
    return ideas[best]


# --- parsing ------------------------------------------------------------------------------

_ITEM_RE = re.compile(r"^\s*(?:\d+[.)]|[-*•])\s+(.*\S)\s*$")


def parse_list(text: str) -> list[str]:
    """Items of a numbered or bulleted list; continuation lines join their item."""
    items: list[str] = []
    for line in text.splitlines():
        if m := _ITEM_RE.match(line):
            items.append(m.group(1))
        elif line.strip() and items:
            items[-1] += " " + line.strip()
    items = [clean_bullet(i) for i in items]
    return [i for i in items if i]


def parse_ideas(text: str) -> list[str]:
    items = parse_list(text)
    if not items:
        raise ParseError("no list items in idea reply")
    return items


_SCORE_RES = {name: re.compile(rf"{name}\s*[:=]\s*(-?\d+)", re.IGNORECASE)
              for name in ("novelty", "importance", "consensus")}


def parse_scores(text: str) -> IdeaScores:
    values = {}
    for name, pattern in _SCORE_RES.items():
        m = pattern.search(text)
        if not m:
            raise ParseError(f"no {name} rating in {text[:80]!r}")
        raw = int(m.group(1))
        clamped = min(SCORE_MAX, max(SCORE_MIN, raw))
        if clamped != raw:
            logger.warning("%s rating %d clamped to %d", name, raw, clamped)
        values[name] = clamped
    return IdeaScores(**values)


_NO_ISSUES_RE = re.compile(r"\bno (?:issues|problems|ambiguities|contradictions)(?: (?:were )?found)?\b",
                           re.IGNORECASE)


def parse_critique(text: str) -> str | None:
    """``None`` when the critique reports nothing to fix, else the issue text."""
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty critique")
    if _NO_ISSUES_RE.search(stripped) and not parse_list(stripped):
        return None
    return stripped


def parse_revision(text: str) -> str:
    revised = clean_bullet(text)
    if not revised:
        raise ParseError("empty revision")
    return revised


_AGREE_HEAD = re.compile(r"^\s*\**\s*agree\w*[^:]*:\s*\**\s*$", re.IGNORECASE)
_CONTRA_HEAD = re.compile(r"^\s*\**\s*(?:contradictory|contradictions?)[^:]*:\s*\**\s*$", re.IGNORECASE)
_NONE_RE = re.compile(r"^(?:none|n/?a|nothing)\.?$", re.IGNORECASE)


def parse_assessment(text: str, peer_id: str) -> PeerAssessment:
    agree: list[str] = []
    contra: list[str] = []
    target = None
    seen = 0
    for line in text.splitlines():
        if _AGREE_HEAD.match(line):
            target, seen = agree, seen | 1
        elif _CONTRA_HEAD.match(line):
            target, seen = contra, seen | 2
        elif target is not None and (m := _ITEM_RE.match(line)):
            if not _NONE_RE.match(m.group(1).strip()):
                target.append(m.group(1))
    if not seen:
        raise ParseError("assessment reply has neither heading")
    return PeerAssessment(peer_id, agree, contra)


# --- LLM-backed steps -------------------------------------------------------------------------


def _context(memory: StructuredMemory, thought: CurrentThought | None) -> str:
    parts = []
    text = memory.render()
    if text:
        parts.append("# Your memory\n\n" + text)
    if thought is not None:
        parts.append("# Your current thoughts\n\n" + thought.render())
    return "\n\n".join(parts)


def _ask(llm: LLM, system: str | None, memory, thought, task: str, parse, reminder: str):
    context = _context(memory, thought)
    user = f"{context}\n\n{task}" if context else task
    return llm.ask_parsed(system, user, parse, reminder)


def generate_ideas(llm: LLM, memory: StructuredMemory, thought: CurrentThought | None, topic: str,
                   k: int = DEFAULT_IDEAS_PER_STEP, *, system: str | None = None,
                   idea_words: int = DEFAULT_IDEA_WORDS) -> list[Idea]:
    if k < 1:
        raise PreconditionViolation("k must be at least 1")
    task = prompts.fill(prompts.IDEA, k=k, topic=topic, idea_words=idea_words)
    reminder = prompts.fill(prompts.IDEA_REMINDER, k=k)
    texts = _ask(llm, system, memory, thought, task, parse_ideas, reminder)
    return [Idea(text=t, topic=topic) for t in texts[:k]]


def score_idea(llm: LLM, idea: Idea, memory: StructuredMemory, thought: CurrentThought | None,
               *, system: str | None = None) -> IdeaScores:
    if idea.scores is not None:
        raise PreconditionViolation("idea is already scored")
    # only the conversation and reflections matter for novelty/consensus judgements
    convo = StructuredMemory(conversation_section=memory.conversation_section,
                             reflection_section=memory.reflection_section)
    task = prompts.fill(prompts.SCORE, idea=idea.text)
    return _ask(llm, system, convo, thought, task, parse_scores, prompts.SCORE_REMINDER)


def introspect(llm: LLM, idea: Idea, memory: StructuredMemory | None = None,
               thought: CurrentThought | None = None, *, system: str | None = None,
               idea_words: int = DEFAULT_IDEA_WORDS) -> Idea:
    if not idea.text.strip():
        raise PreconditionViolation("cannot introspect an empty idea")
    memory = memory or StructuredMemory()
    critique_task = prompts.fill(prompts.CRITIQUE, idea=idea.text)
    critique = _ask(llm, system, memory, thought, critique_task, parse_critique, prompts.CRITIQUE_REMINDER)
    if critique is None:
        return replace(idea, refined=True, notes=idea.notes + [prompts.NO_ISSUES])
    revise_task = prompts.fill(prompts.REVISE, idea=idea.text, critique=critique, idea_words=idea_words)
    revised = _ask(llm, system, memory, thought, revise_task, parse_revision, prompts.REVISE_REMINDER)
    return replace(idea, text=revised, refined=True, notes=idea.notes + [critique])


def assess_peer(llm: LLM, thought: CurrentThought | None, recent_conversation: StructuredMemory,
                peer_id: str, topic: str = "the current question", *,
                system: str | None = None) -> PeerAssessment:
    said = [r.content for r in recent_conversation.conversation_section
            if r.kind is RecordKind.CONVERSATION_TURN and r.author == peer_id]
    if not said:
        raise NoPeerStatements(f"{peer_id} has said nothing in the given conversation")
    task = prompts.fill(prompts.ASSESS, peer=peer_id, topic=topic,
                        statements="\n".join(f"- {s}" for s in said))
    # the peer's statements are quoted in the task, so only the thought document is added
    return _ask(llm, system, StructuredMemory(), thought, task,
                lambda text: parse_assessment(text, peer_id), prompts.ASSESS_REMINDER)


# --- thought maintenance ----------------------------------------------------------------------


def idea_bullets(idea: Idea) -> list[str]:
    items = parse_list(idea.text)
    return items if items else [clean_bullet(idea.text)]


def update_thought(thought: CurrentThought, refined_idea: Idea | Sequence[Idea],
                   assessments: Sequence[PeerAssessment], phase: Phase,
                   timestamp: int | None = None) -> CurrentThought:
    """New thought with the idea(s) added to ``phase``'s section and assessments merged."""
    letter = section_for(phase)
    ideas = [refined_idea] if isinstance(refined_idea, Idea) else list(refined_idea)
    if any(not i.refined for i in ideas):
        raise PreconditionViolation("only refined ideas enter the current thought")
    new = thought.copy()
    section = new.section(letter)
    for idea in ideas:
        section.extend(b for b in idea_bullets(idea) if b)
    for pa in assessments:
        new.peer_assessments[(letter, pa.peer_id)] = pa
    new.last_updated = timestamp if timestamp is not None else thought.last_updated + 1
    return new


def merge_assessment(thought: CurrentThought, assessment: PeerAssessment, phase: Phase,
                     timestamp: int | None = None) -> CurrentThought:
    new = thought.copy()
    new.peer_assessments[(section_for(phase), assessment.peer_id)] = assessment
    new.last_updated = timestamp if timestamp is not None else thought.last_updated + 1
    return new
