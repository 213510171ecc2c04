"""Conversational agent: memory, optional internal state, word-limited speech."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from . import internal_state as ist
from . import prompts
from .corpus import TechnicalDocument
from .errors import PreconditionViolation
from .internal_state import Idea, MotivationWeights
from .llm_backend import LLM
from .memory import (
    DEFAULT_BUDGET_WORDS,
    FACILITATOR,
    SELF,
    LogicalClock,
    MemoryStore,
    Phase,
    RecordKind,
    StructuredMemory,
    assemble,
)
from .organization import OrgGraph
from .thought import CurrentThought, PeerAssessment, section_for

EVERYONE = "all"


@dataclass(frozen=True)
class AgentConfig:
    agent_id: str
    has_internal_state: bool = False
    weights: MotivationWeights = field(default_factory=MotivationWeights)
    statement_word_limit: int = 170
    reaction_word_limit: int = 50
    persona: str = ""
    ideas_per_step: int = ist.DEFAULT_IDEAS_PER_STEP
    # how many of the best ideas enter the thought document per reflection
    ideas_into_thought: int = 1
    memory_budget_words: int = DEFAULT_BUDGET_WORDS

    def __post_init__(self) -> None:
        if not self.agent_id or self.agent_id in (SELF, FACILITATOR, EVERYONE):
            raise PreconditionViolation(f"reserved or empty agent id {self.agent_id!r}")
        if any(ch.isspace() for ch in self.agent_id):
            raise PreconditionViolation("agent ids may not contain whitespace")
        if self.statement_word_limit <= 0 or self.reaction_word_limit <= 0:
            raise PreconditionViolation("word limits must be positive")

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "has_internal_state": self.has_internal_state,
            "weights": list(self.weights.as_tuple()) if self.has_internal_state else None,
            "statement_word_limit": self.statement_word_limit,
            "reaction_word_limit": self.reaction_word_limit,
            "persona": self.persona,
            "ideas_per_step": self.ideas_per_step,
            "ideas_into_thought": self.ideas_into_thought,
            "memory_budget_words": self.memory_budget_words,
        }


class StatementKind(str, Enum):
    OPINION = "opinion"
    REACTION = "reaction"


@dataclass(frozen=True)
class Statement:
    agent_id: str
    phase: Phase
    round: int
    kind: StatementKind
    addressed_to: str
    text: str
    timestamp: int

    @property
    def words(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class DomainContext:
    target: str
    source: str
    prohibited: tuple[str, ...] = ()


@dataclass
class ReflectionOutcome:
    phase: Phase
    topic: str
    candidates: list[Idea]
    selected: list[Idea]
    record_timestamp: int

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "candidates": [i.to_dict() for i in self.candidates],
            "selected": [i.to_dict() for i in self.selected],
        }


_WORD_RE = re.compile(r"\S+")


def truncate_words(text: str, limit: int) -> str:
    """First ``limit`` words of ``text``; text within the limit is returned as is."""
    text = text.strip()
    words = list(_WORD_RE.finditer(text))
    if len(words) <= limit:
        return text
    return text[: words[limit - 1].end()]


class Agent:
    def __init__(self, config: AgentConfig, llm: LLM, clock: LogicalClock, graph: OrgGraph | None,
                 domains: DomainContext):
        self.config = config
        self.llm = llm
        self.clock = clock
        self.graph = graph
        self.domains = domains
        self.memory = MemoryStore()
        self.thought: CurrentThought | None = (
            CurrentThought(source_domain=domains.source) if config.has_internal_state else None
        )
        self.prepared = False
        # counts of internal-state operations run by this agent
        self.internal_calls: Counter[str] = Counter()
        self.system = prompts.system_prompt(config.agent_id, domains.target, domains.source,
                                            config.persona, domains.prohibited)

    @property
    def agent_id(self) -> str:
        return self.config.agent_id

    @property
    def has_internal_state(self) -> bool:
        return self.config.has_internal_state

    def _assemble(self, phase: Phase) -> StructuredMemory:
        return assemble(self.memory, self.config.memory_budget_words, phase)

    def _thought_text(self) -> str | None:
        return self.thought.render() if self.thought is not None else None

    # --- preparation -------------------------------------------------------------------

    def review_document(self, document: TechnicalDocument) -> ReflectionOutcome | None:
        if not document.body.strip():
            raise PreconditionViolation("cannot review an empty document")
        self.memory.add(self.clock, RecordKind.DOCUMENT_REVIEW, SELF, document.render(), Phase.PREPARATION)
        if not self.has_internal_state:
            return None
        topic = f"what the document '{document.title}' means for the {self.domains.target}"
        return self._reflect(Phase.PREPARATION, topic)

    def finish_preparation(self) -> None:
        self.prepared = True

    # --- speaking -----------------------------------------------------------------------

    def make_statement(self, phase: Phase, round_no: int, prompt: str) -> Statement:
        if not self.prepared:
            raise PreconditionViolation(f"{self.agent_id} has not completed preparation")
        memory = self._assemble(phase)
        user = prompts.statement_prompt(memory.render(), self._thought_text(), prompt)
        raw = self.llm.ask(self.system, user)
        text = truncate_words(raw, self.config.statement_word_limit)
        record = self.memory.add(self.clock, RecordKind.CONVERSATION_TURN, SELF, text or "(no statement)", phase)
        return Statement(self.agent_id, phase, round_no, StatementKind.OPINION, EVERYONE, text, record.timestamp)

    def react_to(self, peer_statement: Statement) -> Statement:
        if not self.prepared:
            raise PreconditionViolation(f"{self.agent_id} has not completed preparation")
        if peer_statement.agent_id == self.agent_id:
            raise PreconditionViolation("an agent does not react to its own statement")
        phase = peer_statement.phase
        limit = self.config.reaction_word_limit
        memory = self._assemble(phase)
        user = prompts.reaction_prompt(memory.render(), self._thought_text(), peer_statement.agent_id,
                                       peer_statement.text, limit)
        text = truncate_words(self.llm.ask(self.system, user), limit)
        if self.has_internal_state:
            self._assess(peer_statement.agent_id, phase)
        record = self.memory.add(self.clock, RecordKind.CONVERSATION_TURN, SELF, text or "(no reaction)", phase)
        return Statement(self.agent_id, phase, peer_statement.round, StatementKind.REACTION,
                         peer_statement.agent_id, text, record.timestamp)

    # --- listening ------------------------------------------------------------------------

    def observe(self, statement: Statement) -> None:
        author = statement.agent_id
        if author == self.agent_id:
            raise PreconditionViolation("an agent does not observe its own statement")
        if self.graph is not None and not self.graph.can_communicate(author, self.agent_id):
            raise PreconditionViolation(f"{author} cannot address {self.agent_id} in this organization")
        if statement.text.strip():
            self.memory.add(self.clock, RecordKind.CONVERSATION_TURN, author, statement.text, statement.phase)

    def observe_facilitator(self, phase: Phase, text: str) -> None:
        self.memory.add(self.clock, RecordKind.CONVERSATION_TURN, FACILITATOR, text, phase)

    # --- internal state ---------------------------------------------------------------------

    def _count(self, op: str) -> None:
        if not self.has_internal_state:
            raise PreconditionViolation(f"{self.agent_id} has no internal state ({op})")
        self.internal_calls[op] += 1

    def _assess(self, peer_id: str, phase: Phase) -> PeerAssessment:
        self._count("assess_peer")
        recent = StructuredMemory(conversation_section=[
            r for r in self.memory.by_phase(phase) if r.kind is RecordKind.CONVERSATION_TURN
        ])
        assessment = ist.assess_peer(self.llm, self.thought, recent, peer_id,
                                     topic=prompts.PHASE_TOPICS[phase], system=self.system)
        self.thought = ist.merge_assessment(self.thought, assessment, phase, self.clock.now)
        return assessment

    def reflect(self, phase: Phase) -> ReflectionOutcome:
        """Round-end pass that folds new ideas into the phase's thought section."""
        section_for(phase)
        return self._reflect(phase, prompts.PHASE_TOPICS[phase])

    def _reflect(self, phase: Phase, topic: str) -> ReflectionOutcome:
        memory = self._assemble(phase)
        self._count("generate_ideas")
        ideas = ist.generate_ideas(self.llm, memory, self.thought, topic, self.config.ideas_per_step,
                                   system=self.system)
        for idea in ideas:
            self._count("score_idea")
            idea.scores = ist.score_idea(self.llm, idea, memory, self.thought, system=self.system)
        self._count("select_idea")
        chosen = ist.select_top(ideas, self.config.weights, self.config.ideas_into_thought)
        refined = []
        for idea in chosen:
            self._count("introspect")
            refined.append(ist.introspect(self.llm, idea, memory, self.thought, system=self.system))
        record = self.memory.add(self.clock, RecordKind.REFLECTION, SELF,
                                 "\n".join(i.text for i in refined), phase)
        if phase is not Phase.PREPARATION:
            self._count("update_thought")
            self.thought = ist.update_thought(self.thought, refined, [], phase, record.timestamp)
        return ReflectionOutcome(phase, topic, ideas, refined, record.timestamp)
