"""Facilitated Preparation + Phases A-E over an agent team, logged as a transcript.

Transcript files are JSON lines: one header object, then one object per
event, appended and flushed as the run progresses.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .agent import Agent, Statement
from .corpus import Corpus, DomainRole
from .errors import AnalogyError, ParseError, PreconditionViolation
from .memory import DIALOGUE_PHASES, FACILITATOR, LogicalClock, Phase
from .organization import OrgGraph
from .prompts import render_prompt
from .thought import section_for

logger = logging.getLogger(__name__)

TRANSCRIPT_FORMAT = "analogy-agents/transcript-v1"


class EventKind(str, Enum):
    PROMPT_ISSUED = "prompt_issued"
    DOCUMENT_ASSIGNED = "document_assigned"
    STATEMENT = "statement"
    REACTION = "reaction"
    THOUGHT_UPDATED = "thought_updated"
    IDEA_SCORED = "idea_scored"
    ERROR = "error"


@dataclass
class DialogueConfig:
    rounds_per_phase: dict[Phase, int] = field(default_factory=lambda: {p: 2 for p in DIALOGUE_PHASES})
    reactions_enabled: bool = True
    turn_order: str = "fixed_by_index"
    seed: int = 0

    def __post_init__(self) -> None:
        rounds = {Phase(k): int(v) for k, v in self.rounds_per_phase.items()}
        if Phase.PREPARATION in rounds:
            raise PreconditionViolation("Preparation is per document, it has no rounds")
        for p in DIALOGUE_PHASES:
            rounds.setdefault(p, 2)
            if rounds[p] < 1:
                raise PreconditionViolation(f"phase {p.value} needs at least one round")
        self.rounds_per_phase = {p: rounds[p] for p in DIALOGUE_PHASES}
        if self.turn_order != "fixed_by_index":
            raise PreconditionViolation(f"unsupported turn order {self.turn_order!r}")

    def to_dict(self) -> dict:
        return {
            "rounds_per_phase": {p.value: n for p, n in self.rounds_per_phase.items()},
            "reactions_enabled": self.reactions_enabled,
            "turn_order": self.turn_order,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TranscriptEvent:
    run_id: str
    seed: int
    timestamp: int
    phase: Phase
    round: int | None
    event_kind: EventKind
    agent_id: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "phase": self.phase.value,
            "round": self.round,
            "event_kind": self.event_kind.value,
            "agent_id": self.agent_id,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> TranscriptEvent:
        return cls(
            run_id=data["run_id"],
            seed=int(data["seed"]),
            timestamp=int(data["timestamp"]),
            phase=Phase(data["phase"]),
            round=data.get("round"),
            event_kind=EventKind(data["event_kind"]),
            agent_id=data["agent_id"],
            payload=data.get("payload") or {},
        )


@dataclass
class TranscriptHeader:
    run_id: str
    model: str
    seed: int
    config_digest: str
    agents: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format": TRANSCRIPT_FORMAT,
            "run_id": self.run_id,
            "model": self.model,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "agents": list(self.agents),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TranscriptHeader:
        return cls(data["run_id"], data["model"], int(data["seed"]), data["config_digest"],
                   list(data.get("agents", [])))


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


class Transcript:
    """Append-only event log of one run.

    When ``sink`` is given every header/event line is written and flushed as
    it is produced, so a crash leaves a readable partial file.
    """

    def __init__(self, header: TranscriptHeader, clock: LogicalClock | None = None,
                 sink: IO[str] | None = None):
        self.header = header
        self.events: list[TranscriptEvent] = []
        self.clock = clock or LogicalClock()
        self.completed: list[Phase] = []
        self._sink = sink
        if sink is not None:
            sink.write(_dumps(header.to_dict()) + "\n")
            sink.flush()

    @property
    def valid(self) -> bool:
        """No error events and the dialogue reached Phase E."""
        if any(e.event_kind is EventKind.ERROR for e in self.events):
            return False
        return bool(self.events) and self.events[-1].phase is Phase.E

    def append(self, event: TranscriptEvent) -> TranscriptEvent:
        if self.events:
            last = self.events[-1]
            if event.timestamp <= last.timestamp:
                raise PreconditionViolation("transcript timestamps must strictly increase")
            if event.phase < last.phase:
                raise PreconditionViolation("transcript phases may not go backwards")
        self.events.append(event)
        if self._sink is not None:
            self._sink.write(_dumps(event.to_dict()) + "\n")
            self._sink.flush()
        return event

    def emit(self, phase: Phase, round_no: int | None, kind: EventKind, agent_id: str,
             payload: dict) -> TranscriptEvent:
        return self.append(TranscriptEvent(self.header.run_id, self.header.seed, self.clock.tick(),
                                           phase, round_no, kind, agent_id, payload))

    # --- queries --------------------------------------------------------------------------

    def of_kind(self, kind: EventKind, phase: Phase | None = None) -> list[TranscriptEvent]:
        return [e for e in self.events if e.event_kind is kind and (phase is None or e.phase is phase)]

    def phases(self) -> list[Phase]:
        seen: list[Phase] = []
        for e in self.events:
            if not seen or seen[-1] is not e.phase:
                seen.append(e.phase)
        return seen

    # --- files ------------------------------------------------------------------------------

    def dumps(self) -> str:
        lines = [_dumps(self.header.to_dict())] + [_dumps(e.to_dict()) for e in self.events]
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> Transcript:
        with open(path, encoding="utf-8") as fh:
            return cls.parse_lines(fh)

    @classmethod
    def parse_lines(cls, lines: Iterable[str]) -> Transcript:
        rows = []
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"transcript line {lineno}: {exc}") from exc
        if not rows:
            raise ParseError("empty transcript")
        try:
            transcript = cls(TranscriptHeader.from_dict(rows[0]))
            for row in rows[1:]:
                transcript.append(TranscriptEvent.from_dict(row))
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"malformed transcript: {exc}") from exc
        return transcript


class RunAborted(AnalogyError):
    def __init__(self, transcript: Transcript, cause: Exception):
        super().__init__(f"run {transcript.header.run_id} aborted: {cause}")
        self.transcript = transcript
        self.cause = cause


def _statement_payload(st: Statement, recipients: list[str]) -> dict:
    return {
        "kind": st.kind.value,
        "addressed_to": st.addressed_to,
        "text": st.text,
        "words": st.words,
        "recipients": recipients,
        "memory_timestamp": st.timestamp,
    }


def _broadcast(st: Statement, by_id: dict[str, Agent], graph: OrgGraph) -> list[str]:
    recipients = graph.out_neighbors(st.agent_id)
    for r in recipients:
        by_id[r].observe(st)
    return recipients


def _abort(transcript: Transcript, phase: Phase, round_no: int | None, agent_id: str,
           exc: Exception) -> RunAborted:
    transcript.emit(phase, round_no, EventKind.ERROR, agent_id,
                    {"error": type(exc).__name__, "message": str(exc), "fatal": True})
    logger.error("run %s aborted in phase %s: %s", transcript.header.run_id, phase.value, exc)
    return RunAborted(transcript, exc)


def _reaction_target(i: int, agents: Sequence[Agent], said: dict[str, Statement],
                     graph: OrgGraph) -> Statement | None:
    me = agents[i].agent_id
    n = len(agents)
    for step in range(1, n):
        other = agents[(i - step) % n].agent_id
        st = said.get(other)
        if st is None:
            continue
        if graph.can_communicate(other, me) and graph.can_communicate(me, other):
            return st
    return None


def run_preparation(agents: Sequence[Agent], corpus: Corpus, transcript: Transcript) -> Transcript:
    for agent in agents:
        for doc in corpus.documents:
            transcript.emit(Phase.PREPARATION, None, EventKind.DOCUMENT_ASSIGNED, agent.agent_id,
                            {"doc_id": doc.doc_id, "role": doc.domain_role.value, "title": doc.title})
            try:
                outcome = agent.review_document(doc)
            except AnalogyError as exc:
                raise _abort(transcript, Phase.PREPARATION, None, agent.agent_id, exc) from exc
            if outcome is not None:
                transcript.emit(Phase.PREPARATION, None, EventKind.IDEA_SCORED, agent.agent_id,
                                {"doc_id": doc.doc_id, **outcome.to_dict()})
        agent.finish_preparation()
    transcript.completed.append(Phase.PREPARATION)
    return transcript


def run_phase(phase: Phase, agents: Sequence[Agent], graph: OrgGraph, config: DialogueConfig,
              transcript: Transcript, template_vars: dict) -> Transcript:
    phase = Phase(phase)
    section_for(phase)
    predecessor = Phase.PREPARATION if phase is Phase.A else DIALOGUE_PHASES[DIALOGUE_PHASES.index(phase) - 1]
    if predecessor not in transcript.completed:
        raise PreconditionViolation(f"phase {phase.value} started before {predecessor.value} completed")
    if any(not a.prepared for a in agents):
        raise PreconditionViolation("every agent must finish preparation first")
    by_id = {a.agent_id: a for a in agents}

    for round_no in range(1, config.rounds_per_phase[phase] + 1):
        prompt = render_prompt(phase, template_vars, round_no)
        transcript.emit(phase, round_no, EventKind.PROMPT_ISSUED, FACILITATOR,
                        {"text": prompt, "recipients": [a.agent_id for a in agents]})
        for agent in agents:
            agent.observe_facilitator(phase, prompt)

        said: dict[str, Statement] = {}
        for agent in agents:
            try:
                st = agent.make_statement(phase, round_no, prompt)
            except AnalogyError as exc:
                raise _abort(transcript, phase, round_no, agent.agent_id, exc) from exc
            said[agent.agent_id] = st
            recipients = _broadcast(st, by_id, graph)
            transcript.emit(phase, round_no, EventKind.STATEMENT, agent.agent_id, _statement_payload(st, recipients))

        if config.reactions_enabled and len(agents) > 1:
            for i, agent in enumerate(agents):
                target = _reaction_target(i, agents, said, graph)
                if target is None:
                    continue
                try:
                    st = agent.react_to(target)
                except AnalogyError as exc:
                    raise _abort(transcript, phase, round_no, agent.agent_id, exc) from exc
                recipients = _broadcast(st, by_id, graph)
                transcript.emit(phase, round_no, EventKind.REACTION, agent.agent_id,
                                _statement_payload(st, recipients))

        for agent in agents:
            if not agent.has_internal_state:
                continue
            try:
                outcome = agent.reflect(phase)
            except AnalogyError as exc:
                raise _abort(transcript, phase, round_no, agent.agent_id, exc) from exc
            transcript.emit(phase, round_no, EventKind.THOUGHT_UPDATED, agent.agent_id, {
                "section": section_for(phase),
                **outcome.to_dict(),
                "thought": agent.thought.render(),
            })

    transcript.completed.append(phase)
    return transcript


def run_dialogue(agents: Sequence[Agent], graph: OrgGraph, corpus: Corpus, config: DialogueConfig,
                 transcript: Transcript, word_limit: int | None = None) -> Transcript:
    """Preparation, then Phases A to E in order."""
    if not corpus.by_role(DomainRole.TARGET) or not corpus.by_role(DomainRole.SOURCE):
        raise PreconditionViolation("corpus needs target and source documents")
    if not agents:
        raise PreconditionViolation("a dialogue needs at least one agent")
    limit = word_limit or agents[0].config.statement_word_limit
    template_vars = {
        "target": corpus.target_domain,
        "source": corpus.source_domain,
        "documents": corpus.documents_text(),
        "word_limit": limit,
    }
    run_preparation(agents, corpus, transcript)
    for phase in DIALOGUE_PHASES:
        run_phase(phase, agents, graph, config, transcript, template_vars)
    return transcript
