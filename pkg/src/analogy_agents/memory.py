"""Per-agent timestamped memory and its assembly into a bounded context."""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import BudgetTooSmall, ClockViolation, PreconditionViolation

DEFAULT_BUDGET_WORDS = 3000

SELF = "self"
FACILITATOR = "facilitator"


class Phase(str, Enum):
    PREPARATION = "Preparation"
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"

    @property
    def order(self) -> int:
        return _PHASE_ORDER[self]

    def __lt__(self, other: Phase) -> bool:  # type: ignore[override]
        if not isinstance(other, Phase):
            return NotImplemented
        return self.order < other.order

    def __le__(self, other: Phase) -> bool:  # type: ignore[override]
        if not isinstance(other, Phase):
            return NotImplemented
        return self.order <= other.order

    def __gt__(self, other: Phase) -> bool:  # type: ignore[override]
        if not isinstance(other, Phase):
            return NotImplemented
        return self.order > other.order

    def __ge__(self, other: Phase) -> bool:  # type: ignore[override]
        if not isinstance(other, Phase):
            return NotImplemented
        return self.order >= other.order


_PHASE_ORDER = {p: i for i, p in enumerate(Phase)}
DIALOGUE_PHASES: tuple[Phase, ...] = (Phase.A, Phase.B, Phase.C, Phase.D, Phase.E)


class RecordKind(str, Enum):
    DOCUMENT_REVIEW = "document_review"
    CONVERSATION_TURN = "conversation_turn"
    REFLECTION = "reflection"


class LogicalClock:
    """Run-wide monotonic counter shared by every agent and the transcript."""

    def __init__(self, start: int = 0):
        self._counter = itertools.count(start + 1)
        self._lock = threading.Lock()
        self.now = start

    def tick(self) -> int:
        with self._lock:
            self.now = next(self._counter)
            return self.now


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class MemoryRecord:
    record_id: str
    timestamp: int
    kind: RecordKind
    author: str
    content: str
    phase: Phase | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RecordKind(self.kind))
        if self.phase is not None:
            object.__setattr__(self, "phase", Phase(self.phase))
        if self.kind is RecordKind.DOCUMENT_REVIEW and self.author != SELF:
            raise PreconditionViolation("document reviews are always authored by 'self'")
        if self.kind is RecordKind.REFLECTION and self.author != SELF:
            raise PreconditionViolation("reflections are always authored by 'self'")
        if not self.content.strip():
            raise PreconditionViolation("memory records must have content")

    @property
    def words(self) -> int:
        return word_count(self.content)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "author": self.author,
            "phase": self.phase.value if self.phase else None,
            "content": self.content,
        }


@dataclass
class StructuredMemory:
    document_section: list[MemoryRecord] = field(default_factory=list)
    conversation_section: list[MemoryRecord] = field(default_factory=list)
    reflection_section: list[MemoryRecord] = field(default_factory=list)
    total_word_estimate: int = 0

    @property
    def records(self) -> list[MemoryRecord]:
        return self.document_section + self.conversation_section + self.reflection_section

    def render(self, self_name: str = "you") -> str:
        """Plain-text layout used inside prompts."""
        parts: list[str] = []
        if self.document_section:
            parts.append("## Technical documents you reviewed")
            parts.extend(r.content for r in self.document_section)
        if self.reflection_section:
            parts.append("## Your earlier reflections")
            parts.extend(f"- {r.content}" for r in self.reflection_section)
        if self.conversation_section:
            parts.append("## Conversation so far")
            for r in self.conversation_section:
                speaker = self_name if r.author == SELF else r.author
                parts.append(f"[{speaker}] {r.content}")
        return "\n\n".join(parts)


class MemoryStore:
    """Append-only record list with strictly increasing timestamps."""

    def __init__(self, records: Iterable[MemoryRecord] = ()):
        self._records: list[MemoryRecord] = []
        for r in records:
            self.append(r)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def last_timestamp(self) -> int | None:
        return self._records[-1].timestamp if self._records else None

    def append(self, record: MemoryRecord) -> MemoryStore:
        last = self.last_timestamp
        if last is not None and record.timestamp <= last:
            raise ClockViolation(f"timestamp {record.timestamp} is not after {last}")
        self._records.append(record)
        return self

    def add(self, clock: LogicalClock, kind: RecordKind, author: str, content: str,
            phase: Phase | None = None) -> MemoryRecord:
        ts = clock.tick()
        record = MemoryRecord(f"m{ts}", ts, kind, author, content, phase)
        self.append(record)
        return record

    def get(self, record_id: str) -> MemoryRecord:
        for r in self._records:
            if r.record_id == record_id:
                return r
        raise KeyError(record_id)

    def by_kind(self, kind: RecordKind) -> list[MemoryRecord]:
        return [r for r in self._records if r.kind is RecordKind(kind)]

    def by_phase(self, phase: Phase | None) -> list[MemoryRecord]:
        return [r for r in self._records if r.phase == phase]

    def conversation_by(self, author: str) -> list[MemoryRecord]:
        return [r for r in self._records if r.kind is RecordKind.CONVERSATION_TURN and r.author == author]

    def to_list(self) -> list[dict]:
        return [r.to_dict() for r in self._records]


def assemble(store: MemoryStore | Iterable[MemoryRecord], budget_words: int = DEFAULT_BUDGET_WORDS,
             phase: Phase | None = None) -> StructuredMemory:
    """Fit the store into ``budget_words`` and split it into sections.

    Only records up to ``phase`` are considered (all records when ``phase`` is
    None). When everything does not fit, the most recent conversation turn is
    always kept, then as many of the newest documents as fit, then the newest
    remaining conversation/reflection records. Each section is cut as a
    contiguous newest-first suffix and records are never split.
    """
    if budget_words <= 0:
        raise PreconditionViolation("budget_words must be positive")
    records = [r for r in store if phase is None or r.phase is None or r.phase <= phase]
    total = sum(r.words for r in records)
    if total <= budget_words:
        return _sections(records)

    docs = [r for r in records if r.kind is RecordKind.DOCUMENT_REVIEW]
    others = [r for r in records if r.kind is not RecordKind.DOCUMENT_REVIEW]
    convo = [r for r in others if r.kind is RecordKind.CONVERSATION_TURN]

    anchor = convo[-1] if convo else (docs[-1] if docs else others[-1])
    if anchor.words > budget_words:
        raise BudgetTooSmall(
            f"record {anchor.record_id} needs {anchor.words} words, budget is {budget_words}"
        )
    keep = {anchor.record_id}
    remaining = budget_words - anchor.words

    for pool in (docs, others):
        for r in reversed(pool):
            if r.record_id in keep:
                continue
            if r.words > remaining:
                break
            keep.add(r.record_id)
            remaining -= r.words

    return _sections([r for r in records if r.record_id in keep])


def _sections(records: list[MemoryRecord]) -> StructuredMemory:
    mem = StructuredMemory()
    for r in sorted(records, key=lambda r: r.timestamp):
        if r.kind is RecordKind.DOCUMENT_REVIEW:
            mem.document_section.append(r)
        elif r.kind is RecordKind.CONVERSATION_TURN:
            mem.conversation_section.append(r)
        else:
            mem.reflection_section.append(r)
    mem.total_word_estimate = sum(r.words for r in records)
    return mem
