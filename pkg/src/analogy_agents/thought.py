"""The agent's five-section current-thought document and its text layout."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import ParseError, PreconditionViolation
from .memory import Phase

# section letter -> (attribute, heading, lead sentence template, topic phrase)
SECTIONS: dict[str, tuple[str, str, str, str]] = {
    "a": (
        "functional_similarities",
        "Functional Similarities",
        "The functional similarities between the target domain and the {source}:",
        "the functional similarities",
    ),
    "b": (
        "mechanical_differences",
        "Mechanical Differences",
        "How the mechanisms in the {source} that produce the common functionalities "
        "differ from those in the target domain:",
        "the mechanical differences",
    ),
    "c": (
        "solutions",
        "Solutions",
        "How the functionalities or mechanisms of the {source} and the target domain should be "
        "modified or retained to solve the challenges of the target domain:",
        "the solutions",
    ),
    "d": (
        "new_challenges",
        "New Challenges",
        "The potential new challenges arising from applying the {source}'s mechanisms:",
        "the new challenges",
    ),
    "e": (
        "new_opportunities",
        "New Opportunities",
        "The additional opportunities generated by applying the {source}'s mechanisms:",
        "the new opportunities",
    ),
}

PHASE_SECTION = {Phase.A: "a", Phase.B: "b", Phase.C: "c", Phase.D: "d", Phase.E: "e"}

_AGREE = "The points in {peer}'s opinion on the topic of {topic} that I agree with or feel interesting are as follows:"
_CONTRA = ("The points in {peer}'s opinion on the topic of {topic} that contain contradictions "
           "or missing information are as follows:")


def section_for(phase: Phase) -> str:
    try:
        return PHASE_SECTION[Phase(phase)]
    except KeyError:
        raise PreconditionViolation(f"phase {phase} has no thought section") from None


def clean_bullet(text: str) -> str:
    return " ".join(text.split())


def _clean(bullets) -> list[str]:
    return [b for b in (clean_bullet(x) for x in bullets) if b]


@dataclass
class PeerAssessment:
    peer_id: str
    agree_or_interesting: list[str] = field(default_factory=list)
    contradictory_or_missing: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.peer_id or any(ch.isspace() for ch in self.peer_id):
            raise PreconditionViolation(f"bad peer id {self.peer_id!r}")
        self.agree_or_interesting = _clean(self.agree_or_interesting)
        self.contradictory_or_missing = _clean(self.contradictory_or_missing)


@dataclass
class CurrentThought:
    functional_similarities: list[str] = field(default_factory=list)
    mechanical_differences: list[str] = field(default_factory=list)
    solutions: list[str] = field(default_factory=list)
    new_challenges: list[str] = field(default_factory=list)
    new_opportunities: list[str] = field(default_factory=list)
    # keyed by (section letter, peer id)
    peer_assessments: dict[tuple[str, str], PeerAssessment] = field(default_factory=dict)
    last_updated: int = 0
    source_domain: str = "source domain"

    def __post_init__(self) -> None:
        for attr, *_ in SECTIONS.values():
            setattr(self, attr, _clean(getattr(self, attr)))
        self.source_domain = clean_bullet(self.source_domain) or "source domain"
        for (letter, peer), pa in self.peer_assessments.items():
            if letter not in SECTIONS or pa.peer_id != peer:
                raise PreconditionViolation(f"inconsistent assessment key {(letter, peer)}")

    def section(self, letter: str) -> list[str]:
        return getattr(self, SECTIONS[letter][0])

    def copy(self) -> CurrentThought:
        return replace(
            self,
            **{attr: list(getattr(self, attr)) for attr, *_ in SECTIONS.values()},
            peer_assessments=dict(self.peer_assessments),
        )

    def is_empty(self) -> bool:
        return not self.peer_assessments and not any(self.section(s) for s in SECTIONS)

    def render(self) -> str:
        return serialize(self)


def serialize(thought: CurrentThought) -> str:
    lines = [f"Current thoughts (last updated: {thought.last_updated})", ""]
    for letter, (attr, heading, lead, topic) in SECTIONS.items():
        lines.append(f"{letter}. {heading}")
        lines.append("")
        lines.append(lead.format(source=thought.source_domain))
        lines.extend(f" - {b}" for b in getattr(thought, attr))
        lines.append("")
        peers = sorted(p for (s, p) in thought.peer_assessments if s == letter)
        for peer in peers:
            pa = thought.peer_assessments[(letter, peer)]
            lines.append(_AGREE.format(peer=peer, topic=topic))
            lines.extend(f" - {b}" for b in pa.agree_or_interesting)
            lines.append("")
            lines.append(_CONTRA.format(peer=peer, topic=topic))
            lines.extend(f" - {b}" for b in pa.contradictory_or_missing)
            lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


_HEADER_RE = re.compile(r"^Current thoughts \(last updated: (-?\d+)\)$")
_SECTION_RE = re.compile(r"^([a-e])\. (.+)$")
_PEER_RE = re.compile(
    r"^The points in (\S+)'s opinion on the topic of (.+?) that "
    r"(I agree with or feel interesting|contain contradictions or missing information) are as follows:$"
)


def _lead_regex(letter: str) -> re.Pattern:
    lead = SECTIONS[letter][2]
    before, after = lead.split("{source}")
    return re.compile("^" + re.escape(before) + "(.+)" + re.escape(after) + "$")


_LEAD_RES = {letter: _lead_regex(letter) for letter in SECTIONS}


def parse(text: str) -> CurrentThought:
    """Inverse of :func:`serialize`."""
    lines = text.splitlines()
    if not lines or not (m := _HEADER_RE.match(lines[0])):
        raise ParseError("missing current-thought header line")
    last_updated = int(m.group(1))
    sections: dict[str, list[str]] = {s: [] for s in SECTIONS}
    peers: dict[tuple[str, str], PeerAssessment] = {}
    source = None
    letter: str | None = None
    target: list[str] | None = None
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        if line.startswith(" - "):
            if target is None:
                raise ParseError(f"line {lineno}: bullet outside any list")
            target.append(line[3:])
            continue
        if m := _SECTION_RE.match(line):
            if m.group(1) in SECTIONS and letter != m.group(1):
                letter = m.group(1)
                target = None
                continue
        if letter is None:
            raise ParseError(f"line {lineno}: text before first section")
        if m := _PEER_RE.match(line):
            peer = m.group(1)
            pa = peers.setdefault((letter, peer), PeerAssessment(peer))
            target = pa.agree_or_interesting if m.group(3).startswith("I agree") else pa.contradictory_or_missing
            continue
        if m := _LEAD_RES[letter].match(line):
            source = m.group(1)
            target = sections[letter]
            continue
        raise ParseError(f"line {lineno}: unrecognised line {line!r}")
    return CurrentThought(
        **{SECTIONS[s][0]: sections[s] for s in SECTIONS},
        peer_assessments=peers,
        last_updated=last_updated,
        source_domain=source or "source domain",
    )
