"""Directed communication graph over the agent team."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import PreconditionViolation, UnknownAgent


class EdgeKind(str, Enum):
    COMMUNICATION = "communication"
    # stored for configs that describe reporting lines; the dialogue ignores them
    INSTRUCTION = "instruction"


@dataclass(frozen=True)
class OrgGraph:
    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]
    edge_kinds: dict[tuple[str, str], EdgeKind] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))

    def kind(self, src: str, dst: str) -> EdgeKind:
        return self.edge_kinds.get((src, dst), EdgeKind.COMMUNICATION)

    def out_neighbors(self, agent: str) -> list[str]:
        """Agents that hear ``agent``, sorted for deterministic broadcast order."""
        self._require(agent)
        return sorted(dst for src, dst in self.edges if src == agent and self.kind(src, dst) is EdgeKind.COMMUNICATION)

    def can_communicate(self, src: str, dst: str) -> bool:
        return can_communicate(self, src, dst)

    def _require(self, agent: str) -> None:
        if agent not in self.vertices:
            raise UnknownAgent(agent)

    def to_dict(self) -> dict:
        return {
            "vertices": sorted(self.vertices),
            "edges": [[s, d, self.kind(s, d).value] for s, d in sorted(self.edges)],
        }


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def flat(agent_ids: Iterable[str]) -> OrgGraph:
    ids = list(agent_ids)
    if not ids:
        raise PreconditionViolation("an organization needs at least one agent")
    if len(set(ids)) != len(ids):
        raise PreconditionViolation("agent ids must be unique")
    return OrgGraph(frozenset(ids), frozenset((a, b) for a in ids for b in ids if a != b))


def from_edges(agent_ids: Iterable[str], edges: Iterable) -> OrgGraph:
    """Build a graph from ``(src, dst)`` or ``(src, dst, kind)`` entries."""
    pairs, kinds = [], {}
    for edge in edges:
        src, dst = edge[0], edge[1]
        pairs.append((src, dst))
        if len(edge) > 2:
            kinds[(src, dst)] = EdgeKind(edge[2])
    graph = OrgGraph(frozenset(agent_ids), frozenset(pairs), kinds)
    report = validate(graph)
    if not report.ok:
        raise PreconditionViolation("; ".join(report.errors))
    return graph


def can_communicate(graph: OrgGraph, src: str, dst: str) -> bool:
    graph._require(src)
    graph._require(dst)
    return (src, dst) in graph.edges and graph.kind(src, dst) is EdgeKind.COMMUNICATION


def validate(graph: OrgGraph) -> ValidationReport:
    """Problems in ``graph``; errors for malformed edges, warnings for isolation."""
    report = ValidationReport()
    for src, dst in sorted(graph.edges):
        if src == dst:
            report.errors.append(f"self-loop on {src}")
        for end in (src, dst):
            if end not in graph.vertices:
                report.errors.append(f"edge ({src}, {dst}) has dangling endpoint {end}")
    if len(graph.vertices) > 1:
        senders = {s for s, _ in graph.edges}
        receivers = {d for _, d in graph.edges}
        for v in sorted(graph.vertices):
            if v not in senders and v not in receivers:
                report.warnings.append(f"{v} is isolated")
            elif v not in receivers:
                report.warnings.append(f"{v} is unreachable: no agent can address it")
    return report
