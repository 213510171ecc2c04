from __future__ import annotations

import json
from pathlib import Path

import pytest

from analogy_agents.agent import Agent, AgentConfig, DomainContext
from analogy_agents.corpus import load as load_corpus
from analogy_agents.internal_state import MotivationWeights
from analogy_agents.llm_backend import LLM, ScriptedBackend
from analogy_agents.memory import LogicalClock
from analogy_agents.organization import flat

DOMAINS = DomainContext("household fan", "ejector")


def scripted_llm(replies, seed: int = 1) -> LLM:
    return LLM(ScriptedBackend(replies), "test-model", seed)


def make_agent(agent_id: str = "agent_1", internal: bool = False, replies=None, *, clock=None,
               graph=None, weights: MotivationWeights | None = None, **config) -> Agent:
    cfg = AgentConfig(agent_id, has_internal_state=internal, weights=weights or MotivationWeights(), **config)
    backend_llm = scripted_llm(replies if replies is not None else [])
    return Agent(cfg, backend_llm, clock or LogicalClock(), graph, DOMAINS)


def write_corpus(root: Path, docs: list[tuple[str, str, str]], target="household fan",
                 source="ejector") -> Path:
    """``docs`` is a list of (id, role, body)."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for doc_id, role, body in docs:
        name = f"{doc_id}.txt"
        (root / name).write_text(body, encoding="utf-8")
        entries.append({"id": doc_id, "role": role, "title": f"Document {doc_id}", "file": name})
    manifest = {"target_domain": target, "source_domain": source, "documents": entries}
    (root / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    return root


@pytest.fixture
def mini_corpus(tmp_path):
    root = write_corpus(tmp_path / "corpus", [
        ("T1", "target", "A desk fan with three blades, a grille and a 40 W motor."),
        ("S1", "source", "A steam ejector entrains a secondary flow using a high-speed motive jet."),
    ])
    return load_corpus(root)


@pytest.fixture
def flat3():
    return flat(["agent_1", "agent_2", "agent_3"])


def build_team(n: int, internal: bool, backend, *, graph=None, seed: int = 1, weights=None):
    """Agents sharing one LLM binding and one logical clock, as in a real run."""
    ids = [f"agent_{i}" for i in range(1, n + 1)]
    graph = graph or flat(ids)
    clock = LogicalClock()
    llm = LLM(backend, "test-model", seed)
    agents = [Agent(AgentConfig(aid, has_internal_state=internal, weights=weights or MotivationWeights()),
                    llm, clock, graph, DOMAINS) for aid in ids]
    return agents, graph, clock


# --- acceptance reporting ---------------------------------------------------------------------

# criterion number -> (status, title, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status} - {title}" + (f" ({detail})" if detail else ""))
