from __future__ import annotations

import pytest

from analogy_agents.agent import Statement, StatementKind, truncate_words
from analogy_agents.corpus import DomainRole, TechnicalDocument
from analogy_agents.errors import PreconditionViolation
from analogy_agents.memory import FACILITATOR, LogicalClock, Phase, RecordKind
from analogy_agents.organization import from_edges
from analogy_agents.prompts import NO_ISSUES

from conftest import make_agent

DOC = TechnicalDocument("S1", DomainRole.SOURCE, "ejector", "Ejector basics", "A jet entrains air.")
REFLECTION_REPLIES = ["1. jet ring\n2. hidden impeller\n3. smooth duct"] + \
    ["novelty: 5, importance: 5, consensus: 5"] * 3 + [NO_ISSUES]


def words(n: int) -> str:
    return " ".join(f"w{i}" for i in range(n))


def peer_statement(agent_id="agent_2", text="a ring outlet could work", phase=Phase.A, ts=100) -> Statement:
    return Statement(agent_id, phase, 1, StatementKind.OPINION, "all", text, ts)


def test_truncate_keeps_spacing_and_word_boundary():
    assert truncate_words("one  two\nthree four", 3) == "one  two\nthree"
    assert truncate_words("short", 5) == "short"


def test_review_without_internal_state():
    agent = make_agent()
    assert agent.review_document(DOC) is None
    assert len(agent.memory) == 1 and agent.llm.backend.requests == []
    assert not agent.internal_calls


def test_review_with_internal_state():
    agent = make_agent(internal=True, replies=REFLECTION_REPLIES)
    outcome = agent.review_document(DOC)
    kinds = [r.kind for r in agent.memory]
    assert kinds == [RecordKind.DOCUMENT_REVIEW, RecordKind.REFLECTION]
    assert outcome.selected[0].text == "jet ring" and outcome.selected[0].refined
    assert agent.thought.is_empty()  # preparation reflections do not write the thought document


def test_review_empty_document():
    empty = TechnicalDocument("T9", DomainRole.TARGET, "household fan", "Blank", "  ")
    with pytest.raises(PreconditionViolation):
        make_agent().review_document(empty)


def test_statement_needs_preparation():
    with pytest.raises(PreconditionViolation):
        make_agent(replies=["x"]).make_statement(Phase.A, 1, "go")


@pytest.mark.parametrize("reply_words,kept", [(200, 170), (100, 100)])
def test_statement_word_limit(reply_words, kept):
    agent = make_agent(replies=[words(reply_words)])
    agent.finish_preparation()
    st = agent.make_statement(Phase.A, 1, "go")
    assert st.words == kept and st.kind is StatementKind.OPINION
    assert agent.memory.by_kind(RecordKind.CONVERSATION_TURN)[-1].content == st.text


def test_contexts_differ_only_by_thought_document():
    clock = LogicalClock()
    plain = make_agent(replies=["ok"], clock=clock)
    inner = make_agent(internal=True, replies=["ok"], clock=clock)
    for agent in (plain, inner):
        agent.finish_preparation()
    # identical memories: copy one record list into both stores
    rec = plain.memory.add(clock, RecordKind.CONVERSATION_TURN, FACILITATOR, "Phase A opener", Phase.A)
    inner.memory.append(rec)
    inner.thought.functional_similarities.append("both move air")

    plain.make_statement(Phase.A, 1, "go")
    inner.make_statement(Phase.A, 1, "go")
    (p_req,), (i_req,) = plain.llm.backend.requests, inner.llm.backend.requests
    assert p_req.digest != i_req.digest
    assert p_req.messages[0] == i_req.messages[0]
    thought_block = "\n\n# Your current thoughts\n\n" + inner.thought.render()
    assert thought_block in i_req.messages[1].content
    assert i_req.messages[1].content.replace(thought_block, "") == p_req.messages[1].content


def test_reaction_truncated_to_fifty():
    agent = make_agent(replies=[words(60)])
    agent.finish_preparation()
    st = agent.react_to(peer_statement())
    assert st.words == 50 and st.kind is StatementKind.REACTION and st.addressed_to == "agent_2"


def test_reaction_to_self():
    agent = make_agent()
    agent.finish_preparation()
    with pytest.raises(PreconditionViolation):
        agent.react_to(peer_statement("agent_1"))


def test_reaction_with_internal_state_updates_assessments():
    agent = make_agent(internal=True, replies=["I like it.", "AGREE:\n- ring outlet\nCONTRADICTORY OR MISSING:\n- none"])
    agent.finish_preparation()
    peer = peer_statement()
    agent.observe(peer)
    before = dict(agent.thought.peer_assessments)
    agent.react_to(peer)
    assert before == {}
    assert list(agent.thought.peer_assessments) == [("a", "agent_2")]
    assert agent.thought.peer_assessments[("a", "agent_2")].agree_or_interesting == ["ring outlet"]
    assert agent.internal_calls["assess_peer"] == 1


def test_observe_adds_records_in_order():
    agent = make_agent()
    agent.observe(peer_statement(text="first"))
    agent.observe(peer_statement("agent_3", text="second"))
    records = agent.memory.by_kind(RecordKind.CONVERSATION_TURN)
    assert [r.content for r in records] == ["first", "second"]
    assert [r.author for r in records] == ["agent_2", "agent_3"]


def test_observe_from_non_adjacent_author():
    graph = from_edges(["agent_1", "agent_2"], [("agent_1", "agent_2")])
    agent = make_agent(graph=graph)
    with pytest.raises(PreconditionViolation):
        agent.observe(peer_statement("agent_2"))


def test_every_request_carries_prohibition_clause():
    agent = make_agent(internal=True, replies=REFLECTION_REPLIES + ["opinion", "reaction", "AGREE:\n- x"])
    agent.review_document(DOC)
    agent.finish_preparation()
    agent.make_statement(Phase.A, 1, "go")
    agent.observe(peer_statement())
    agent.react_to(peer_statement())
    requests = agent.llm.backend.requests
    assert len(requests) == len(REFLECTION_REPLIES) + 3
    assert all(r.messages[0].role == "system" and "must not use knowledge" in r.messages[0].content
               for r in requests)


def test_no_internal_agent_cannot_reflect():
    agent = make_agent()
    agent.finish_preparation()
    with pytest.raises(PreconditionViolation):
        agent.reflect(Phase.A)
    assert not agent.internal_calls


def test_round_reflection_fills_phase_section():
    agent = make_agent(internal=True, replies=REFLECTION_REPLIES)
    agent.finish_preparation()
    outcome = agent.reflect(Phase.B)
    assert agent.thought.mechanical_differences == ["jet ring"]
    assert agent.thought.last_updated == outcome.record_timestamp
    assert agent.internal_calls == {"generate_ideas": 1, "score_idea": 3, "select_idea": 1,
                                    "introspect": 1, "update_thought": 1}


def test_reserved_agent_ids():
    for bad in ("self", "facilitator", "all", "two words", ""):
        with pytest.raises(PreconditionViolation):
            make_agent(bad)
