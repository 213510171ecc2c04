from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from analogy_agents.dialogue import DialogueConfig, EventKind, Transcript, TranscriptHeader, run_dialogue
from analogy_agents.errors import AwardOutOfRange, EmptyScores, InvalidTranscript, ParseError
from analogy_agents.evaluation import (
    RunScore,
    aggregate,
    apply_rubric,
    default_rubric,
    extract_solutions,
    format_table,
    import_human_scores,
    judge,
    majority_award,
    majority_threshold,
    parse_judgement,
    summarize,
)
from analogy_agents.llm_backend import LLM, ScriptedBackend
from analogy_agents.memory import DIALOGUE_PHASES, Phase
from analogy_agents.synthetic import SyntheticBackend

from conftest import build_team

RUBRIC = default_rubric()
ONE_ROUND = {p: 1 for p in DIALOGUE_PHASES}


def transcript_for(n, corpus, rounds=None) -> Transcript:
    agents, graph, clock = build_team(n, False, SyntheticBackend())
    header = TranscriptHeader(f"X-{n}", "X", 1, "d", [a.agent_id for a in agents])
    return run_dialogue(agents, graph, corpus, DialogueConfig(rounds or ONE_ROUND), Transcript(header, clock))


def judge_reply(points: dict[int, int]) -> str:
    return "\n".join(f"C{c}: {points.get(c, 0)} | because" for c in RUBRIC.ids)


# --- rubric ---------------------------------------------------------------------------------------------


def test_rubric_shape():
    assert RUBRIC.ids == list(range(1, 10))
    assert [RUBRIC.criterion(c).max_points for c in RUBRIC.ids] == [2, 1, 1, 2, 1, 1, 1, 2, 1]
    assert sum(RUBRIC.criterion(c).max_points for c in RUBRIC.ids) == 12
    assert RUBRIC.total_cap == 8
    assert "blades" in RUBRIC.criterion(1).description


def test_contradictory_branch_resolves_to_higher():
    result = apply_rubric({1: 2, 2: 1}, RUBRIC)
    assert result.raw_total == 2 and result.total == 2
    assert result.effective[2] == 0


def test_all_max_is_eight():
    result = apply_rubric({c: RUBRIC.criterion(c).max_points for c in RUBRIC.ids}, RUBRIC)
    assert result.total == 8 and result.raw_total == 9 and result.cap_bound


def test_all_zero():
    assert apply_rubric({}, RUBRIC).total == 0


def test_out_of_range_award():
    with pytest.raises(AwardOutOfRange):
        apply_rubric({1: 3}, RUBRIC)
    with pytest.raises(AwardOutOfRange):
        apply_rubric({2: -1}, RUBRIC)


def test_exhaustive_group_resolution():
    ranges = [range(int(RUBRIC.criterion(c).max_points) + 1) for c in RUBRIC.ids]
    for combo in itertools.product(*ranges):
        a = dict(zip(RUBRIC.ids, combo))
        expected = max(a[1], a[2] + a[3]) + max(a[4], a[5]) + a[6] + a[7] + a[8] + a[9]
        result = apply_rubric(a, RUBRIC)
        assert result.total == min(8, expected)
        eff = result.effective
        assert not (eff[1] and (eff[2] or eff[3]))
        assert not (eff[4] and eff[5])


# --- human scores --------------------------------------------------------------------------------------


def test_import_row(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("run_id,c1,c2,c3,c4,c5,c6,c7,c8,c9\nrun1,2,,,,,,1,,1\n", encoding="utf-8")
    (score,) = import_human_scores(path, RUBRIC)
    assert score.run_id == "run1" and score.total == 4 and score.scorer == "human"


def test_import_out_of_range(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("run_id,c1\nrun1,3\n", encoding="utf-8")
    with pytest.raises(AwardOutOfRange):
        import_human_scores(path, RUBRIC)


def test_import_empty_file(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("", encoding="utf-8")
    assert import_human_scores(path, RUBRIC) == []


def test_import_bad_cells(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("run_id,c1\nrun1,lots\n", encoding="utf-8")
    with pytest.raises(ParseError):
        import_human_scores(path, RUBRIC)
    path.write_text("run_id,c12\nrun1,1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        import_human_scores(path, RUBRIC)


def test_run_score_file_round_trip(tmp_path):
    score = RunScore.from_awards("H-1", {1: 2, 4: 1, 8: 2}, RUBRIC, "human", {1: "ok"}, "H", 1)
    score.save(tmp_path / "score.json")
    assert RunScore.load(tmp_path / "score.json") == score


# --- solutions ------------------------------------------------------------------------------------------


def test_single_agent_solution_has_six_statements(mini_corpus):
    t = transcript_for(1, mini_corpus, rounds={p: 2 for p in DIALOGUE_PHASES})
    statements = [e.payload["text"] for e in t.of_kind(EventKind.STATEMENT) if e.phase >= Phase.C]
    assert len(statements) == 6
    assert extract_solutions(t) == {"agent_1": "\n\n".join(statements)}


def test_five_agents_five_solutions(mini_corpus):
    assert len(extract_solutions(transcript_for(5, mini_corpus))) == 5


def test_invalid_transcript_refused(mini_corpus):
    t = transcript_for(1, mini_corpus)
    t.emit(Phase.E, 1, EventKind.ERROR, "agent_1", {"fatal": True})
    with pytest.raises(InvalidTranscript):
        extract_solutions(t)


# --- judging --------------------------------------------------------------------------------------------


def test_threshold_arithmetic():
    assert [majority_threshold(n) for n in (1, 2, 3, 4, 5)] == [1, 1, 2, 2, 3]
    assert majority_award([1, 1, 0, 0, 0], majority_threshold(5)) == 0
    assert majority_award([1], majority_threshold(1)) == 1
    assert majority_award([2, 1, 0], majority_threshold(3)) == 1


def test_three_agents_two_satisfy(mini_corpus):
    replies = [judge_reply({7: 1, 1: 2}), judge_reply({7: 1}), judge_reply({1: 2})]
    llm = LLM(ScriptedBackend(replies), "judge", 1, 0.0)
    score = judge(transcript_for(3, mini_corpus), RUBRIC, llm)
    assert score.awards[7] == 1 and score.awards[1] == 2 and score.total == 3
    assert score.scorer == "llm_judge" and "agent_2" in score.rationales[7]
    assert len(llm.backend.requests) == 3


def test_five_agents_two_satisfy_not_counted(mini_corpus):
    replies = [judge_reply({6: 1}), judge_reply({6: 1}), judge_reply({}), judge_reply({}), judge_reply({})]
    score = judge(transcript_for(5, mini_corpus), RUBRIC, LLM(ScriptedBackend(replies), "judge", 1, 0.0))
    assert score.awards[6] == 0 and score.total == 0


def test_single_agent_satisfied(mini_corpus):
    score = judge(transcript_for(1, mini_corpus), RUBRIC,
                  LLM(ScriptedBackend([judge_reply({9: 1})]), "judge", 1, 0.0))
    assert score.awards[9] == 1 and score.total == 1


def test_judge_reply_parsing():
    parsed = parse_judgement("C1: 5 | generous\n" + "\n".join(f"C{c}: 0" for c in range(2, 10)), RUBRIC)
    assert parsed[1] == (2, "generous")  # clamped to the criterion maximum
    with pytest.raises(ParseError):
        parse_judgement("C1: 1", RUBRIC)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=9), st.integers(1, 2))
def test_majority_monotone(points, extra):
    before = majority_award(points, majority_threshold(len(points)))
    after = majority_award(points + [extra], majority_threshold(len(points) + 1))
    if before > 0:
        assert after > 0


# --- statistics -------------------------------------------------------------------------------------------


def test_aggregate_examples():
    s = aggregate([4, 4, 4])
    assert (s.min, s.max, s.mean, s.std) == (4, 4, 4, 0)
    s = aggregate([3, 7])
    assert s.mean == 5 and s.std == pytest.approx(math.sqrt(8), abs=1e-12)
    assert aggregate([6]).std == 0
    with pytest.raises(EmptyScores):
        aggregate([])


def test_summary_table():
    rows = [RunScore.from_awards(f"{m}-{s}", {1: s % 3}, RUBRIC, "human", model=m, seed=s)
            for m in ("A", "H") for s in (1, 2)]
    stats = summarize(rows)
    assert [s.model for s in stats] == ["A", "H"]
    table = format_table(stats, {"A": "A: one agent"})
    assert table.splitlines()[0].split() == ["Model", "Min", "Max", "Average", "Standard", "deviation", "n"]
    assert "A: one agent" in table and len(table.splitlines()) == 4
