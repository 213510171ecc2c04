"""Rubric scoring of transcripts and per-model summary statistics."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from . import prompts
from .dialogue import EventKind, Transcript
from .errors import AwardOutOfRange, EmptyScores, InvalidTranscript, ParseError
from .llm_backend import LLM
from .memory import Phase

logger = logging.getLogger(__name__)

SOLUTION_PHASES = (Phase.C, Phase.D, Phase.E)
HUMAN = "human"
LLM_JUDGE = "llm_judge"


@dataclass(frozen=True)
class RubricCriterion:
    criterion_id: int
    description: str
    max_points: float
    exclusivity_group: int | None = None


@dataclass(frozen=True)
class Rubric:
    criteria: tuple[RubricCriterion, ...]
    total_cap: float = 8
    # each group is a tuple of branches; a branch is a tuple of criterion ids
    groups: tuple[tuple[tuple[int, ...], ...], ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        ids = [c.criterion_id for c in self.criteria]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate criterion ids in rubric")
        grouped: list[int] = [cid for g in self.groups for branch in g for cid in branch]
        if len(set(grouped)) != len(grouped):
            raise ParseError("a criterion belongs to more than one exclusivity branch")
        unknown = set(grouped) - set(ids)
        if unknown:
            raise ParseError(f"exclusivity groups name unknown criteria {sorted(unknown)}")

    def criterion(self, cid: int) -> RubricCriterion:
        for c in self.criteria:
            if c.criterion_id == cid:
                return c
        raise AwardOutOfRange(f"rubric has no criterion {cid}")

    @property
    def ids(self) -> list[int]:
        return [c.criterion_id for c in self.criteria]

    def describe(self) -> str:
        return "\n".join(
            f"C{c.criterion_id} (max {c.max_points:g} point{'s' if c.max_points != 1 else ''}): {c.description}"
            for c in self.criteria
        )

    @classmethod
    def from_dict(cls, data: dict) -> Rubric:
        groups = tuple(tuple(tuple(int(x) for x in branch) for branch in g)
                       for g in data.get("exclusivity_groups", []))
        group_of = {cid: gi for gi, g in enumerate(groups) for branch in g for cid in branch}
        criteria = tuple(
            RubricCriterion(int(c["id"]), c["description"], float(c["max_points"]), group_of.get(int(c["id"])))
            for c in data["criteria"]
        )
        return cls(criteria, float(data.get("total_cap", 8)), groups, data.get("name", ""))

    @classmethod
    def load(cls, path: str | Path | None = None) -> Rubric:
        if path is None:
            text = (resources.files("analogy_agents") / "data" / "rubric.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad rubric file: {exc}") from exc


def default_rubric() -> Rubric:
    return Rubric.load()


@dataclass
class RubricResult:
    effective: dict[int, float]
    raw_total: float
    total: float
    cap_bound: bool


def apply_rubric(awards: Mapping[int, float], rubric: Rubric) -> RubricResult:
    """Resolve exclusivity groups (higher branch wins, earlier on ties) and cap the total."""
    raw = {cid: 0.0 for cid in rubric.ids}
    for cid, points in awards.items():
        crit = rubric.criterion(int(cid))
        if not 0 <= points <= crit.max_points:
            raise AwardOutOfRange(f"criterion {cid}: {points} outside [0, {crit.max_points:g}]")
        raw[int(cid)] = float(points)
    effective = dict(raw)
    for group in rubric.groups:
        sums = [sum(raw[cid] for cid in branch) for branch in group]
        winner = max(range(len(group)), key=lambda k: (sums[k], -k))
        for k, branch in enumerate(group):
            if k != winner:
                for cid in branch:
                    effective[cid] = 0.0
    raw_total = sum(effective.values())
    total = min(rubric.total_cap, raw_total)
    return RubricResult(effective, raw_total, total, raw_total > rubric.total_cap)


@dataclass
class RunScore:
    run_id: str
    awards: dict[int, float]
    total: float
    scorer: str
    valid: bool = True
    effective: dict[int, float] = field(default_factory=dict)
    rationales: dict[int, str] = field(default_factory=dict)
    cap_bound: bool = False
    model: str | None = None
    seed: int | None = None

    @classmethod
    def from_awards(cls, run_id: str, awards: Mapping[int, float], rubric: Rubric, scorer: str,
                    rationales: Mapping[int, str] | None = None, model: str | None = None,
                    seed: int | None = None) -> RunScore:
        result = apply_rubric(awards, rubric)
        return cls(run_id, {int(k): float(v) for k, v in awards.items()}, result.total, scorer, True,
                   result.effective, dict(rationales or {}), result.cap_bound, model, seed)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "model": self.model,
            "seed": self.seed,
            "scorer": self.scorer,
            "valid": self.valid,
            "total": self.total,
            "cap_bound": self.cap_bound,
            "awards": {f"c{k}": v for k, v in sorted(self.awards.items())},
            "effective": {f"c{k}": v for k, v in sorted(self.effective.items())},
            "rationales": {f"c{k}": v for k, v in sorted(self.rationales.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunScore:
        def ids(d):
            return {int(k.lstrip("c")): v for k, v in (d or {}).items()}
        return cls(data["run_id"], ids(data["awards"]), float(data["total"]), data["scorer"],
                   bool(data.get("valid", True)), ids(data.get("effective")), ids(data.get("rationales")),
                   bool(data.get("cap_bound", False)), data.get("model"), data.get("seed"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> RunScore:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --- solutions -----------------------------------------------------------------------------


def extract_solutions(transcript: Transcript) -> dict[str, str]:
    """Each agent's Phase C-E opinion statements, joined in order."""
    if not transcript.valid:
        raise InvalidTranscript(f"transcript {transcript.header.run_id} is invalid or incomplete")
    order = list(transcript.header.agents)
    texts: dict[str, list[str]] = {a: [] for a in order}
    for e in transcript.events:
        if e.event_kind is EventKind.STATEMENT and e.phase in SOLUTION_PHASES:
            texts.setdefault(e.agent_id, []).append(e.payload.get("text", ""))
    return {a: "\n\n".join(t for t in ts if t) for a, ts in texts.items()}


# --- human scores ------------------------------------------------------------------------------

_COL_RE = re.compile(r"^c(\d+)$", re.IGNORECASE)


def import_human_scores(path: str | Path, rubric: Rubric | None = None) -> list[RunScore]:
    """Rows of ``run_id,c1,...,c9``; blank cells count as zero."""
    rubric = rubric or default_rubric()
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(cell.strip() for cell in r)]
    if not rows:
        return []
    header = [h.strip() for h in rows[0]]
    if "run_id" not in header:
        raise ParseError("human score file needs a header row with a run_id column")
    columns: dict[int, int] = {}
    for idx, name in enumerate(header):
        if m := _COL_RE.match(name):
            cid = int(m.group(1))
            if cid not in rubric.ids:
                raise ParseError(f"column {name} names no rubric criterion")
            columns[idx] = cid
    rid = header.index("run_id")
    scores = []
    for lineno, row in enumerate(rows[1:], 2):
        awards: dict[int, float] = {}
        for idx, cid in columns.items():
            cell = row[idx].strip() if idx < len(row) else ""
            if not cell:
                continue
            try:
                awards[cid] = float(cell)
            except ValueError:
                raise ParseError(f"line {lineno}: {header[idx]}={cell!r} is not a number") from None
        scores.append(RunScore.from_awards(row[rid].strip(), awards, rubric, HUMAN))
    return scores


# --- LLM judge -------------------------------------------------------------------------------------

_JUDGE_LINE = re.compile(r"^\W*C(\d+)\W*:\s*(\d+(?:\.\d+)?)\s*(?:\|\s*(.*))?$", re.IGNORECASE)


def parse_judgement(text: str, rubric: Rubric) -> dict[int, tuple[float, str]]:
    found: dict[int, tuple[float, str]] = {}
    for line in text.splitlines():
        if not (m := _JUDGE_LINE.match(line.strip())):
            continue
        cid = int(m.group(1))
        if cid not in rubric.ids or cid in found:
            continue
        cap = rubric.criterion(cid).max_points
        points = float(m.group(2))
        if points > cap:
            logger.warning("judge gave %g for C%d (max %g); clamped", points, cid, cap)
            points = cap
        found[cid] = (points, (m.group(3) or "").strip())
    missing = [cid for cid in rubric.ids if cid not in found]
    if missing:
        raise ParseError(f"judge reply lacks criteria {missing}")
    return found


def majority_threshold(n_agents: int) -> int:
    return max(1, math.ceil(n_agents / 2))


def majority_award(points: Sequence[float], threshold: int) -> float:
    """Largest award that at least ``threshold`` agents reached; 0 if too few satisfied it."""
    satisfied = sorted((p for p in points if p > 0), reverse=True)
    if len(satisfied) < threshold:
        return 0.0
    return satisfied[threshold - 1]


def judge(transcript: Transcript, rubric: Rubric, llm: LLM, threshold: int | None = None) -> RunScore:
    solutions = extract_solutions(transcript)
    t = threshold or majority_threshold(len(solutions))
    per_agent: dict[str, dict[int, tuple[float, str]]] = {}
    criteria_text = rubric.describe()
    for agent_id, solution in solutions.items():
        task = prompts.fill(prompts.JUDGE, criteria=criteria_text, agent=agent_id,
                            solution=solution or "(no statements)")
        reminder = prompts.fill(prompts.JUDGE_REMINDER, n=max(rubric.ids))
        per_agent[agent_id] = llm.ask_parsed(prompts.JUDGE_SYSTEM, task,
                                             lambda text: parse_judgement(text, rubric), reminder)
    awards, rationales = {}, {}
    for cid in rubric.ids:
        values = [per_agent[a][cid][0] for a in solutions]
        awards[cid] = majority_award(values, t)
        rationales[cid] = "; ".join(f"{a}: {per_agent[a][cid][0]:g} ({per_agent[a][cid][1]})" for a in solutions)
    h = transcript.header
    return RunScore.from_awards(h.run_id, awards, rubric, LLM_JUDGE, rationales, h.model, h.seed)


# --- statistics ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    model: str
    min: float
    max: float
    mean: float
    std: float
    n: int
    cap_bound_runs: int = 0

    def to_dict(self) -> dict:
        return {"model": self.model, "min": self.min, "max": self.max, "mean": self.mean,
                "std": self.std, "n": self.n, "cap_bound_runs": self.cap_bound_runs}


def aggregate(scores: Sequence[float], model: str = "", cap_bound_runs: int = 0) -> SummaryStats:
    """Min, max, mean and sample (n-1) standard deviation; std is 0 for a single score."""
    values = [float(s) for s in scores]
    if not values:
        raise EmptyScores(f"no scores for model {model!r}")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return SummaryStats(model, min(values), max(values), mean, std, len(values), cap_bound_runs)


def summarize(run_scores: Sequence[RunScore]) -> list[SummaryStats]:
    by_model: dict[str, list[RunScore]] = {}
    for s in run_scores:
        if s.valid:
            by_model.setdefault(s.model or "?", []).append(s)
    return [aggregate([s.total for s in rows], model, sum(s.cap_bound for s in rows))
            for model, rows in sorted(by_model.items())]


def format_table(stats: Sequence[SummaryStats], labels: Mapping[str, str] | None = None,
                 cap: float = 8.0) -> str:
    labels = labels or {}
    names = [labels.get(s.model, s.model) + ("*" if s.cap_bound_runs else "") for s in stats]
    width = max([len("Model")] + [len(n) for n in names])
    head = f"{'Model':<{width}}  {'Min':>5}  {'Max':>5}  {'Average':>7}  {'Standard deviation':>18}  {'n':>3}"
    lines = [head, "-" * len(head)]
    for name, s in zip(names, stats):
        lines.append(f"{name:<{width}}  {s.min:>5g}  {s.max:>5g}  {s.mean:>7.2f}  {s.std:>18.2f}  {s.n:>3}")
    if any(s.cap_bound_runs for s in stats):
        lines.append(f"* the {cap:g}-point cap bound in at least one run of this model")
    return "\n".join(lines) + "\n"
