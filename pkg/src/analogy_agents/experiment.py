"""Eight-model ablation presets, experiment config, and the (model, seed) matrix runner."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import yaml

from .agent import Agent, AgentConfig, DomainContext
from .corpus import Corpus
from .corpus import load as load_corpus
from .dialogue import DialogueConfig, RunAborted, Transcript, TranscriptHeader, run_dialogue
from .errors import AnalogyError, InvalidSpec, ParseError
from .internal_state import DEFAULT_IDEAS_PER_STEP, MotivationWeights
from .llm_backend import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, LLM, Backend
from .memory import DEFAULT_BUDGET_WORDS, LogicalClock
from .organization import OrgGraph, flat, from_edges

logger = logging.getLogger(__name__)

TRANSCRIPT_NAME = "transcript.jsonl"
SCORE_NAME = "score.json"


class Motivation(str, Enum):
    NONE = "none"
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    n_agents: int
    internal_state: bool
    motivation: Motivation = Motivation.NONE
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "motivation", Motivation(self.motivation))
        if self.n_agents < 1:
            raise InvalidSpec("a model needs at least one agent")
        if not self.internal_state and self.motivation is not Motivation.NONE:
            raise InvalidSpec(f"model {self.name}: motivation needs internal state")
        if self.internal_state and self.n_agents > 1 and self.motivation is Motivation.NONE:
            raise InvalidSpec(f"model {self.name}: a multi-agent internal-state team needs a motivation profile")

    def to_dict(self) -> dict:
        return {"name": self.name, "n_agents": self.n_agents, "internal_state": self.internal_state,
                "motivation": self.motivation.value}


PRESETS: dict[str, ModelSpec] = {
    "A": ModelSpec("A", 1, False, Motivation.NONE, "1 no-internal agent"),
    "B": ModelSpec("B", 1, True, Motivation.NONE, "1 with-internal agent"),
    "C": ModelSpec("C", 3, False, Motivation.NONE, "3 no-internal agents"),
    "D": ModelSpec("D", 3, True, Motivation.HOMOGENEOUS, "3 with-internal homogeneous agents"),
    "E": ModelSpec("E", 3, True, Motivation.HETEROGENEOUS, "3 with-internal heterogeneous agents"),
    "F": ModelSpec("F", 5, False, Motivation.NONE, "5 no-internal agents"),
    "G": ModelSpec("G", 5, True, Motivation.HOMOGENEOUS, "5 with-internal homogeneous agents"),
    "H": ModelSpec("H", 5, True, Motivation.HETEROGENEOUS, "5 with-internal heterogeneous agents"),
}

# novelty-seeking, balanced and consensus-seeking weight profiles (alpha, beta, gamma)
WEIGHT_PROFILES: dict[str, MotivationWeights] = {
    "novelty": MotivationWeights(2.0, 1.0, 0.5),
    "balanced": MotivationWeights(1.0, 1.0, 1.0),
    "consensus": MotivationWeights(0.5, 1.0, 2.0),
}


def heterogeneous_profiles(n: int) -> list[str]:
    """Profile names for an ``n``-agent mixed team: novelty seekers, balanced, consensus seekers."""
    if n == 1:
        return ["balanced"]
    edge = (n - 1) // 2
    return ["novelty"] * edge + ["balanced"] * (n - 2 * edge) + ["consensus"] * edge


@dataclass
class AgentDefaults:
    statement_word_limit: int = 170
    reaction_word_limit: int = 50
    ideas_per_step: int = DEFAULT_IDEAS_PER_STEP
    ideas_into_thought: int = 1
    memory_budget_words: int = DEFAULT_BUDGET_WORDS
    persona: str = ""


def agent_ids(n: int) -> list[str]:
    return [f"agent_{i}" for i in range(1, n + 1)]


def build_model(spec: ModelSpec, defaults: AgentDefaults | None = None,
                profiles: dict[str, MotivationWeights] | None = None,
                graph: OrgGraph | None = None) -> tuple[list[AgentConfig], OrgGraph]:
    """Agent configurations and organization for a model preset."""
    if not isinstance(spec, ModelSpec):
        raise InvalidSpec(f"not a model spec: {spec!r}")
    defaults = defaults or AgentDefaults()
    profiles = {**WEIGHT_PROFILES, **(profiles or {})}
    ids = agent_ids(spec.n_agents)
    if spec.motivation is Motivation.HETEROGENEOUS:
        weights = [profiles[p] for p in heterogeneous_profiles(spec.n_agents)]
    else:
        weights = [profiles["balanced"]] * spec.n_agents
    configs = [
        AgentConfig(
            agent_id=aid,
            has_internal_state=spec.internal_state,
            weights=w,
            statement_word_limit=defaults.statement_word_limit,
            reaction_word_limit=defaults.reaction_word_limit,
            persona=defaults.persona,
            ideas_per_step=defaults.ideas_per_step,
            ideas_into_thought=defaults.ideas_into_thought,
            memory_budget_words=defaults.memory_budget_words,
        )
        for aid, w in zip(ids, weights)
    ]
    if graph is None:
        graph = flat(ids)
    elif graph.vertices != frozenset(ids):
        raise InvalidSpec(f"organization vertices {sorted(graph.vertices)} do not match agents {ids}")
    return configs, graph


# --- config -----------------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    models: list[str] = field(default_factory=lambda: list(PRESETS))
    seeds: list[int] = field(default_factory=lambda: list(range(1, 11)))
    corpus: str | None = None
    output_dir: str = "out"
    dialogue: DialogueConfig = field(default_factory=DialogueConfig)
    agents: AgentDefaults = field(default_factory=AgentDefaults)
    weight_profiles: dict[str, MotivationWeights] = field(default_factory=dict)
    # "flat" or {"edges": [[src, dst], ...]} applied to every model with matching ids
    organization: str | dict = "flat"
    prohibited_references: list[str] = field(default_factory=list)
    model_id: str = "gpt-4o"
    endpoint: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    cassette_dir: str | None = None
    workers: int | None = None
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    def __post_init__(self) -> None:
        if len(set(self.seeds)) != len(self.seeds):
            raise ParseError("experiment seeds must be distinct")
        unknown = [m for m in self.models if m not in PRESETS]
        if unknown:
            raise InvalidSpec(f"unknown model(s) {unknown}; choose from {sorted(PRESETS)}")

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def runs_dir(self) -> Path:
        return self.resolve(self.output_dir) / "runs"

    def specs(self) -> list[ModelSpec]:
        return [PRESETS[m] for m in self.models]

    def graph_for(self, spec: ModelSpec) -> OrgGraph | None:
        if self.organization == "flat":
            return None
        if isinstance(self.organization, dict) and "edges" in self.organization:
            ids = agent_ids(spec.n_agents)
            edges = [e for e in self.organization["edges"] if e[0] in ids and e[1] in ids]
            return from_edges(ids, edges)
        raise ParseError(f"unsupported organization {self.organization!r}")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> ExperimentConfig:
        data = dict(data or {})
        dlg = data.pop("dialogue", {}) or {}
        agents = data.pop("agents", {}) or {}
        profiles = {k: MotivationWeights(*v) for k, v in (data.pop("weight_profiles", {}) or {}).items()}
        known = set(cls.__dataclass_fields__) - {"dialogue", "agents", "weight_profiles", "base_dir"}
        extra = set(data) - known
        if extra:
            raise ParseError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(
                dialogue=DialogueConfig(**dlg),
                agents=AgentDefaults(**agents),
                weight_profiles=profiles,
                base_dir=base_dir or Path.cwd(),
                **data,
            )
        except TypeError as exc:
            raise ParseError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return cls.from_dict(data or {}, base_dir=path.parent)


def config_digest(spec: ModelSpec, agents: Sequence[AgentConfig], graph: OrgGraph, corpus: Corpus,
                  config: ExperimentConfig) -> str:
    payload = {
        "model": spec.to_dict(),
        "agents": [a.to_dict() for a in agents],
        "graph": graph.to_dict(),
        "corpus": corpus.digest(),
        "dialogue": {**config.dialogue.to_dict(), "seed": None},
        "llm": {"model_id": config.model_id, "temperature": config.temperature, "max_tokens": config.max_tokens},
        "prohibited": list(config.prohibited_references),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


# --- runs ---------------------------------------------------------------------------------------


@dataclass
class RunResult:
    spec: ModelSpec
    seed: int
    path: Path
    status: str  # "completed", "skipped" or "failed"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status != "failed"


BackendFactory = Callable[[ModelSpec, int], Backend]


def run_id(spec: ModelSpec, seed: int) -> str:
    return f"{spec.name}-{seed}"


def transcript_path(runs_dir: Path, spec: ModelSpec, seed: int) -> Path:
    return runs_dir / spec.name / str(seed) / TRANSCRIPT_NAME


def run_single(spec: ModelSpec, seed: int, config: ExperimentConfig, backend: Backend,
               corpus: Corpus, path: Path) -> Transcript:
    """One dialogue, written incrementally to ``path`` via a ``.partial`` file."""
    agent_configs, graph = build_model(spec, config.agents, config.weight_profiles, config.graph_for(spec))
    clock = LogicalClock()
    llm = LLM(backend, config.model_id, seed, config.temperature, config.max_tokens)
    domains = DomainContext(corpus.target_domain, corpus.source_domain, tuple(config.prohibited_references))
    agents = [Agent(c, llm, clock, graph, domains) for c in agent_configs]
    header = TranscriptHeader(run_id(spec, seed), spec.name, seed,
                              config_digest(spec, agent_configs, graph, corpus, config),
                              [c.agent_id for c in agent_configs])
    dialogue = DialogueConfig(dict(config.dialogue.rounds_per_phase), config.dialogue.reactions_enabled,
                              config.dialogue.turn_order, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", encoding="utf-8") as sink:
        transcript = Transcript(header, clock, sink)
        try:
            run_dialogue(agents, graph, corpus, dialogue, transcript, config.agents.statement_word_limit)
        finally:
            sink.close()
            os.replace(partial, path)
    return transcript


def is_complete(path: Path) -> bool:
    if not path.exists():
        return False
    try:
        return Transcript.read(path).valid
    except (ParseError, OSError):
        return False


def run_matrix(config: ExperimentConfig, backend_factory: BackendFactory, *, models: Sequence[str] | None = None,
               seeds: Sequence[int] | None = None, force: bool = False,
               progress: Callable[[RunResult], None] | None = None) -> list[RunResult]:
    """Run every (model, seed) pair; completed transcripts are kept unless ``force``."""
    specs = [PRESETS[m] for m in (models or config.models)]
    seed_list = list(seeds) if seeds is not None else list(config.seeds)
    corpus = load_corpus(config.resolve(config.corpus))
    runs_dir = config.runs_dir

    def one(spec: ModelSpec, seed: int) -> RunResult:
        path = transcript_path(runs_dir, spec, seed)
        if not force and is_complete(path):
            result = RunResult(spec, seed, path, "skipped")
        else:
            try:
                run_single(spec, seed, config, backend_factory(spec, seed), corpus, path)
                result = RunResult(spec, seed, path, "completed")
            except RunAborted as exc:
                result = RunResult(spec, seed, path, "failed", str(exc.cause))
            except AnalogyError as exc:
                result = RunResult(spec, seed, path, "failed", str(exc))
        if progress:
            progress(result)
        return result

    jobs = [(spec, seed) for spec in specs for seed in seed_list]
    width = config.workers or max(1, len(specs))
    if width == 1 or len(jobs) == 1:
        results = [one(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(lambda job: one(*job), jobs))
    for r in results:
        if r.status == "failed":
            logger.error("run %s failed: %s", run_id(r.spec, r.seed), r.error)
    return results
