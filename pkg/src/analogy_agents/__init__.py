"""Generative-agent dialogues for analogy-driven design, with an ablation harness."""

from .agent import Agent, AgentConfig, Statement
from .corpus import Corpus, TechnicalDocument
from .dialogue import DialogueConfig, Transcript, run_dialogue, run_phase
from .evaluation import Rubric, RunScore, aggregate, apply_rubric, judge
from .experiment import PRESETS, ExperimentConfig, ModelSpec, build_model, run_matrix
from .internal_state import IdeaScores, MotivationWeights, intrinsic_reward, select_idea
from .llm_backend import LLM, CompletionRequest, LiveBackend, ReplayBackend, ReplayCassette
from .organization import OrgGraph, flat
from .thought import CurrentThought

__version__ = "0.1.0"
