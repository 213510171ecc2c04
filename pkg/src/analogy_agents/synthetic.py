"""Offline stand-in for a chat model.

``SyntheticBackend`` recognises each prompt the package sends and answers in
the expected format with text stitched from a fixed phrase bank, seeded by
the request digest. It exists to exercise the whole pipeline and to build
replay cassettes without network access; it says nothing about how a real
model would behave.
"""

from __future__ import annotations

import random
import re

from . import prompts
from .llm_backend import CompletionRequest, CompletionResponse, request_digest

_FACTS = [
    "both the fan and the ejector exist to move a stream of fluid from one place to another",
    "the ejector moves a large secondary flow with a small high-speed motive jet",
    "a household fan pushes air directly with rotating blades in the open",
    "the pressure drop around a fast jet pulls surrounding air into the stream",
    "shear at the boundary of the jet carries the slower surrounding air along",
    "the diffuser recovers pressure by widening the flow path after mixing",
    "the ejector has no moving parts in contact with the moved fluid",
    "an annular slot nozzle can inject the jet around the inside of a ring and leave the centre open",
    "customers complain about cleaning the grille and the blades",
    "the blade passing frequency causes a buffeting, uneven stream at close range",
    "the motor hum and blade noise are the most frequent noise complaints",
    "a household fan must run from a wall socket without compressed air or steam",
    "a small enclosed impeller driven by the existing motor could supply the motive air",
    "the impeller and motor could sit inside the base where no finger can reach them",
    "the motive air could leave through a narrow slit in a ring-shaped outlet",
    "smooth internal channels and guide vanes would reduce turbulence and noise",
    "a brushless motor would raise efficiency and lower hum",
    "abrupt steps and sharp edges in the flow path create tonal noise",
    "the induced airflow would be smoother because it is not chopped by passing blades",
    "the open ring would be easy to wipe clean and safe for children",
    "the entrainment ratio limits how much room air one unit of motive air can carry",
    "a compact head without a grille would make the fan easier to carry",
    "the ring outlet geometry would need careful shaping, possibly with flow simulation",
    "the high-speed jet itself may be a new noise source that needs silencing",
    "the same ring principle could be applied to heaters or humidifiers",
    "a quieter and safer fan could open markets such as nurseries and bedrooms",
]

_OPENERS = [
    "In my view", "Building on the discussion", "From the documents", "I would stress that",
    "Looking at the mechanisms", "A key point is that", "I agree with the direction, and",
]

_CONNECTORS = ["Moreover,", "In addition,", "At the same time,", "Importantly,", "As a result,", "Also,"]


def _sentence(rng: random.Random) -> str:
    fact = rng.choice(_FACTS)
    return f"{rng.choice(_CONNECTORS)} {fact}."


def _prose(rng: random.Random, min_words: int, max_words: int) -> str:
    target = rng.randint(min_words, max_words)
    parts = [f"{rng.choice(_OPENERS)} {rng.choice(_FACTS)}."]
    while sum(len(p.split()) for p in parts) < target:
        parts.append(_sentence(rng))
    return " ".join(parts)


class SyntheticBackend:
    """Deterministic, format-aware fake model (see module docstring)."""

    def __init__(self, opinion_words: tuple[int, int] = (90, 230), reaction_words: tuple[int, int] = (25, 75)):
        self.opinion_words = opinion_words
        self.reaction_words = reaction_words

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(request)
        rng = random.Random(int(digest[:16], 16))
        task = next(m.content for m in request.messages if m.role == "user")
        content = self._reply(task, rng)
        prompt_words = sum(len(m.content.split()) for m in request.messages)
        return CompletionResponse(content, prompt_tokens=prompt_words, completion_tokens=len(content.split()))

    def _reply(self, task: str, rng: random.Random) -> str:
        if prompts.JUDGE_MARKER in task:
            return self._judge(task, rng)
        if prompts.IDEA_MARKER in task:
            m = re.search(r"propose (\d+) distinct ideas", task)
            k = int(m.group(1)) if m else 3
            n = k + 1 if rng.random() < 0.2 else k
            return "\n".join(f"{i}. {_prose(rng, 12, 35)}" for i in range(1, n + 1))
        if prompts.SCORE_MARKER in task:
            hi = 11 if rng.random() < 0.05 else 10
            return "novelty: {}, importance: {}, consensus: {}".format(
                rng.randint(1, hi), rng.randint(1, 10), rng.randint(1, 10))
        if prompts.CRITIQUE_MARKER in task:
            if rng.random() < 0.4:
                return prompts.NO_ISSUES + "."
            return "\n".join(f"- It is unclear whether {rng.choice(_FACTS)}." for _ in range(rng.randint(1, 2)))
        if prompts.REVISE_MARKER in task:
            return _prose(rng, 15, 45)
        if prompts.ASSESS_MARKER in task:
            agree = [f"- {rng.choice(_FACTS)}" for _ in range(rng.randint(1, 3))]
            contra = [f"- it is not explained how {rng.choice(_FACTS)}" for _ in range(rng.randint(0, 2))]
            return "AGREE:\n" + "\n".join(agree) + "\nCONTRADICTORY OR MISSING:\n" + ("\n".join(contra) or "- none")
        if "just said:" in task:
            return _prose(rng, *self.reaction_words)
        return _prose(rng, *self.opinion_words)

    def _judge(self, task: str, rng: random.Random) -> str:
        lines = []
        for cid, max_points in re.findall(r"^C(\d+) \(max (\d+) points?\)", task, re.MULTILINE):
            points = rng.randint(0, int(max_points))
            reason = "the solution states this explicitly" if points else "not addressed in the solution"
            lines.append(f"C{cid}: {points} | {reason}")
        return "\n".join(lines)
