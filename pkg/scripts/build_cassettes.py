"""Regenerate the bundled replay cassettes from the offline synthetic model.

    python3 scripts/build_cassettes.py [--seeds 1 2]

Writes ``src/analogy_agents/data/cassettes/<model>/<seed>.jsonl`` for the
dialogue and ``<seed>.judge.jsonl`` for the rubric judge.
"""

from __future__ import annotations

import argparse
import shutil
import tempfile
from pathlib import Path

from analogy_agents.cli import main
from analogy_agents.experiment import PRESETS

ROOT = Path(__file__).resolve().parents[1] / "src" / "analogy_agents" / "data" / "cassettes"


def build(seeds: list[int]) -> None:
    if ROOT.exists():
        shutil.rmtree(ROOT)
    seed_args = [a for s in seeds for a in ("--seed", str(s))]
    with tempfile.TemporaryDirectory() as out:
        status = main(["record", "--source", "synthetic", "--cassettes", str(ROOT), "--out", out,
                       *seed_args])
        if status:
            raise SystemExit(f"recording dialogues failed ({status})")
        status = main(["eval", "--out", out, "--mode", "judge", "--backend", "record", "--source", "synthetic",
                       "--cassettes", str(ROOT)])
        if status:
            raise SystemExit(f"recording judge calls failed ({status})")
    size = sum(p.stat().st_size for p in ROOT.rglob("*.jsonl"))
    print(f"{len(PRESETS) * len(seeds)} runs recorded, {size / 1e6:.1f} MB under {ROOT}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2])
    build(parser.parse_args().seeds)
