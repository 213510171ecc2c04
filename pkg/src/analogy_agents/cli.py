"""Command-line entry point: ``analogy-agents {run,record,eval,report,corpus-check}``.

Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import corpus as corpus_mod
from .dialogue import Transcript
from .errors import AnalogyError, AuthError, ParseError
from .evaluation import (
    Rubric,
    RunScore,
    format_table,
    import_human_scores,
    judge,
    summarize,
)
from .experiment import (
    PRESETS,
    SCORE_NAME,
    TRANSCRIPT_NAME,
    ExperimentConfig,
    ModelSpec,
    RunResult,
    run_id,
    run_matrix,
)
from .llm_backend import LLM, LiveBackend, RecordingBackend, ReplayBackend, ReplayCassette
from .synthetic import SyntheticBackend

logger = logging.getLogger("analogy_agents")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
BACKENDS = ("live", "replay", "record", "synthetic")


class UsageError(Exception):
    pass


def bundled_cassettes() -> Path:
    return Path(str(resources.files("analogy_agents") / "data" / "cassettes"))


def cassette_file(root: Path, model: str, seed: int, judge: bool = False) -> Path:
    return root / model / (f"{seed}.judge.jsonl" if judge else f"{seed}.jsonl")


def make_backend_factory(mode: str, config: ExperimentConfig, cassette_root: Path, source: str = "live",
                         judge_files: bool = False):
    """Return ``factory(spec, seed) -> backend`` for the chosen backend mode."""
    if mode == "synthetic":
        shared = SyntheticBackend()
        return lambda spec, seed: shared
    if mode == "live" or (mode == "record" and source == "live"):
        live = LiveBackend.from_env(config.endpoint, config.api_key_env)
        if mode == "live":
            return lambda spec, seed: live
        inner = live
    elif mode == "record":
        inner = SyntheticBackend()

    if mode == "replay":
        def replay(spec: ModelSpec, seed: int):
            path = cassette_file(cassette_root, spec.name, seed, judge_files)
            if not path.exists():
                logger.warning("no cassette at %s; every request will miss", path)
                return ReplayBackend(ReplayCassette())
            return ReplayBackend(ReplayCassette.load(path))
        return replay

    def record(spec: ModelSpec, seed: int):
        path = cassette_file(cassette_root, spec.name, seed, judge_files)
        path.unlink(missing_ok=True)
        return RecordingBackend(inner, path)
    return record


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return ExperimentConfig()
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return ExperimentConfig.load(path)
    except (ParseError, AnalogyError) as exc:
        raise UsageError(f"invalid config {path}: {exc}") from exc


def _runs_dir(out: Path) -> Path:
    return out / "runs" if (out / "runs").is_dir() else out


def _cassette_root(args, config: ExperimentConfig) -> Path:
    if getattr(args, "cassettes", None):
        return Path(args.cassettes)
    if config.cassette_dir:
        return config.resolve(config.cassette_dir)
    return bundled_cassettes()


# --- commands -----------------------------------------------------------------------------


def cmd_run(args) -> int:
    config = _load_config(args)
    if args.out:
        config.output_dir = str(Path(args.out).resolve())
    if args.workers:
        config.workers = args.workers
    mode = "record" if args.command == "record" else args.backend
    try:
        factory = make_backend_factory(mode, config, _cassette_root(args, config), getattr(args, "source", "live"))
    except AuthError as exc:
        raise UsageError(str(exc)) from exc

    def progress(r: RunResult) -> None:
        line = f"[{r.status}] {run_id(r.spec, r.seed)} -> {r.path}"
        if r.error:
            line += f" ({r.error})"
        print(line, flush=True)

    results = run_matrix(config, factory, models=args.model, seeds=args.seed, force=args.force, progress=progress)
    failed = [r for r in results if r.status == "failed"]
    done = sum(r.status == "completed" for r in results)
    print(f"{done} run(s) completed, {len(results) - done - len(failed)} skipped, {len(failed)} failed")
    return EXIT_FAILURE if failed else EXIT_OK


def _transcripts(runs: Path) -> list[tuple[Path, Transcript]]:
    found = []
    for path in sorted(runs.glob(f"*/*/{TRANSCRIPT_NAME}")):
        try:
            found.append((path, Transcript.read(path)))
        except (ParseError, OSError) as exc:
            logger.warning("skipping unreadable transcript %s: %s", path, exc)
    return found


def cmd_eval(args) -> int:
    runs = _runs_dir(Path(args.out))
    rubric = Rubric.load(args.rubric) if args.rubric else Rubric.load()
    transcripts = []
    for path, t in _transcripts(runs):
        if t.valid:
            transcripts.append((path, t))
        else:
            logger.warning("skipping invalid transcript %s", path)
    written = 0
    if args.mode == "import":
        if not args.scores:
            raise UsageError("--mode import needs --scores FILE")
        by_run = {t.header.run_id: (p, t) for p, t in transcripts}
        for score in import_human_scores(args.scores, rubric):
            if score.run_id not in by_run:
                logger.warning("no valid transcript for scored run %s", score.run_id)
                continue
            path, t = by_run[score.run_id]
            score.model, score.seed = t.header.model, t.header.seed
            score.save(path.parent / SCORE_NAME)
            written += 1
    else:
        config = _load_config(args)
        try:
            factory = make_backend_factory(args.backend, config, _cassette_root(args, config),
                                           args.source, judge_files=True)
        except AuthError as exc:
            raise UsageError(str(exc)) from exc
        for path, t in transcripts:
            spec = PRESETS.get(t.header.model, ModelSpec(t.header.model, max(1, len(t.header.agents)), False))
            llm = LLM(factory(spec, t.header.seed), args.judge_model or config.model_id, t.header.seed, 0.0,
                      config.max_tokens)
            try:
                score = judge(t, rubric, llm)
            except AnalogyError as exc:
                logger.error("judging %s failed: %s", t.header.run_id, exc)
                continue
            score.save(path.parent / SCORE_NAME)
            print(f"{t.header.run_id}: {score.total:g} / {rubric.total_cap:g}")
            written += 1
    print(f"{written} run score file(s) written")
    return EXIT_OK if written else EXIT_FAILURE


def cmd_report(args) -> int:
    out = Path(args.out)
    runs = _runs_dir(out)
    scores = []
    unscored = 0
    for path in sorted(runs.glob(f"*/*/{TRANSCRIPT_NAME}")):
        score_path = path.parent / SCORE_NAME
        if score_path.exists():
            scores.append(RunScore.load(score_path))
        else:
            unscored += 1
    if unscored:
        logger.warning("%d run(s) have no score file and are left out", unscored)
    stats = summarize(scores)
    if not stats:
        print("no scored runs found", file=sys.stderr)
        return EXIT_FAILURE
    labels = {name: f"{name}: {spec.label}" for name, spec in PRESETS.items()}
    table = format_table(stats, labels, Rubric.load().total_cap)
    print(table, end="")
    (out / "report.txt").write_text(table, encoding="utf-8")
    (out / "report.json").write_text(json.dumps([s.to_dict() for s in stats], indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_corpus_check(args) -> int:
    path = Path(args.path) if args.path else corpus_mod.sample_corpus_path()
    if not path.exists():
        raise UsageError(f"no corpus at {path}")
    try:
        corpus = corpus_mod.load(path)
    except (AnalogyError, OSError) as exc:
        print(f"invalid corpus: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"target domain: {corpus.target_domain}; source domain: {corpus.source_domain}")
    for d in corpus.documents:
        print(f"  {d.doc_id:<6} {d.domain_role.value:<6} {len(d.body.split()):>5} words  {d.title}")
    return EXIT_OK


# --- parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="analogy-agents", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", help="experiment config (YAML)")
        p.add_argument("--model", action="append", choices=sorted(PRESETS), help="restrict to model(s)")
        p.add_argument("--seed", action="append", type=int, help="restrict to seed(s)")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--cassettes", help="cassette directory (default: bundled cassettes)")
        p.add_argument("--workers", type=int, help="parallel runs")
        p.add_argument("--force", action="store_true", help="re-run completed transcripts")

    run = sub.add_parser("run", help="run the model x seed matrix")
    add_run_flags(run)
    run.add_argument("--backend", choices=BACKENDS, default="replay")
    run.set_defaults(func=cmd_run)

    rec = sub.add_parser("record", help="run while recording replay cassettes")
    add_run_flags(rec)
    rec.add_argument("--source", choices=("live", "synthetic"), default="live")
    rec.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="score transcripts")
    ev.add_argument("--out", required=True, help="experiment output directory")
    ev.add_argument("--mode", choices=("import", "judge"), required=True)
    ev.add_argument("--scores", help="human score CSV (import mode)")
    ev.add_argument("--rubric", help="rubric JSON (default: bundled)")
    ev.add_argument("--config", help="experiment config, for endpoint settings")
    ev.add_argument("--backend", choices=BACKENDS, default="replay")
    ev.add_argument("--source", choices=("live", "synthetic"), default="live")
    ev.add_argument("--cassettes")
    ev.add_argument("--judge-model", help="model id used by the judge")
    ev.set_defaults(func=cmd_eval)

    rep = sub.add_parser("report", help="per-model min/max/mean/std table")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)

    cc = sub.add_parser("corpus-check", help="validate a corpus directory")
    cc.add_argument("path", nargs="?")
    cc.set_defaults(func=cmd_corpus_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
