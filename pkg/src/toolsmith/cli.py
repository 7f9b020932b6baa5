"""Command-line entry points.

Results go to stdout (or --out) as machine-readable JSON: one canonical line
per record with --format lines, an indented array with --format pretty.
Progress and errors go to stderr. Usage mistakes exit 2 (argparse),
operational failures exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from .config import (
    build_backend,
    build_band,
    build_bundle,
    build_curation_config,
    build_decode_params,
    build_distribution,
    load_config,
)
from .curation import curate_pool, write_dataset
from .evaluation import evaluate_file
from .orchestrator import run_selfplay
from .parsing import parse_generator
from .scoring import (
    build_scoring_context,
    parse_generator_request,
    parse_solver_request,
    score_generator_batch,
    score_solver_batch,
)
from .service import RewardService
from .specs import render_generator_prompt, sample_specs
from .types import TaskSpec, canonical_json

__all__ = ["main"]


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
    return rows


def _emit(records: list[dict], fmt: str, out: Path | None) -> None:
    if fmt == "pretty":
        text = json.dumps(records, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        text = "".join(canonical_json(r) + "\n" for r in records)
    if out is not None:
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_sample_specs(args) -> int:
    cfg = load_config(args.config)
    specs = sample_specs(build_distribution(cfg), args.seed, args.count)
    _emit([s.to_dict() for s in specs], args.fmt, args.out)
    return 0


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    backend = build_backend(cfg, "generator")
    bundle = build_bundle(cfg)
    rollout = build_decode_params(cfg, "rollout")
    specs = sample_specs(build_distribution(cfg), args.seed, args.count)
    rows = []
    for spec in specs:
        prompt = render_generator_prompt(spec, bundle)
        rows.append(
            {"spec": spec.to_dict(), "completion": backend.complete(prompt, 1, rollout)[0]}
        )
    _emit(rows, args.fmt, args.out)
    return 0


def cmd_curate(args) -> int:
    if args.out is None:
        raise ValueError("curate writes the dataset to --out; pass a path")
    cfg = load_config(args.config)
    pairs = []
    for lineno, row in enumerate(_read_jsonl(args.pool), start=1):
        if not isinstance(row, dict) or "completion" not in row or "spec" not in row:
            raise ValueError(f"{args.pool}:{lineno}: pool rows need spec and completion")
        task = parse_generator(row["completion"]).task
        if task is not None:
            pairs.append((task, TaskSpec.from_dict(row["spec"])))
    report = curate_pool(
        pairs,
        build_backend(cfg, "solver"),
        build_curation_config(cfg),
        band=build_band(cfg),
        bundle=build_bundle(cfg),
        params=build_decode_params(cfg, "probe"),
    )
    write_dataset(report.records, args.out)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    summary = {
        "selected": len(report.records),
        "stats": dict(report.stats),
        "warnings": list(report.warnings),
        "out": str(args.out),
    }
    _emit([summary], args.fmt, None)
    return 0


def cmd_score(args) -> int:
    cfg = load_config(args.config)
    ctx = build_scoring_context(cfg)
    envelope = {"items": _read_jsonl(args.infile)}
    if args.role == "generator":
        results = score_generator_batch(parse_generator_request(envelope), ctx)
    else:
        results = score_solver_batch(parse_solver_request(envelope), ctx)
    _emit([r.to_dict() for r in results], args.fmt, args.out)
    return 0


def cmd_serve(args) -> int:
    cfg = load_config(args.config)
    ctx = build_scoring_context(cfg)
    host = args.host if args.host is not None else cfg["service"]["host"]
    port = args.port if args.port is not None else cfg["service"]["port"]
    service = RewardService(ctx, host=host, port=port)
    print(f"listening on {service.host}:{service.port}", flush=True)
    print("ready", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_selfplay(args) -> int:
    cfg = load_config(args.config)
    reports = run_selfplay(cfg, workdir=args.workdir, seed=args.seed)
    _emit(reports, args.fmt, args.out)
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_file(args.bench, args.preds)
    _emit([report.to_dict()], args.fmt, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="user config YAML")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument(
        "--format", choices=("lines", "pretty"), default="lines", dest="fmt",
        help="output as JSON lines or an indented array",
    )
    common.add_argument("--out", type=Path, default=None, help="write results here instead of stdout")

    parser = argparse.ArgumentParser(
        prog="toolsmith",
        description="Self-play task synthesis, reward serving, curation, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-specs", parents=[common], help="draw control specs")
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_sample_specs)

    p = sub.add_parser("generate", parents=[common], help="draw a candidate task pool")
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("curate", parents=[common], help="curate a pool file into a dataset")
    p.add_argument("--pool", type=Path, required=True)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("score", parents=[common], help="score a batch file offline")
    p.add_argument("--role", choices=("generator", "solver"), required=True)
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", parents=[common], help="run the reward service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("selfplay", parents=[common], help="run the self-play loop")
    p.add_argument("--workdir", type=Path, default=None)
    p.set_defaults(func=cmd_selfplay)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against a benchmark")
    p.add_argument("--bench", type=Path, required=True)
    p.add_argument("--preds", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
