"""Sequential self-play loop with resumable, artifact-hashed checkpoints.

Each iteration runs three phases in order:

  generator_training    sample control specs, draw one generator completion
                        per spec, score it (probe + judge), log rollouts
  dataset_construction  parse the logged completions, curate them into an
                        ordered dataset file
  solver_training       roll the solver over the dataset in curriculum
                        order, score, and emit the iteration report

Model updates happen elsewhere; with scripted backends the two "training"
phases replay fixtures and serve rewards. Every phase writes its artifacts,
then the checkpoint records their content hashes. A phase is skipped on
re-entry only when all of its artifacts still hash to the recorded values,
which is what makes a crash at any point resumable: whatever was not sealed
into the checkpoint gets rebuilt, and determinism makes the rebuild
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from .config import (
    build_backend,
    build_curation_config,
    build_decode_params,
    build_distribution,
)
from .curation import curate_pool, load_dataset, write_dataset
from .parsing import parse_generator
from .scoring import ScoringContext, build_scoring_context, score_generator_batch, score_solver_batch
from .specs import render_generator_prompt, render_solver_prompt, sample_specs
from .types import TaskSpec, ToolCall, ToolSpec, canonical_json

__all__ = [
    "IterationState",
    "OrchestratorError",
    "PHASES",
    "iteration_seed",
    "run_selfplay",
]

PHASES = ("generator_training", "dataset_construction", "solver_training")

FaultHook = Callable[[str, int, str], None]


class OrchestratorError(RuntimeError):
    """Checkpoint disagreements: wrong seed, corrupt state file."""


def iteration_seed(seed: int, t: int) -> int:
    """Spec-sampling seed for iteration t; stable across resumes."""
    return seed * 1_000_003 + t


@dataclass
class IterationState:
    """What the loop has sealed so far; serialized after every phase."""

    t: int
    phase: str
    seed: int
    artifacts: dict[str, str] = field(default_factory=dict)
    hashes: dict[str, str] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        if self.t < 1:
            raise OrchestratorError(f"iteration index must be >= 1, got {self.t}")
        if self.phase not in PHASES + ("done",):
            raise OrchestratorError(f"unknown phase: {self.phase!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "phase": self.phase,
            "seed": self.seed,
            "artifacts": dict(sorted(self.artifacts.items())),
            "hashes": dict(sorted(self.hashes.items())),
            "counters": dict(sorted(self.counters.items())),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IterationState":
        try:
            state = cls(
                t=int(data["t"]),
                phase=data["phase"],
                seed=int(data["seed"]),
                artifacts=dict(data["artifacts"]),
                hashes=dict(data["hashes"]),
                counters=dict(data["counters"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise OrchestratorError(f"checkpoint is corrupt: {exc}") from exc
        state.validate()
        return state

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(self.to_dict()) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "IterationState":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _artifact_names(t: int, phase: str) -> tuple[str, ...]:
    base = f"iter_{t}"
    if phase == "generator_training":
        return (f"{base}/generator_rollouts.jsonl",)
    if phase == "dataset_construction":
        return (f"{base}/dataset.jsonl", f"{base}/curation.json")
    return (f"{base}/solver_rollouts.jsonl", f"{base}/report.json")


def _means(rows: list[dict], keys: tuple[str, ...]) -> dict[str, float]:
    if not rows:
        return {key: 0.0 for key in keys}
    return {key: sum(row["breakdown"][key] for row in rows) / len(rows) for key in keys}


class _Loop:
    def __init__(self, cfg, backends, root: Path, seed: int, ctx: ScoringContext):
        self.cfg = cfg
        self.root = root
        self.seed = seed
        self.ctx = ctx
        self.generator_backend = backends["generator"]
        self.solver_backend = backends["solver"]
        self.distribution = build_distribution(cfg)
        self.rollout_params = build_decode_params(cfg, "rollout")
        self.curation = replace(
            build_curation_config(cfg),
            pool_size=cfg["selfplay"]["pool_size"],
            output_size=cfg["selfplay"]["output_size"],
        )
        self.curation.validate()

    def iter_dir(self, t: int) -> Path:
        return self.root / f"iter_{t}"

    def run_phase(self, phase: str, t: int, state: IterationState) -> None:
        if phase == "generator_training":
            self._generator_phase(t, state)
        elif phase == "dataset_construction":
            self._dataset_phase(t, state)
        else:
            self._solver_phase(t, state)

    def _generator_phase(self, t: int, state: IterationState) -> None:
        specs = sample_specs(
            self.distribution, iteration_seed(self.seed, t), self.cfg["selfplay"]["pool_size"]
        )
        drawn: list[tuple[TaskSpec, str]] = []
        for spec in specs:
            prompt = render_generator_prompt(spec, self.ctx.bundle)
            drawn.append((spec, self.generator_backend.complete(prompt, 1, self.rollout_params)[0]))
        breakdowns = score_generator_batch([c for _, c in drawn], self.ctx)
        lines = [
            canonical_json(
                {"spec": spec.to_dict(), "completion": completion, "breakdown": b.to_dict()}
            )
            for (spec, completion), b in zip(drawn, breakdowns)
        ]
        _write_lines(self.iter_dir(t) / "generator_rollouts.jsonl", lines)
        state.counters[f"iter_{t}/generator_rollouts"] = len(lines)

    def _dataset_phase(self, t: int, state: IterationState) -> None:
        rows = _read_jsonl(self.iter_dir(t) / "generator_rollouts.jsonl")
        pairs = []
        for row in rows:
            task = parse_generator(row["completion"]).task
            if task is not None:
                pairs.append((task, TaskSpec.from_dict(row["spec"])))
        report = curate_pool(
            pairs,
            self.solver_backend,
            self.curation,
            band=self.ctx.band,
            bundle=self.ctx.bundle,
            params=self.ctx.probe_params,
        )
        write_dataset(report.records, self.iter_dir(t) / "dataset.jsonl")
        payload = {"warnings": list(report.warnings), "stats": dict(report.stats)}
        (self.iter_dir(t) / "curation.json").write_text(
            canonical_json(payload) + "\n", encoding="utf-8"
        )
        state.counters[f"iter_{t}/dataset"] = len(report.records)

    def _solver_phase(self, t: int, state: IterationState) -> None:
        dataset_rows = load_dataset(self.iter_dir(t) / "dataset.jsonl")
        items: list[tuple[str, list[ToolCall]]] = []
        for row in dataset_rows:
            tools = [ToolSpec.from_dict(d) for d in row["tools"]]
            golds = [ToolCall.from_dict(d) for d in row["gold_calls"]]
            prompt = render_solver_prompt(row["question"], tools, self.ctx.bundle)
            items.append((self.solver_backend.complete(prompt, 1, self.rollout_params)[0], golds))
        breakdowns = score_solver_batch(items, self.ctx)
        lines = [
            canonical_json(
                {
                    "curriculum_rank": row["curriculum_rank"],
                    "completion": completion,
                    "breakdown": b.to_dict(),
                }
            )
            for row, (completion, _), b in zip(dataset_rows, items, breakdowns)
        ]
        _write_lines(self.iter_dir(t) / "solver_rollouts.jsonl", lines)
        state.counters[f"iter_{t}/solver_rollouts"] = len(lines)
        report = self._build_report(t)
        (self.iter_dir(t) / "report.json").write_text(
            canonical_json(report) + "\n", encoding="utf-8"
        )

    def _build_report(self, t: int) -> dict[str, Any]:
        iter_dir = self.iter_dir(t)
        gen_rows = _read_jsonl(iter_dir / "generator_rollouts.jsonl")
        sol_rows = _read_jsonl(iter_dir / "solver_rollouts.jsonl")
        data_rows = load_dataset(iter_dir / "dataset.jsonl")
        curation_log = json.loads((iter_dir / "curation.json").read_text(encoding="utf-8"))
        buckets = {"easy": 0, "medium": 0, "hard": 0}
        for row in data_rows:
            buckets[row["bucket"]] += 1
        artifacts = [name for phase in PHASES for name in _artifact_names(t, phase)]
        return {
            "iteration": t,
            "generator": {
                "count": len(gen_rows),
                "means": _means(
                    gen_rows, ("fmt", "valid", "diff", "sem", "total_raw", "total_normalized")
                ),
            },
            "dataset": {
                "size": len(data_rows),
                "buckets": buckets,
                "warnings": curation_log["warnings"],
                "stats": curation_log["stats"],
            },
            "solver": {
                "count": len(sol_rows),
                "means": _means(sol_rows, ("fmt", "acc", "total_raw", "total_normalized")),
            },
            "artifacts": {name: name for name in artifacts},
        }


def _phase_is_sealed(state: IterationState, root: Path, names: tuple[str, ...]) -> bool:
    for name in names:
        recorded = state.artifacts.get(name)
        if recorded is None:
            return False
        path = root / recorded
        if not path.is_file() or _sha256_file(path) != state.hashes.get(name):
            return False
    return True


def run_selfplay(
    cfg: dict[str, Any],
    backends: dict[str, Any] | None = None,
    workdir: str | Path | None = None,
    seed: int = 0,
    fault_hook: FaultHook | None = None,
) -> list[dict[str, Any]]:
    """Run every configured iteration, resuming from the checkpoint if present.

    Returns the per-iteration reports in order. Zero iterations is a no-op
    that touches nothing on disk.
    """
    iterations = int(cfg["selfplay"]["iterations"])
    if iterations < 0:
        raise OrchestratorError(f"iterations must be >= 0, got {iterations}")
    if iterations == 0:
        return []

    root = Path(workdir or cfg["selfplay"]["workdir"])
    root.mkdir(parents=True, exist_ok=True)

    provided = dict(backends or {})
    resolved = {
        role: provided.get(role) or build_backend(cfg, role)
        for role in ("generator", "solver", "judge")
    }
    ctx = build_scoring_context(
        cfg, solver_backend=resolved["solver"], judge_backend=resolved["judge"]
    )
    loop = _Loop(cfg, resolved, root, seed, ctx)

    checkpoint = root / "checkpoint.json"
    if checkpoint.is_file():
        state = IterationState.load(checkpoint)
        if state.seed != seed:
            raise OrchestratorError(
                f"checkpoint was written with seed {state.seed}, not {seed}; "
                "use the original seed or a fresh workdir"
            )
    else:
        state = IterationState(t=1, phase=PHASES[0], seed=seed)

    reports = []
    for t in range(1, iterations + 1):
        loop.iter_dir(t).mkdir(exist_ok=True)
        for index, phase in enumerate(PHASES):
            names = _artifact_names(t, phase)
            if _phase_is_sealed(state, root, names):
                continue
            if fault_hook is not None:
                fault_hook(phase, t, "enter")
            loop.run_phase(phase, t, state)
            if fault_hook is not None:
                fault_hook(phase, t, "exit")
            for name in names:
                state.artifacts[name] = name
                state.hashes[name] = _sha256_file(root / name)
            if index < len(PHASES) - 1:
                state.t, state.phase = t, PHASES[index + 1]
            elif t < iterations:
                state.t, state.phase = t + 1, PHASES[0]
            else:
                state.t, state.phase = t, "done"
            state.save(checkpoint)
        reports.append(json.loads((loop.iter_dir(t) / "report.json").read_text(encoding="utf-8")))

    if state.phase != "done" or state.t != iterations:
        state.t, state.phase = iterations, "done"
        state.save(checkpoint)
    return reports
