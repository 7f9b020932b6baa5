"""Self-play loop: phase artifacts, checkpoints, crash-resume equivalence."""

import json
from pathlib import Path

import pytest

from toolsmith.config import build_bundle, build_distribution, load_config
from toolsmith.gateway import ScriptedBackend
from toolsmith.parsing import parse_generator
from toolsmith.orchestrator import (
    IterationState,
    OrchestratorError,
    iteration_seed,
    run_selfplay,
)
from toolsmith.specs import (
    render_generator_prompt,
    render_judge_prompt,
    render_solver_prompt,
    sample_specs,
)
from toolsmith.types import GeneratedTask, ToolCall, ToolSpec

SEED = 11
GARBAGE = "<tool_call_answer>\nnot json\n</tool_call_answer>"


def make_config(tmp_path, iterations=1, pool=10, output=3):
    text = (
        "taskspec:\n"
        "  domain_weights:\n"
        "    alpha: 0.5\n"
        "    beta: 0.5\n"
        "  p_multi_turn: 0.0\n"
        "  p_two_calls: 0.0\n"
        "curation:\n"
        "  agreement_threshold: 0.4\n"
        "selfplay:\n"
        f"  iterations: {iterations}\n"
        f"  workdir: {tmp_path / 'runs'}\n"
        f"  pool_size: {pool}\n"
        f"  output_size: {output}\n"
    )
    tmp_path.mkdir(parents=True, exist_ok=True)
    path = tmp_path / "cfg.yaml"
    path.write_text(text, encoding="utf-8")
    return load_config(path)


def synth_task(spec) -> GeneratedTask:
    """A deterministic task whose content depends only on the spec."""
    tools = [
        ToolSpec(
            name=f"{spec.domain}_op_{j}",
            description=f"{spec.domain} operation {j}.",
            parameters={"what": {"type": "string", "description": "Work order id."}},
            required=["what"],
        )
        for j in range(spec.tool_menu_size)
    ]
    ticket = f"{spec.domain.upper()}-{spec.tool_menu_size}07"
    question = f"Run the first {spec.domain} operation for ticket {ticket}."
    gold = [ToolCall(f"{spec.domain}_op_0", {"what": ticket})]
    return GeneratedTask(think="synthesized", question=question, tools=tools, gold_calls=gold)


def completion_for(task: GeneratedTask) -> str:
    menu = json.dumps([t.to_dict() for t in task.tools])
    answer = json.dumps([c.to_dict() for c in task.gold_calls])
    return (
        "<think>\nplan\n</think>\n"
        f"<question>\n{task.question}\n</question>\n"
        f"<available_tools>\n{menu}\n</available_tools>\n"
        f"<tool_call_answer>\n{answer}\n</tool_call_answer>"
    )


def gold_answer(task: GeneratedTask) -> str:
    body = json.dumps([c.to_dict() for c in task.gold_calls])
    return f"<tool_call_answer>\n{body}\n</tool_call_answer>"


def build_world(cfg, seed=SEED):
    """Scripted backends covering every prompt the loop will issue."""
    dist = build_distribution(cfg)
    bundle = build_bundle(cfg)
    gen, sol, judge = ScriptedBackend(), ScriptedBackend(), ScriptedBackend()
    for t in range(1, cfg["selfplay"]["iterations"] + 1):
        specs = sample_specs(dist, iteration_seed(seed, t), cfg["selfplay"]["pool_size"])
        for spec in specs:
            completion = completion_for(synth_task(spec))
            gen.register(render_generator_prompt(spec, bundle), [completion])
            # probe and judge fixtures key on the prompts the loop renders,
            # which come from the parsed completion, not the authored task
            task = parse_generator(completion).task
            assert task is not None
            sol.register(
                render_solver_prompt(task.question, task.tools, bundle),
                [gold_answer(task), GARBAGE],
            )
            judge.register(
                render_judge_prompt(task.question, task.tools, task.gold_calls, bundle),
                ["4"],
            )
    return {"generator": gen, "solver": sol, "judge": judge}


def distinct_tasks(cfg, seed=SEED, t=1) -> int:
    dist = build_distribution(cfg)
    specs = sample_specs(dist, iteration_seed(seed, t), cfg["selfplay"]["pool_size"])
    return len({(s.domain, s.tool_menu_size) for s in specs})


def workdir_of(cfg) -> Path:
    return Path(cfg["selfplay"]["workdir"])


def snapshot(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


# --- basic runs -----------------------------------------------------------------


def test_zero_iterations_is_a_noop(tmp_path):
    cfg = make_config(tmp_path, iterations=0)
    reports = run_selfplay(cfg, backends=build_world(cfg), seed=SEED)
    assert reports == []
    assert not workdir_of(cfg).exists()


def test_single_iteration_golden_run(tmp_path):
    cfg = make_config(tmp_path)
    assert distinct_tasks(cfg) >= 3  # seed sanity: enough unique tasks to fill
    (report,) = run_selfplay(cfg, backends=build_world(cfg), seed=SEED)

    assert report["iteration"] == 1
    gen = report["generator"]
    assert gen["count"] == 10
    assert gen["means"]["total_raw"] == pytest.approx(5.75)
    assert gen["means"]["diff"] == pytest.approx(1.0)
    assert gen["means"]["sem"] == pytest.approx(0.75)

    data = report["dataset"]
    assert data["size"] == 3
    assert data["buckets"] == {"easy": 0, "medium": 3, "hard": 0}
    assert len(data["warnings"]) == 2  # empty easy and hard buckets refilled

    sol = report["solver"]
    assert sol["count"] == 3
    assert sol["means"]["fmt"] == 1.0
    assert sol["means"]["acc"] == 1.0

    root = workdir_of(cfg)
    for name in (
        "iter_1/generator_rollouts.jsonl",
        "iter_1/dataset.jsonl",
        "iter_1/curation.json",
        "iter_1/solver_rollouts.jsonl",
        "iter_1/report.json",
        "checkpoint.json",
    ):
        assert (root / name).is_file(), name

    ranks = [json.loads(line)["curriculum_rank"] for line in
             (root / "iter_1/dataset.jsonl").read_text().splitlines()]
    assert ranks == [0, 1, 2]


def test_generation_uses_rollout_decode_params(tmp_path):
    cfg = make_config(tmp_path)
    backends = build_world(cfg)
    run_selfplay(cfg, backends=backends, seed=SEED)
    first = backends["generator"].requests[0]
    assert first.temperature == 1.0
    assert first.max_tokens == 4096


def test_two_iterations_advance_the_checkpoint(tmp_path):
    cfg = make_config(tmp_path, iterations=2)
    reports = run_selfplay(cfg, backends=build_world(cfg), seed=SEED)
    assert [r["iteration"] for r in reports] == [1, 2]
    root = workdir_of(cfg)
    assert (root / "iter_2/report.json").is_file()
    state = IterationState.load(root / "checkpoint.json")
    assert state.t == 2
    assert state.phase == "done"
    assert state.seed == SEED


# --- determinism and idempotence --------------------------------------------------


def test_fresh_workdirs_produce_identical_bytes(tmp_path):
    cfg_a = make_config(tmp_path / "a")
    cfg_b = make_config(tmp_path / "b")
    run_selfplay(cfg_a, backends=build_world(cfg_a), seed=SEED)
    run_selfplay(cfg_b, backends=build_world(cfg_b), seed=SEED)
    assert snapshot(workdir_of(cfg_a)) == snapshot(workdir_of(cfg_b))


def test_rerun_skips_completed_phases_and_repeats_reports(tmp_path):
    cfg = make_config(tmp_path)
    backends = build_world(cfg)
    first = run_selfplay(cfg, backends=backends, seed=SEED)
    before = snapshot(workdir_of(cfg))
    calls = len(backends["generator"].requests)
    second = run_selfplay(cfg, backends=backends, seed=SEED)
    assert second == first
    assert len(backends["generator"].requests) == calls  # nothing re-executed
    assert snapshot(workdir_of(cfg)) == before


def test_report_means_match_the_rollout_logs(tmp_path):
    cfg = make_config(tmp_path)
    (report,) = run_selfplay(cfg, backends=build_world(cfg), seed=SEED)
    root = workdir_of(cfg)

    gen_rows = [json.loads(line) for line in
                (root / "iter_1/generator_rollouts.jsonl").read_text().splitlines()]
    for key in ("fmt", "valid", "diff", "sem", "total_raw"):
        recomputed = sum(r["breakdown"][key] for r in gen_rows) / len(gen_rows)
        assert report["generator"]["means"][key] == pytest.approx(recomputed)

    sol_rows = [json.loads(line) for line in
                (root / "iter_1/solver_rollouts.jsonl").read_text().splitlines()]
    for key in ("fmt", "acc", "total_raw"):
        recomputed = sum(r["breakdown"][key] for r in sol_rows) / len(sol_rows)
        assert report["solver"]["means"][key] == pytest.approx(recomputed)


# --- crash and resume --------------------------------------------------------------


def crash_at(phase, moment):
    def hook(current_phase, t, current_moment):
        if current_phase == phase and current_moment == moment:
            raise RuntimeError(f"induced crash in {phase} at {moment}")

    return hook


@pytest.mark.parametrize(
    "phase,moment",
    [
        ("dataset_construction", "exit"),
        ("dataset_construction", "enter"),
        ("solver_training", "enter"),
        ("generator_training", "exit"),
    ],
)
def test_resume_after_crash_matches_uninterrupted_run(tmp_path, phase, moment):
    reference_cfg = make_config(tmp_path / "ref")
    run_selfplay(reference_cfg, backends=build_world(reference_cfg), seed=SEED)
    reference = snapshot(workdir_of(reference_cfg))

    cfg = make_config(tmp_path / "crashy")
    with pytest.raises(RuntimeError, match="induced crash"):
        run_selfplay(cfg, backends=build_world(cfg), seed=SEED, fault_hook=crash_at(phase, moment))
    resumed = run_selfplay(cfg, backends=build_world(cfg), seed=SEED)
    assert snapshot(workdir_of(cfg)) == reference
    assert [r["iteration"] for r in resumed] == [1]


def test_crash_leaves_a_loadable_checkpoint(tmp_path):
    cfg = make_config(tmp_path)
    with pytest.raises(RuntimeError):
        run_selfplay(
            cfg,
            backends=build_world(cfg),
            seed=SEED,
            fault_hook=crash_at("dataset_construction", "exit"),
        )
    state = IterationState.load(workdir_of(cfg) / "checkpoint.json")
    assert state.t == 1
    assert state.phase == "dataset_construction"  # next phase still owed
    # the finished phase is recorded with its hash
    assert "iter_1/generator_rollouts.jsonl" in state.artifacts
    assert all(len(h) == 64 for h in state.hashes.values())


def test_resume_with_a_different_seed_is_rejected(tmp_path):
    cfg = make_config(tmp_path)
    with pytest.raises(RuntimeError):
        run_selfplay(
            cfg,
            backends=build_world(cfg),
            seed=SEED,
            fault_hook=crash_at("solver_training", "enter"),
        )
    with pytest.raises(OrchestratorError, match="seed"):
        run_selfplay(cfg, backends=build_world(cfg), seed=SEED + 1)


def test_tampered_artifact_is_rebuilt(tmp_path):
    cfg = make_config(tmp_path)
    backends = build_world(cfg)
    run_selfplay(cfg, backends=backends, seed=SEED)
    dataset = workdir_of(cfg) / "iter_1/dataset.jsonl"
    original = dataset.read_bytes()
    dataset.write_bytes(original + b'{"junk": true}\n')
    run_selfplay(cfg, backends=backends, seed=SEED)
    assert dataset.read_bytes() == original


def test_checkpoint_hashes_match_files_on_disk(tmp_path):
    import hashlib

    cfg = make_config(tmp_path)
    run_selfplay(cfg, backends=build_world(cfg), seed=SEED)
    root = workdir_of(cfg)
    state = IterationState.load(root / "checkpoint.json")
    assert state.artifacts  # non-empty
    for name, rel in state.artifacts.items():
        digest = hashlib.sha256((root / rel).read_bytes()).hexdigest()
        assert state.hashes[name] == digest
