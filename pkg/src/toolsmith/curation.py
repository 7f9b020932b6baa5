"""Candidate-pool curation: dedup, cross-verification, difficulty
bucketing, domain-balanced selection, and curriculum ordering.

The output is a flat ordered dataset whose early lines skew easy and
whose per-segment mean pass rate never increases.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .gateway import (
    PROBE_PARAMS,
    DecodeParams,
    FixtureError,
    ModelBackend,
    ProbeError,
    ProbeResult,
    probe_solver,
)
from .genrewards import DifficultyBand
from .specs import PromptBundle
from .types import GeneratedTask, TaskSpec, canonical_json, sha256_hex

__all__ = [
    "BUCKETS",
    "CuratedRecord",
    "CurationConfig",
    "CurationError",
    "CurationReport",
    "CrossVerifyResult",
    "bucketize",
    "cross_verify",
    "curate_pool",
    "dedup",
    "load_dataset",
    "select_and_order",
    "task_signature",
    "write_dataset",
]

BUCKETS = ("easy", "medium", "hard")


class CurationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CurationConfig:
    pool_size: int = 10000
    output_size: int = 2000
    agreement_threshold: float = 0.5
    bucket_low: float = 0.25
    bucket_high: float = 0.75
    domain_cap_fraction: float | None = None
    bucket_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    dominant_fraction: float = 0.8
    segments: int = 3
    share_probe: bool = True

    def validate(self) -> None:
        if self.pool_size < 1 or self.output_size < 1:
            raise ValueError("pool_size and output_size must be positive")
        if self.output_size > self.pool_size:
            raise ValueError("output_size cannot exceed pool_size")
        if not 0.0 <= self.agreement_threshold <= 1.0:
            raise ValueError("agreement_threshold must lie in [0, 1]")
        if not 0.0 <= self.bucket_low <= self.bucket_high <= 1.0:
            raise ValueError("bucket thresholds must satisfy 0 <= low <= high <= 1")
        if len(self.bucket_mix) != 3 or any(m < 0 for m in self.bucket_mix):
            raise ValueError("bucket_mix needs three non-negative proportions")
        if abs(sum(self.bucket_mix) - 1.0) > 1e-9:
            raise ValueError("bucket_mix proportions must sum to 1")
        if not 0.0 <= self.dominant_fraction <= 1.0:
            raise ValueError("dominant_fraction must lie in [0, 1]")
        if self.segments < 1:
            raise ValueError("segments must be at least 1")
        if self.domain_cap_fraction is not None and self.domain_cap_fraction <= 0:
            raise ValueError("domain_cap_fraction must be positive when set")


@dataclass(frozen=True)
class CuratedRecord:
    task: GeneratedTask
    spec: TaskSpec
    signature: str
    agreement: float
    p_pass: float
    bucket: str
    curriculum_rank: int


@dataclass(frozen=True)
class CrossVerifyResult:
    agreement: float
    keep: bool
    probe: ProbeResult | None
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True)
class CurationReport:
    records: list[CuratedRecord]
    warnings: list[str]
    stats: dict[str, int]


def task_signature(task: GeneratedTask) -> str:
    """Content hash: collapsed question, sorted tool names, gold calls in order."""
    collapsed = " ".join(task.question.lower().split())
    payload = [
        collapsed,
        sorted(tool.name for tool in task.tools),
        [call.to_dict() for call in task.gold_calls],
    ]
    return sha256_hex(canonical_json(payload))


def dedup(pool: list[GeneratedTask]) -> list[GeneratedTask]:
    seen: set[str] = set()
    kept: list[GeneratedTask] = []
    for task in pool:
        sig = task_signature(task)
        if sig in seen:
            continue
        seen.add(sig)
        kept.append(task)
    return kept


def cross_verify(
    task: GeneratedTask,
    backend: ModelBackend,
    config: CurationConfig,
    band: DifficultyBand | None = None,
    bundle: PromptBundle | None = None,
    params: DecodeParams = PROBE_PARAMS,
) -> CrossVerifyResult:
    """Re-solve the task and measure strict agreement with its gold calls."""
    if not task.gold_calls:
        return CrossVerifyResult(0.0, False, None, ("task has no gold calls",))
    try:
        probe = probe_solver(backend, task.question, task.tools, task.gold_calls, band, params, bundle)
    except (ProbeError, FixtureError) as exc:
        return CrossVerifyResult(0.0, False, None, (f"probe failed: {exc}",))
    agreement = probe.p_succ
    return CrossVerifyResult(agreement, agreement >= config.agreement_threshold, probe)


def bucketize(p_pass: float, low: float = 0.25, high: float = 0.75) -> str:
    if not 0.0 <= p_pass <= 1.0:
        raise ValueError(f"p_pass out of range: {p_pass}")
    if p_pass >= high:
        return "easy"
    if p_pass >= low:
        return "medium"
    return "hard"


def _largest_remainder(total: int, mix: tuple[float, float, float]) -> dict[str, int]:
    shares = [total * m for m in mix]
    counts = [math.floor(s) for s in shares]
    leftover = total - sum(counts)
    # distribute by largest fractional part, ties in bucket order
    order = sorted(range(3), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return dict(zip(BUCKETS, counts))


def _interleave(dominant: list, other: list) -> list:
    if not other:
        return list(dominant)
    if not dominant:
        return list(other)
    out = []
    total = len(dominant) + len(other)
    di = oi = 0
    for slot in range(total):
        want_dominant = (slot + 1) * len(dominant) / total
        if di < want_dominant and di < len(dominant):
            out.append(dominant[di])
            di += 1
        elif oi < len(other):
            out.append(other[oi])
            oi += 1
        else:
            out.append(dominant[di])
            di += 1
    return out


def _segment_bounds(n: int, segments: int) -> list[int]:
    return [n * i // segments for i in range(segments + 1)]


def _order_curriculum(
    chosen: dict[str, list[CuratedRecord]], config: CurationConfig
) -> list[CuratedRecord]:
    queues = {bucket: list(rows) for bucket, rows in chosen.items()}
    n = sum(len(rows) for rows in queues.values())
    bounds = _segment_bounds(n, config.segments)

    ordered: list[CuratedRecord] = []
    for seg_index in range(config.segments):
        size = bounds[seg_index + 1] - bounds[seg_index]
        if size == 0:
            continue
        dominant_bucket = BUCKETS[min(3 * seg_index // config.segments, 2)]
        want_dominant = round(config.dominant_fraction * size)
        dominant = queues[dominant_bucket][:want_dominant]
        queues[dominant_bucket] = queues[dominant_bucket][len(dominant) :]
        other: list[CuratedRecord] = []
        need = size - len(dominant)
        for bucket in BUCKETS:
            if need == 0:
                break
            take = queues[bucket][:need]
            queues[bucket] = queues[bucket][len(take) :]
            if bucket == dominant_bucket:
                dominant = dominant + take
            else:
                other.extend(take)
            need -= len(take)
        ordered.extend(_interleave(dominant, other))

    return _repair_monotone(ordered, bounds)


def _repair_monotone(ordered: list[CuratedRecord], bounds: list[int]) -> list[CuratedRecord]:
    """Swap records across segment boundaries until mean p_pass never increases.

    Each swap moves a harder record later and an easier one earlier, so a
    weighted-sum potential strictly decreases and the loop terminates.
    """
    out = list(ordered)
    segments = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]

    def mean(lo: int, hi: int) -> float:
        return sum(r.p_pass for r in out[lo:hi]) / (hi - lo)

    while True:
        violated = None
        for i in range(len(segments) - 1):
            lo_a, hi_a = segments[i]
            lo_b, hi_b = segments[i + 1]
            if hi_a == lo_a or hi_b == lo_b:
                continue
            if mean(lo_a, hi_a) < mean(lo_b, hi_b) - 1e-12:
                violated = i
                break
        if violated is None:
            return out
        lo_a, hi_a = segments[violated]
        lo_b, hi_b = segments[violated + 1]
        easiest_later = max(range(lo_b, hi_b), key=lambda j: out[j].p_pass)
        hardest_early = min(range(lo_a, hi_a), key=lambda j: out[j].p_pass)
        out[hardest_early], out[easiest_later] = out[easiest_later], out[hardest_early]


def select_and_order(
    verified: list[CuratedRecord], config: CurationConfig
) -> tuple[list[CuratedRecord], list[str]]:
    config.validate()
    if not verified:
        raise CurationError("no verified records to select from")
    warnings: list[str] = []

    domains = {record.spec.domain for record in verified}
    fraction = (
        config.domain_cap_fraction
        if config.domain_cap_fraction is not None
        else 2.0 / len(domains)
    )
    cap = max(1, math.floor(fraction * config.output_size))
    taken: dict[str, int] = {}
    capped: list[CuratedRecord] = []
    for record in verified:
        count = taken.get(record.spec.domain, 0)
        if count < cap:
            taken[record.spec.domain] = count + 1
            capped.append(record)

    total = min(config.output_size, len(capped))
    if len(capped) < config.output_size:
        warnings.append(
            f"verified pool short: wanted {config.output_size}, "
            f"have {len(capped)} after the per-domain cap; returning all"
        )

    queues = {bucket: [r for r in capped if r.bucket == bucket] for bucket in BUCKETS}
    targets = _largest_remainder(total, config.bucket_mix)
    counts: dict[str, int] = {}
    deficit = 0
    for bucket in BUCKETS:
        have = len(queues[bucket])
        take = min(targets[bucket], have)
        counts[bucket] = take
        if take < targets[bucket]:
            deficit += targets[bucket] - take
            warnings.append(
                f"bucket {bucket} short by {targets[bucket] - take}; "
                "refilling from other buckets"
            )
    for bucket in BUCKETS:
        if deficit == 0:
            break
        spare = len(queues[bucket]) - counts[bucket]
        extra = min(spare, deficit)
        counts[bucket] += extra
        deficit -= extra

    chosen = {bucket: queues[bucket][: counts[bucket]] for bucket in BUCKETS}
    ordered = _order_curriculum(chosen, config)
    ordered = [replace(r, curriculum_rank=i) for i, r in enumerate(ordered)]
    return ordered, warnings


def curate_pool(
    pairs: list[tuple[GeneratedTask, TaskSpec]],
    backend: ModelBackend,
    config: CurationConfig,
    band: DifficultyBand | None = None,
    bundle: PromptBundle | None = None,
    params: DecodeParams = PROBE_PARAMS,
    max_workers: int = 8,
) -> CurationReport:
    """Full pipeline from raw candidates to an ordered dataset."""
    config.validate()
    band = band or DifficultyBand()
    bundle = bundle or PromptBundle.default()
    stats: dict[str, int] = {"candidates": len(pairs)}

    seen: set[str] = set()
    deduped: list[tuple[GeneratedTask, TaskSpec, str]] = []
    for task, spec in pairs:
        sig = task_signature(task)
        if sig in seen:
            continue
        seen.add(sig)
        deduped.append((task, spec, sig))
    stats["after_dedup"] = len(deduped)

    if deduped:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(deduped))) as pool:
            results = list(
                pool.map(
                    lambda row: cross_verify(row[0], backend, config, band, bundle, params),
                    deduped,
                )
            )
    else:
        results = []

    records: list[CuratedRecord] = []
    dropped_probe = dropped_agreement = 0
    for (task, spec, sig), outcome in zip(deduped, results):
        if outcome.probe is None:
            dropped_probe += 1
            continue
        if not outcome.keep:
            dropped_agreement += 1
            continue
        if config.share_probe:
            p_pass = outcome.agreement
        else:
            p_pass = probe_solver(
                backend, task.question, task.tools, task.gold_calls, band, params, bundle
            ).p_succ
        records.append(
            CuratedRecord(
                task=task,
                spec=spec,
                signature=sig,
                agreement=outcome.agreement,
                p_pass=p_pass,
                bucket=bucketize(p_pass, config.bucket_low, config.bucket_high),
                curriculum_rank=-1,
            )
        )
    stats["dropped_probe_failure"] = dropped_probe
    stats["dropped_low_agreement"] = dropped_agreement
    stats["verified"] = len(records)

    if not records:
        stats["selected"] = 0
        return CurationReport([], ["no verified records: selection skipped"], stats)

    selected, warnings = select_and_order(records, config)
    stats["selected"] = len(selected)
    return CurationReport(selected, warnings, stats)


def _record_to_obj(record: CuratedRecord) -> dict:
    return {
        "question": record.task.question,
        "tools": [tool.to_dict() for tool in record.task.tools],
        "gold_calls": [call.to_dict() for call in record.task.gold_calls],
        "domain": record.spec.domain,
        "spec": {
            "domain": record.spec.domain,
            "context_type": record.spec.context_type,
            "tool_menu_size": record.spec.tool_menu_size,
            "num_gold_calls": record.spec.num_gold_calls,
        },
        "p_pass": record.p_pass,
        "bucket": record.bucket,
        "curriculum_rank": record.curriculum_rank,
    }


def write_dataset(records: list[CuratedRecord], path: str | Path) -> None:
    lines = [canonical_json(_record_to_obj(r)) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_dataset(path: str | Path) -> list[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows
