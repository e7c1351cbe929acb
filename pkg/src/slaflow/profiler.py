"""Baseline task profiles, slack apportioning and SLA calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from slaflow.cluster import ClusterState, ModelSpec
from slaflow.errors import ProfilingError
from slaflow.replica import CostModel, execution_time
from slaflow.workload import TTFT, TaskTemplate, WorkloadMix


@dataclass(frozen=True)
class TaskProfile:
    task_type: str
    node_means: tuple[float, ...]

    def __post_init__(self):
        if not self.node_means or min(self.node_means) <= 0:
            raise ProfilingError(f"{self.task_type}: node means must be positive")

    @property
    def total_mean(self) -> float:
        return math.fsum(self.node_means)


@dataclass(frozen=True)
class SlackAllotment:
    task_type: str
    sla_target: float
    node_allotments: tuple[float, ...]


def profile_task(template: TaskTemplate, cluster: ClusterState, repetitions: int = 5,
                 rng: np.random.Generator | None = None) -> TaskProfile:
    """Mean per-node durations over ``repetitions`` zero-queuing executions.

    Each repetition samples the template's distributions and runs every node
    on an idle replica, so an LLM node costs exactly its ``execution_time``.
    """
    if repetitions < 1:
        raise ProfilingError("repetitions must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    for model_id in template.model_ids:
        if not cluster.existing(model_id) or model_id not in cluster.models:
            raise ProfilingError(f"{template.task_type}: no replica deployed for model {model_id}")
    sums = [0.0] * len(template.nodes)
    for _ in range(repetitions):
        for node in template.nodes:
            if node.is_llm:
                cost = cluster.models[node.model_id].cost
                n_in = node.input_tokens.sample_int(rng)
                n_out = node.output_tokens.sample_int(rng)
                sums[node.node_id] += execution_time(cost, n_in, n_out)[1]
            else:
                sums[node.node_id] += node.latency.sample_float(rng)
    return TaskProfile(template.task_type, tuple(s / repetitions for s in sums))


def apportion_slack(profile: TaskProfile, sla_target: float) -> SlackAllotment:
    if sla_target <= 0:
        raise ValueError("sla_target must be positive")
    total = profile.total_mean
    shares = tuple(sla_target * m / total for m in profile.node_means)
    return SlackAllotment(profile.task_type, sla_target, shares)


def remaining_expected_completion(profile: TaskProfile, current_node_index: int) -> float:
    if not 0 <= current_node_index < len(profile.node_means):
        raise IndexError(f"node index {current_node_index} out of range")
    return math.fsum(profile.node_means[current_node_index:])


def calibrate_sla(templates: Sequence[TaskTemplate], models: Sequence[ModelSpec],
                  machines=None, replicas_per_model: int = 6, invocations: int = 5,
                  rate: float = 1.67, seed: int = 0, sampling_interval: float = 2.0,
                  ) -> dict[str, float]:
    """Per-task SLA from a light power-of-two run on a pre-provisioned cluster.

    Each task is invoked ``invocations`` times as a Poisson stream at ``rate``;
    the SLA is the mean TTFT (TTFT tasks) or mean E2E latency (E2E tasks).
    """
    from slaflow import engine  # engine depends on this module

    kwargs = {} if machines is None else {"machines": tuple(machines)}
    table = {}
    for i, template in enumerate(templates):
        scenario = engine.Scenario(
            templates=[template],
            models=list(models),
            initial_replicas={m.model_id: replicas_per_model for m in models},
            rate=rate,
            duration=math.inf,
            mix=WorkloadMix({template.task_type: 1.0}),
            scheduler="power_of_two",
            scaler="fixed",
            sla_table={template.task_type: math.inf},
            seed=seed + i,
            max_requests=invocations,
            sampling_interval=sampling_interval,
            **kwargs,
        )
        log = engine.run(scenario)
        if len(log.records) != invocations:
            raise ProfilingError(f"{template.task_type}: calibration run did not complete")
        if template.latency_criterion == TTFT:
            lat = [r.first_token_time - r.arrival_time for r in log.records]
        else:
            lat = [r.completion_time - r.arrival_time for r in log.records]
        table[template.task_type] = math.fsum(lat) / len(lat)
    return table


def offered_load(rate: float, mix: WorkloadMix, templates: Sequence[TaskTemplate],
                 costs: Mapping[str, CostModel], replicas: Mapping[str, int]) -> dict[str, float]:
    """Expected busy fraction per model: rate x mean work per request / replicas.

    Uses distribution means, which is exact for the linear cost model.
    """
    by_type = {t.task_type: t for t in templates}
    work = {m: 0.0 for m in replicas}
    for task_type, p in mix.proportions.items():
        if p == 0:
            continue
        for node in by_type[task_type].nodes:
            if node.is_llm:
                c = costs[node.model_id]
                t = (c.prefill_base + c.prefill_per_token * node.input_tokens.mean
                     + c.decode_per_token * node.output_tokens.mean)
                work[node.model_id] += p * t
    return {m: rate * w / replicas[m] for m, w in work.items()}


def calibrate_decode_per_token(rate: float, mix: WorkloadMix, templates: Sequence[TaskTemplate],
                               costs: Mapping[str, CostModel], replicas: Mapping[str, int],
                               target: float = 1.0, tol: float = 1e-12) -> float:
    """Bisect a shared decode_per_token so the busiest model's load hits ``target``."""
    def peak(d):
        scaled = {m: replace(c, decode_per_token=d) for m, c in costs.items()}
        return max(offered_load(rate, mix, templates, scaled, replicas).values())

    lo, hi = 1e-9, 1.0
    if peak(lo) > target:
        raise ValueError("target load unreachable: prefill alone exceeds it")
    while peak(hi) < target:
        hi *= 2
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if peak(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
