"""Replica provisioning policies and idle reclamation."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

from slaflow.cluster import IDLE, ClusterState
from slaflow.errors import ConfigError

log = logging.getLogger(__name__)

SCALERS = ("sla_aware", "queue_length", "fixed")


@dataclass(frozen=True)
class ScalingConfig:
    min_replicas: int = 1
    max_replicas: int = 6
    max_exceeded_times: int = 1
    max_exceeded_proportion: float = 0.0
    idle_timeout: float = 60.0
    queue_length_threshold: int = 2
    interval: float = 2.0

    def __post_init__(self):
        if not 1 <= self.min_replicas <= self.max_replicas:
            raise ConfigError("need 1 <= min_replicas <= max_replicas")
        if self.max_exceeded_proportion < 0:
            raise ConfigError("max_exceeded_proportion must be >= 0")
        if self.idle_timeout <= 0 or self.interval <= 0:
            raise ConfigError("idle_timeout and interval must be positive")


@dataclass
class ViolationCounter:
    """SLA violation tally per model, shared by every node calling that model."""

    exceeded_times: dict[str, int] = field(default_factory=lambda: defaultdict(int))

    def __getitem__(self, model_id: str) -> int:
        return self.exceeded_times[model_id]

    def __setitem__(self, model_id: str, value: int):
        if value < 0:
            raise ValueError("exceeded_times cannot be negative")
        self.exceeded_times[model_id] = value


@dataclass(frozen=True)
class ScalingAction:
    model_id: str
    create: int = 0


@dataclass(frozen=True)
class NodeCompletion:
    """What the SLA-aware scaler needs to know about a finished LLM node."""

    model_id: str
    now: float
    task_start_time: float
    sla_target: float
    elapsed: float
    node_mean: float
    remaining_completion: float


def sla_aware_decision(existing: int, idle: int, remaining_slack: float,
                       remaining_completion: float, last_elapsed: float,
                       node_target_latency: float, exceeded_times: int,
                       config: ScalingConfig) -> tuple[int, int]:
    """Return ``(replicas_to_create, exceeded_times_after)``."""
    if existing == 0:
        return 1, exceeded_times
    if existing >= config.max_replicas:
        return 0, exceeded_times
    if remaining_slack < 0 and idle > 0:
        return 0, exceeded_times
    if remaining_completion > remaining_slack:
        exceeded_by = last_elapsed - node_target_latency
        if exceeded_by / node_target_latency >= config.max_exceeded_proportion:
            exceeded_times += 1
    else:
        return 0, exceeded_times
    if exceeded_times > config.max_exceeded_times and exceeded_times > idle:
        required = exceeded_times - idle
        delta = min(config.max_replicas - existing, required)
        return delta, 0
    return 0, exceeded_times


def scale_sla_aware(event: NodeCompletion, cluster: ClusterState,
                    config: ScalingConfig, counter: ViolationCounter) -> ScalingAction:
    model = cluster.models[event.model_id]
    create, counter[event.model_id] = sla_aware_decision(
        existing=len(cluster.existing(event.model_id)),
        idle=len(cluster.idle_replicas(event.model_id)),
        remaining_slack=event.sla_target - (event.now - event.task_start_time),
        remaining_completion=event.remaining_completion,
        last_elapsed=event.elapsed,
        node_target_latency=event.node_mean + model.cold_start_time,
        exceeded_times=counter[event.model_id],
        config=config,
    )
    return ScalingAction(event.model_id, create)


def scale_queue_length(model_id: str, cluster: ClusterState, config: ScalingConfig,
                       now: float) -> ScalingAction:
    existing = cluster.existing(model_id)
    if not existing:
        return ScalingAction(model_id, 1)
    if len(existing) >= config.max_replicas:
        return ScalingAction(model_id, 0)
    queues = [len(cluster.replicas[r].queue)
              for r in cluster.get_available_replicas(model_id, now)]
    if queues and max(queues) > config.queue_length_threshold:
        return ScalingAction(model_id, 1)
    return ScalingAction(model_id, 0)


def reclaim_idle(now: float, cluster: ClusterState, config: ScalingConfig) -> list[int]:
    """Release replicas idle for at least ``idle_timeout``, oldest idle first."""
    released = []
    for model_id in sorted(cluster.models):
        existing = cluster.existing(model_id)
        spare = len(existing) - config.min_replicas
        stale = [r for r in existing
                 if r.state == IDLE and not r.queue.pending
                 and now - r.last_busy_time >= config.idle_timeout]
        stale.sort(key=lambda r: (r.last_busy_time, r.replica_id))
        for rep in stale[:max(spare, 0)]:
            cluster.release_replica(rep.replica_id)
            released.append(rep.replica_id)
    if released:
        log.debug("t=%.3f reclaimed idle replicas %s", now, released)
    return released
