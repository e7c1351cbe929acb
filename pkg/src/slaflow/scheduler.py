"""Replica selection policies.

Each policy maps an invocation and a view of live replicas to a
``SchedulingDecision``; the caller applies the chosen priority with
``reorder_invocations``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from slaflow.errors import ConfigError, NoReplicaError

SCHEDULERS = ("sla_aware", "power_of_two", "round_robin")

NEUTRAL_PRIORITY = 2


@dataclass(frozen=True)
class SchedulingDecision:
    replica_id: int
    priority: int


@dataclass
class SchedulerState:
    policy: str
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    cursors: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.policy not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.policy!r}; choose from {SCHEDULERS}")


def schedule_sla_aware(slack: float, remaining_completion: float,
                       waits: Sequence[tuple[int, float]]) -> SchedulingDecision:
    """Single pass over ``(replica_id, wait_time)`` pairs, in the given order.

    A violated slack takes the shortest wait at priority 0; a replica that
    can still meet the slack with a shorter wait takes priority 2; any other
    shorter wait takes priority 1. The net effect is the shortest-wait
    replica, with the priority of whichever branch claimed it. Comparisons
    are strict, so earlier replicas win ties.
    """
    if not waits:
        raise NoReplicaError("no live replica to schedule onto")
    best = math.inf
    chosen = None
    priority = None
    # the fallback guard tests a flag that no branch ever sets, so it
    # reduces to the wait comparison alone
    replica_selected = False
    for replica_id, wait in waits:
        if slack < 0 and wait < best:
            best, chosen, priority = wait, replica_id, 0
        if wait + remaining_completion < slack and wait < best:
            best, chosen, priority = wait, replica_id, 2
        if not replica_selected and wait < best:
            best, chosen, priority = wait, replica_id, 1
    if chosen is None:
        # every wait is infinite; nothing beat the initial bound
        chosen, priority = waits[0][0], 1
    return SchedulingDecision(chosen, priority)


def schedule_power_of_two(queue_lengths: Sequence[tuple[int, int]],
                          rng: np.random.Generator) -> SchedulingDecision:
    """Sample two distinct replicas and take the shorter pending queue."""
    if not queue_lengths:
        raise NoReplicaError("no live replica to schedule onto")
    if len(queue_lengths) == 1:
        return SchedulingDecision(queue_lengths[0][0], NEUTRAL_PRIORITY)
    i, j = rng.choice(len(queue_lengths), size=2, replace=False)
    a, b = queue_lengths[int(i)], queue_lengths[int(j)]
    pick = min(a, b, key=lambda rq: (rq[1], rq[0]))
    return SchedulingDecision(pick[0], NEUTRAL_PRIORITY)


def schedule_round_robin(model_id: str, replica_ids: Sequence[int],
                         state: SchedulerState) -> SchedulingDecision:
    if not replica_ids:
        raise NoReplicaError("no live replica to schedule onto")
    n = len(replica_ids)
    index = state.cursors.get(model_id, 0) % n
    state.cursors[model_id] = (index + 1) % n
    return SchedulingDecision(replica_ids[index], NEUTRAL_PRIORITY)
