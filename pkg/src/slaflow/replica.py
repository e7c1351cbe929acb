"""Single-server replica queue with a prefill/decode cost model."""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from typing import Callable

from slaflow.errors import ContractViolation

PRIORITIES = (0, 1, 2)

_seq = itertools.count()


@dataclass(frozen=True)
class CostModel:
    prefill_base: float = 0.05
    prefill_per_token: float = 0.001
    decode_per_token: float = 0.01462

    def __post_init__(self):
        if min(self.prefill_base, self.prefill_per_token) < 0 or self.decode_per_token <= 0:
            raise ValueError(f"invalid cost model {self}")


def execution_time(model: CostModel, input_tokens: int, output_tokens: int) -> tuple[float, float]:
    """Return ``(ttft_offset, total)`` for one invocation on an idle replica."""
    ttft = model.prefill_base + model.prefill_per_token * input_tokens + model.decode_per_token
    total = ttft + model.decode_per_token * (output_tokens - 1)
    return ttft, total


@dataclass
class Invocation:
    request_id: int
    node_index: int
    input_tokens: int | None
    output_tokens: int | None
    priority: int = 2
    enqueue_time: float = 0.0
    task_type: str = ""
    # insertion order, breaks (priority, enqueue_time) ties FIFO
    seq: int = field(default_factory=lambda: next(_seq))

    def __post_init__(self):
        if self.priority not in PRIORITIES:
            raise ValueError(f"priority must be one of {PRIORITIES}")

    @property
    def sort_key(self):
        return (self.priority, self.enqueue_time, self.seq)


@dataclass
class InFlight:
    invocation: Invocation
    start_time: float
    first_token_time: float
    finish_time: float


@dataclass
class ReplicaQueue:
    pending: list[Invocation] = field(default_factory=list)
    in_flight: InFlight | None = None

    @property
    def busy(self) -> bool:
        return self.in_flight is not None

    def __len__(self):
        return len(self.pending)


def reorder_invocations(queue: ReplicaQueue, invocation: Invocation, priority: int) -> ReplicaQueue:
    """Insert ``invocation`` at ``priority`` keeping pending sorted; never preempts."""
    if priority not in PRIORITIES:
        raise ValueError(f"priority must be one of {PRIORITIES}")
    invocation.priority = priority
    keys = [inv.sort_key for inv in queue.pending]
    queue.pending.insert(bisect.bisect_right(keys, invocation.sort_key), invocation)
    return queue


def expected_duration(inv: Invocation, cost: CostModel,
                      fallback: Callable[[Invocation], float] | None = None) -> float:
    if inv.input_tokens is None or inv.output_tokens is None:
        if fallback is None:
            raise ValueError("invocation has no token counts and no profiled fallback")
        return fallback(inv)
    return execution_time(cost, inv.input_tokens, inv.output_tokens)[1]


def estimate_wait_time(queue: ReplicaQueue, now: float, cost: CostModel,
                       fallback: Callable[[Invocation], float] | None = None) -> float:
    """Expected time until a newly queued job could start on this replica.

    In-flight remainder (clamped at zero) plus the expected execution time of
    every pending invocation. ``fallback`` supplies a profiled mean for
    invocations whose token counts are unknown.
    """
    wait = 0.0
    if queue.in_flight is not None:
        wait = max(0.0, queue.in_flight.finish_time - now)
    for inv in queue.pending:
        wait += expected_duration(inv, cost, fallback)
    return wait


def start_next(queue: ReplicaQueue, now: float, cost: CostModel) -> InFlight | None:
    if queue.in_flight is not None:
        raise ContractViolation("replica already has an invocation in flight")
    if not queue.pending:
        return None
    inv = queue.pending.pop(0)
    ttft, total = execution_time(cost, inv.input_tokens, inv.output_tokens)
    queue.in_flight = InFlight(inv, now, now + ttft, now + total)
    return queue.in_flight


def finish(queue: ReplicaQueue) -> InFlight:
    if queue.in_flight is None:
        raise ContractViolation("no invocation in flight")
    done, queue.in_flight = queue.in_flight, None
    return done
