"""Deterministic discrete-event engine and request orchestration."""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from slaflow import autoscaler as scaling
from slaflow import replica as rq
from slaflow import scheduler as sched
from slaflow.cluster import BUSY, DEFAULT_MACHINES, IDLE, ClusterState, MachineSpec, ModelSpec
from slaflow.errors import ConfigError, ContractViolation, SimulationError
from slaflow.metrics import ExecutionRecord, LifecycleEvent, MetricsLog, RequestRecord, UtilizationSample
from slaflow.profiler import (
    TaskProfile,
    apportion_slack,
    calibrate_sla,
    profile_task,
    remaining_expected_completion,
)
from slaflow.workload import ArrivalPlan, Request, TaskTemplate, WorkloadMix, generate_arrivals

log = logging.getLogger(__name__)

ARRIVAL = "request_arrival"
DISPATCH = "node_dispatch"
FIRST_TOKEN = "first_token"
COMPLETE = "node_complete"
READY = "replica_ready"
TICK = "periodic_tick"

TRACE_LENGTH = 64


@dataclass(order=True)
class Event:
    time: float
    sequence: int
    kind: str = field(compare=False)
    payload: tuple = field(compare=False, default=())


@dataclass
class Scenario:
    templates: Sequence[TaskTemplate]
    models: Sequence[ModelSpec]
    initial_replicas: Mapping[str, int]
    rate: float
    duration: float
    mix: WorkloadMix
    scheduler: str = "sla_aware"
    scaler: str = "fixed"
    scaling: scaling.ScalingConfig = field(default_factory=scaling.ScalingConfig)
    sla_table: Mapping[str, float] | None = None
    machines: Sequence[MachineSpec] = DEFAULT_MACHINES
    seed: int = 0
    sampling_interval: float = 2.0
    profiling_repetitions: int = 5
    max_requests: int | None = None
    calibration_seed: int = 0
    calibration_replicas: int = 6
    calibration_invocations: int = 5
    calibration_rate: float = 1.67
    echo: dict = field(default_factory=dict)

    def validate(self):
        if self.scheduler not in sched.SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.scaler not in scaling.SCALERS:
            raise ConfigError(f"unknown scaler {self.scaler!r}")
        if self.sampling_interval <= 0:
            raise ConfigError("sampling_interval must be positive")
        by_type = {t.task_type: t for t in self.templates}
        models = {m.model_id for m in self.models}
        for task_type in self.mix.active:
            if task_type not in by_type:
                raise ConfigError(f"mix references task type {task_type!r} with no template")
            for model_id in by_type[task_type].model_ids:
                if model_id not in models:
                    raise ConfigError(f"{task_type} uses undeployed model {model_id!r}")
                if self.scaler == "fixed" and self.initial_replicas.get(model_id, 0) < 1:
                    raise ConfigError(f"fixed scaling needs >= 1 replica of {model_id!r}")
            if self.sla_table is not None and task_type not in self.sla_table:
                raise ConfigError(f"no SLA target for {task_type!r}")
        unknown = set(self.initial_replicas) - models
        if unknown:
            raise ConfigError(f"initial_replicas names unknown models {sorted(unknown)}")
        cards = sum(m.num_cards for m in self.machines)
        need = sum(n * next(m.cards_required for m in self.models if m.model_id == k)
                   for k, n in self.initial_replicas.items())
        if need > cards:
            raise ConfigError(f"initial replicas need {need} cards, cluster has {cards}")


class Simulation:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.sc = scenario
        self.models = {m.model_id: m for m in scenario.models}
        self.templates = {t.task_type: t for t in scenario.templates}
        arrivals_ss, sched_ss, profile_ss = np.random.SeedSequence(scenario.seed).spawn(3)

        self.sla_table = (dict(scenario.sla_table) if scenario.sla_table is not None
                          else self._calibrate())
        self.profiles = self._profile(np.random.default_rng(profile_ss))

        plan = ArrivalPlan(scenario.rate, scenario.duration, scenario.seed, scenario.mix)
        self.requests = generate_arrivals(plan, scenario.templates, self.sla_table,
                                          rng=np.random.default_rng(arrivals_ss),
                                          max_requests=scenario.max_requests)
        for req in self.requests:
            if math.isfinite(req.sla_target):
                req.allotments = list(apportion_slack(self.profiles[req.task_type],
                                                      req.sla_target).node_allotments)
        self.sched_state = sched.SchedulerState(scenario.scheduler,
                                                rng=np.random.default_rng(sched_ss))
        self.counter = scaling.ViolationCounter()
        self.cluster = ClusterState(scenario.machines, scenario.models)

        self.now = 0.0
        self._heap: list[Event] = []
        self._seq = 0
        self._inv_seq = 0
        self.trace: deque = deque(maxlen=TRACE_LENGTH)
        self.holding: dict[str, deque] = {m: deque() for m in self.models}
        self.records: list[RequestRecord] = []
        self.samples: list[UtilizationSample] = []
        self.lifecycle: list[LifecycleEvent] = []
        self.executions: list[ExecutionRecord] = []
        self.outstanding = len(self.requests)
        self.last_completion = 0.0
        if math.isfinite(scenario.duration):
            self.window_end = scenario.duration
        else:
            self.window_end = self.requests[-1].arrival_time if self.requests else 0.0

    # -- setup -----------------------------------------------------------

    def _calibrate(self) -> dict[str, float]:
        active = [self.templates[t] for t in self.sc.mix.active]
        return calibrate_sla(active, self.sc.models, machines=self.sc.machines,
                             replicas_per_model=self.sc.calibration_replicas,
                             invocations=self.sc.calibration_invocations,
                             rate=self.sc.calibration_rate,
                             seed=self.sc.calibration_seed,
                             sampling_interval=self.sc.sampling_interval)

    def _profile(self, rng) -> dict[str, TaskProfile]:
        scratch = ClusterState([MachineSpec("profiler", sum(m.cards_required for m in self.sc.models))],
                               self.sc.models)
        for m in self.sc.models:
            scratch.allocate_replica(m, 0.0, ready=True)
        return {t: profile_task(self.templates[t], scratch, self.sc.profiling_repetitions, rng)
                for t in self.sc.mix.active}

    # -- event plumbing --------------------------------------------------

    def push(self, time: float, kind: str, *payload):
        heapq.heappush(self._heap, Event(time, self._seq, kind, payload))
        self._seq += 1

    def fail(self, message: str):
        raise SimulationError(message, self.trace)

    def run(self) -> MetricsLog:
        for model_id, n in sorted(self.sc.initial_replicas.items()):
            for _ in range(n):
                rep = self.cluster.allocate_replica(self.models[model_id], 0.0, ready=True)
                self.lifecycle.append(LifecycleEvent(0.0, rep.replica_id, model_id, "created"))
                self.lifecycle.append(LifecycleEvent(0.0, rep.replica_id, model_id, "ready"))
        for req in self.requests:
            self.push(req.arrival_time, ARRIVAL, req.request_id)
        self.push(0.0, TICK, "sample")
        if self.sc.scaler != "fixed":
            self.push(self.sc.scaling.interval, TICK, "scale")

        handlers = {ARRIVAL: self._on_arrival, DISPATCH: self._on_dispatch,
                    FIRST_TOKEN: self._on_first_token, COMPLETE: self._on_complete,
                    READY: self._on_ready, TICK: self._on_tick}
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.time < self.now:
                self.fail(f"clock moved backwards: {ev.time} < {self.now}")
            self.now = ev.time
            self.trace.append((ev.time, ev.sequence, ev.kind, ev.payload))
            try:
                handlers[ev.kind](*ev.payload)
            except (ContractViolation, ValueError, KeyError) as exc:
                raise SimulationError(f"{type(exc).__name__} at t={ev.time}: {exc}", self.trace) from exc

        if self.outstanding:
            self.fail(f"{self.outstanding} requests never completed")
        self.cluster.check_cards()
        return MetricsLog(
            records=tuple(sorted(self.records, key=lambda r: r.request_id)),
            samples=tuple(self.samples),
            lifecycle=tuple(self.lifecycle),
            executions=tuple(self.executions),
            scenario=dict(self.sc.echo),
            sla_table=dict(self.sla_table),
            end_time=self.end_time,
        )

    @property
    def end_time(self) -> float:
        return max(self.window_end, self.last_completion)

    # -- request flow ----------------------------------------------------

    def _on_arrival(self, request_id: int):
        self._begin_node(self.requests[request_id], 0)

    def _on_dispatch(self, request_id: int, node_index: int):
        self._begin_node(self.requests[request_id], node_index)

    def _begin_node(self, req: Request, i: int):
        req.current_node_index = i
        req.node_start.append(self.now)
        node = self.templates[req.task_type].nodes[i]
        if not node.is_llm:
            self.push(self.now + req.fixed_latencies[i], COMPLETE, req.request_id, i, None)
            return
        inv = rq.Invocation(req.request_id, i, req.input_tokens[i], req.output_tokens[i],
                            enqueue_time=self.now, task_type=req.task_type, seq=self._inv_seq)
        self._inv_seq += 1
        self.dispatch_llm_node(inv, node.model_id)

    def dispatch_llm_node(self, inv: rq.Invocation, model_id: str):
        available = self.cluster.get_available_replicas(model_id, self.now)
        if not available:
            self.holding[model_id].append(inv)
            if self.sc.scaler != "fixed" and not self.cluster.existing(model_id):
                # first-replica bootstrap for both scaling policies
                self._scale_up(model_id, 1)
            return
        decision = self._decide(inv, model_id, available)
        rep = self.cluster.replicas[decision.replica_id]
        rq.reorder_invocations(rep.queue, inv, decision.priority)
        if rep.state == IDLE:
            self._start(rep)

    def _decide(self, inv: rq.Invocation, model_id: str, available: list[int]) -> sched.SchedulingDecision:
        policy = self.sc.scheduler
        if policy == "round_robin":
            return sched.schedule_round_robin(model_id, available, self.sched_state)
        if policy == "power_of_two":
            lengths = [(rid, len(self.cluster.replicas[rid].queue)) for rid in available]
            return sched.schedule_power_of_two(lengths, self.sched_state.rng)
        req = self.requests[inv.request_id]
        profile = self.profiles[req.task_type]
        cost = self.models[model_id].cost
        fallback = lambda other: self.profiles[other.task_type].node_means[other.node_index]  # noqa: E731
        waits = [(rid, rq.estimate_wait_time(self.cluster.replicas[rid].queue, self.now, cost, fallback))
                 for rid in available]
        slack = req.sla_target - (self.now - req.arrival_time)
        remaining = remaining_expected_completion(profile, inv.node_index)
        return sched.schedule_sla_aware(slack, remaining, waits)

    def _start(self, rep):
        cost = self.models[rep.model_id].cost
        flight = rq.start_next(rep.queue, self.now, cost)
        if flight is None:
            return
        rep.transition(BUSY)
        inv = flight.invocation
        template = self.templates[inv.task_type]
        if inv.node_index == template.ttft_node:
            self.push(flight.first_token_time, FIRST_TOKEN, inv.request_id)
        self.push(flight.finish_time, COMPLETE, inv.request_id, inv.node_index, rep.replica_id)

    def _on_first_token(self, request_id: int):
        self.requests[request_id].first_token_time = self.now

    def _on_complete(self, request_id: int, i: int, replica_id: int | None):
        req = self.requests[request_id]
        node = self.templates[req.task_type].nodes[i]
        if replica_id is not None:
            rep = self.cluster.replicas[replica_id]
            done = rq.finish(rep.queue)
            if done.invocation.request_id != request_id:
                self.fail(f"replica {replica_id} finished the wrong invocation")
            rep.transition(IDLE)
            rep.last_busy_time = self.now
            inv = done.invocation
            self.executions.append(ExecutionRecord(replica_id, request_id, i, inv.priority,
                                                   inv.enqueue_time, done.start_time,
                                                   done.first_token_time, done.finish_time))
            self._start(rep)
        req.node_end.append(self.now)
        if node.is_llm and self.sc.scaler == "sla_aware":
            self._sla_scaling_hook(req, i, node.model_id)
        if i + 1 < req.num_nodes:
            self.push(self.now, DISPATCH, request_id, i + 1)
        else:
            self._close(req)

    def _sla_scaling_hook(self, req: Request, i: int, model_id: str):
        profile = self.profiles[req.task_type]
        remaining = (remaining_expected_completion(profile, i + 1)
                     if i + 1 < len(profile.node_means) else 0.0)
        event = scaling.NodeCompletion(model_id, self.now, req.arrival_time, req.sla_target,
                                       elapsed=req.node_end[i] - req.node_start[i],
                                       node_mean=profile.node_means[i],
                                       remaining_completion=remaining)
        action = scaling.scale_sla_aware(event, self.cluster, self.sc.scaling, self.counter)
        if action.create:
            self._scale_up(model_id, action.create)

    def _close(self, req: Request):
        req.completion_time = self.now
        req.current_node_index = req.num_nodes
        if req.first_token_time is None or not (
                req.arrival_time <= req.first_token_time <= req.completion_time):
            self.fail(f"request {req.request_id} timestamps out of order")
        times = [t for pair in zip(req.node_start, req.node_end) for t in pair]
        if any(b < a for a, b in zip(times, times[1:])):
            self.fail(f"request {req.request_id} node timestamps out of order")
        self.records.append(RequestRecord(req.request_id, req.task_type, req.arrival_time,
                                          req.first_token_time, req.completion_time,
                                          req.sla_target,
                                          self.templates[req.task_type].latency_criterion))
        self.outstanding -= 1
        self.last_completion = max(self.last_completion, self.now)

    # -- provisioning ----------------------------------------------------

    def _scale_up(self, model_id: str, count: int):
        model = self.models[model_id]
        for _ in range(count):
            rep = self.cluster.allocate_replica(model, self.now)
            if rep is None:
                log.info("t=%.3f no capacity for %s; created fewer replicas than requested",
                         self.now, model_id)
                break
            self.lifecycle.append(LifecycleEvent(self.now, rep.replica_id, model_id, "created"))
            self.push(rep.provision_ready_time, READY, rep.replica_id)
        if len(self.cluster.existing(model_id)) > self.sc.scaling.max_replicas:
            self.fail(f"{model_id} exceeded max_replicas")

    def _on_ready(self, replica_id: int):
        self.cluster.mark_ready(replica_id)
        rep = self.cluster.replicas[replica_id]
        self.lifecycle.append(LifecycleEvent(self.now, replica_id, rep.model_id, "ready"))
        held = self.holding[rep.model_id]
        while held:
            self.dispatch_llm_node(held.popleft(), rep.model_id)

    def _on_tick(self, what: str):
        if self.outstanding == 0 and self.now > self.end_time:
            return
        if what == "sample":
            reps = [r for r in self.cluster.replicas.values() if r.state in (IDLE, BUSY)]
            busy = sum(r.state == BUSY for r in reps)
            self.samples.append(UtilizationSample(self.now, busy, len(reps)))
            nxt = len(self.samples) * self.sc.sampling_interval
        else:
            if self.sc.scaler == "queue_length":
                for model_id in sorted(self.models):
                    action = scaling.scale_queue_length(model_id, self.cluster, self.sc.scaling, self.now)
                    if action.create:
                        self._scale_up(model_id, action.create)
            for rid in scaling.reclaim_idle(self.now, self.cluster, self.sc.scaling):
                rep = self.cluster.replicas[rid]
                self.lifecycle.append(LifecycleEvent(self.now, rid, rep.model_id, "destroyed"))
            nxt = self.now + self.sc.scaling.interval
        if self.outstanding or nxt <= self.end_time:
            self.push(nxt, TICK, what)


def run(scenario: Scenario) -> MetricsLog:
    return Simulation(scenario).run()
