"""Goodput, latency percentiles, utilization and report files."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

from slaflow.workload import TTFT

UTILIZATION_NOTE = "busy / ready replicas; replicas still in cold start are excluded"


@dataclass(frozen=True)
class RequestRecord:
    request_id: int
    task_type: str
    arrival_time: float
    first_token_time: float
    completion_time: float
    sla_target: float
    criterion: str

    @property
    def latency(self) -> float:
        """Latency under this record's SLA criterion."""
        end = self.first_token_time if self.criterion == TTFT else self.completion_time
        return end - self.arrival_time

    @property
    def met(self) -> bool:
        return self.latency <= self.sla_target


@dataclass(frozen=True)
class UtilizationSample:
    time: float
    busy: int
    provisioned: int


@dataclass(frozen=True)
class LifecycleEvent:
    time: float
    replica_id: int
    model_id: str
    event: str  # created | ready | destroyed


@dataclass(frozen=True)
class ExecutionRecord:
    replica_id: int
    request_id: int
    node_index: int
    priority: int
    enqueue_time: float
    start_time: float
    first_token_time: float
    finish_time: float


@dataclass(frozen=True)
class MetricsLog:
    records: tuple[RequestRecord, ...]
    samples: tuple[UtilizationSample, ...]
    lifecycle: tuple[LifecycleEvent, ...]
    executions: tuple[ExecutionRecord, ...] = ()
    scenario: dict = field(default_factory=dict)
    sla_table: dict = field(default_factory=dict)
    end_time: float = 0.0


def goodput(records: Sequence[RequestRecord]) -> float:
    if not records:
        raise ValueError("goodput of an empty record set is undefined")
    return sum(r.met for r in records) / len(records)


def percentile(values: Iterable[float], p: float) -> float:
    """Nearest-rank percentile; the result is always an input element."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("percentile of an empty sequence")
    if not 0 < p <= 100:
        raise ValueError("p must lie in (0, 100]")
    rank = math.ceil(p / 100 * len(ordered))
    return ordered[max(rank, 1) - 1]


def mean_utilization(samples: Sequence[UtilizationSample],
                     window: tuple[float, float] | None = None) -> float:
    if window is not None:
        samples = [s for s in samples if window[0] <= s.time <= window[1]]
    if not samples:
        raise ValueError("no utilization samples in window")
    return math.fsum(s.busy / s.provisioned if s.provisioned else 0.0 for s in samples) / len(samples)


def replica_timeline(log: MetricsLog) -> list[dict]:
    """Live replica count per model after every lifecycle change."""
    counts: dict[str, int] = {}
    timeline = []
    for ev in log.lifecycle:
        if ev.event == "created":
            counts[ev.model_id] = counts.get(ev.model_id, 0) + 1
        elif ev.event == "destroyed":
            counts[ev.model_id] -= 1
        else:
            continue
        timeline.append({"time": ev.time, "model_id": ev.model_id, "replicas": counts[ev.model_id]})
    return timeline


def task_summary(records: Sequence[RequestRecord]) -> dict:
    lat = [r.latency for r in records]
    return {
        "criterion": records[0].criterion,
        "sla_target": records[0].sla_target,
        "count": len(records),
        "goodput": goodput(records),
        "mean": math.fsum(lat) / len(lat),
        "p95": percentile(lat, 95),
        "p99": percentile(lat, 99),
    }


def summarize(log: MetricsLog) -> dict:
    by_task: dict[str, list[RequestRecord]] = {}
    for r in log.records:
        by_task.setdefault(r.task_type, []).append(r)
    return {
        "tasks": {t: task_summary(rs) for t, rs in sorted(by_task.items())},
        "mean_utilization": mean_utilization(log.samples) if log.samples else 0.0,
        "end_time": log.end_time,
        "replica_timeline": replica_timeline(log),
        "sla_table": dict(sorted(log.sla_table.items())),
        "scenario": log.scenario,
        "metadata": {"utilization_denominator": UTILIZATION_NOTE,
                     "percentile_method": "nearest-rank"},
    }


def dumps(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, allow_nan=False)


def write_report(log: MetricsLog, out_dir: str, formats=("csv", "json")) -> list[str]:
    """Write ``requests.csv`` and/or ``summary.json`` under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        path = os.path.join(out_dir, "requests.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            names = [f.name for f in fields(RequestRecord)]
            writer.writerow(names)
            for r in log.records:
                row = asdict(r)
                writer.writerow([repr(row[n]) if isinstance(row[n], float) else row[n] for n in names])
        written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "summary.json")
        with open(path, "w") as fh:
            fh.write(dumps(summarize(log)))
            fh.write("\n")
        written.append(path)
    return written


def read_records(path: str) -> list[RequestRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RequestRecord(int(r["request_id"]), r["task_type"], float(r["arrival_time"]),
                          float(r["first_token_time"]), float(r["completion_time"]),
                          float(r["sla_target"]), r["criterion"]) for r in rows]
