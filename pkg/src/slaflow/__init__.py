"""Discrete-event simulator for SLA-aware serving of multi-step coding workflows."""

from slaflow.workload import (
    Dist,
    NodeSpec,
    TaskTemplate,
    ArrivalPlan,
    Request,
    build_standard_tasks,
    generate_arrivals,
)
from slaflow.cluster import MachineSpec, ModelSpec, ClusterState
from slaflow.replica import CostModel, Invocation, ReplicaQueue, execution_time
from slaflow.profiler import TaskProfile, apportion_slack, remaining_expected_completion
from slaflow.engine import Scenario, run
from slaflow.metrics import MetricsLog, goodput, percentile, mean_utilization

__version__ = "0.1.0"

__all__ = [
    "Dist",
    "NodeSpec",
    "TaskTemplate",
    "ArrivalPlan",
    "Request",
    "build_standard_tasks",
    "generate_arrivals",
    "MachineSpec",
    "ModelSpec",
    "ClusterState",
    "CostModel",
    "Invocation",
    "ReplicaQueue",
    "execution_time",
    "TaskProfile",
    "apportion_slack",
    "remaining_expected_completion",
    "Scenario",
    "run",
    "MetricsLog",
    "goodput",
    "percentile",
    "mean_utilization",
]
