"""Coding-task workflow templates and seeded request-stream generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from slaflow.errors import ConfigError

TASK_TYPES = ("code_generation", "code_completion", "code_translation", "code_summarization")
LLM_KINDS = frozenset({"llm", "validation-llm"})
NODE_KINDS = frozenset({"retrieval", "analysis", "llm", "validation-llm", "validation-tool"})

TTFT = "TTFT"
E2E = "E2E"

CRITERIA = {
    "code_generation": TTFT,
    "code_completion": TTFT,
    "code_translation": E2E,
    "code_summarization": E2E,
}

PRIMARY_MODEL = "codellama-7b"
SECONDARY_MODEL = "starcoder2-7b"


@dataclass(frozen=True)
class Dist:
    """A strictly positive scalar distribution.

    ``kind`` is ``"constant"`` (``low`` is the value) or ``"uniform"``
    over ``[low, high]``. Token counts are drawn as integers, latencies as
    floats.
    """

    kind: str
    low: float
    high: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "uniform"):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "constant":
            object.__setattr__(self, "high", self.low)
        if self.low <= 0 or self.high < self.low:
            raise ConfigError(f"distribution must be positive with low <= high, got {self}")

    @classmethod
    def constant(cls, value: float) -> "Dist":
        return cls("constant", value)

    @classmethod
    def uniform(cls, low: float, high: float) -> "Dist":
        return cls("uniform", low, high)

    @property
    def mean(self) -> float:
        return (self.low + self.high) / 2.0

    def sample_int(self, rng: np.random.Generator) -> int:
        if self.kind == "constant":
            return int(self.low)
        return int(rng.integers(int(self.low), int(self.high), endpoint=True))

    def sample_float(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return float(self.low)
        return float(rng.uniform(self.low, self.high))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.low}
        return {"kind": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class NodeSpec:
    node_id: int
    name: str
    kind: str
    model_id: str | None = None
    input_tokens: Dist | None = None
    output_tokens: Dist | None = None
    latency: Dist | None = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ConfigError(f"node {self.name!r}: unknown kind {self.kind!r}")
        if self.is_llm:
            if self.model_id is None or self.input_tokens is None or self.output_tokens is None:
                raise ConfigError(f"node {self.name!r}: LLM nodes need model_id and token distributions")
            if self.latency is not None:
                raise ConfigError(f"node {self.name!r}: LLM nodes take no fixed latency")
        else:
            if self.latency is None:
                raise ConfigError(f"node {self.name!r}: non-LLM nodes need a latency distribution")
            if self.model_id is not None or self.output_tokens is not None:
                raise ConfigError(f"node {self.name!r}: non-LLM nodes take no model or output tokens")

    @property
    def is_llm(self) -> bool:
        return self.kind in LLM_KINDS


@dataclass(frozen=True)
class TaskTemplate:
    task_type: str
    nodes: tuple[NodeSpec, ...]
    latency_criterion: str

    def __post_init__(self):
        if not any(n.is_llm for n in self.nodes):
            raise ConfigError(f"{self.task_type}: template has no LLM node")

    @property
    def ttft_node(self) -> int:
        """Index of the first LLM node, where TTFT is measured."""
        return next(n.node_id for n in self.nodes if n.is_llm)

    @property
    def model_ids(self) -> list[str]:
        seen = []
        for n in self.nodes:
            if n.is_llm and n.model_id not in seen:
                seen.append(n.model_id)
        return seen


# (node name, kind, model role) per task; role "A" is the model every task
# calls, "B" the second model used for validation.
STANDARD_LAYOUT = {
    "code_generation": [("retrieval", "retrieval", None), ("generate", "llm", "A"),
                        ("validate", "validation-llm", "B")],
    "code_completion": [("retrieval", "retrieval", None), ("complete", "llm", "A")],
    "code_translation": [("analysis", "analysis", None), ("retrieval", "retrieval", None),
                         ("translate", "llm", "A"), ("validate", "validation-llm", "B")],
    "code_summarization": [("analysis", "analysis", None), ("retrieval", "retrieval", None),
                           ("summarize", "llm", "A")],
}

_SHORT_INPUT = Dist.uniform(20, 150)
_LONG_INPUT = Dist.uniform(200, 600)
_RETRIEVAL = Dist.constant(0.2)
_ANALYSIS = Dist.constant(0.1)

DEFAULT_TOKEN_CONFIG: dict[str, dict[str, dict[str, Dist]]] = {
    "code_generation": {
        "retrieval": {"latency": _RETRIEVAL},
        "generate": {"input_tokens": _SHORT_INPUT, "output_tokens": Dist.uniform(100, 300)},
        "validate": {"input_tokens": Dist.uniform(100, 300), "output_tokens": Dist.uniform(20, 60)},
    },
    "code_completion": {
        "retrieval": {"latency": _RETRIEVAL},
        "complete": {"input_tokens": _SHORT_INPUT, "output_tokens": Dist.uniform(1, 10)},
    },
    "code_translation": {
        "analysis": {"latency": _ANALYSIS},
        "retrieval": {"latency": _RETRIEVAL},
        "translate": {"input_tokens": _LONG_INPUT, "output_tokens": Dist.uniform(100, 400)},
        "validate": {"input_tokens": Dist.uniform(100, 400), "output_tokens": Dist.uniform(20, 60)},
    },
    "code_summarization": {
        "analysis": {"latency": _ANALYSIS},
        "retrieval": {"latency": _RETRIEVAL},
        "summarize": {"input_tokens": _LONG_INPUT, "output_tokens": Dist.uniform(20, 30)},
    },
}


def build_standard_tasks(
    token_config: Mapping[str, Mapping[str, Mapping[str, Dist]]] | None = None,
    primary_model: str = PRIMARY_MODEL,
    secondary_model: str = SECONDARY_MODEL,
) -> list[TaskTemplate]:
    """Build the four standard coding-task templates.

    ``token_config`` maps task type -> node name -> distribution fields
    (``input_tokens``/``output_tokens`` for LLM nodes, ``latency``
    otherwise). Every node of every task must be covered.
    """
    if token_config is None:
        token_config = DEFAULT_TOKEN_CONFIG
    models = {"A": primary_model, "B": secondary_model}
    templates = []
    for task_type in TASK_TYPES:
        task_cfg = token_config.get(task_type)
        if task_cfg is None:
            raise ConfigError(f"{task_type}: missing token configuration")
        unknown = set(task_cfg) - {name for name, _, _ in STANDARD_LAYOUT[task_type]}
        if unknown:
            raise ConfigError(f"{task_type}: unknown nodes {sorted(unknown)}")
        nodes = []
        for i, (name, kind, role) in enumerate(STANDARD_LAYOUT[task_type]):
            dists = task_cfg.get(name)
            where = f"{task_type}.{name}"
            if dists is None:
                raise ConfigError(f"{where}: missing distribution")
            if role is None:
                if "latency" not in dists:
                    raise ConfigError(f"{where}: missing latency distribution")
                nodes.append(NodeSpec(i, name, kind, latency=dists["latency"]))
            else:
                for key in ("input_tokens", "output_tokens"):
                    if key not in dists:
                        raise ConfigError(f"{where}: missing {key} distribution")
                nodes.append(NodeSpec(i, name, kind, model_id=models[role],
                                      input_tokens=dists["input_tokens"],
                                      output_tokens=dists["output_tokens"]))
        templates.append(TaskTemplate(task_type, tuple(nodes), CRITERIA[task_type]))
    return templates


@dataclass(frozen=True)
class WorkloadMix:
    proportions: Mapping[str, float]

    def __post_init__(self):
        if any(p < 0 or p > 1 for p in self.proportions.values()):
            raise ConfigError("mix proportions must lie in [0, 1]")
        if abs(sum(self.proportions.values()) - 1.0) > 1e-9:
            raise ConfigError(f"mix proportions sum to {sum(self.proportions.values())}, not 1")

    @property
    def active(self) -> list[str]:
        return sorted(t for t, p in self.proportions.items() if p > 0)


@dataclass(frozen=True)
class ArrivalPlan:
    rate: float
    duration: float
    seed: int
    mix: WorkloadMix

    def __post_init__(self):
        if self.rate <= 0 or self.duration <= 0:
            raise ConfigError("arrival rate and duration must be positive")


@dataclass
class Request:
    request_id: int
    task_type: str
    arrival_time: float
    sla_target: float
    input_tokens: list[int | None]
    output_tokens: list[int | None]
    fixed_latencies: list[float | None]
    allotments: list[float] = field(default_factory=list)
    current_node_index: int = 0
    node_start: list[float] = field(default_factory=list)
    node_end: list[float] = field(default_factory=list)
    first_token_time: float | None = None
    completion_time: float | None = None

    @property
    def num_nodes(self) -> int:
        return len(self.input_tokens)


def sample_request(template: TaskTemplate, request_id: int, arrival_time: float,
                   sla_target: float, rng: np.random.Generator) -> Request:
    inputs, outputs, latencies = [], [], []
    for node in template.nodes:
        if node.is_llm:
            inputs.append(node.input_tokens.sample_int(rng))
            outputs.append(node.output_tokens.sample_int(rng))
            latencies.append(None)
        else:
            inputs.append(None)
            outputs.append(None)
            latencies.append(node.latency.sample_float(rng))
    return Request(request_id, template.task_type, arrival_time, sla_target,
                   inputs, outputs, latencies)


def generate_arrivals(plan: ArrivalPlan, templates: Sequence[TaskTemplate],
                      sla_table: Mapping[str, float] | None = None,
                      rng: np.random.Generator | None = None,
                      max_requests: int | None = None) -> list[Request]:
    """Poisson request stream over ``[0, plan.duration)``.

    Requests without an SLA entry get ``inf`` (always met). ``max_requests``
    caps the stream, which allows an unbounded duration.
    """
    if max_requests is None and math.isinf(plan.duration):
        raise ConfigError("an unbounded duration needs max_requests")
    by_type = {t.task_type: t for t in templates}
    kinds = plan.mix.active
    missing = [k for k in kinds if k not in by_type]
    if missing:
        raise ConfigError(f"mix references task types without a template: {missing}")
    probs = np.array([plan.mix.proportions[k] for k in kinds], dtype=float)
    probs /= probs.sum()
    if rng is None:
        rng = np.random.default_rng(plan.seed)
    sla_table = sla_table or {}

    requests = []
    t = 0.0
    while max_requests is None or len(requests) < max_requests:
        t += float(rng.exponential(1.0 / plan.rate))
        if t >= plan.duration:
            break
        kind = kinds[int(rng.choice(len(kinds), p=probs))]
        sla = sla_table.get(kind, math.inf)
        requests.append(sample_request(by_type[kind], len(requests), t, sla, rng))
    return requests
