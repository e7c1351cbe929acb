"""Declarative scenario configuration.

A config file is YAML (JSON is accepted too). Unknown keys are rejected,
and validation errors name the offending field.
"""

from __future__ import annotations

from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from slaflow.autoscaler import ScalingConfig
from slaflow.cluster import MachineSpec, ModelSpec
from slaflow.engine import Scenario
from slaflow.errors import ConfigError
from slaflow.replica import CostModel
from slaflow.workload import (
    DEFAULT_TOKEN_CONFIG,
    PRIMARY_MODEL,
    SECONDARY_MODEL,
    Dist,
    WorkloadMix,
    build_standard_tasks,
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DistConfig(_Strict):
    """``{constant: 0.2}`` or ``{uniform: [20, 150]}``."""

    constant: float | None = None
    uniform: tuple[float, float] | None = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.constant is None) == (self.uniform is None):
            raise ValueError("give exactly one of 'constant' or 'uniform'")
        return self

    def to_dist(self) -> Dist:
        if self.constant is not None:
            return Dist.constant(self.constant)
        return Dist.uniform(*self.uniform)

    @classmethod
    def from_dist(cls, d: Dist) -> "DistConfig":
        if d.kind == "constant":
            return cls(constant=d.low)
        return cls(uniform=(d.low, d.high))


class NodeConfig(_Strict):
    input_tokens: DistConfig | None = None
    output_tokens: DistConfig | None = None
    latency: DistConfig | None = None


class MachineConfig(_Strict):
    machine_id: str
    num_cards: int = Field(ge=1)


class ModelConfig(_Strict):
    model_id: str
    replicas: int = Field(default=6, ge=0, description="replicas provisioned at t=0")
    cards_required: int = Field(default=1, ge=1)
    cold_start_time: float = Field(default=20.0, ge=0)
    prefill_base: float = Field(default=CostModel.prefill_base, ge=0)
    prefill_per_token: float = Field(default=CostModel.prefill_per_token, ge=0)
    decode_per_token: float = Field(default=CostModel.decode_per_token, gt=0)

    def to_spec(self) -> ModelSpec:
        cost = CostModel(self.prefill_base, self.prefill_per_token, self.decode_per_token)
        return ModelSpec(self.model_id, self.cards_required, self.cold_start_time, cost)


class WorkloadConfig(_Strict):
    rates: list[float] = Field(min_length=1)
    duration: float = Field(default=60.0, gt=0)
    mix: dict[str, float]
    seeds: list[int] = Field(default_factory=lambda: list(range(10)), min_length=1)

    @model_validator(mode="after")
    def _check(self):
        if any(r <= 0 for r in self.rates):
            raise ValueError("rates must be positive")
        WorkloadMix(self.mix)
        return self


class ScalingModel(_Strict):
    min_replicas: int = 1
    max_replicas: int = 6
    max_exceeded_times: int = 1
    max_exceeded_proportion: float = 0.0
    idle_timeout: float = 60.0
    queue_length_threshold: int = 2
    interval: float = 2.0


class CalibrationConfig(_Strict):
    replicas_per_model: int = 6
    invocations: int = 5
    rate: float = 1.67
    seed: int = 0


def _default_machines():
    return [MachineConfig(machine_id="m0", num_cards=8), MachineConfig(machine_id="m1", num_cards=4)]


def _default_models():
    return [ModelConfig(model_id=PRIMARY_MODEL), ModelConfig(model_id=SECONDARY_MODEL)]


def _default_tasks():
    return {task: {node: NodeConfig(**{k: DistConfig.from_dist(d) for k, d in dists.items()})
                   for node, dists in nodes.items()}
            for task, nodes in DEFAULT_TOKEN_CONFIG.items()}


class ScenarioConfig(_Strict):
    name: str = "scenario"
    machines: list[MachineConfig] = Field(default_factory=_default_machines, min_length=1)
    models: list[ModelConfig] = Field(default_factory=_default_models, min_length=1)
    primary_model: str = PRIMARY_MODEL
    secondary_model: str = SECONDARY_MODEL
    tasks: dict[str, dict[str, NodeConfig]] = Field(default_factory=_default_tasks)
    workload: WorkloadConfig
    scheduler: Literal["sla_aware", "power_of_two", "round_robin"] = "sla_aware"
    scaler: Literal["sla_aware", "queue_length", "fixed"] = "fixed"
    scaling: ScalingModel = Field(default_factory=ScalingModel)
    sla: dict[str, float] | None = None
    calibrate: bool = True
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    sampling_interval: float = Field(default=2.0, gt=0)
    profiling_repetitions: int = Field(default=5, ge=1)
    output_dir: str | None = None

    @model_validator(mode="after")
    def _cross_checks(self):
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate model_id in models")
        for role in ("primary_model", "secondary_model"):
            if getattr(self, role) not in ids:
                raise ValueError(f"{role} {getattr(self, role)!r} is not listed in models")
        if self.sla is None and not self.calibrate:
            raise ValueError("either give an 'sla' table or set calibrate: true")
        if self.sla is not None and any(v <= 0 for v in self.sla.values()):
            raise ValueError("SLA targets must be positive")
        # placement and template checks surface as field-level errors too
        try:
            self.templates()
            self.scaling_config()
        except ConfigError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def templates(self):
        token_config = {task: {node: {k: getattr(cfg, k).to_dist()
                                      for k in ("input_tokens", "output_tokens", "latency")
                                      if getattr(cfg, k) is not None}
                               for node, cfg in nodes.items()}
                        for task, nodes in self.tasks.items()}
        return build_standard_tasks(token_config, self.primary_model, self.secondary_model)

    def scaling_config(self) -> ScalingConfig:
        return ScalingConfig(**self.scaling.model_dump())

    def model_specs(self) -> list[ModelSpec]:
        return [m.to_spec() for m in self.models]

    def machine_specs(self) -> list[MachineSpec]:
        return [MachineSpec(m.machine_id, m.num_cards) for m in self.machines]

    def echo(self) -> dict:
        return self.model_dump(mode="json")

    def scenario(self, rate: float, seed: int, sla_table: dict[str, float] | None = None) -> Scenario:
        """One simulation at ``(rate, seed)``; ``sla_table`` overrides calibration."""
        if sla_table is None:
            sla_table = self.sla
        echo = {"config": self.echo(), "rate": rate, "seed": seed}
        return Scenario(
            templates=self.templates(),
            models=self.model_specs(),
            initial_replicas={m.model_id: m.replicas for m in self.models},
            rate=rate,
            duration=self.workload.duration,
            mix=WorkloadMix(self.workload.mix),
            scheduler=self.scheduler,
            scaler=self.scaler,
            scaling=self.scaling_config(),
            sla_table=sla_table,
            machines=self.machine_specs(),
            seed=seed,
            sampling_interval=self.sampling_interval,
            profiling_repetitions=self.profiling_repetitions,
            calibration_seed=self.calibration.seed,
            calibration_replicas=self.calibration.replicas_per_model,
            calibration_invocations=self.calibration.invocations,
            calibration_rate=self.calibration.rate,
            echo=echo,
        )


def format_errors(exc: ValidationError) -> list[str]:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{where}: {err['msg']}")
    return lines


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a config mapping; raises ``ConfigError`` listing every bad field."""
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("invalid scenario config:\n  " + "\n  ".join(format_errors(exc))) from exc


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def dump_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.echo(), sort_keys=False)

