"""Preset experiment suites.

Each preset fixes the deployed tasks, request mix, load points and replica
setup of one experiment; ``POLICIES`` lists the scheduler/scaler pairing
each system under test uses in that experiment.
"""

from __future__ import annotations

from slaflow.config import ScenarioConfig, parse_config
from slaflow.errors import ConfigError
from slaflow.workload import PRIMARY_MODEL, SECONDARY_MODEL

FIXED_RATES = [0.67, 1.33, 2.00, 2.67, 3.33]
MIXED_RATES = [0.83, 1.67, 2.50, 3.33]

PATTERN_1 = {"code_completion": 0.40, "code_generation": 0.40,
             "code_translation": 0.10, "code_summarization": 0.10}
PATTERN_2 = {"code_completion": 0.25, "code_generation": 0.25,
             "code_translation": 0.25, "code_summarization": 0.25}

FIXED_POLICIES = {
    "sla_aware": ("sla_aware", "fixed"),
    "power_of_two": ("power_of_two", "fixed"),
    "round_robin": ("round_robin", "fixed"),
}
AUTOSCALE_POLICIES = {
    "sla_aware": ("sla_aware", "sla_aware"),
    "power_of_two": ("power_of_two", "queue_length"),
    "round_robin": ("round_robin", "queue_length"),
}

AUTOSCALE_LIMITS = {"min_replicas": 1, "max_replicas": 6, "max_exceeded_times": 1}


def _models(replicas: int) -> list[dict]:
    return [{"model_id": PRIMARY_MODEL, "replicas": replicas},
            {"model_id": SECONDARY_MODEL, "replicas": replicas}]


def _fixed(name, mix, rates):
    return {"name": name, "models": _models(6), "workload": {"rates": rates, "mix": mix},
            "scaler": "fixed"}


def _autoscaled(name, mix):
    return {"name": name, "models": _models(AUTOSCALE_LIMITS["min_replicas"]),
            "workload": {"rates": MIXED_RATES, "mix": mix}, "scaler": "sla_aware",
            "scaling": dict(AUTOSCALE_LIMITS)}


PRESETS = {
    "rq1": _fixed("rq1", {"code_generation": 0.9, "code_translation": 0.1}, FIXED_RATES),
    "rq2": _fixed("rq2", {"code_completion": 0.9, "code_summarization": 0.1}, FIXED_RATES),
    "rq3_pattern1": _fixed("rq3_pattern1", PATTERN_1, MIXED_RATES),
    "rq3_pattern2": _fixed("rq3_pattern2", PATTERN_2, MIXED_RATES),
    "rq4": _autoscaled("rq4", PATTERN_1),
    "rq4_pattern2": _autoscaled("rq4_pattern2", PATTERN_2),
}
ALIASES = {"rq3": "rq3_pattern1", "rq4_pattern1": "rq4"}


def policies_for(preset: str) -> dict[str, tuple[str, str]]:
    name = ALIASES.get(preset, preset)
    return AUTOSCALE_POLICIES if PRESETS[name]["scaler"] != "fixed" else FIXED_POLICIES


def preset(name: str, policy: str = "sla_aware", **overrides) -> ScenarioConfig:
    """Config for preset ``name`` run under ``policy`` (see ``policies_for``)."""
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    pairing = policies_for(key)
    if policy not in pairing:
        raise ConfigError(f"unknown policy {policy!r}; choose from {sorted(pairing)}")
    data = {**PRESETS[key], **overrides}
    data["scheduler"], data["scaler"] = pairing[policy]
    return parse_config(data)
