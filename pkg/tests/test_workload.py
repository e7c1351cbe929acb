import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slaflow.errors import ConfigError
from slaflow.workload import (
    DEFAULT_TOKEN_CONFIG,
    E2E,
    TTFT,
    ArrivalPlan,
    Dist,
    NodeSpec,
    WorkloadMix,
    build_standard_tasks,
    generate_arrivals,
)

from conftest import constant_token_config

ALL_FOUR = WorkloadMix({"code_completion": 0.4, "code_generation": 0.4,
                        "code_translation": 0.1, "code_summarization": 0.1})


def test_completion_template_is_short(templates):
    t = templates["code_completion"]
    assert len(t.nodes) == 2
    assert t.nodes[1].kind == "llm"
    assert t.nodes[1].output_tokens.high <= 10


def test_translation_template_uses_two_models(templates):
    t = templates["code_translation"]
    assert len(t.nodes) == 4
    assert len({n.model_id for n in t.nodes if n.is_llm}) == 2


def test_criteria(templates):
    assert templates["code_completion"].latency_criterion == TTFT
    assert templates["code_generation"].latency_criterion == TTFT
    assert templates["code_translation"].latency_criterion == E2E
    assert templates["code_summarization"].latency_criterion == E2E


def test_ttft_node_is_first_llm_node(templates):
    assert templates["code_generation"].ttft_node == 1
    assert templates["code_translation"].ttft_node == 2


def test_zero_variance_requests_identical(constant_templates):
    plan = ArrivalPlan(5.0, 20.0, 3, WorkloadMix({"code_translation": 1.0}))
    reqs = generate_arrivals(plan, list(constant_templates.values()))
    assert len(reqs) > 10
    assert {tuple(r.input_tokens) for r in reqs} == {tuple(reqs[0].input_tokens)}
    assert {tuple(r.output_tokens) for r in reqs} == {tuple(reqs[0].output_tokens)}


def test_missing_distribution_names_node():
    cfg = {t: dict(nodes) for t, nodes in DEFAULT_TOKEN_CONFIG.items()}
    del cfg["code_generation"]["validate"]
    with pytest.raises(ConfigError, match=r"code_generation\.validate"):
        build_standard_tasks(cfg)
    cfg = constant_token_config()
    del cfg["code_completion"]["complete"]["output_tokens"]
    with pytest.raises(ConfigError, match=r"code_completion\.complete.*output_tokens"):
        build_standard_tasks(cfg)


def test_node_spec_contracts():
    with pytest.raises(ConfigError):
        NodeSpec(0, "x", "llm", model_id=None, input_tokens=Dist.constant(1), output_tokens=Dist.constant(1))
    with pytest.raises(ConfigError):
        NodeSpec(0, "x", "retrieval")
    with pytest.raises(ConfigError):
        NodeSpec(0, "x", "teleport", latency=Dist.constant(1))


def test_dist_validation_and_sampling():
    with pytest.raises(ConfigError):
        Dist.uniform(5, 2)
    with pytest.raises(ConfigError):
        Dist.constant(0)
    rng = np.random.default_rng(0)
    d = Dist.uniform(1, 3)
    draws = {d.sample_int(rng) for _ in range(500)}
    assert draws == {1, 2, 3}  # inclusive integer bounds
    assert d.mean == 2.0


def test_mix_must_sum_to_one():
    with pytest.raises(ConfigError):
        WorkloadMix({"code_completion": 0.5, "code_generation": 0.4})
    assert WorkloadMix({"code_completion": 1.0, "code_generation": 0.0}).active == ["code_completion"]


def test_mean_interarrival_matches_rate(templates):
    reqs = generate_arrivals(ArrivalPlan(1.0, 1000.0, 11, ALL_FOUR), list(templates.values()))
    times = np.array([r.arrival_time for r in reqs])
    gaps = np.diff(np.concatenate([[0.0], times]))
    assert abs(gaps.mean() - 1.0) < 0.1


def test_degenerate_mix(templates):
    plan = ArrivalPlan(3.0, 50.0, 0, WorkloadMix({"code_completion": 1.0}))
    reqs = generate_arrivals(plan, list(templates.values()))
    assert reqs and {r.task_type for r in reqs} == {"code_completion"}


def test_same_plan_twice_identical(templates):
    plan = ArrivalPlan(2.5, 60.0, 42, ALL_FOUR)
    a = generate_arrivals(plan, list(templates.values()))
    b = generate_arrivals(plan, list(templates.values()))
    assert repr(a) == repr(b)


def test_mix_without_template(templates):
    plan = ArrivalPlan(1.0, 10.0, 0, WorkloadMix({"code_completion": 1.0}))
    with pytest.raises(ConfigError):
        generate_arrivals(plan, [templates["code_generation"]])


def test_unbounded_duration_needs_cap(templates):
    plan = ArrivalPlan(1.0, math.inf, 0, ALL_FOUR)
    with pytest.raises(ConfigError):
        generate_arrivals(plan, list(templates.values()))
    assert len(generate_arrivals(plan, list(templates.values()), max_requests=7)) == 7


def test_sla_attached_from_table(templates):
    plan = ArrivalPlan(2.0, 30.0, 1, ALL_FOUR)
    table = {"code_completion": 1.5, "code_generation": 2.5}
    for r in generate_arrivals(plan, list(templates.values()), table):
        assert r.sla_target == table.get(r.task_type, math.inf)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rate=st.floats(0.2, 5.0))
def test_determinism_property(seed, rate):
    tpl = build_standard_tasks()
    plan = ArrivalPlan(rate, 40.0, seed, ALL_FOUR)
    assert repr(generate_arrivals(plan, tpl)) == repr(generate_arrivals(plan, tpl))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rate=st.floats(0.5, 5.0), duration=st.floats(200.0, 2000.0))
def test_arrival_count_within_four_sigma(seed, rate, duration):
    reqs = generate_arrivals(ArrivalPlan(rate, duration, seed, ALL_FOUR), build_standard_tasks())
    expected = rate * duration
    assert abs(len(reqs) - expected) <= 4 * math.sqrt(expected)


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mixture_converges(seed):
    reqs = generate_arrivals(ArrivalPlan(50.0, math.inf, seed, ALL_FOUR), build_standard_tasks(),
                             max_requests=10_000)
    n = len(reqs)
    for task, p in ALL_FOUR.proportions.items():
        count = sum(r.task_type == task for r in reqs)
        assert abs(count / n - p) <= 3 * math.sqrt(p * (1 - p) / n)
