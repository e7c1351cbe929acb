import pytest
from hypothesis import given
from hypothesis import strategies as st

from slaflow.autoscaler import (
    NodeCompletion,
    ScalingConfig,
    ViolationCounter,
    reclaim_idle,
    scale_queue_length,
    scale_sla_aware,
    sla_aware_decision,
)
from slaflow.cluster import BUSY, ClusterState, MachineSpec, ModelSpec
from slaflow.errors import ConfigError
from slaflow.replica import Invocation

from oracles import scale_pseudocode

MODEL = ModelSpec("m", cold_start_time=20.0)
CFG = ScalingConfig()


def cluster_with(existing, idle, now=0.0):
    """``existing`` ready replicas of MODEL, the first ``idle`` of them idle."""
    c = ClusterState([MachineSpec("m0", 12)], [MODEL])
    for i in range(existing):
        rep = c.allocate_replica(MODEL, now, ready=True)
        if i >= idle:
            rep.transition(BUSY)
    return c


def completion(remaining_slack, remaining=10.0, elapsed=30.0, node_mean=2.0):
    # task started at 0, node finished at 10
    return NodeCompletion("m", now=10.0, task_start_time=0.0, sla_target=10.0 + remaining_slack,
                          elapsed=elapsed, node_mean=node_mean, remaining_completion=remaining)


def test_bootstrap_first_replica():
    c = ClusterState([MachineSpec("m0", 12)], [MODEL])
    assert scale_sla_aware(completion(5.0), c, CFG, ViolationCounter()).create == 1


def test_at_max_does_nothing():
    counter = ViolationCounter()
    counter["m"] = 5
    assert scale_sla_aware(completion(-5.0), cluster_with(6, 0), CFG, counter).create == 0
    assert counter["m"] == 5


def test_proportional_scale_up_and_reset():
    counter = ViolationCounter()
    counter["m"] = 2
    # violation pushes the count to 3: required = 3 - 1 idle = 2, cap min(6 - 2, 2)
    action = scale_sla_aware(completion(5.0, elapsed=30.0), cluster_with(2, 1), CFG, counter)
    assert action.create == 2 and counter["m"] == 0


def test_stale_count_scales_without_new_violation():
    counter = ViolationCounter()
    counter["m"] = 3
    # elapsed under target 22: no increment, yet 3 > 1 and 3 > idle
    action = scale_sla_aware(completion(5.0, elapsed=10.0), cluster_with(2, 1), CFG, counter)
    assert action.create == 2 and counter["m"] == 0


def test_idle_capacity_absorbs_violation():
    counter = ViolationCounter()
    counter["m"] = 4
    assert scale_sla_aware(completion(-1.0), cluster_with(3, 1), CFG, counter).create == 0
    assert counter["m"] == 4


def test_slack_covers_remaining_work():
    counter = ViolationCounter()
    counter["m"] = 4
    assert scale_sla_aware(completion(20.0, remaining=10.0), cluster_with(2, 0), CFG, counter).create == 0
    assert counter["m"] == 4


def test_cap_at_max():
    counter = ViolationCounter()
    counter["m"] = 5
    assert scale_sla_aware(completion(0.0), cluster_with(5, 0), CFG, counter).create == 1


def test_counter_rejects_negative():
    with pytest.raises(ValueError):
        ViolationCounter()["m"] = -1


def test_config_validation():
    with pytest.raises(ConfigError):
        ScalingConfig(min_replicas=3, max_replicas=2)
    with pytest.raises(ConfigError):
        ScalingConfig(idle_timeout=0)


def with_queues(lengths):
    c = ClusterState([MachineSpec("m0", 12)], [MODEL])
    for n in lengths:
        rep = c.allocate_replica(MODEL, 0.0, ready=True)
        rep.queue.pending = [Invocation(0, 0, 1, 1) for _ in range(n)]
    return c


def test_queue_length_rule():
    assert scale_queue_length("m", with_queues([0, 0, 5]), CFG, 0.0).create == 1
    assert scale_queue_length("m", with_queues([1, 1]), CFG, 0.0).create == 0
    assert scale_queue_length("m", with_queues([9] * 6), CFG, 0.0).create == 0
    assert scale_queue_length("m", with_queues([]), CFG, 0.0).create == 1


def idle_since(n, t):
    c = cluster_with(n, n)
    for r in c.replicas.values():
        r.last_busy_time = t
    return c


def test_reclaim_keeps_min():
    c = idle_since(3, 0.0)
    assert len(reclaim_idle(100.0, c, CFG)) == 2
    assert len(c.existing("m")) == 1


def test_reclaim_skips_busy_and_recent():
    c = cluster_with(3, 0)
    assert reclaim_idle(1000.0, c, CFG) == []
    assert reclaim_idle(30.0, idle_since(3, 0.0), CFG) == []


def test_reclaim_oldest_first():
    c = idle_since(3, 0.0)
    c.replicas[0].last_busy_time = 10.0
    assert reclaim_idle(100.0, c, CFG) == [1, 2]


@given(existing=st.integers(0, 6), data=st.data(), exceeded=st.integers(0, 8),
       slack=st.floats(-30, 30), remaining=st.floats(0, 30), elapsed=st.floats(0, 60),
       mean=st.floats(0.1, 10), proportion=st.sampled_from([0.0, 0.25, 1.0]),
       threshold=st.integers(0, 3))
def test_decision_matches_reference(existing, data, exceeded, slack, remaining, elapsed, mean,
                                    proportion, threshold):
    idle = data.draw(st.integers(0, existing))
    cfg = ScalingConfig(max_exceeded_times=threshold, max_exceeded_proportion=proportion)
    create, after = sla_aware_decision(existing, idle, slack, remaining, elapsed, mean + 20.0,
                                       exceeded, cfg)
    state = {"m": exceeded}
    target = scale_pseudocode(state, "m", existing=existing, idle=idle, remaining_slack=slack,
                              remaining_completion=remaining, last_elapsed=elapsed,
                              execution_latency=mean, loading_time=20.0, max_replicas=6,
                              max_exceeded_times=threshold, max_exceeded_proportion=proportion)
    assert existing + create == target
    assert after == state["m"]
    # invariants: reset on threshold scale-up, soundness, proportionality
    assert create >= 0
    if create and existing:
        assert after == 0
        # the count at decision time is the old one, or one more after a violation
        assert any(k > threshold and k > idle and create == min(6 - existing, k - idle)
                   for k in (exceeded, exceeded + 1))


@given(st.lists(st.integers(0, 2), min_size=1, max_size=6))
def test_queue_length_quiet_below_threshold(lengths):
    assert scale_queue_length("m", with_queues(lengths), CFG, 0.0).create == 0
