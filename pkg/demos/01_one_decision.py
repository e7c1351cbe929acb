"""Walk one LLM invocation through the three routing policies.

    python demos/01_one_decision.py
"""

import numpy as np

from slaflow.replica import CostModel, InFlight, Invocation, ReplicaQueue, estimate_wait_time, reorder_invocations
from slaflow.scheduler import SchedulerState, schedule_power_of_two, schedule_round_robin, schedule_sla_aware

cost = CostModel()

# three replicas of one model; replica 0 is mid-way through a long generation,
# replica 1 has two short completions waiting, replica 2 has one long job queued
queues = [ReplicaQueue(), ReplicaQueue(), ReplicaQueue()]
queues[0].in_flight = InFlight(Invocation(100, 1, 80, 250), 0.0, 0.2, 3.9)
for rid in (101, 102):
    reorder_invocations(queues[1], Invocation(rid, 1, 60, 6, enqueue_time=0.5), 2)
reorder_invocations(queues[2], Invocation(103, 2, 400, 300, enqueue_time=0.8), 2)

now = 1.0
waits = [(i, estimate_wait_time(q, now, cost)) for i, q in enumerate(queues)]
for i, w in waits:
    print(f"replica {i}: pending={len(queues[i])} busy={queues[i].busy} expected wait {w:.3f}s")

# a code_generation request 1.2 s into a 2.5 s TTFT budget; its generate and
# validate nodes still need about 3.4 s of work on an idle replica
sla_target, spent, remaining = 2.5, 1.2, 3.4
slack = sla_target - spent
d = schedule_sla_aware(slack, remaining, waits)
print(f"\nslack {slack:.2f}s, remaining work {remaining:.2f}s")
print(f"sla_aware     -> replica {d.replica_id} at priority {d.priority}")

# the same request once its budget is gone jumps to the front of the queue
late = schedule_sla_aware(-0.4, remaining, waits)
print(f"(slack -0.4s) -> replica {late.replica_id} at priority {late.priority}")

# a generous budget leaves the request behind everyone else (priority 2)
easy = schedule_sla_aware(20.0, remaining, waits)
print(f"(slack 20s)   -> replica {easy.replica_id} at priority {easy.priority}")

# the baselines look only at queue length, or at nothing at all
rng = np.random.default_rng(7)
p2 = [schedule_power_of_two([(i, len(q)) for i, q in enumerate(queues)], rng).replica_id for _ in range(8)]
print(f"\npower_of_two over 8 draws: {p2}")
print("   (replica 0 looks free to it: an in-flight job is not in the pending queue)")
state = SchedulerState("round_robin")
print(f"round_robin over 5 calls: {[schedule_round_robin('m', [0, 1, 2], state).replica_id for _ in range(5)]}")

# where a priority-0 insert lands in a busy queue
q = queues[1]
urgent = Invocation(104, 1, 50, 5, enqueue_time=now)
reorder_invocations(q, urgent, late.priority)
print(f"\nreplica 1 queue after an urgent insert: {[(i.request_id, i.priority) for i in q.pending]}")
