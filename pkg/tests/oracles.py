"""Independent reference implementations used by the tests.

Nothing here imports the code under test's decision logic; the oracles are
re-transcriptions of the published pseudocode, kept deliberately literal.
"""

from __future__ import annotations

import numpy as np


def schedule_pseudocode(slack, remaining, waits):
    """Line-by-line replay of the scheduling pseudocode over a batch of cases.

    ``slack`` and ``remaining`` have shape (C,), ``waits`` has shape (C, n)
    with column j the wait of replica j. Each pseudocode statement becomes a
    masked assignment, so every case follows its own control flow.

    Returns ``(chosen, priority)`` arrays; -1 marks "never assigned".
    """
    slack = np.asarray(slack)
    remaining = np.asarray(remaining)
    waits = np.asarray(waits)
    cases, n = waits.shape
    # names bound by the procedure body
    env = {
        # INT.MAX; a float infinity also bounds non-integer waits
        "min_remaining_time": np.full(cases, np.inf),  # line 2
        "chosen_replica": np.full(cases, -1),
        "priority": np.full(cases, -1),
        "is_replica_selected": np.zeros(cases, dtype=bool),  # line 7
    }

    def lookup(name):
        # line 24 tests `replica_selected`, a name no line ever binds;
        # an unbound flag reads as False
        return env.get(name, np.zeros(cases, dtype=bool))

    def assign(mask, replica, wait_time, prio):
        env["min_remaining_time"] = np.where(mask, wait_time, env["min_remaining_time"])
        env["chosen_replica"] = np.where(mask, replica, env["chosen_replica"])
        env["is_replica_selected"] = env["is_replica_selected"] | mask
        env["priority"] = np.where(mask, prio, env["priority"])

    for replica in range(n):                                            # line 9
        wait_time = waits[:, replica]                                   # line 10
        mask = (slack < 0) & (wait_time < env["min_remaining_time"])    # line 11
        assign(mask, replica, wait_time, 0)                             # lines 12-15
        expected_time = wait_time + remaining                           # line 17
        mask = (expected_time < slack) & (wait_time < env["min_remaining_time"])  # line 18
        assign(mask, replica, wait_time, 2)                             # lines 19-22
        mask = ~lookup("replica_selected") & (wait_time < env["min_remaining_time"])  # line 24
        assign(mask, replica, wait_time, 1)                             # lines 25-28
    return env["chosen_replica"], env["priority"]


def scale_pseudocode(state, model_id, *, existing, idle, remaining_slack, remaining_completion,
                     last_elapsed, execution_latency, loading_time, max_replicas,
                     max_exceeded_times, max_exceeded_proportion):
    """Hand transcription of the scaling pseudocode.

    ``state`` is a plain dict holding ``exceeded_times`` per model and is
    updated in place. Returns the desired replica count after the call.
    """
    exceeded_times = state.setdefault(model_id, 0)
    if existing == 0:                                             # lines 2-4
        return 1
    if existing >= max_replicas:                                  # lines 6-8
        return existing
    node_target_latency = execution_latency + loading_time        # line 10
    if remaining_slack < 0 and idle > 0:                          # lines 17-18
        return existing
    if remaining_completion > remaining_slack:                    # line 20
        exceeded_by = last_elapsed - node_target_latency           # line 21
        if exceeded_by / node_target_latency >= max_exceeded_proportion:  # line 22
            exceeded_times = exceeded_times + 1                    # line 23
            state[model_id] = exceeded_times
    else:
        return existing                                            # line 26
    num_existing = existing                                        # line 28
    if exceeded_times > max_exceeded_times and exceeded_times > idle:  # line 29
        required = exceeded_times - idle                           # line 30
        delta = min(max_replicas - num_existing, required)         # line 31
        state[model_id] = 0                                        # line 33
        return num_existing + delta                                # line 32
    return existing
