"""Autoscaling from one replica per model: timelines and cold-start sensitivity.

    python demos/03_autoscaling.py [rate]
"""

import sys

import numpy as np

from slaflow import engine, metrics, presets
from slaflow.cli import sla_table_for
from slaflow.config import parse_config
from slaflow.metrics import replica_timeline

rate = float(sys.argv[1]) if len(sys.argv) > 1 else 3.33


def first_scale_up(log, model_id):
    t = [e.time for e in log.lifecycle if e.event == "created" and e.model_id == model_id and e.time > 0]
    return t[0] if t else None


# one seed in detail: when does each policy first add a replica, and how
# many does it end up running?
for policy in presets.policies_for("rq4"):
    cfg = presets.preset("rq4", policy)
    log = engine.run(cfg.scenario(rate, 0, sla_table_for(cfg)))
    primary = cfg.primary_model
    steps = [(round(p["time"], 1), p["replicas"]) for p in replica_timeline(log) if p["model_id"] == primary]
    print(f"{policy:>13}: first scale-up of {primary} at t={first_scale_up(log, primary)}")
    print(f"{'':>13}  replica count steps {steps[:10]}{' ...' if len(steps) > 10 else ''}")

# goodput and utilization over seeds while the cold start shrinks; the
# SLA-aware target latency adds the cold start, so it reacts later when
# loading is slow
print(f"\ncode_generation goodput / mean utilization at {rate} req/s, 5 seeds")
for cold in (20.0, 10.0, 5.0, 1.0):
    row = []
    for policy in presets.policies_for("rq4"):
        data = presets.preset("rq4", policy).echo()
        for m in data["models"]:
            m["cold_start_time"] = cold
        cfg = parse_config(data)
        sla = sla_table_for(cfg)
        logs = [engine.run(cfg.scenario(rate, s, sla)) for s in range(5)]
        gp = np.mean([metrics.goodput([r for r in l.records if r.task_type == "code_generation"]) for l in logs])
        ut = np.mean([metrics.mean_utilization(l.samples) for l in logs])
        row.append(f"{policy}={gp:.3f}/{ut:.3f}")
    print(f"  cold start {cold:4.1f}s  " + "  ".join(row))

# the same scenario with every replica pre-provisioned, for reference
cfg = presets.preset("rq3_pattern1")
log = engine.run(cfg.scenario(rate, 0, sla_table_for(cfg)))
print(f"\npre-provisioned 6+6 reference: goodput "
      f"{metrics.goodput([r for r in log.records if r.task_type == 'code_generation']):.3f}")
