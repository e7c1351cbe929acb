"""Fixed 6+6 replica cluster, all four coding tasks, load sweep per policy.

    python demos/02_fixed_replica_sweep.py [pattern1|pattern2] [n_seeds]

Prints code_generation goodput and mean cluster utilization per rate, in
the same layout as a utilization table with one column per policy.
"""

import sys

import numpy as np

from slaflow import engine, metrics, presets
from slaflow.cli import sla_table_for
from slaflow.profiler import offered_load
from slaflow.workload import WorkloadMix

pattern = sys.argv[1] if len(sys.argv) > 1 else "pattern1"
n_seeds = int(sys.argv[2]) if len(sys.argv) > 2 else 5
name = f"rq3_{pattern}"

base = presets.preset(name)
mix = WorkloadMix(base.workload.mix)
costs = {m.model_id: m.to_spec().cost for m in base.models}
replicas = {m.model_id: m.replicas for m in base.models}

# offered load per model: how close to saturation each rate pushes the cluster
print(f"{name}: offered load of the busiest model")
for rate in base.workload.rates:
    load = offered_load(rate, mix, base.templates(), costs, replicas)
    print(f"  {rate:4.2f} req/s  " + "  ".join(f"{m}={v:.2f}" for m, v in sorted(load.items())))

results = {}
for policy in presets.policies_for(name):
    cfg = presets.preset(name, policy)
    sla = sla_table_for(cfg)  # calibrated once per config, reused for every run
    for rate in cfg.workload.rates:
        logs = [engine.run(cfg.scenario(rate, seed, sla)) for seed in range(n_seeds)]
        gen = [metrics.goodput([r for r in log.records if r.task_type == "code_generation"]) for log in logs]
        util = [metrics.mean_utilization(log.samples) for log in logs]
        results[policy, rate] = (np.mean(gen), np.mean(util))

print(f"\nSLA table (s): " + ", ".join(f"{k}={v:.2f}" for k, v in sorted(sla.items())))
policies = list(presets.policies_for(name))
print(f"\n{'req/s':>6}  " + "  ".join(f"{p:>22}" for p in policies))
print(f"{'':>6}  " + "  ".join(f"{'goodput / util':>22}" for _ in policies))
for rate in base.workload.rates:
    cells = [f"{results[p, rate][0]:10.3f} / {results[p, rate][1]:.4f}" for p in policies]
    print(f"{rate:6.2f}  " + "  ".join(f"{c:>22}" for c in cells))
