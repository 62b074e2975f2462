# %% [markdown]
# # Priority classes on the in-train network
#
# Alerts (class 0) get dedicated slots; situation-relevant data (class 1) and
# routine monitoring (class 2) contend for the rest of the superframe.

# %%
from dataclasses import replace
from pathlib import Path

import numpy as np

from railguard import load_scenario, run_network
from railguard.netsim import metrics_by_class, synthetic_alerts
from railguard.pipeline import cruise, run_scenario_network

ROOT = Path(__file__).resolve().parents[1]
sc = load_scenario((ROOT / "scenarios" / "standard.toml").read_text())
net = sc.network
print(f"{len(net.sensors)} sensors, mode {net.mode.value}, superframe {net.superframe.length * 1e3:.0f} ms "
      f"({net.superframe.n_priority_slots} dedicated + {net.superframe.n_contention_slots} contention slots)")

# %%
records = run_scenario_network(sc, 30.0, seed=7)
for cls, m in metrics_by_class(records).items():
    print(f"class {cls}: n={m['count']:5d}  delivered={m['delivered_ratio']:.4f}  "
          f"mean={m['mean'] * 1e3:6.2f} ms  p99={m['p99'] * 1e3:6.1f} ms")

# %% [markdown]
# Class-0 latency distribution, in slots of 1 ms

# %%
lat = np.array([r.latency for r in records if r.priority_class == 0]) * 1e3
hist, edges = np.histogram(lat, bins=np.arange(0, 22, 2))
for h, e in zip(hist, edges):
    print(f"{e:4.0f}-{e + 2:<3.0f} ms {'#' * int(60 * h / hist.max())}")

# %% [markdown]
# ## A separate safety gateway
#
# With two gateways the alerts stop sharing the egress channel with bulk data.

# %%
timeline = cruise(sc, 10.0).timeline
for g in (1, 2):
    cfg = replace(net, gateways=g)
    recs = run_network(cfg, timeline, synthetic_alerts(cfg, 100.0, 10.0, seed=3), 10.0, seed=3)
    m = metrics_by_class(recs)["0"]
    print(f"gateways={g}: class-0 mean {m['mean'] * 1e3:.2f} ms, p99 {m['p99'] * 1e3:.2f} ms")
