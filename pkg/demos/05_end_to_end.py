# %% [markdown]
# # From hazard to standstill
#
# An obstacle alert travels over the network, braking starts once it leaves
# the gateway, and the train stops. Every second of extra network delay costs
# v0 x 1 s of track.

# %%
import json
from pathlib import Path

from railguard import run_end_to_end, load_scenario

ROOT = Path(__file__).resolve().parents[1]
sc = load_scenario((ROOT / "scenarios" / "standard.toml").read_text())

res = run_end_to_end(sc)
doc = res.to_dict()
for k in ("hazard_time", "detection_latency", "brake_onset_time", "mode",
          "braking_distance", "stopping_distance_from_hazard", "onset_flags"):
    print(f"{k:32s} {doc[k]}")
print(json.dumps(doc["stability"], indent=1))

# %% [markdown]
# Injected delay sweep

# %%
base = res.stopping_distance_from_hazard
for delay in (0.0, 0.1, 0.25, 0.5, 1.0):
    d = run_end_to_end(sc, extra_delay=delay).stopping_distance_from_hazard
    print(f"delay {delay:4.2f} s: {d:7.1f} m  (+{d - base:5.1f} m, v0*delay = {sc.initial_speed * delay:5.1f} m)")
