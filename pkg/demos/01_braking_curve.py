# %% [markdown]
# # Stopping distance vs speed
#
# Friction alone, friction plus roof spoilers, and every brake at once.
# Run from the repository root: `python3 demos/01_braking_curve.py`

# %%
from pathlib import Path

import numpy as np

from railguard import braking_curve, load_scenario
from railguard.brakes import BrakeKind, brake_force, default_brakes

ROOT = Path(__file__).resolve().parents[1]
sc = load_scenario((ROOT / "scenarios" / "standard.toml").read_text(), name="standard")
print(f"train {sc.train.mass / 1e3:.0f} t, brakes:", ", ".join(b.name for b in sc.train.brakes))

# %% [markdown]
# The calibration train has one lag-free friction brake sized for 1.2330 m/s².
# Distance should grow with the square of the speed.

# %%
cal = load_scenario((ROOT / "scenarios" / "calibration.toml").read_text())
speeds_kmh = np.array([50, 100, 200, 300])
rows = braking_curve(cal, speeds_kmh / 3.6)
d = np.array([r.distance for r in rows])
for v, x in zip(speeds_kmh, d):
    print(f"{v:4d} km/h  {x:8.1f} m")
print("ratio to 50 km/h:", np.round(d / d[0], 3))  # ~ 1 : 4 : 16 : 36

# %% [markdown]
# ## Which brake carries the load at which speed
#
# Regenerative braking is power limited, the eddy-current brake peaks near its
# critical speed and spoiler drag grows with v². Full-command force per kind:

# %%
brakes = default_brakes(sc.train.mass)
v = np.linspace(1.0, 100.0, 12)
print("  v[m/s] " + "".join(f"{b.kind.value:>14s}" for b in brakes))
for x in v:
    print(f"{x:8.1f} " + "".join(f"{brake_force(b, 1.0, x, sc.train.mass) / 1e3:13.1f}k" for b in brakes))

spo = next(b for b in brakes if b.kind is BrakeKind.SPOILER)
ecb = next(b for b in brakes if b.kind is BrakeKind.EDDY_CURRENT)
fine = np.linspace(15.0, 150.0, 5000)
diff = np.array([brake_force(spo, 1, x, 0) - brake_force(ecb, 1, x, 0) for x in fine])
print(f"spoiler overtakes the eddy-current brake at ~{fine[np.argmax(diff > 0)]:.1f} m/s")

# %% [markdown]
# ## Curves per configuration

# %%
rows = braking_curve(sc, np.arange(50, 351, 50) / 3.6)
configs = sorted({r.config for r in rows}, key=[r.config for r in rows].index)
for c in configs:
    line = " ".join(f"{r.distance:7.0f}" for r in rows if r.config == c)
    print(f"{c:18s}{line}")
