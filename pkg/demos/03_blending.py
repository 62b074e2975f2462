# %% [markdown]
# # Brake blending
#
# A service stop asks for 1 m/s² and the blender decides who supplies it.
# Emergency ignores preferences and applies everything.

# %%
import numpy as np

from railguard import BlendWeights, BrakingMode, TrainConfig, allocate, integrate_stop
from railguard.blending import BlendingController
from railguard.brakes import default_brakes
from railguard.track import straight_track

M = 400_000.0
brakes = default_brakes(M)
names = [b.name for b in brakes]

# %%
for v in (10.0, 40.0, 80.0):
    for label, w in [("balanced", BlendWeights()), ("efficiency", BlendWeights(0.0, 1.0, 0.0))]:
        res = allocate(brakes, v, 0.8 * M, w, BrakingMode.NORMAL, mass=M, lam=1.0)
        cmd = "  ".join(f"{n}={u:.2f}" for n, u in zip(names, res.command))
        print(f"v={v:4.0f} {label:10s} {cmd}  -> {res.achieved_force / 1e3:.0f} kN")

# %% [markdown]
# ## Service stop vs emergency stop from 300 km/h

# %%
train = TrainConfig(mass=M, brakes=brakes)
track = straight_track(20_000.0)
v0 = 300 / 3.6
# lam scales the cost terms against raw force; at the default 0.2 friction,
# which covers 1 m/s^2 alone, wins every service allocation
runs = [("NORMAL", BrakingMode.NORMAL, 0.2), ("NORMAL l=3", BrakingMode.NORMAL, 3.0),
        ("EMERGENCY", BrakingMode.EMERGENCY, 0.2)]
for label, mode, lam in runs:
    ctl = BlendingController(brakes, M, mode, weights=BlendWeights(0.2, 0.6, 0.2), lam=lam)
    r = integrate_stop(train, brakes, ctl, track, v0)
    traj = r.trajectory
    share = traj[1:, 4:8].sum(axis=0)
    share = share / share.sum()
    print(f"{label:10s} {r.distance:7.0f} m in {r.duration:5.1f} s, peak jerk {r.peak_jerk:5.2f} m/s^3, "
          f"regen {r.regenerated_energy / 3.6e6:6.1f} kWh, force share "
          + " ".join(f"{n}:{s:.0%}" for n, s in zip(("fric", "regen", "ecb", "spoiler"), share)))

# %% [markdown]
# Jerk-limited ramp: the first second of the service stop

# %%
ctl = BlendingController(brakes, M, BrakingMode.NORMAL)
r = integrate_stop(train, brakes, ctl, track, v0)
print(np.round(-r.trajectory[:101:10, 3], 3))
