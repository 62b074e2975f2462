# %% [markdown]
# # Spoiler design sweep
#
# Three spoiler families over angle and area. We want drag for braking,
# little noise, and downforce; nothing wins on all three.

# %%
import numpy as np

from railguard.spoiler import SpoilerType, design_grid, evaluate_design, sweep, SpoilerDesign

speeds = np.array([100, 200, 300]) / 3.6
grid = design_grid(list(SpoilerType), np.arange(0, 91, 10), [2.0, 4.0, 6.0])
rows = sweep(grid, speeds)
print(f"{len(rows)} designs, {sum(r.pareto for r in rows)} on the Pareto front")

# %%
print(f"{'type':16s} {'angle':>5s} {'area':>4s} {'brake kN':>9s} {'noise':>7s} {'down kN':>8s}")
for r in rows:
    if r.pareto:
        o = r.objectives
        print(f"{r.design.type.value:16s} {r.design.angle:5.0f} {r.design.area:4.0f} "
              f"{o.mean_brake_force / 1e3:9.2f} {o.noise_proxy:7.2f} {o.down_force / 1e3:8.2f}")

# %% [markdown]
# Macro-geometric designs never make the front: at the same angle and area the
# counter-flow model gives at least as much drag, less noise and the same lift.

# %%
for a in (0, 30, 60, 90):
    m = evaluate_design(SpoilerDesign("macro", a, 4.0), speeds)
    c = evaluate_design(SpoilerDesign("counter", a, 4.0), speeds)
    print(f"{a:3d} deg  macro {m.mean_brake_force / 1e3:6.2f} kN / noise {m.noise_proxy:6.2f}   "
          f"counter {c.mean_brake_force / 1e3:6.2f} kN / noise {c.noise_proxy:6.2f}")
