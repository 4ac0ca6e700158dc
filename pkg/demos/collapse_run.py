# %% [markdown]
# # Watching an orbit collapse
#
# Iterate a random staircase hexagon and track its chordal distance to the
# predicted candidates.  The orbit is kept in a renormalized chart, so the
# vertices stay well separated numerically even as the actual polygon shrinks.

# %%
import numpy as np

from polydyn.harness import ExperimentConfig, run_collapse

cfg = ExperimentConfig(system="staircase", n=6, seed=2, iterations=300)
rep = run_collapse(cfg)
print(rep.verdict, "after", rep.iterations, "sweeps")
print("labels:", rep.labels, "collapsed to", rep.collapsed_to)

# %% distance to each candidate, every other sweep
for it in range(0, rep.iterations + 1, 2):
    print(it, np.array2string(rep.distances[it], precision=2))

# %% invariant drift over the run (scaled); small values mean the run is trustworthy
for name, d in rep.drift.items():
    print(f"{name:>6s} {d:.1e}")

# %% the same experiment for the other two systems
for system in ("flat", "leapfrog"):
    r = run_collapse(ExperimentConfig(system=system, n=6, seed=2, iterations=300))
    print(system, r.verdict, r.summary()["nearest_label"], f"{r.final_distance:.1e}")
