# %% [markdown]
# # Conserved quantities
#
# I, J, K and the G_k are conserved by each system.  Delta = J^2 - IK is also
# unchanged by Möbius conjugation, so it is the natural scalar to watch.

# %%
from polydyn.harness import ExperimentConfig, Orbit, build_state

cfg = ExperimentConfig(system="staircase", n=6, seed=2)
orbit = Orbit(build_state(cfg), cfg.spec)
for it in range(6):
    g = orbit.g_values([1, 2, 3])
    print(it, f"Delta={orbit.delta():.10f}", {k: round(abs(v), 10) for k, v in g.items()})
    orbit.step()

# %% [markdown]
# Delta and G_k are Möbius invariant, so they are read in the working chart and
# stay put.  I, J, K belong to the actual polygon and have to be pulled back
# through the chart.  Once the polygon has shrunk by a factor kappa, double
# precision pins them down only to about kappa * 1e-16.

# %%
I0, J0, K0 = orbit.ijk()
for it in range(60):
    orbit.step()
    if it % 10 == 9:
        I, J, K = orbit.ijk()
        err = max(abs(I - I0), abs(J - J0), abs(K - K0)) / max(abs(I0), abs(J0), abs(K0))
        print(f"sweep {it + 7:3d}  chart cond {orbit.condition:.1e}  IJK drift {err:.1e}  Delta {orbit.delta():.10f}")
