# %% [markdown]
# # Collapse candidates of the square
#
# The square (1, i, -1, -i) with unit staircase curvature has I = K = 0 and
# J = 2i, so the candidates are 0 and infinity.  The finite-difference
# oracle differentiates the scaled monodromy at t = 1 and should agree.

# %%
import numpy as np

from polydyn.invariants import finite_diff_monodromy, infinitesimal_monodromy, predict_collapse, traceless
from polydyn.polygon import TwistedPolygon
from polydyn.scaling import SystemSpec

P = TwistedPolygon.from_values([1, 1j, -1, -1j])
spec = SystemSpec.staircase(1.0)
mu = [1, 1, 1, 1]

im = infinitesimal_monodromy(P, [1, 1, 1, 1])
print("I, J, K =", im.I, im.J, im.K)
print("M' =\n", np.round(im.matrix, 12))

# %%
cands = predict_collapse(P, spec, mu)
print("candidates:", [r.value for r in cands.roots])

# %% the oracle error shrinks like h^2 for generic polygons; here it is exact
for h in (1e-2, 1e-3, 1e-4):
    fd = traceless(finite_diff_monodromy(P, spec, mu, h=h))
    print(f"h={h:.0e}  max error {np.abs(fd - im.traceless).max():.2e}")
