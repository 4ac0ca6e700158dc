# %% [markdown]
# # Staircases whose sweep is a Möbius map
#
# For P = (0, 1, ..., n-1) and curvature (1, ..., 1, lambda) a full sweep is a
# translation when lambda = (n-1)^2.  Geometric progressions give dilations,
# and a root of unity q gives a periodic orbit.

# %%
import numpy as np

from polydyn.dynamics import FlipWord, apply_word
from polydyn.harness import geometric_lambda, special_staircase

state, expected, rep = special_staircase(3, "parabolic")
print("lambda =", rep.lam, "placed on edge", rep.placement)
print(state.polygon.values(), "->", apply_word(state, FlipWord.sweep(3)).polygon.values())

# %%
state, expected, rep = special_staircase(3, "geometric", q=2)
print("lambda =", rep.lam, "class", rep.dynamic)
print(apply_word(state, FlipWord.sweep(3)).polygon.values())

# %% q = exp(2 pi i / 9) with n = 3 returns after three sweeps
q = np.exp(2j * np.pi / 9)
state, _, rep = special_staircase(3, "from_lambda", lam=geometric_lambda(3, q))
print(rep.dynamic, "order", rep.order)
s = state
for k in range(4):
    print(k, np.round(s.polygon.values(), 6))
    s = apply_word(s, FlipWord.sweep(3))
