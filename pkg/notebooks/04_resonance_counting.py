"""
Counting near-resonant Farey pairs
==================================

Blocks of a large Farey system are grouped into dyadic bands; pairs are
counted when their shifted fractions and their u v products are both close.
"""

# %%
import numpy as np

from jutila_lab.farey import FareyParams, build_farey_system
from jutila_lab.sieve import (ResonanceQuery, band_members, dyadic_band, gk_bound, integral_B,
                              large_sieve_check, resonance_count_B)

# %%
system = build_farey_system(FareyParams(1e6, 10000, 100, 10000, 20000))
band = dyadic_band(system, 64, 8, 128, r=1)
items = band_members(system, band)
L, U, V = band.sizes
A, C = band.gk_params()
print("members:", len(items), "region size:", band.region.count(), "eta:", band.eta)

# %% [markdown]
# Brute-force counts against the five-term bound with unit constant.

# %%
for d1 in (0.01, 0.1, 0.5):
    for d2 in (0.001, 0.1, 1.0):
        B = resonance_count_B(ResonanceQuery(d1, d2), items, U, V)
        print(f"D1={d1:<5} D2={d2:<6} B={B:5d} ratio={B / gk_bound(d1, d2, A, C):.3f}")

# %%
print("integral of B over X:", integral_B(band, items))
rng = np.random.default_rng(0)
nu = rng.standard_normal(len(items))
lam = rng.standard_normal(band.L2 - band.L1 + 1)
rep = large_sieve_check(system, band, nu, lam)
print("bilinear form", rep.lhs, "sieve side", rep.rhs, "ratio", rep.ratio)
