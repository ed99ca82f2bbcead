"""
Farey blocks and the stationary-phase main term
===============================================

The range [M1, M2] is cut into blocks around Farey fractions; on each block
the dual integrals are compared with their stationary-phase approximation.
"""

# %%
import math

import numpy as np

from jutila_lab.arithforms import coefficients
from jutila_lab.farey import FareyParams, block_decomposition_check, build_farey_system, partition_sum
from jutila_lab.statphase import block_phase_data, block_transform_check, check_stationary_phase, mid_support_ells

# %%
t = 1e5
M = math.ceil(t ** (2 / 3))
system = build_farey_system(FareyParams(t, M, M, M, 2 * M))
print("blocks:", system.J, "H:", system.params.H)
print("fractions:", [str(f) for f in system.fractions])
print("breakpoints:", system.breakpoints)

# %% [markdown]
# The weights sum to one away from the two ends and vanish outside.

# %%
H = system.params.H
x = np.arange(M - 50, 2 * M + 50)
s = partition_sum(system, x)
core = (x >= M + 3 * H) & (x <= 2 * M - 3 * H)
print("max |sum - 1| in the core:", np.max(np.abs(s[core] - 1)), " nonzero outside:",
      np.count_nonzero(s[(x < M) | (x > 2 * M)]))
print("block decomposition residual:",
      block_decomposition_check(coefficients("1.12.a", 2 * M + 1), system).residual)

# %% [markdown]
# Relative error of the main term at stationary points placed in the flat
# part of each block shrinks as t grows.

# %%
for t in (1e4, 4e4, 1.6e5):
    M = math.ceil(t ** (2 / 3))
    sysm = build_farey_system(FareyParams(t, M, M, M, 2 * M))
    errs = [check_stationary_phase(d, ell, sign).rel_err
            for d in (block_phase_data(sysm, j) for j in range(1, sysm.J + 1))
            for sign in "+-" for ell in mid_support_ells(d, sign)]
    print(f"t={t:8.0f} points={len(errs):3d} median rel err={np.median(errs):.2e}")

# %%
rep = block_transform_check("1.12.a", system, 1)
print("block 1 direct", rep.direct, "transformed", rep.transformed, "rel", rep.rel_err)
