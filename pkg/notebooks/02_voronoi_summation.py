"""
Voronoi summation at rational shifts
====================================

A smooth bump is summed against lambda(n) e(an/q) directly and through the
dual Bessel-transform side.
"""

# %%
from fractions import Fraction

from jutila_lab.arithforms import coefficients
from jutila_lab.voronoi import (TestFunction, VoronoiSpec, additive_twist_decompose, calibrate_eta,
                                split_fraction, verify_twist_identity, voronoi_lhs, voronoi_rhs)

# %% [markdown]
# a/q is split into a part coprime to the level and a part carrying only
# primes of the level.

# %%
print(split_fraction(5, 12, 4))
print(split_fraction(1, 6, 9))

# %% [markdown]
# The level part is expanded into multiplicative twists. For the CM form of
# level 9 the twist by its own character folds back onto the form.

# %%
dec = additive_twist_decompose("9.4.a", Fraction(1, 3))
for term in dec.terms:
    print(term.m, term.chi, f"{term.coeff:.4f}", term.form.label)
res = verify_twist_identity(dec, 2 + 3j, X=20000)
print("residual", res.residual, "tail bound", res.tail_bound)

# %% [markdown]
# The unimodular constant per form is measured once at q = 1 on a bump that
# is not reused below.

# %%
for label in ("1.12.a", "4.6.a", "9.4.a", "11.2.a"):
    print(label, calibrate_eta(label))

# %%
bump = TestFunction(500.0, 4000.0, 1500.0, "smoothstep")
quad = VoronoiSpec(tol=3e-6, points_per_cycle=6)
for label, q in [("1.12.a", 5), ("4.6.a", 6), ("9.4.a", 3)]:
    lhs = voronoi_lhs(coefficients(label, 4001), 1, q, bump)
    rhs = voronoi_rhs(label, 1, q, bump, quad)
    print(f"{label} 1/{q}: lhs={lhs:.8e} rhs={rhs.value:.8e} "
          f"rel={abs(lhs - rhs.value) / abs(lhs):.1e} dual terms={rhs.truncation}")
