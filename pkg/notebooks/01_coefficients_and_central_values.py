"""
Coefficients, root numbers and values on the critical line
==========================================================

Walks through the four built-in eta-quotient forms: their normalized
coefficients, the root numbers recovered numerically, and two independent
routes to L(1/2 + it).
"""

# %%
import numpy as np

from jutila_lab.arithforms import coefficients, get_form
from jutila_lab.lfunction import (afe_evaluate, completed_record, determine_root_number,
                                  l_value_completed, subconvexity_scan)

FORMS = ["1.12.a", "4.6.a", "9.4.a", "11.2.a"]

# %% [markdown]
# Integer coefficients a(n) and the normalized lambda(n) = a(n) / n^((k-1)/2).

# %%
for label in FORMS:
    spec = get_form(label)
    tab = coefficients(spec, 12)
    print(f"{label:7s} k={spec.weight:2d} N={spec.level:2d} a(1..8) =", [tab.a(n) for n in range(1, 9)])

# Deligne's bound |lambda(p)| <= 2 on primes below 2000
tab = coefficients("1.12.a", 2000)
primes = [p for p in range(2, 2000) if all(p % d for d in range(2, int(p**0.5) + 1))]
print("max |lambda(p)| for the discriminant form:", np.max(np.abs(tab.lam[primes])))

# %% [markdown]
# Root numbers come out of the functional equation itself: two Mellin
# splits of the completed function must agree, which pins down epsilon.

# %%
for label in FORMS:
    rep = determine_root_number(label)
    print(label, rep.value, "spread", f"{rep.spread:.1e}")

# %%
# arithmetic L(E, 1) sits at s = 1/2 in the analytic normalization
print("L(11a, 1) =", l_value_completed("11.2.a", 0.5).real)

# %% [markdown]
# The smoothed two-sided sum and the completed-function route agree only up
# to the smoothing error, which is of size sqrt(N) C^(-1/4).

# %%
for t in (0.0, 5.0, 10.0, 20.0):
    afe = afe_evaluate("1.12.a", t)
    ref = completed_record("1.12.a", t)
    print(f"t={t:5.1f} afe={afe.L_half:.6f} completed={ref.L_half:.6f} "
          f"|diff|={abs(afe.L_half - ref.L_half):.3f} scale={afe.error_estimate:.3f}")

# %% [markdown]
# Along the line the normalized size |L| / (t^(1/3) log t) stays bounded.

# %%
rows = subconvexity_scan("1.12.a", np.arange(100.0, 2001.0, 10.0), threads=4)
weyl = np.array([r.weyl_ratio for r in rows])
conv = np.array([r.convexity_ratio for r in rows])
print("max |L|/(t^1/3 log t):", weyl.max(), " max |L|/t^1/2:", conv.max())
