"""Regenerate the per-order Bessel branch crossovers frozen in special.py.

Series/Miller crossover: the largest x below which the power series agrees
with Miller's recurrence to 1e-14.  Miller/Hankel crossover: the smallest x
beyond which the asymptotic expansion stays within 1e-13 of Miller.
"""
import numpy as np

from jutila_lab.special import _bessel_hankel, _bessel_miller, _bessel_series


def series_cut(nu, tol=1e-14):
    xs = np.arange(0.25, 60.0, 0.25)
    bad = np.abs(_bessel_series(nu, xs) - _bessel_miller(nu, xs)) > tol
    return float(xs[np.argmax(bad)] - 0.25) if bad.any() else float(xs[-1])


def asym_cut(nu, tol=1e-13):
    hi = 40.0 + 1.2 * nu * nu
    xs = np.arange(1.0, hi, 0.5)
    bad = np.abs(_bessel_hankel(nu, xs) - _bessel_miller(nu, xs)) > tol
    last_bad = np.nonzero(bad)[0]
    return float(xs[last_bad[-1] + 1]) if len(last_bad) else float(xs[0])


if __name__ == "__main__":
    rows = []
    for nu in range(65):
        rows.append((nu, series_cut(nu), asym_cut(nu)))
    print("_BESSEL_CROSSOVER = {")
    for nu, s, a in rows:
        print(f"    {nu}: ({s}, {a}),")
    print("}")
