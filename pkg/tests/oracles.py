"""Independent high-precision references shared by several test modules."""

import mpmath as mp

from jutila_lab.arithforms import mod_inverse


def mp_block_phase(data, ell, sign):
    """g_j(l/r) + b l / q at 40 digits or more, straight from the quadratic in sqrt(x)."""
    # never lower the precision: mp.diff raises it around each call
    with mp.workdps(max(40, mp.mp.dps)):
        s = 1 if sign == "+" else -1
        y = mp.mpf(ell) / data.r
        A = mp.mpf(data.u) / data.v
        b = mp.sqrt(y) / data.q
        c = mp.mpf(data.t) / (2 * mp.pi)
        x = ((s * b + mp.sqrt(b * b + 4 * A * c)) / (2 * A)) ** 2
        g = -c * mp.log(x) + A * x - s * 2 * mp.sqrt(y * x) / data.q + mp.mpf(1 - s) / 8
        inv = mod_inverse(data.r * data.a, data.q) if data.q > 1 else 0
        return g + mp.mpf(inv) * ell / data.q


def mp_pair_derivatives(di, dj, ell, sign):
    """First and second l-derivatives of the pair phase by mpmath numerical differentiation."""
    with mp.workdps(40):
        f = lambda x: mp_block_phase(di, x, sign) - mp_block_phase(dj, x, sign)
        return float(mp.diff(f, ell, 1)), float(mp.diff(f, ell, 2))
