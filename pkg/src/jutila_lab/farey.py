"""Farey dissection of a block sum lambda(n) n^(-it) over [M1, M2].

Negative fractions alpha_j = -u_j/v_j with v_j <= R cover the range of
h(y) = -t/(2 pi y); each gets a smooth window omega_j between breakpoints
taken at the mediants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arithforms import CoeffTable, factorize, mod_inverse, ord_p
from .lfunction import block_sum


class DegenerateInterval(ValueError):
    """No usable Farey dissection; fall back to the plain block sum."""


@dataclass(frozen=True)
class FareyParams:
    t: float
    M: int
    M0: int
    M1: int
    M2: int
    s: int = 6

    def __post_init__(self):
        if self.M0 < 1 or self.M < self.M0:
            raise ValueError("need M >= M0 >= 1 so that R >= 1")
        if not self.M1 < self.M2:
            raise ValueError("need M1 < M2")
        if self.s < 6 or self.s % 2:
            raise ValueError("smoothness s must be even and at least 6")
        if self.t <= 0:
            raise ValueError("t must be positive")

    @property
    def R(self) -> float:
        return math.sqrt(self.M / self.M0)

    @property
    def H(self) -> int:
        # M^2 / (R^2 t) = M M0 / t, kept exact
        return max(1, math.ceil(Fraction(self.M * self.M0) / Fraction(self.t)))


@dataclass(frozen=True)
class GoodBadSplit:
    u: int
    v: int
    level: int
    a: int
    q: int
    c: int
    d: int

    @property
    def beta(self) -> Fraction:
        return Fraction(self.c, self.d)

    def recombine(self) -> Fraction:
        """-u/v rebuilt as -a/q + c/d."""
        return Fraction(-self.a, self.q) + Fraction(self.c, self.d)


@dataclass(frozen=True)
class FareySystem:
    params: FareyParams
    fractions: tuple[Fraction, ...]        # alpha_j, increasing, negative
    mediants: tuple[Fraction, ...]         # rho_1 .. rho_{J-1}
    breakpoints: tuple[int, ...]           # N_0 .. N_J
    splits: tuple[GoodBadSplit, ...] = field(default=())

    @property
    def J(self) -> int:
        return len(self.fractions)

    def u(self, j: int) -> int:
        return -self.fractions[j - 1].numerator

    def v(self, j: int) -> int:
        return self.fractions[j - 1].denominator

    def alpha(self, j: int) -> Fraction:
        return self.fractions[j - 1]

    def support(self, j: int) -> tuple[int, int]:
        H = self.params.H
        return self.breakpoints[j - 1] - H, self.breakpoints[j] + H

    def to_csv(self) -> str:
        lines = ["j,u_j,v_j,rho_num,rho_den,N_j,q_j,d_j,c_j,a_j"]
        for j in range(1, self.J + 1):
            rho = self.mediants[j - 1] if j <= len(self.mediants) else None
            sp = self.splits[j - 1] if self.splits else None
            lines.append(",".join(str(x) for x in (
                j, self.u(j), self.v(j),
                "" if rho is None else rho.numerator, "" if rho is None else rho.denominator,
                self.breakpoints[j],
                "" if sp is None else sp.q, "" if sp is None else sp.d,
                "" if sp is None else sp.c, "" if sp is None else sp.a)))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- enumeration

def _smallest_at_least(x: Fraction, Q: int, strict: bool) -> Fraction:
    best = None
    for v in range(1, Q + 1):
        num = math.floor(x * v) + 1 if strict else math.ceil(x * v)
        cand = Fraction(num, v)
        if best is None or cand < best:
            best = cand
    return best


def farey_in_interval(R: float, interval: Sequence[float]) -> list[Fraction]:
    """Reduced fractions with denominator <= floor(R) in [x1, x2], ascending.

    The first two terms are found directly; the rest follow from the
    next-term recurrence of the Farey sequence, which is translation
    invariant and so works outside [0, 1].
    """
    x1, x2 = (Fraction(x) for x in interval)
    if not x1 < x2:
        raise ValueError("interval must satisfy x1 < x2")
    if R < 1:
        raise ValueError("R must be at least 1")
    Q = int(math.floor(R))
    first = _smallest_at_least(x1, Q, strict=False)
    if first > x2:
        return []
    second = _smallest_at_least(first, Q, strict=True)
    out = [first]
    a, b = first.numerator, first.denominator
    c, d = second.numerator, second.denominator
    while Fraction(c, d) <= x2:
        out.append(Fraction(c, d))
        k = (Q + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
    return out


def mediant(x: Fraction, y: Fraction) -> Fraction:
    return Fraction(x.numerator + y.numerator, x.denominator + y.denominator)


def h_of(t: float, y: Fraction) -> float:
    return -t / (2 * math.pi * float(y))


def good_bad_decompose(frac: Fraction | tuple[int, int], N: int) -> GoodBadSplit:
    """Write -u/v = -a/q + c/d with d collecting primes where ord_p v < ord_p N."""
    if isinstance(frac, tuple):
        u, v = frac
    else:
        u, v = frac.numerator, frac.denominator
    if v < 1 or math.gcd(u, v) != 1:
        raise ValueError("need v >= 1 and gcd(u, v) = 1")
    d = 1
    for p, e in factorize(v):
        if e < ord_p(N, p):
            d *= p**e
    q = v // d
    c = (-u * mod_inverse(q, d)) % d if d > 1 else 0
    a, rem = divmod(u + c * q, d)
    assert rem == 0
    return GoodBadSplit(u, v, N, a, q, c, d)


def build_farey_system(params: FareyParams, level: int = 1) -> FareySystem:
    H, t = params.H, params.t
    N0, NJ = params.M1 + 2 * H, params.M2 - 2 * H
    if params.M2 - params.M1 < 4 * H:
        raise DegenerateInterval(f"M2 - M1 = {params.M2 - params.M1} < 4H = {4 * H}")
    lo = -Fraction(t) / (2 * Fraction(math.pi) * N0)
    hi = -Fraction(t) / (2 * Fraction(math.pi) * NJ)
    fr = farey_in_interval(params.R, (lo, hi))
    if not fr:
        raise DegenerateInterval("no Farey fraction in the interval")
    meds = tuple(mediant(fr[i], fr[i + 1]) for i in range(len(fr) - 1))
    inner = [math.floor(h_of(t, rho) + 0.5) for rho in meds]
    bps = (N0, *inner, NJ)
    if any(b <= a for a, b in zip(bps, bps[1:])):
        raise DegenerateInterval(f"breakpoints not strictly increasing: {bps}")
    splits = tuple(good_bad_decompose((-f.numerator, f.denominator), level) for f in fr)
    return FareySystem(params, tuple(fr), meds, bps, splits)


# ---------------------------------------------------------------- windows

def omega(x, H: int, s: int = 6):
    """Smooth step: 0 below -H, 1 above H, (1 + sin^(s+1)(pi x / 2H)) / 2 between."""
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (1.0 + np.sin(np.pi * np.clip(x, -H, H) / (2 * H)) ** (s + 1))
    out = np.where(x >= H, 1.0, np.where(x <= -H, 0.0, mid))
    return out if out.ndim else float(out)


def omega_j(system: FareySystem, j: int, x):
    if not 1 <= j <= system.J:
        raise IndexError(f"block index {j} outside 1..{system.J}")
    H, s = system.params.H, system.params.s
    return omega(np.asarray(x, float) - system.breakpoints[j - 1], H, s) - \
        omega(np.asarray(x, float) - system.breakpoints[j], H, s)


def partition_sum(system: FareySystem, x):
    """sum_j omega_j(x), which telescopes to omega(x - N_0) - omega(x - N_J)."""
    return sum(omega_j(system, j, x) for j in range(1, system.J + 1))


def block_weight_F(system: FareySystem, j: int, x, t: float | None = None):
    """F_j(x) = x^(-it) e(-alpha_j x) omega_j(x)."""
    t = system.params.t if t is None else t
    x = np.asarray(x, dtype=float)
    al = float(system.alpha(j))
    val = np.exp(-1j * (t * np.log(x) + 2 * np.pi * al * x)) * omega_j(system, j, x)
    return val if val.ndim else complex(val)


@dataclass(frozen=True)
class BlockCheck:
    block: complex
    dissected: complex
    difference: complex
    compensation: complex

    @property
    def residual(self) -> float:
        return abs(self.difference - self.compensation)


def block_decomposition_check(table: CoeffTable, system: FareySystem, t: float | None = None) -> BlockCheck:
    """Compare the plain block sum with the sum over Farey blocks.

    The windows sum to one only away from the ends of [M1, M2]; the
    compensation collects lambda(n) n^(-it) (1 - sum_j omega_j(n)) over the
    two edge ranges where that weight is not identically 1.
    """
    t = system.params.t if t is None else t
    p = system.params
    if p.M2 > table.limit:
        raise ValueError("coefficient table too short")
    total = block_sum(table, p.M1, p.M2, t)
    dissected = 0j
    for j in range(1, system.J + 1):
        a, b = system.support(j)
        n = np.arange(max(a, 1), b + 1, dtype=float)
        al = float(system.alpha(j))
        lam = table.lam[max(a, 1):b + 1]
        dissected += complex(np.sum(lam * np.exp(2j * np.pi * al * n) * block_weight_F(system, j, n, t)))
    H = p.H
    left = np.arange(p.M1, min(system.breakpoints[0] + H, p.M2 + 1))
    right = np.arange(max(system.breakpoints[-1] - H + 1, left[-1] + 1 if len(left) else p.M1), p.M2 + 1)
    comp = 0j
    for n in (left, right):
        if len(n):
            nf = n.astype(float)
            wt = 1.0 - partition_sum(system, nf)
            comp += complex(np.sum(table.lam[n] * np.exp(-1j * t * np.log(nf)) * wt))
    return BlockCheck(total, dissected, total - dissected, comp)


# ---------------------------------------------------------------- derivative diagnostic

def _fd_weights(order: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights at integer offsets for the given derivative order (Fornberg)."""
    n = len(offsets)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, offsets[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, offsets[i]
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@dataclass(frozen=True)
class DerivativeRatios:
    j: int
    v: int
    ratios: tuple[float, ...]     # index = derivative order 0..s_max


def derivative_decay_diagnostic(system: FareySystem, j: int, s_max: int = 4, weight: int = 12,
                                points: int = 64) -> DerivativeRatios:
    """max over a grid of |d^s/dx^s F_j(x) x^(-(k-1)/2)| (v_j R)^s x^((k-1)/2)."""
    if not 0 <= s_max <= 4:
        raise ValueError("s_max must lie in 0..4")
    H = system.params.H
    step = H / 16.0
    a, b = system.support(j)
    if step * 1e-8 < np.finfo(float).tiny or step < 1e-6 * a:
        raise ArithmeticError("step size underflow")
    xs = np.linspace(a, b, points)
    half = 4
    offs = np.arange(-half, half + 1, dtype=float)
    scale = system.v(j) * system.params.R
    expo = (weight - 1) / 2
    ratios = []
    for order in range(s_max + 1):
        if order == 0:
            vals = np.abs(block_weight_F(system, j, xs))
        else:
            w = _fd_weights(order, offs)
            grid = xs[:, None] + step * offs[None, :]
            f = block_weight_F(system, j, grid) * grid ** -expo
            vals = np.abs(f @ w) / step**order * xs**expo * scale**order
        ratios.append(float(np.max(vals)))
    return DerivativeRatios(j, system.v(j), tuple(ratios))
