"""Large-sieve side: pair phases, their derivatives, exponential sums and resonance counts.

Each Farey block j carries a dual phase g_jr(l) = g_j(l/r) + b_j l / q_j
with b_j the inverse of r a_j mod q_j.  Pairs (i, j) whose phase
difference has small derivative are "resonant"; counting them reduces to
a lattice-point problem in the numerators b/q and the products u v.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arithforms import mod_inverse
from .farey import FareySystem, omega_j
from .statphase import BlockPhaseData, TWO_PI, _sg, amplitude_h, block_phase_data, stationary_point

MAX_ITEMS = 10_000
MAX_SIGMA_LENGTH = 10**6


class SieveBudgetError(RuntimeError):
    """Brute-force enumeration would exceed its hard cap."""


# ---------------------------------------------------------------- bands and regions

@dataclass(frozen=True)
class RegionR:
    U1: int
    U2: int
    V1: int
    V2: int
    c: int = 0
    d: int = 1

    def contains(self, u: int, v: int) -> bool:
        return (self.U1 <= u <= self.U2 and self.V1 <= v <= self.V2 and math.gcd(u, v) == 1
                and (self.d * u + self.c * v) % (self.d * self.d) == 0)

    def count(self) -> int:
        """#R by enumeration."""
        return sum(1 for v in range(self.V1, self.V2 + 1) for u in range(self.U1, self.U2 + 1)
                   if self.contains(u, v))


@dataclass(frozen=True)
class SieveBand:
    L1: int
    L2: int
    U1: int
    U2: int
    V1: int
    V2: int
    r: int
    t: float
    c: int = 0
    d: int = 1
    L: int | None = None
    U: int | None = None
    V: int | None = None

    def __post_init__(self):
        if not (1 <= self.L1 <= self.L2 and 1 <= self.U1 <= self.U2 and 1 <= self.V1 <= self.V2):
            raise ValueError("band ranges must be positive and ordered")
        if self.r < 1 or self.d < 1:
            raise ValueError("r and d must be positive")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (self.L or self.L2, self.U or self.U2, self.V or self.V2)

    @property
    def beta(self) -> Fraction:
        return Fraction(self.c, self.d)

    @property
    def eta(self) -> float:
        L, U, V = self.sizes
        return math.sqrt(self.d**2 * self.t / (self.r * L * U * V))

    @property
    def X0(self) -> float:
        return math.sqrt(self.sizes[0] * max(self.eta, 1.0))

    @property
    def region(self) -> RegionR:
        return RegionR(self.U1, self.U2, self.V1, self.V2, self.c, self.d)

    def gk_params(self) -> tuple[float, float]:
        """(A, C) = ((r/d)(U1 + beta V1), V1/d)."""
        return (self.r / self.d * (self.U1 + float(self.beta) * self.V1), self.V1 / self.d)


def dyadic_band(system: FareySystem, L: int, V: int, U: int, r: int = 1, c: int = 0, d: int = 1) -> SieveBand:
    """Band with ranges (L/2, L], (U/2, U], (V/2, V]."""
    return SieveBand(L // 2 + 1, L, U // 2 + 1, U, V // 2 + 1, V, r, system.params.t, c, d, L, U, V)


@dataclass(frozen=True)
class SieveItem:
    j: int
    u: int
    v: int
    a: int
    q: int
    b: int          # inverse of r a mod q

    @property
    def uv(self) -> int:
        return self.u * self.v


def band_members(system: FareySystem, band: SieveBand) -> list[SieveItem]:
    """Blocks j with beta_j = beta, (q_j, r) = 1 and (u_j, v_j) in the region."""
    out = []
    reg = band.region
    for j, sp in enumerate(system.splits, start=1):
        if Fraction(sp.c, sp.d) != band.beta or math.gcd(sp.q, band.r) != 1:
            continue
        if not reg.contains(sp.u, sp.v):
            continue
        b = mod_inverse(band.r * sp.a, sp.q) if sp.q > 1 else 0
        out.append(SieveItem(j, sp.u, sp.v, sp.a, sp.q, b))
    return out


# ---------------------------------------------------------------- pair phases

def _y(data: BlockPhaseData) -> float:
    return data.d / (2.0 * data.r * data.u * data.q)


def _shift(data: BlockPhaseData) -> Fraction:
    return Fraction(mod_inverse(data.r * data.a, data.q) if data.q > 1 else 0, data.q)


def pair_phase(data: BlockPhaseData, ells, sign: str) -> np.ndarray:
    """g_jr(l) = g_j(l/r) + b l / q, vectorized over l."""
    s = _sg(sign)
    y = np.asarray(ells, dtype=float) / data.r
    A = data.u / data.v
    b = np.sqrt(y) / data.q
    c = data.t / TWO_PI
    disc = np.sqrt(b * b + 4 * A * c)
    root = (b + disc) / (2 * A) if s > 0 else 2 * c / (b + disc)
    x = root * root
    g = -c * np.log(x) + A * x - s * 2.0 / data.q * np.sqrt(y * x) + 0.125 - s * 0.125
    sh = _shift(data)
    # keep the additive part reduced mod 1 to protect precision
    add = ((sh.numerator * np.asarray(ells, dtype=np.int64)) % sh.denominator) / sh.denominator
    return g + add


def phase_first_derivative(data: BlockPhaseData, ell: float, sign: str) -> float:
    """d/dl g_jr = -+ y (sqrt(1 + t/(pi y l)) +- 1) + b/q with y = d / (2 r u q)."""
    s = _sg(sign)
    y = _y(data)
    return -s * y * (math.sqrt(1 + data.t / (math.pi * y * ell)) + s) + float(_shift(data))


def phase_second_derivative(data: BlockPhaseData, ell: float, sign: str) -> float:
    """d^2/dl^2 g_jr = +- (t / (2 pi l^2)) (1 + t/(pi l y))^(-1/2)."""
    s = _sg(sign)
    y = _y(data)
    return s * data.t / (TWO_PI * ell**2) / math.sqrt(1 + data.t / (math.pi * ell * y))


def pair_phase_derivatives(di: BlockPhaseData, dj: BlockPhaseData, ell: float, sign: str) -> tuple[float, float]:
    """First and second derivatives of g_ir - g_jr at l."""
    if di.r != dj.r:
        raise ValueError("pair must share r")
    if di is dj or (di.j == dj.j and di.system is dj.system):
        return 0.0, 0.0
    return (phase_first_derivative(di, ell, sign) - phase_first_derivative(dj, ell, sign),
            phase_second_derivative(di, ell, sign) - phase_second_derivative(dj, ell, sign))


def resonance_offset(di: BlockPhaseData, dj: BlockPhaseData) -> Fraction:
    """z_ijr = b_i/q_i - b_j/q_j."""
    return _shift(di) - _shift(dj)


def zest_ratio(di: BlockPhaseData, dj: BlockPhaseData, ell: float, sign: str, band: SieveBand) -> float:
    """|(g_ir - g_jr)' - z| / (eta |u_i v_i - u_j v_j| / (UV)); nan on equal products."""
    duv = abs(di.u * di.v - dj.u * dj.v)
    if duv == 0:
        return math.nan
    _, U, V = band.sizes
    first, _ = pair_phase_derivatives(di, dj, ell, sign)
    return abs(first - float(resonance_offset(di, dj))) / (band.eta * duv / (U * V))


def exp_sum_sigma(di: BlockPhaseData, dj: BlockPhaseData, L1: int, L2: int, sign: str) -> float:
    """max over L1 <= L1' <= L2 of |sum_{l=L1'}^{L2} e(g_ir(l) - g_jr(l))|."""
    if L2 < L1:
        return 0.0
    if L2 - L1 > MAX_SIGMA_LENGTH:
        raise SieveBudgetError(f"sum length {L2 - L1} above {MAX_SIGMA_LENGTH}")
    ells = np.arange(L1, L2 + 1)
    diff = pair_phase(di, ells, sign) - pair_phase(dj, ells, sign)
    terms = np.exp(2j * np.pi * diff)
    suffix = np.cumsum(terms[::-1])
    return float(np.max(np.abs(suffix)))


# ---------------------------------------------------------------- resonance counting

@dataclass(frozen=True)
class ResonanceQuery:
    delta1: float
    delta2: float

    def __post_init__(self):
        if not (0 <= self.delta1 <= 1 and 0 <= self.delta2 <= 1):
            raise ValueError("thresholds must lie in [0, 1]")


def _dist_le(num: int, Q: int, delta: float) -> bool:
    """min(num, Q - num) / Q <= delta, decided exactly."""
    m = min(num % Q, Q - num % Q)
    return Fraction(m, Q) <= Fraction(delta)


def _count_row(i: int, items: Sequence[SieveItem], uv_sorted: np.ndarray, order: np.ndarray,
               q: ResonanceQuery, width: float) -> int:
    it = items[i]
    lim = Fraction(width)
    lo = np.searchsorted(uv_sorted, it.uv - math.floor(lim), side="left")
    hi = np.searchsorted(uv_sorted, it.uv + math.floor(lim), side="right")
    count = 0
    for k in order[lo:hi]:
        jt = items[k]
        if Fraction(abs(it.uv - jt.uv)) > lim:
            continue
        Q = it.q * jt.q
        if _dist_le(it.b * jt.q - jt.b * it.q, Q, q.delta1):
            count += 1
    return count


def resonance_count_B(query: ResonanceQuery, items: Sequence[SieveItem], U: int, V: int,
                      threads: int = 1) -> int:
    """Ordered pairs (i, j) with ||b_i/q_i - b_j/q_j|| <= D1 and |u_i v_i - u_j v_j| <= U V D2."""
    n = len(items)
    if n > MAX_ITEMS:
        raise SieveBudgetError(f"{n} items exceed the brute-force cap {MAX_ITEMS}")
    uv = np.array([it.uv for it in items], dtype=np.int64)
    order = np.argsort(uv, kind="stable")
    uv_sorted = uv[order]
    width = U * V * query.delta2
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return sum(ex.map(lambda i: _count_row(i, items, uv_sorted, order, query, width), range(n)))
    return sum(_count_row(i, items, uv_sorted, order, query, width) for i in range(n))


def resonance_count_oracle(query: ResonanceQuery, items: Sequence[SieveItem], U: int, V: int) -> int:
    """Same count through set intersection of the two conditions, in exact rationals."""
    n = len(items)
    z = [Fraction(it.b, it.q) for it in items]
    lim1, lim2 = Fraction(query.delta1), Fraction(U * V) * Fraction(query.delta2)
    total = 0
    for i in range(n):
        near = set()
        for k in range(n):
            dz = (z[i] - z[k]) % 1
            if min(dz, 1 - dz) <= lim1:
                near.add(k)
        close = {k for k in range(n) if abs(items[i].uv - items[k].uv) <= lim2}
        total += len(near & close)
    return total


def gk_bound(delta1: float, delta2: float, A: float, C: float) -> float:
    """D1 D2 A^2 C^2 + D1^2 A^2 C^2 + A C + D2 A^2 + D2 C^2 (implied constant 1)."""
    return (delta1 * delta2 * A * A * C * C + delta1 * delta1 * A * A * C * C + A * C
            + delta2 * A * A + delta2 * C * C)


def integral_B(band: SieveBand, items: Sequence[SieveItem]) -> float:
    """int_{X0}^{L} B(L/X^2, L/(eta X^2)) dX, exactly.

    With the thresholds at their envelope values a pair counts precisely for
    X up to min(sqrt(L/||z||), sqrt(UVL/(eta |duv|))), so the integral is a
    sum of interval lengths.
    """
    L, U, V = band.sizes
    X0, eta = band.X0, band.eta
    if L <= X0:
        return 0.0
    total = 0.0
    for it in items:
        for jt in items:
            dz = (Fraction(it.b, it.q) - Fraction(jt.b, jt.q)) % 1
            nz = float(min(dz, 1 - dz))
            duv = abs(it.uv - jt.uv)
            x1 = math.inf if nz == 0 else math.sqrt(L / nz)
            x2 = math.inf if duv == 0 else math.sqrt(U * V * L / (eta * duv))
            total += max(0.0, min(x1, x2, L) - X0)
    return total


def count_at_X(band: SieveBand, items: Sequence[SieveItem], X: float) -> int:
    L, U, V = band.sizes
    return resonance_count_B(ResonanceQuery(L / X**2, L / (band.eta * X**2)), items, U, V)


# ---------------------------------------------------------------- large sieve

@dataclass(frozen=True)
class LargeSieveReport:
    lhs: float
    rhs: float
    members: int
    region_size: int
    integral: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


def large_sieve_check(system: FareySystem, band: SieveBand, nu: Sequence[complex], lam: Sequence[complex],
                      sign: str = "+", weight: int = 12) -> LargeSieveReport:
    """Both sides of the bilinear large-sieve inequality for one band.

    nu is indexed like band_members(system, band); lam covers l = L1..L2.
    """
    items = band_members(system, band)
    if len(nu) != len(items):
        raise ValueError(f"need {len(items)} weights nu, got {len(nu)}")
    ells = np.arange(band.L1, band.L2 + 1)
    if len(lam) != len(ells):
        raise ValueError(f"need {len(ells)} weights lambda, got {len(lam)}")
    lam = np.asarray(lam, dtype=complex)
    inner = np.zeros(len(ells), dtype=complex)
    for w, it in zip(nu, items):
        data = block_phase_data(system, it.j, band.r, weight)
        amp = np.empty(len(ells))
        for k, ell in enumerate(ells):
            y = ell / band.r
            x = stationary_point(data, y, sign)
            amp[k] = amplitude_h(data, y, sign) * float(omega_j(system, it.j, x))
        inner += w * amp * np.exp(2j * np.pi * pair_phase(data, ells, sign))
    lhs = float(abs(np.sum(lam * inner)) ** 2)
    nmax = max((abs(w) for w in nu), default=0.0)
    L, U, V = band.sizes
    size = band.region.count()
    integ = integral_B(band, items)
    rhs = nmax**2 * float(np.sum(np.abs(lam) ** 2)) * band.eta * band.r * V / U * (band.X0 * size**2 + integ)
    return LargeSieveReport(lhs, rhs, len(items), size, integ)
