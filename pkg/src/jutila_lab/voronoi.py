"""Additive twists as combinations of multiplicative twists, and Voronoi summation.

The decomposition works prime by prime: for alpha = a/p^e, split n by its
p-part, expand e(b/p^j) over characters mod p^j with Gauss sums, and
recombine the coprime-to-p sums into L-functions through local Euler
factors. Components of a/q are handled one after another with the running
multiplier r.

The Voronoi right-hand side then applies the classical level-D formula to
each resulting term, with the single unimodular constant eta_g(D2) per
(form, D2) taken from a frozen calibration table.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import jv

from .arithforms import (DirichletCharacter, NewformSpec, char_group, coefficients, combine_characters,
                         divisor_counts, euler_phi, factorize, gauss_sum, gauss_sum_vanishes, get_form,
                         mod_inverse, ord_p, principal_character)
from .lfunction import divisor_tail_bound
from .special import QuadratureBudgetError, bessel_j, bessel_j_upward, gauss_legendre

MAX_TWIST_MODULUS = 100


class UnsupportedTwist(ValueError):
    """The registry cannot identify the twisted form."""

    def __init__(self, form: str, chi: DirichletCharacter | str):
        super().__init__(f"UnsupportedTwist: {form} twisted by {chi}")
        self.form = form
        self.chi = chi


# ---------------------------------------------------------------- fraction split

@dataclass(frozen=True)
class VoronoiSplit:
    a: int
    q: int
    N: int
    N1: int
    N2: int
    q1: int
    q2: int
    a1: int
    a2: int

    def recombined(self) -> Fraction:
        return Fraction(self.a1, self.q1) + Fraction(self.a2, self.q2)


def _smooth_part(q: int, N: int) -> int:
    """(N^infinity, q)."""
    out = 1
    for p, e in factorize(q):
        if N % p == 0:
            out *= p**e
    return out


def split_fraction(a: int, q: int, N: int) -> VoronoiSplit:
    if q < 1 or math.gcd(a, q) != 1:
        raise ValueError("need q >= 1 and gcd(a, q) = 1")
    N1 = math.gcd(N, q)
    N2 = N // N1
    q2 = _smooth_part(q, N2)
    q1 = q // q2
    # a/q = a1/q1 + a2/q2  <=>  a = a1 q2 + a2 q1
    a1 = (a * mod_inverse(q2, q1)) % q1 if q1 > 1 else 0
    a2 = (a * mod_inverse(q1, q2)) % q2 if q2 > 1 else 0
    sp = VoronoiSplit(a, q, N, N1, N2, q1, q2, a1, a2)
    if (sp.recombined() - Fraction(a, q)).denominator != 1:
        raise AssertionError("partial fraction split failed")
    return sp


# ---------------------------------------------------------------- twists

def _same_on_units(chi: DirichletCharacter, psi: DirichletCharacter) -> bool:
    """chi and psi induce the same character on integers coprime to both moduli."""
    m = math.lcm(chi.modulus, psi.modulus)
    for n in range(1, m):
        if math.gcd(n, m) == 1 and abs(chi(n) - psi(n)) > 1e-12:
            return False
    return True


def twisted_form_resolve(spec: NewformSpec | str, chi: DirichletCharacter) -> NewformSpec:
    """The registry form whose coefficients agree with lambda(n) chi(n) away from the modulus."""
    spec = get_form(spec)
    if chi.is_principal:
        return spec
    cm = spec.cm_character
    if cm is not None and chi.conductor == cm.modulus and _same_on_units(chi, cm) \
            and _self_twist_holds(spec.label, chi.modulus):
        return spec
    raise UnsupportedTwist(spec.label, chi)


@lru_cache(maxsize=None)
def _self_twist_holds(label: str, modulus: int, X: int = 10_000) -> bool:
    """lambda(n) chi(n) = lambda(n) for (n, modulus) = 1, n <= X, with chi the CM character."""
    spec = get_form(label)
    lam = coefficients(spec, X).lam
    vals = spec.cm_character.values()
    n = np.arange(1, X + 1)
    chi = vals[n % len(vals)]
    unit = np.gcd(n, modulus) == 1
    return bool(np.all(np.abs(lam[1:][unit] * (chi[unit] - 1)) < 1e-12))


def _euler_poly(spec: NewformSpec, p: int) -> tuple[float, float, float]:
    """Coefficients of 1 - lambda(p) X + psi(p) X^2."""
    lam_p = float(coefficients(spec, p).lam[p])
    psi_p = 0.0 if spec.level % p == 0 else float(spec.nebentypus(p).real)
    return 1.0, -lam_p, psi_p


@dataclass(frozen=True)
class TwistTerm:
    m: int
    chi: DirichletCharacter
    coeff: complex
    form: NewformSpec


@dataclass(frozen=True)
class TwistDecomposition:
    form: NewformSpec
    alpha: Fraction
    terms: tuple[TwistTerm, ...]

    @property
    def q_star(self) -> int:
        return q_star(self.alpha.denominator)

    def check_divisibility(self) -> bool:
        q = self.alpha.denominator
        N = self.form.level
        for tm in self.terms:
            bound = math.gcd(math.lcm(N * q, q * q) // tm.form.level, self.q_star)
            if bound % tm.m:
                return False
        return True


def q_star(q: int) -> int:
    out = 1
    for p, e in factorize(q):
        out *= p ** (1 + e)
    return out


def _prime_power_twist(C: complex, r: int, chi_prev: DirichletCharacter, g: NewformSpec,
                       a: int, p: int, e: int) -> list[tuple[int, DirichletCharacter, NewformSpec, complex]]:
    """Additive twist of C r^(-s) L(s, g) by a/p^e, as (m, chi, form, coeff) monomials."""
    out = []
    lam = coefficients(g, p ** e).lam
    for k in range(e):
        lam_pk = float(lam[p**k])
        if lam_pk == 0.0:
            continue
        Q = p ** (e - k)
        for chi in char_group(Q):
            if gauss_sum_vanishes(chi.conj()):
                continue
            chi_val = chi(a * r)
            g_chi = twisted_form_resolve(g, chi)
            base = C * lam_pk * gauss_sum(chi.conj()) * chi_val / euler_phi(Q)
            key_chi = combine_characters((chi_prev, chi))
            for j, cj in enumerate(_euler_poly(g_chi, p)):
                if cj != 0.0:
                    out.append((r * p ** (k + j), key_chi, g_chi, base * cj))
    # correction: (r^-s - E_{g,p}(p^-s) sum_{k<e} lambda(p^k) (r p^k)^-s) L(s, g)
    keep_chi = combine_characters((chi_prev, principal_character(p ** e)))
    out.append((r, keep_chi, g, complex(C)))
    E = _euler_poly(g, p)
    for k in range(e):
        lam_pk = float(lam[p**k])
        for j, cj in enumerate(E):
            if cj != 0.0 and lam_pk != 0.0:
                out.append((r * p ** (k + j), keep_chi, g, -C * cj * lam_pk))
    return out


def additive_twist_decompose(spec: NewformSpec | str, alpha: Fraction | tuple[int, int],
                             max_modulus: int = MAX_TWIST_MODULUS) -> TwistDecomposition:
    """Coefficients C(m, chi) with sum lambda(n) e(alpha n) n^-s = sum C m^-s L(s, f^chi)."""
    spec = get_form(spec)
    alpha = Fraction(*alpha) if isinstance(alpha, tuple) else Fraction(alpha)
    alpha -= math.floor(alpha)
    a, q = alpha.numerator, alpha.denominator
    if q > max_modulus:
        raise ValueError(f"q = {q} above the desk-scale cap {max_modulus}")
    terms: dict[tuple, complex] = {(1, principal_character(1), spec.label): 1 + 0j}
    forms = {spec.label: spec}
    for p, e in factorize(q):
        pe = p**e
        a_p = (a * mod_inverse(q // pe, pe)) % pe
        new: dict[tuple, complex] = {}
        for (m, chi_prev, label), C in terms.items():
            for m2, chi2, g2, c2 in _prime_power_twist(C, m, chi_prev, forms[label], a_p, p, e):
                forms[g2.label] = g2
                key = (m2, chi2, g2.label)
                new[key] = new.get(key, 0j) + c2
        terms = new
    out = tuple(TwistTerm(m, chi, C, forms[label])
                for (m, chi, label), C in sorted(terms.items(), key=lambda kv: (kv[0][0], kv[0][2], repr(kv[0][1])))
                if abs(C) > 1e-14)
    dec = TwistDecomposition(spec, alpha, out)
    if not dec.check_divisibility():
        raise AssertionError("divisibility bound violated in twist decomposition")
    return dec


@dataclass(frozen=True)
class TwistResidual:
    residual: float
    tail_bound: float
    lhs: complex
    rhs: complex


def verify_twist_identity(decomp: TwistDecomposition, s: complex = 2.0, X: int = 10**4) -> TwistResidual:
    """Compare both sides truncated at n <= X (the identity holds coefficient by coefficient)."""
    s = complex(s)
    f = decomp.form
    n = np.arange(1, X + 1, dtype=float)
    ns = np.exp(-s * np.log(n))
    lam_f = coefficients(f, X).lam[1:X + 1]
    al = decomp.alpha
    phase = np.exp(2j * np.pi * ((np.arange(1, X + 1) * al.numerator) % al.denominator) / al.denominator)
    lhs = complex(np.sum(lam_f * phase * ns))
    rhs = 0j
    for tm in decomp.terms:
        Y = X // tm.m
        if Y < 1:
            continue
        lam_g = coefficients(tm.form, Y).lam[1:Y + 1]
        rhs += tm.coeff * complex(np.exp(-s * math.log(tm.m))) * complex(np.sum(lam_g * ns[:Y]))
    return TwistResidual(abs(lhs - rhs), divisor_tail_bound(X, s.real), lhs, rhs)


# ---------------------------------------------------------------- test functions

def _smoothstep(u: np.ndarray, order: int) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    acc = np.zeros_like(u)
    for j in range(order + 1):
        acc += math.comb(order + j, j) * (1 - u) ** j
    return u ** (order + 1) * acc


def _psi(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _cinf_step(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    a, b = _psi(u), _psi(1.0 - u)
    return a / (a + b)


def _cinf_step_d1(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, float)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    ui = u[inside]
    a, b = np.exp(-1 / ui), np.exp(-1 / (1 - ui))
    out[inside] = a * b * (1 / ui**2 + 1 / (1 - ui) ** 2) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class TestFunction:
    """Plateau bump on [A, B]: rises over [A, A+ramp], falls over [B-ramp, B].

    kind "smoothstep" uses the polynomial step of class C^order (order 2 is the
    quintic step); kind "cinf" uses the C-infinity step psi(u)/(psi(u)+psi(1-u)).
    """

    __test__ = False  # not a pytest class

    A: float
    B: float
    ramp: float
    kind: str = "cinf"
    order: int = 2

    def __post_init__(self):
        if not 0 < self.A < self.B:
            raise ValueError("need 0 < A < B")
        if not 0 < self.ramp <= (self.B - self.A) / 2:
            raise ValueError("ramp must lie in (0, (B-A)/2]")
        if self.kind not in ("cinf", "smoothstep"):
            raise ValueError(f"unknown bump kind {self.kind!r}")

    @property
    def support(self) -> tuple[float, float]:
        return self.A, self.B

    @property
    def knots(self) -> tuple[float, float, float, float]:
        return self.A, self.A + self.ramp, self.B - self.ramp, self.B

    def _step(self, u):
        return _cinf_step(u) if self.kind == "cinf" else _smoothstep(u, self.order)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = self._step((x - self.A) / self.ramp) * self._step((self.B - x) / self.ramp)
        return val if val.ndim else float(val)

    def derivative(self, x, order: int = 1):
        """First derivative exactly; second by a central difference of the first."""
        x = np.asarray(x, dtype=float)
        if order == 1:
            if self.kind == "cinf":
                d = _cinf_step_d1
            else:
                poly = np.polynomial.Polynomial(
                    [math.comb(self.order + j, j) for j in range(self.order + 1)])
                def d(u):
                    u = np.clip(u, 0, 1)
                    base = np.polynomial.Polynomial([0, 1]) ** (self.order + 1) * poly(np.polynomial.Polynomial([1, -1]))
                    return np.where((u > 0) & (u < 1), base.deriv()(u), 0.0)
            ul, ur = (x - self.A) / self.ramp, (self.B - x) / self.ramp
            return (d(ul) * self._step(ur) - self._step(ul) * d(ur)) / self.ramp
        if order == 2:
            h = self.ramp * 1e-4
            return (self.derivative(x + h) - self.derivative(x - h)) / (2 * h)
        raise ValueError("derivative order must be 1 or 2")

    def __add__(self, other: "TestFunction") -> "SumFunction":
        return SumFunction((self, other))


@dataclass(frozen=True)
class SumFunction:
    parts: tuple[TestFunction, ...]

    def __call__(self, x):
        return sum(p(x) for p in self.parts)

    @property
    def support(self) -> tuple[float, float]:
        return min(p.A for p in self.parts), max(p.B for p in self.parts)

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(sorted({k for p in self.parts for k in p.knots}))


def voronoi_lhs(table, a: int, q: int, F) -> complex:
    """sum_n lambda(n) e(an/q) F(n)."""
    A, B = F.support
    lo, hi = max(1, math.ceil(A)), math.floor(B)
    if hi < lo:
        return 0j
    if hi > table.limit:
        raise ValueError("test function support beyond the coefficient table")
    n = np.arange(lo, hi + 1)
    phase = np.exp(2j * np.pi * ((a * n) % q) / q)
    return complex(np.sum(table.lam[lo:hi + 1] * phase * F(n.astype(float))))


# ---------------------------------------------------------------- RHS

# eta_g(D) for the built-ins, calibrated once by calibrate_eta on a separate
# bump with q = 1 and rounded to the nearest fourth root of unity.
ETA_TABLE: dict[tuple[str, int], complex] = {
    ("1.12.a", 1): 1 + 0j,
    ("4.6.a", 1): 1 + 0j,
    ("4.6.a", 4): -1 + 0j,
    ("9.4.a", 1): 1 + 0j,
    ("9.4.a", 9): 1 + 0j,
    ("11.2.a", 1): 1 + 0j,
    ("11.2.a", 11): -1 + 0j,
}

CALIBRATION_BUMP = TestFunction(700.0, 2300.0, 250.0, "cinf")


@dataclass(frozen=True)
class VoronoiSpec:
    tol: float = 1e-9
    max_terms: int = 200_000
    chunk: int = 128
    nodes: int = 24
    points_per_cycle: float = 10.0
    backend: str = "upward"   # or "scipy" (jv), "native" (special.bessel_j)
    threads: int = 1


@dataclass(frozen=True)
class HankelSeries:
    """One (term, frequency) series: coefficient * sum_l lambda(l) e(-b l / q1) I(l)."""
    prefactor: complex
    form: NewformSpec
    shift: int       # inverse of a1 r mod q1
    q1: int
    r: int


@dataclass(frozen=True)
class VoronoiResult:
    value: complex
    truncation: int
    tail_estimate: float
    series: int


def _series_for(spec: NewformSpec, a: int, q: int,
                eta: dict | None = None) -> tuple[VoronoiSplit, list[HankelSeries]]:
    eta = ETA_TABLE if eta is None else eta
    sp = split_fraction(a, q, spec.level)
    dec = additive_twist_decompose(spec, Fraction(sp.a2, sp.q2))
    k = spec.weight
    out = []
    for tm in dec.terms:
        D = tm.form.level
        D1 = math.gcd(D, sp.q1)
        D2 = D // D1
        r = tm.m * D2
        if math.gcd(r, sp.q1) != 1:
            raise UnsupportedTwist(tm.form.label, f"non-coprime multiplier r={r} for q1={sp.q1}")
        key = (tm.form.label, D2)
        if key not in eta:
            raise UnsupportedTwist(tm.form.label, f"no eta constant for D2={D2}")
        shift = mod_inverse(sp.a1 * r, sp.q1) if sp.q1 > 1 else 0
        pref = tm.coeff * eta[key] * 2 * math.pi * (1j ** k) / (tm.m * math.sqrt(D2))
        out.append(HankelSeries(pref, tm.form, shift, sp.q1, r))
    return sp, out


def _nodes(knots: Sequence[float], freq: float, spec: VoronoiSpec) -> tuple[np.ndarray, np.ndarray]:
    """GL nodes in v = sqrt(x) with panels aligned to the bump knots."""
    gx, gw = gauss_legendre(spec.nodes)
    vk = np.sqrt(np.asarray(knots, float))
    vs, ws = [], []
    for lo, hi in zip(vk[:-1], vk[1:]):
        if hi <= lo:
            continue
        cycles = freq * (hi - lo) / (2 * math.pi)
        panels = int(math.ceil(cycles * spec.points_per_cycle / spec.nodes)) + 2
        e = np.linspace(lo, hi, panels + 1)
        half = np.diff(e) / 2
        mid = (e[:-1] + e[1:]) / 2
        vs.append((mid[:, None] + half[:, None] * gx).ravel())
        ws.append((half[:, None] * gw).ravel())
    return np.concatenate(vs), np.concatenate(ws)


def hankel_integrals(F, ells: np.ndarray, q1: int, r: int, k: int,
                     spec: VoronoiSpec = VoronoiSpec(), with_scale: bool = False):
    """(1/q1) int F(y) J_{k-1}(4 pi sqrt(l y / (q1^2 r))) dy for each l, via y = v^2.

    With with_scale, also return the root-sum-square of the quadrature
    weights over q1; rounding noise in each integral is eps times this.
    """
    beta = 4 * math.pi / (q1 * math.sqrt(r))
    freq = beta * math.sqrt(float(np.max(ells)))
    v, w = _nodes(F.knots, freq, spec)
    base = w * 2 * v * F(v * v)
    keep = base != 0
    v, base = v[keep], base[keep]
    arg = beta * np.sqrt(ells.astype(float))[:, None] * v[None, :]
    if spec.backend == "upward":
        J = bessel_j_upward(k - 1, arg)
    elif spec.backend == "scipy":
        J = jv(k - 1, arg)
    else:
        J = bessel_j(k - 1, arg)
    out = (J @ base) / q1
    if with_scale:
        return out, float(np.sqrt(np.sum(base * base))) / q1
    return out


# measured plateau of chunk masses sits a few times above eps * rms
_NOISE = 32 * np.finfo(float).eps


def _power_tail(hist: list[float], chunk: int) -> float:
    """Absolute mass left after the last chunk, fitting chunk mass ~ L^(-p)."""
    if len(hist) < 2 or hist[-1] == 0.0:
        return hist[-1] if hist else math.inf
    n = len(hist)
    if hist[-2] <= hist[-1]:
        return math.inf
    p = math.log(hist[-2] / hist[-1]) / math.log(n / (n - 1))
    if p <= 1.0:
        return math.inf
    # sum_{m > n} h_n (m/n)^(-p) <= h_n n / (p - 1)
    return hist[-1] * max(1.0, n / (p - 1))


def _series_sum(s: HankelSeries, F, spec: VoronoiSpec, k: int) -> tuple[complex, int, float]:
    """Sum one dual series in chunks of l until the chunks fall below tolerance.

    A chunk counts as settled once its absolute mass is below tol relative
    to the running value, or below the rounding floor of the quadrature;
    three settled chunks in a row end the sum.
    """
    total = 0j
    L = 0
    hist: list[float] = []
    settled = 0
    while True:
        ells = np.arange(L + 1, L + spec.chunk + 1)
        lam = coefficients(s.form, int(ells[-1])).lam[ells]
        live = lam != 0
        integ = np.zeros(len(ells))
        scale = 0.0
        if np.any(live):
            integ[live], scale = hankel_integrals(F, ells[live], s.q1, s.r, k, spec, with_scale=True)
        tw = np.exp(-2j * np.pi * ((s.shift * ells) % s.q1) / s.q1) if s.q1 > 1 else 1.0
        contrib = s.prefactor * lam * tw * integ
        total += complex(np.sum(contrib))
        chunk_abs = float(np.sum(np.abs(contrib)))
        floor = _NOISE * scale * abs(s.prefactor) * float(np.sum(np.abs(lam)))
        hist.append(chunk_abs)
        L = int(ells[-1])
        tail = _power_tail(hist, spec.chunk)
        small = chunk_abs <= max(floor, spec.tol * abs(total))
        settled = settled + 1 if small else 0
        if settled >= 3:
            return total, L, min(tail, chunk_abs)
        if L >= spec.max_terms:
            raise QuadratureBudgetError(
                f"Voronoi series did not settle within {spec.max_terms} terms", total)


def voronoi_rhs(spec: NewformSpec | str, a: int, q: int, F, quad: VoronoiSpec | None = None,
                eta: dict | None = None) -> VoronoiResult:
    """Dual side of the Voronoi formula for lambda(n) e(an/q) against F."""
    spec = get_form(spec)
    quad = quad or VoronoiSpec()
    _, series = _series_for(spec, a % q, q, eta)

    def run(s):
        return _series_sum(s, F, quad, spec.weight)

    if quad.threads > 1:
        with ThreadPoolExecutor(max_workers=quad.threads) as ex:
            parts = list(ex.map(run, series))
    else:
        parts = [run(s) for s in series]
    value = sum((p[0] for p in parts), 0j)
    return VoronoiResult(value, max(p[1] for p in parts), sum(p[2] for p in parts), len(series))


def calibrate_eta(spec: NewformSpec | str, F=CALIBRATION_BUMP, quad: VoronoiSpec | None = None) -> complex:
    """Measure eta_f(N) from q = 1: ratio of the direct sum to the dual side with eta = 1."""
    spec = get_form(spec)
    unit = {(spec.label, spec.level): 1 + 0j, (spec.label, 1): 1 + 0j}
    rhs = voronoi_rhs(spec, 0, 1, F, quad, eta=unit).value
    lhs = voronoi_lhs(coefficients(spec, int(F.support[1]) + 1), 0, 1, F)
    return lhs / rhs


def snap_unit(z: complex, tol: float = 1e-4) -> complex:
    for u in (1, -1, 1j, -1j):
        if abs(z - u) < tol:
            return complex(u)
    raise ArithmeticError(f"calibrated constant {z} is not a fourth root of unity")
