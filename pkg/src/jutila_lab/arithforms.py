"""Exact arithmetic, Dirichlet characters and newform coefficients.

Coefficients of the built-in forms come from their eta-quotient product
expansions.  The series products run modulo a handful of word-sized primes
and are lifted back to exact integers by the Chinese remainder theorem; the
number of primes is chosen from Deligne's bound and every lifted value is
re-checked against a spare prime, so an undersized modulus raises instead
of wrapping.
"""
from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping

import numpy as np
from sympy import factorint, prevprime

Rational = Fraction
Factorization = list  # list of (prime, exponent) pairs, primes increasing

MAX_CHAR_MODULUS = 10**6
MAX_COEFF_LIMIT = 10**8


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization of 1 <= n < 2**63 as sorted (p, e) pairs."""
    n = int(n)
    if n < 1 or n > 2**63 - 1:
        raise ValueError(f"factorize expects 1 <= n <= 2^63-1, got {n}")
    return sorted(factorint(n).items())


def ord_p(n: int, p: int) -> int:
    """Exponent of the prime p in the nonzero integer n."""
    if n == 0:
        raise ValueError("ord_p(0) is infinite")
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def mod_inverse(a: int, q: int) -> int:
    """Inverse of a modulo q in [0, q); raises ValueError if gcd(a, q) > 1."""
    if q == 1:
        return 0
    g = math.gcd(a, q)
    if g != 1:
        raise ValueError(f"NotCoprime: gcd({a}, {q}) = {g}")
    return pow(a, -1, q)


# ---------------------------------------------------------------- characters

def _primitive_root(p: int) -> int:
    fac = [ell for ell, _ in factorize(p - 1)] if p > 2 else []
    g = 1 if p == 2 else 2
    while any(pow(g, (p - 1) // ell, p) == 1 for ell in fac):
        g += 1
    return g


@lru_cache(maxsize=256)
def _component_logs(p: int, e: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Generator orders and discrete-log table for (Z/p^e)^*.

    Returns (orders, logs) where logs[i, n] is the exponent of generator i
    in n mod p^e (or -1 when p | n).
    """
    pe = p**e
    if p == 2:
        if e == 1:
            orders: tuple[int, ...] = ()
            gens: list[int] = []
        elif e == 2:
            orders, gens = (2,), [pe - 1]
        else:
            orders, gens = (2, 2 ** (e - 2)), [pe - 1, 5]
    else:
        g = _primitive_root(p)
        if e > 1 and pow(g, p - 1, p * p) == 1:
            g += p
        orders, gens = (p ** (e - 1) * (p - 1),), [g]
    logs = np.full((len(orders), pe), -1, dtype=np.int64)
    if not orders:
        logs = np.full((0, pe), -1, dtype=np.int64)
        return orders, logs
    # enumerate the group as products of generator powers
    if len(orders) == 1:
        x = 1
        for k in range(orders[0]):
            logs[0, x] = k
            x = x * gens[0] % pe
    else:
        x5 = 1
        for b in range(orders[1]):
            for a, sgn in enumerate((1, pe - 1)):
                n = x5 * sgn % pe
                logs[0, n] = a
                logs[1, n] = b
            x5 = x5 * 5 % pe
    return orders, logs


def _component_conductor(p: int, e: int, orders: tuple[int, ...], idx: tuple[int, ...]) -> int:
    if all(i == 0 for i in idx):
        return 1
    if p != 2:
        o = orders[0] // math.gcd(idx[0], orders[0])
        return p ** (1 + ord_p(o, p)) if o % p == 0 else p
    if e == 2:
        return 4
    j1, j2 = idx
    if j2 == 0:
        return 4
    o2 = orders[1] // math.gcd(j2, orders[1])
    return 2 ** (2 + ord_p(o2, 2))


@dataclass(frozen=True)
class CharComponent:
    p: int
    e: int
    orders: tuple[int, ...]
    indices: tuple[int, ...]

    @property
    def modulus(self) -> int:
        return self.p**self.e


@dataclass(frozen=True)
class DirichletCharacter:
    """Character mod q, stored by exact angles on prime-power generators.

    chi(n) = e(angle(n)) for gcd(n, q) = 1 and 0 otherwise, where the angle is
    an exact Fraction; complex values are rendered on demand.
    """

    modulus: int
    components: tuple[CharComponent, ...]

    @property
    def is_principal(self) -> bool:
        return all(i == 0 for c in self.components for i in c.indices)

    @property
    def conductor(self) -> int:
        out = 1
        for c in self.components:
            out *= _component_conductor(c.p, c.e, c.orders, c.indices)
        return out

    @property
    def order(self) -> int:
        o = 1
        for c in self.components:
            for i, m in zip(c.indices, c.orders):
                o = math.lcm(o, m // math.gcd(i, m))
        return o

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def angle(self, n: int) -> Fraction | None:
        n = int(n)
        if math.gcd(n, self.modulus) != 1:
            return None
        ang = Fraction(0)
        for c in self.components:
            _, logs = _component_logs(c.p, c.e)
            r = n % c.modulus
            for g, (i, m) in enumerate(zip(c.indices, c.orders)):
                ang += Fraction(i * int(logs[g, r]), m)
        return ang - math.floor(ang)

    def __call__(self, n: int) -> complex:
        a = self.angle(n)
        if a is None:
            return 0j
        return _root_of_unity(a)

    def angle_table(self) -> tuple[np.ndarray, int]:
        """(num, den) with chi(n) = e(num[n]/den) for n mod q; num = -1 off units."""
        q = self.modulus
        den = 1
        for c in self.components:
            for m in c.orders:
                den = math.lcm(den, m)
        num = np.zeros(q, dtype=np.int64)
        unit = np.ones(q, dtype=bool)
        n = np.arange(q)
        for c in self.components:
            _, logs = _component_logs(c.p, c.e)
            r = n % c.modulus
            for g, (i, m) in enumerate(zip(c.indices, c.orders)):
                lg = logs[g, r]
                unit &= lg >= 0
                num = (num + i * (den // m) * np.where(lg >= 0, lg, 0)) % den
            if not c.orders:
                unit &= (r % c.p) != 0
        num[~unit] = -1
        return num, den

    def values(self) -> np.ndarray:
        """Complex values chi(0..q-1)."""
        num, den = self.angle_table()
        out = np.exp(2j * np.pi * np.where(num >= 0, num, 0) / den)
        out[num < 0] = 0
        return out

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.modulus != other.modulus:
            raise ValueError("characters must share a modulus")
        comps = tuple(
            CharComponent(a.p, a.e, a.orders,
                          tuple((x + y) % m for x, y, m in zip(a.indices, b.indices, a.orders)))
            for a, b in zip(self.components, other.components))
        return DirichletCharacter(self.modulus, comps)

    def conj(self) -> "DirichletCharacter":
        comps = tuple(
            CharComponent(a.p, a.e, a.orders, tuple((-x) % m for x, m in zip(a.indices, a.orders)))
            for a in self.components)
        return DirichletCharacter(self.modulus, comps)

    def restrict(self, p: int) -> "DirichletCharacter":
        """The p-primary component, as a character mod p^e."""
        for c in self.components:
            if c.p == p:
                return DirichletCharacter(c.modulus, (c,))
        return principal_character(1)

    def __repr__(self) -> str:
        idx = ",".join(f"{c.p}^{c.e}:{list(c.indices)}" for c in self.components)
        return f"DirichletCharacter(q={self.modulus}, cond={self.conductor}, [{idx}])"


def _root_of_unity(a: Fraction) -> complex:
    # exact values at quarter turns keep character identities clean
    a = a - math.floor(a)
    quarter = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if a in quarter:
        return quarter[a]
    return complex(np.exp(2j * np.pi * float(a)))


def _components_for(q: int) -> list[tuple[int, int, tuple[int, ...]]]:
    return [(p, e, _component_logs(p, e)[0]) for p, e in factorize(q)]


def principal_character(q: int) -> DirichletCharacter:
    comps = tuple(CharComponent(p, e, orders, tuple(0 for _ in orders))
                  for p, e, orders in _components_for(q))
    return DirichletCharacter(q, comps)


def char_group(q: int) -> list[DirichletCharacter]:
    """All phi(q) characters mod q, principal first."""
    if q < 1:
        raise ValueError("modulus must be positive")
    if q > MAX_CHAR_MODULUS:
        raise OverflowError(f"modulus overflow: {q} > {MAX_CHAR_MODULUS}")
    parts = _components_for(q)
    ranges = [range(m) for _, _, orders in parts for m in orders]
    out = []
    for flat in product(*ranges):
        comps, pos = [], 0
        for p, e, orders in parts:
            comps.append(CharComponent(p, e, orders, tuple(flat[pos:pos + len(orders)])))
            pos += len(orders)
        out.append(DirichletCharacter(q, tuple(comps)))
    return out


def combine_characters(chars: Iterable[DirichletCharacter]) -> DirichletCharacter:
    """Product character modulo the product of pairwise coprime moduli."""
    comps: list[CharComponent] = []
    q = 1
    for chi in chars:
        if math.gcd(q, chi.modulus) != 1:
            raise ValueError("moduli must be pairwise coprime")
        q *= chi.modulus
        comps.extend(chi.components)
    return DirichletCharacter(q, tuple(sorted(comps, key=lambda c: c.p)))


def gauss_sum(chi: DirichletCharacter) -> complex:
    """tau(chi) = sum_{n mod q} chi(n) e(n/q), by direct summation."""
    q = chi.modulus
    if q == 1:
        return 1 + 0j
    n = np.arange(q)
    return complex(np.sum(chi.values() * np.exp(2j * np.pi * n / q)))


def gauss_sum_vanishes(chi: DirichletCharacter) -> bool:
    """Exact test for tau(chi) = 0 when chi has prime-power modulus p^e.

    tau vanishes unless chi is primitive, except for the principal character
    mod p (where it equals -1) and modulus 1.
    """
    q = chi.modulus
    if q == 1 or chi.is_primitive:
        return False
    if chi.is_principal and len(factorize(q)) == 1 and factorize(q)[0][1] == 1:
        return False
    if len(factorize(q)) == 1:
        return True
    raise ValueError("exact vanishing test implemented for prime-power moduli")


# ---------------------------------------------------------------- newforms

@dataclass(frozen=True)
class NewformSpec:
    label: str
    level: int
    weight: int
    nebentypus: DirichletCharacter
    eta_exponents: tuple[tuple[int, int], ...]
    cm_discriminant: int | None = None
    description: str = ""

    @property
    def cm_character(self) -> DirichletCharacter | None:
        if self.cm_discriminant is None:
            return None
        return quadratic_character(self.cm_discriminant)

    @property
    def self_dual(self) -> bool:
        return self.nebentypus.is_principal


def quadratic_character(D: int) -> DirichletCharacter:
    """Primitive quadratic character of conductor |D| with chi(-1) = sign(D)."""
    q = abs(D)
    want = 1 if D > 0 else -1
    for chi in char_group(q):
        if chi.order == 2 and chi.conductor == q and chi(q - 1).real == want:
            return chi
    raise ValueError(f"no primitive quadratic character for D={D}")


def _make(label, N, k, eta, cm=None, desc=""):
    return NewformSpec(label, N, k, principal_character(N), tuple(sorted(eta.items())), cm, desc)


FORMS: dict[str, NewformSpec] = {
    f.label: f for f in (
        _make("1.12.a", 1, 12, {1: 24}, None, "eta(z)^24"),
        _make("4.6.a", 4, 6, {2: 12}, None, "eta(2z)^12"),
        _make("9.4.a", 9, 4, {3: 8}, -3, "eta(3z)^8"),
        _make("11.2.a", 11, 2, {1: 2, 11: 2}, None, "eta(z)^2 eta(11z)^2"),
    )
}


def get_form(label: str | NewformSpec) -> NewformSpec:
    if isinstance(label, NewformSpec):
        return label
    try:
        return FORMS[label]
    except KeyError:
        raise KeyError(f"unknown form label {label!r}; known: {sorted(FORMS)}") from None


# ---------------------------------------------------------------- coefficient tables

@dataclass(frozen=True)
class CoeffTable:
    """Raw integers a(n) and normalized lambda(n) = a(n)/n^((k-1)/2), n <= limit.

    Index 0 is padding (a(0) = 0) so that raw[n] is a(n).
    """

    form: NewformSpec | None
    limit: int
    weight: int
    raw: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)

    def a(self, n: int) -> int:
        return int(self.raw[n])

    def truncate(self, X: int) -> "CoeffTable":
        if X > self.limit:
            raise ValueError(f"table limit {self.limit} < {X}")
        return CoeffTable(self.form, X, self.weight, self.raw[:X + 1], self.lam[:X + 1])

    def to_csv(self, out: io.TextIOBase | None = None, limit: int | None = None) -> str:
        buf = out if out is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "a_n", "lambda_n"])
        for n in range(1, (limit or self.limit) + 1):
            w.writerow([n, int(self.raw[n]), repr(float(self.lam[n]))])
        return buf.getvalue() if out is None else ""


def _normalize(raw: np.ndarray, k: int) -> np.ndarray:
    n = np.arange(len(raw), dtype=float)
    lam = np.zeros(len(raw))
    lam[1:] = raw[1:].astype(float) / n[1:] ** ((k - 1) / 2)
    return lam


def divisor_counts(X: int) -> np.ndarray:
    d = np.zeros(X + 1, dtype=np.int64)
    for m in range(1, X + 1):
        d[m::m] += 1
    return d


@lru_cache(maxsize=None)
def _moduli(count: int) -> tuple[int, ...]:
    out, p = [], 2**31
    while len(out) < count:
        p = prevprime(p)
        out.append(p)
    return tuple(out)


def _pentagonal(limit: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse prod_n (1 - q^(d n)) up to q^limit."""
    ex, co = [0], [1]
    j = 1
    while True:
        added = False
        for g in (j * (3 * j - 1) // 2, j * (3 * j + 1) // 2):
            if d * g <= limit:
                ex.append(d * g)
                co.append(-1 if j % 2 else 1)
                added = True
        if not added:
            break
        j += 1
    return np.array(ex), np.array(co, dtype=np.int64)


def _jacobi_cube(limit: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse prod_n (1 - q^(d n))^3 = sum (-1)^m (2m+1) q^(d m(m+1)/2)."""
    ex, co = [], []
    m = 0
    while d * m * (m + 1) // 2 <= limit:
        ex.append(d * m * (m + 1) // 2)
        co.append((-1) ** m * (2 * m + 1))
        m += 1
    return np.array(ex), np.array(co, dtype=np.int64)


def _mul_sparse(arr: np.ndarray, ex: np.ndarray, co: np.ndarray, mods: np.ndarray) -> np.ndarray:
    L = arr.shape[1]
    out = np.zeros_like(arr)
    for s, c in zip(ex, co):
        out[:, s:] += c * arr[:, :L - s]
    return out % mods[:, None]


def _div_sparse(arr: np.ndarray, ex: np.ndarray, co: np.ndarray, mods: np.ndarray) -> np.ndarray:
    # out * S = arr with S[0] = 1, solved term by term
    L = arr.shape[1]
    out = arr.copy()
    ex1, co1 = ex[1:], co[1:]
    for n in range(1, L):
        m = ex1 <= n
        if m.any():
            out[:, n] = (out[:, n] - out[:, n - ex1[m]] @ co1[m]) % mods
    return out


def _garner(res: np.ndarray, mods: tuple[int, ...]) -> np.ndarray:
    """Lift residues (rows per modulus) to centered exact integers."""
    k = len(mods)
    v = [res[0].astype(np.int64)]
    for i in range(1, k):
        pi = mods[i]
        x = res[i].astype(np.int64) % pi
        for j in range(i):
            inv = pow(mods[j], -1, pi)
            x = ((x - v[j]) % pi) * inv % pi
        v.append(x)
    out = np.zeros(res.shape[1], dtype=object)
    scale = 1
    for i in range(k):
        out = out + v[i].astype(object) * scale
        scale *= mods[i]
    half = scale // 2
    big = out > half
    out[big] = out[big] - scale
    return out


def eta_coeffs(spec: NewformSpec, X: int) -> CoeffTable:
    """Exact q-expansion coefficients a(1..X) of the form's eta quotient."""
    if X < 1:
        raise ValueError("X must be positive")
    if X > MAX_COEFF_LIMIT:
        raise ValueError(f"X too large: {X} > {MAX_COEFF_LIMIT}")
    eta = dict(spec.eta_exponents)
    k = spec.weight
    if sum(eta.values()) != 2 * k:
        raise ValueError(f"eta exponents sum to {sum(eta.values())}, weight {k} needs {2 * k}")
    shift = Fraction(sum(d * e for d, e in eta.items()), 24)
    if shift != 1:
        raise ValueError(f"eta quotient starts at q^{shift}; expected a normalized cusp form")

    dcount = divisor_counts(X)
    n = np.arange(1, X + 1, dtype=float)
    bound = dcount[1:] * n ** ((k - 1) / 2)
    need = math.log2(2 * float(bound.max()) + 1) + 2
    count = max(1, math.ceil(need / 30.9))
    mods_t = _moduli(count + 1)  # last one is the independent check
    mods = np.array(mods_t, dtype=np.int64)

    L = X  # coefficients of q^0..q^(X-1) of the product, shifted by one
    arr = np.zeros((len(mods), L), dtype=np.int64)
    arr[:, 0] = 1
    for d, e in sorted(eta.items()):
        if e > 0:
            cube = _jacobi_cube(L - 1, d)
            pent = _pentagonal(L - 1, d)
            for _ in range(e // 3):
                arr = _mul_sparse(arr, *cube, mods)
            for _ in range(e % 3):
                arr = _mul_sparse(arr, *pent, mods)
        elif e < 0:
            pent = _pentagonal(L - 1, d)
            for _ in range(-e):
                arr = _div_sparse(arr, *pent, mods)

    vals = _garner(arr[:-1], mods_t[:-1])
    check = mods_t[-1]
    if not np.array_equal((vals % check).astype(np.int64), arr[-1] % check):
        raise OverflowError("multi-modular reconstruction failed the spare-prime check")
    if np.any(np.abs(vals.astype(float)) > bound * (1 + 1e-9) + 0.5):
        raise OverflowError("coefficient exceeds Deligne bound; modulus too small")

    raw = np.zeros(X + 1, dtype=object)
    raw[1:] = vals
    return CoeffTable(spec, X, k, raw, _normalize(raw, k))


def smallest_prime_factor(X: int) -> np.ndarray:
    spf = np.zeros(X + 1, dtype=np.int64)
    for p in range(2, X + 1):
        if spf[p] == 0:
            spf[p::p] = np.where(spf[p::p] == 0, p, spf[p::p])
    return spf


def primes_upto(X: int) -> np.ndarray:
    spf = smallest_prime_factor(X)
    idx = np.arange(X + 1)
    return idx[(spf == idx) & (idx >= 2)]


def hecke_extend(prime_coeffs: Mapping[int, int], xi: DirichletCharacter, X: int,
                 weight: int, form: NewformSpec | None = None) -> CoeffTable:
    """Extend a(p) for primes p <= X to all n <= X by Hecke multiplicativity."""
    spf = smallest_prime_factor(X)
    xi_vals = {}
    raw = np.zeros(X + 1, dtype=object)
    if X >= 1:
        raw[1] = 1
    pk1 = {}
    for n in range(2, X + 1):
        p = int(spf[n])
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        if m > 1:
            raw[n] = raw[p**e] * raw[m]
            continue
        if e == 1:
            if p not in prime_coeffs:
                raise KeyError(f"missing prime coefficient a({p})")
            raw[n] = int(prime_coeffs[p])
            continue
        if p not in xi_vals:
            v = xi(p)
            if abs(v.imag) > 1e-12 or abs(v.real - round(v.real)) > 1e-12:
                raise ValueError("hecke_extend supports real-valued nebentypus only")
            xi_vals[p] = int(round(v.real))
            pk1[p] = p ** (weight - 1)
        raw[n] = raw[p] * raw[n // p] - xi_vals[p] * pk1[p] * raw[n // (p * p)]
    return CoeffTable(form, X, weight, raw, _normalize(raw, weight))


_CACHE: dict[str, CoeffTable] = {}
_CACHE_LOCK = threading.Lock()


def coefficients(form: str | NewformSpec, X: int) -> CoeffTable:
    """Cached eta_coeffs; a longer cached table is truncated on demand."""
    spec = get_form(form)
    with _CACHE_LOCK:
        tab = _CACHE.get(spec.label)
        if tab is not None and tab.limit >= X:
            return tab.truncate(X) if tab.limit > X else tab
    size = max(X, 1024)
    size = 1 << (size - 1).bit_length()
    tab = eta_coeffs(spec, size)
    with _CACHE_LOCK:
        old = _CACHE.get(spec.label)
        if old is None or old.limit < tab.limit:
            _CACHE[spec.label] = tab
    return tab.truncate(X)


def rationals(pairs: Iterable[tuple[int, int]]) -> list[Fraction]:
    return [Fraction(a, b) for a, b in pairs]
