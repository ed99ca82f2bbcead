"""L-values on and off the critical line.

Two independent routes: the completed function Lambda(s) through an
incomplete-gamma split of the Mellin integral (exact up to truncation), and
the smoothed two-sided sum with the dyadic cutoff g, whose error only decays
like N^(1/2) C^(-1/4).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .arithforms import CoeffTable, NewformSpec, coefficients, get_form
from .special import (TWO_PI, CutoffG, gamma_c, gamma_ratio_unit,
                      upper_incomplete_gamma)

EULER_GAMMA = 0.5772156649015329


class TruncationError(ValueError):
    """Coefficient table too short for the requested evaluation."""


def analytic_conductor(spec: NewformSpec, t: float) -> float:
    N, k = spec.level, spec.weight
    return N / math.pi**2 * abs(complex((k + 1) / 2, t)) * abs(complex((k + 3) / 2, t))


# ---------------------------------------------------------------- Dirichlet series

@dataclass(frozen=True)
class DirichletSum:
    value: complex
    tail_bound: float
    terms: int


def divisor_tail_bound(X: int, sigma: float) -> float:
    """Upper bound for sum_{n > X} d(n) n^(-sigma), sigma > 1.

    Partial summation against sum_{n<=x} d(n) = x log x + (2 gamma - 1) x + E(x)
    with |E(x)| <= 0.961 sqrt(x).
    """
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    X = float(X)
    main = X ** (1 - sigma) * ((math.log(X) + 2 * EULER_GAMMA) / (sigma - 1) + 1 / (sigma - 1) ** 2)
    err = 0.961 * X ** (0.5 - sigma) * (2.0 + sigma / (sigma - 0.5))
    # the boundary term of the partial summation at x = X
    edge = (X * math.log(X) + (2 * EULER_GAMMA - 1) * X + 0.961 * math.sqrt(X)) * X ** (-sigma)
    return main + err + edge - (math.log(X) + 2 * EULER_GAMMA - 1 - 0.961 / math.sqrt(X)) * X ** (1 - sigma)


def dirichlet_series(table: CoeffTable, s: complex, X: int | None = None) -> DirichletSum:
    """sum_{n <= X} lambda(n) n^(-s) with a Deligne-based tail bound (Re s >= 1.5)."""
    s = complex(s)
    if s.real < 1.5:
        raise ValueError("Re s must be at least 1.5 for an absolutely convergent tail bound")
    X = table.limit if X is None else int(X)
    if X > table.limit:
        raise TruncationError(f"table limit {table.limit} < X = {X}")
    n = np.arange(1, X + 1, dtype=float)
    val = complex(np.sum(table.lam[1:X + 1] * np.exp(-s * np.log(n))))
    return DirichletSum(val, divisor_tail_bound(X, s.real), X)


# ---------------------------------------------------------------- completed Lambda

def _split_terms(spec: NewformSpec, s: complex, split: float) -> tuple[complex, complex, int]:
    """(A, B) with Lambda(s) = A + eps * B for the Mellin split at y = split/sqrt(N)."""
    N, k = spec.level, spec.weight
    s = complex(s)
    w = s + (k - 1) / 2
    w_dual = 1 - s + (k - 1) / 2
    cmin = min(split, 1.0 / split)
    xmax = 50.0 + 2.0 * max(abs(w), abs(w_dual)) + math.pi * abs(s.imag) / 2
    nmax = max(2, int(math.ceil(xmax * math.sqrt(N) / (TWO_PI * cmin))))
    tab = coefficients(spec, nmax)
    lam = tab.lam[1:nmax + 1]
    n = np.arange(1, nmax + 1, dtype=float)
    keep = lam != 0
    lam, n = lam[keep], n[keep]
    ln = np.log(n)
    g1 = upper_incomplete_gamma(w, TWO_PI * n * split / math.sqrt(N))
    g2 = upper_incomplete_gamma(w_dual, TWO_PI * n / (split * math.sqrt(N)))
    A = 2.0 * complex(np.sum(lam * np.exp(-s * ln) * g1)) * complex(np.exp(-w * math.log(TWO_PI)))
    B = (2.0 * complex(np.exp((0.5 - s) * math.log(N)))
         * complex(np.sum(lam * np.exp(-(1 - s) * ln) * g2))
         * complex(np.exp(-w_dual * math.log(TWO_PI))))
    return A, B, nmax


@dataclass(frozen=True)
class RootNumberReport:
    value: complex
    raw: dict
    spread: float
    snapped: bool


ROOT_NUMBER_S = (1.5, 2.0, 2.5)
_SPLITS = (1.0, 1.25)


def determine_root_number(spec: NewformSpec | str, s_values: Sequence[float] = ROOT_NUMBER_S,
                          snap_tol: float = 1e-6) -> RootNumberReport:
    """Solve the functional equation for eps from two different Mellin splits.

    Lambda(s) computed with split c is A_c + eps B_c; the true eps makes the
    result independent of c, so eps = (A_c - A_c') / (B_c' - B_c).
    """
    spec = get_form(spec)
    raw = {}
    for s in s_values:
        A1, B1, _ = _split_terms(spec, s, _SPLITS[0])
        A2, B2, _ = _split_terms(spec, s, _SPLITS[1])
        den = B2 - B1
        if abs(den) < 1e-12 * max(abs(A1), abs(A2), 1e-300):
            raise ArithmeticError(f"degenerate split difference at s={s}; try other s")
        raw[s] = (A1 - A2) / den
    vals = list(raw.values())
    spread = max(abs(a - b) for a in vals for b in vals)
    mean = sum(vals) / len(vals)
    for target in (1.0, -1.0):
        if all(abs(v - target) <= snap_tol for v in vals):
            return RootNumberReport(complex(target), raw, spread, True)
    return RootNumberReport(mean, raw, spread, False)


@lru_cache(maxsize=None)
def root_number(label: str) -> complex:
    rep = determine_root_number(label)
    if not rep.snapped:
        raise ArithmeticError(f"root number for {label} did not snap to +-1: {rep.value}")
    return rep.value


def completed_lambda(spec: NewformSpec | str, s: complex, split: float = 1.0,
                     eps: complex | None = None) -> complex:
    """Lambda(s) = Gamma_C(s + (k-1)/2) L(s) for a self-dual built-in."""
    spec = get_form(spec)
    if not spec.self_dual:
        raise ValueError("completed_lambda supports self-dual forms only")
    eps = root_number(spec.label) if eps is None else eps
    A, B, _ = _split_terms(spec, s, split)
    return A + eps * B


def l_value_completed(spec: NewformSpec | str, s: complex, split: float = 1.0) -> complex:
    spec = get_form(spec)
    return completed_lambda(spec, s, split) / gamma_c(complex(s) + (spec.weight - 1) / 2)


# ---------------------------------------------------------------- approximate functional equation

@dataclass(frozen=True)
class LValueRecord:
    t: float
    L_half: complex
    method: str
    truncation: int
    error_estimate: float


def afe_evaluate(spec: NewformSpec | str, t: float, cutoff: CutoffG | None = None,
                 X: int | None = None, table: CoeffTable | None = None) -> LValueRecord:
    """L(1/2 + it) from two sums of length 2 sqrt(C) weighted by g(n / sqrt C)."""
    spec = get_form(spec)
    cutoff = cutoff or _default_cutoff()
    C = analytic_conductor(spec, t)
    reach = int(math.floor(2.0 * math.sqrt(C) / min(1.0, cutoff.power))) + 1
    need = reach
    if X is not None and X < need:
        raise TruncationError(f"X = {X} shorter than the cutoff support {need}")
    table = table or coefficients(spec, need)
    if table.limit < need:
        raise TruncationError(f"coefficient table shorter than 2 sqrt(C) = {need}")
    n = np.arange(1, need + 1, dtype=float)
    lam = table.lam[1:need + 1]
    weights = lam * cutoff(n / math.sqrt(C)) / np.sqrt(n)
    ph = t * np.log(n)
    first = complex(np.sum(weights * np.exp(-1j * ph)))
    dual = complex(np.sum(weights * np.exp(1j * ph)))
    eps = root_number(spec.label)
    val = first + eps * gamma_ratio_unit(spec.weight, t) * dual
    return LValueRecord(float(t), val, "AFE", need, math.sqrt(spec.level) * C ** -0.25)


def completed_record(spec: NewformSpec | str, t: float) -> LValueRecord:
    """L(1/2 + it) through completed_lambda; the error estimate compares two splits."""
    spec = get_form(spec)
    s = complex(0.5, t)
    v1 = l_value_completed(spec, s, 1.0)
    v2 = l_value_completed(spec, s, 1.25)
    _, _, nmax = _split_terms(spec, s, 1.0)
    return LValueRecord(float(t), v1, "completed-lambda", nmax, abs(v1 - v2))


_CUTOFF: CutoffG | None = None


def _default_cutoff() -> CutoffG:
    global _CUTOFF
    if _CUTOFF is None:
        _CUTOFF = CutoffG()
    return _CUTOFF


# ---------------------------------------------------------------- coefficient statistics

@dataclass(frozen=True)
class CoeffStats:
    X: int
    rankin_mean: float
    abs_mean: float
    half_slope: float
    partial_5_4: float
    partial_7_4: float
    delta: float = 0.0


def coeff_average_stats(spec: NewformSpec | str, X: int, table: CoeffTable | None = None) -> CoeffStats:
    spec = get_form(spec)
    table = table or coefficients(spec, X)
    if X > table.limit:
        raise TruncationError("X beyond table")
    lam = np.abs(table.lam[1:X + 1])
    n = np.arange(1, X + 1, dtype=float)
    return CoeffStats(
        X=X,
        rankin_mean=float(np.sum(lam**2) / X),
        abs_mean=float(np.sum(lam) / X),
        half_slope=float(np.sum(lam / np.sqrt(n)) / math.sqrt(X)),
        partial_5_4=float(np.sum(lam * n**-1.25)),
        partial_7_4=float(np.sum(lam * n**-1.75)),
    )


def block_sum(table: CoeffTable, M1: int, M2: int, t: float, compensated: bool = False) -> complex:
    """sum_{M1 <= n <= M2} lambda(n) n^(-it)."""
    if M2 > table.limit:
        raise TruncationError(f"M2 = {M2} beyond table limit {table.limit}")
    if M2 < M1:
        return 0j
    n = np.arange(M1, M2 + 1, dtype=float)
    terms = table.lam[M1:M2 + 1] * np.exp(-1j * t * np.log(n))
    if compensated:
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return complex(np.sum(terms))


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class ScanRow:
    t: float
    L: complex
    weyl_ratio: float
    convexity_ratio: float
    C: float
    X_trunc: int
    M0: int

    @property
    def abs_L(self) -> float:
        return abs(self.L)


def default_m0(t: float) -> int:
    return int(math.ceil(t ** (2.0 / 3.0)))


def subconvexity_scan(spec: NewformSpec | str, t_grid: Iterable[float], M0_rule=default_m0,
                      threads: int = 1, cutoff: CutoffG | None = None) -> list[ScanRow]:
    spec = get_form(spec)
    ts = [float(t) for t in t_grid]
    if any(t < 2 or t > 1e4 for t in ts):
        raise ValueError("scan grid must lie in [2, 1e4]")
    cutoff = cutoff or _default_cutoff()
    Cmax = max(analytic_conductor(spec, t) for t in ts)
    table = coefficients(spec, int(2 * math.sqrt(Cmax) / min(1.0, cutoff.power)) + 2)
    root_number(spec.label)

    def row(t: float) -> ScanRow:
        rec = afe_evaluate(spec, t, cutoff, table=table)
        a = abs(rec.L_half)
        return ScanRow(t, rec.L_half, a / (t ** (1 / 3) * math.log(t)), a / math.sqrt(t),
                       analytic_conductor(spec, t), rec.truncation, M0_rule(t))

    if threads <= 1:
        return [row(t) for t in ts]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(row, ts))
