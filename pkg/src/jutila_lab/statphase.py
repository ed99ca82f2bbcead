"""Stationary-phase evaluation of the Bessel transforms of the Farey block weights.

After Voronoi summation each block j contributes, per dual index l, an
integral of x^(-1/4) omega_j(x) e(phi_+-(x)).  Its stationary point has a
closed form, and the leading term collapses to omega_j(x*) h e(g).  This
module evaluates those closed forms and checks them against direct
oscillatory quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arithforms import coefficients, get_form, mod_inverse
from .farey import FareySystem, omega_j
from .special import OscResult, QuadratureSpec, oscillatory_integral
from .voronoi import _series_for

TWO_PI = 2 * math.pi
SIGNS = ("+", "-")


def _sg(sign: str) -> int:
    if sign not in SIGNS:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return 1 if sign == "+" else -1


@dataclass(frozen=True)
class BlockPhaseData:
    """Block j of a Farey system with the dual-side parameters (q, r).

    u/v is -alpha_j; q is the denominator seen by the dual sum and d = v/q.
    """

    system: FareySystem
    j: int
    u: int
    v: int
    q: int
    r: int
    t: float
    weight: int = 12
    a: int = 0

    @property
    def d(self) -> int:
        return self.v // self.q

    @property
    def support(self) -> tuple[int, int]:
        return self.system.support(self.j)

    def omega(self, x):
        return omega_j(self.system, self.j, x)


def block_phase_data(system: FareySystem, j: int, r: int = 1, weight: int = 12) -> BlockPhaseData:
    """Data for block j using the good/bad split stored on the system."""
    sp = system.splits[j - 1]
    if math.gcd(r, sp.q) != 1:
        raise ValueError(f"r = {r} must be coprime to q_j = {sp.q}")
    return BlockPhaseData(system, j, sp.u, sp.v, sp.q, r, system.params.t, weight, sp.a)


# ---------------------------------------------------------------- closed forms

def phase_phi(data: BlockPhaseData, ell: float, sign: str, x):
    """-(t/2pi) log x + (u/v) x -+ 2 sqrt(l x / (r q^2)) -+ 1/8, in cycles."""
    s = _sg(sign)
    x = np.asarray(x, dtype=float)
    return (-data.t / TWO_PI * np.log(x) + data.u / data.v * x
            - s * 2.0 * np.sqrt(ell * x / (data.r * data.q**2)) - s / 8.0)


def phase_phi_d1(data: BlockPhaseData, ell: float, sign: str, x):
    s = _sg(sign)
    x = np.asarray(x, dtype=float)
    return -data.t / (TWO_PI * x) + data.u / data.v - s * np.sqrt(ell / (data.r * x)) / data.q


def phase_phi_d2(data: BlockPhaseData, ell: float, sign: str, x):
    s = _sg(sign)
    x = np.asarray(x, dtype=float)
    return data.t / (TWO_PI * x**2) + s * np.sqrt(ell / data.r) * x**-1.5 / (2 * data.q)


def stationary_point(data: BlockPhaseData, y: float, sign: str) -> float:
    """Root x of (u/v) x -+ (sqrt(y)/q) sqrt(x) - t/2pi = 0, with y = l/r.

    Solved as a quadratic in sqrt(x); the minus branch uses the
    rationalized root, which stays accurate when sqrt(y)/q dominates.
    """
    if y < 0:
        raise ValueError("y = l/r must be non-negative")
    s = _sg(sign)
    A = data.u / data.v
    b = math.sqrt(y) / data.q
    c = data.t / TWO_PI
    disc = math.sqrt(b * b + 4 * A * c)
    root = (b + disc) / (2 * A) if s > 0 else 2 * c / (b + disc)
    return root * root


def stationary_point_closed(data: BlockPhaseData, y: float, sign: str) -> float:
    """The same root written as (d/2u)^2 (sqrt(y + 2tuq/(pi d)) +- sqrt(y))^2."""
    s = _sg(sign)
    d, u, q, t = data.d, data.u, data.q, data.t
    big = math.sqrt(y + 2 * t * u * q / (math.pi * d))
    return (d / (2 * u)) ** 2 * (big + s * math.sqrt(y)) ** 2


def phase_g(data: BlockPhaseData, y: float, sign: str) -> float:
    """Phase at the stationary point, y = l/r."""
    s = _sg(sign)
    x = stationary_point(data, y, sign)
    return (-data.t / TWO_PI * math.log(x) + data.u / data.v * x
            - s * 2.0 / data.q * math.sqrt(y * x) + 0.125 - s * 0.125)


def amplitude_h(data: BlockPhaseData, y: float, sign: str) -> float:
    """(q t sqrt(y) / (pi x^(3/2)) +- y/x)^(-1/2) at x = x^+-(y)."""
    if y <= 0:
        raise ValueError("amplitude needs y = l/r > 0")
    s = _sg(sign)
    x = stationary_point(data, y, sign)
    rad = data.q * data.t * math.sqrt(y) / (math.pi * x**1.5) + s * y / x
    if rad <= 0:
        raise ArithmeticError("non-positive radicand: parameters outside the stationary regime")
    return rad ** -0.5


def amplitude_via_second_derivative(data: BlockPhaseData, ell: float, sign: str) -> float:
    """1 / (sqrt(2 sqrt(l/r) q) x^(1/4) sqrt(phi''(x))), which equals amplitude_h."""
    y = ell / data.r
    x = stationary_point(data, y, sign)
    return 1.0 / (math.sqrt(2 * math.sqrt(y) * data.q) * x**0.25 * math.sqrt(phase_phi_d2(data, ell, sign, x)))


# ---------------------------------------------------------------- integrals

def _quad_for(data: BlockPhaseData, quad: QuadratureSpec | None, ell: float, sign: str) -> QuadratureSpec:
    if quad is not None:
        return quad
    # absolute tolerance sized from the expected magnitude of the integral
    lo, hi = data.support
    x = 0.5 * (lo + hi)
    size = x**-0.25 / math.sqrt(abs(phase_phi_d2(data, ell, sign, x)))
    return QuadratureSpec(tol=1e-10 * size)


def integral_direct(data: BlockPhaseData, ell: float, sign: str,
                    quad: QuadratureSpec | None = None) -> OscResult:
    """int x^(-1/4) omega_j(x) e(phi_+-(x)) dx over the support of omega_j."""
    lo, hi = data.support
    lo = max(lo, 1)
    H = data.system.params.H
    bps = [b + o for b in (data.system.breakpoints[data.j - 1], data.system.breakpoints[data.j]) for o in (-H, H)]
    return oscillatory_integral(
        lambda x: x**-0.25 * data.omega(x),
        lambda x: phase_phi(data, ell, sign, x),
        lambda x: phase_phi_d1(data, ell, sign, x),
        (lo, hi), _quad_for(data, quad, ell, sign), breakpoints=bps)


def main_term_single(data: BlockPhaseData, ell: float, sign: str) -> complex:
    """(-+1)^k omega_j(x*) h e(g) at y = l/r."""
    y = ell / data.r
    x = stationary_point(data, y, sign)
    w = float(data.omega(x))
    if w == 0.0:
        return 0j
    fac = (-_sg(sign)) ** data.weight
    return fac * w * amplitude_h(data, y, sign) * complex(np.exp(2j * np.pi * phase_g(data, y, sign)))


def normalized_direct(data: BlockPhaseData, ell: float, sign: str,
                      quad: QuadratureSpec | None = None) -> complex:
    """(-+1)^k I^+-(l) / sqrt(2 sqrt(l/r) q): the quantity the main term approximates."""
    y = ell / data.r
    I = integral_direct(data, ell, sign, quad).value
    return (-_sg(sign)) ** data.weight * I / math.sqrt(2 * math.sqrt(y) * data.q)


@dataclass(frozen=True)
class StationaryCheck:
    ell: float
    sign: str
    x_star: float
    direct: complex
    main: complex

    @property
    def rel_err(self) -> float:
        return abs(self.direct - self.main) / abs(self.main) if self.main != 0 else math.inf


def check_stationary_phase(data: BlockPhaseData, ell: float, sign: str,
                           quad: QuadratureSpec | None = None) -> StationaryCheck:
    x = stationary_point(data, ell / data.r, sign)
    return StationaryCheck(ell, sign, x, normalized_direct(data, ell, sign, quad),
                           main_term_single(data, ell, sign))


def ell_for_position(data: BlockPhaseData, x: float, sign: str) -> float:
    """The real l whose stationary point on the given branch is x."""
    lin = data.u / data.v * x - data.t / TWO_PI
    if (lin < 0) != (sign == "-") and lin != 0:
        raise ValueError("x is on the other branch")
    return data.r * data.q**2 * lin * lin / x


def mid_support_ells(data: BlockPhaseData, sign: str,
                     positions: Sequence[float] = (0.2, 0.4, 0.6, 0.8)) -> list[int]:
    """Integer l whose stationary points sit at fixed relative positions in the flat part of omega_j.

    The flat part is [N_{j-1} + H, N_j - H]; the + branch moves right of
    x(0) = h(alpha_j) as l grows and the - branch moves left.
    """
    H = data.system.params.H
    lo = data.system.breakpoints[data.j - 1] + H
    hi = data.system.breakpoints[data.j] - H
    x0 = stationary_point(data, 0.0, sign)
    end = hi if sign == "+" else lo
    if (end - x0) * (1 if sign == "+" else -1) <= 0:
        return []
    out = []
    for p in positions:
        ell = round(ell_for_position(data, x0 + p * (end - x0), sign))
        if ell >= 1 and ell not in out:
            out.append(ell)
    return out


# ---------------------------------------------------------------- block transform

@dataclass(frozen=True)
class TransformParams:
    K1: int
    K: float

    @classmethod
    def for_block(cls, system: FareySystem, j: int, C_K: float = 2.0) -> "TransformParams":
        p = system.params
        K1 = int(math.ceil(C_K * p.M / p.R**2))
        K = (p.M / (system.v(j) * p.R)) ** (2.0 / (p.s - 1)) * p.M0
        return cls(K1, K)


@dataclass(frozen=True)
class BlockTransformReport:
    direct: complex
    transformed: complex
    terms: int
    envelope: float

    @property
    def abs_err(self) -> float:
        return abs(self.direct - self.transformed)

    @property
    def rel_err(self) -> float:
        return self.abs_err / abs(self.direct) if self.direct != 0 else math.inf


def block_transform_check(spec, system: FareySystem, j: int, params: TransformParams | None = None,
                          C_K: float = 2.0) -> BlockTransformReport:
    """Direct block sum against the Voronoi-transformed stationary-phase main terms.

    The Voronoi data for -u_j/v_j (series denominator q1, multiplier r,
    dual shift and constant) come from the voronoi module; each dual index l
    below r K1 / d^2 contributes the closed-form main term of both signs.
    """
    spec = get_form(spec)
    params = params or TransformParams.for_block(system, j, C_K)
    p = system.params
    u, v = system.u(j), system.v(j)
    lo, hi = system.support(j)
    lo = max(lo, 1)
    table = coefficients(spec, hi + 1)
    n = np.arange(lo, hi + 1, dtype=float)
    al = float(system.alpha(j))
    direct = complex(np.sum(table.lam[lo:hi + 1] * np.exp(2j * np.pi * al * n)
                            * np.exp(-1j * (p.t * np.log(n) + 2 * np.pi * al * n)) * omega_j(system, j, n)))
    _, series = _series_for(spec, (-u) % v, v)
    total = 0j
    count = 0
    for s in series:
        data = BlockPhaseData(system, j, u, v, s.q1, s.r, p.t, spec.weight)
        d = v // s.q1
        lmax = int(params.K1 * s.r // d**2)
        lam = coefficients(s.form, max(lmax, 1)).lam
        scale = s.prefactor / (2 * math.pi * (1j ** spec.weight))
        acc = 0j
        for ell in range(1, lmax + 1):
            if lam[ell] == 0.0:
                continue
            tw = np.exp(-2j * np.pi * ((s.shift * ell) % s.q1) / s.q1) if s.q1 > 1 else 1.0
            acc += lam[ell] * tw * (main_term_single(data, ell, "+") + main_term_single(data, ell, "-"))
            count += 1
        total += scale * acc
    env = math.sqrt(p.M) * (p.M / p.R**2) ** (1 / (2 * (p.s - 1))) + p.M**2.5 * p.R**2 / p.H**3
    return BlockTransformReport(direct, total, count, env)


def first_derivative_ratio(data: BlockPhaseData, ell: float, sign: str,
                           quad: QuadratureSpec | None = None) -> float:
    """|I| / (max amplitude * max 1/|phi'|) over the support, for non-stationary l."""
    lo, hi = data.support
    xs = np.linspace(max(lo, 1), hi, 2001)
    dphi = np.abs(phase_phi_d1(data, ell, sign, xs))
    I = integral_direct(data, ell, sign, quad).value
    return abs(I) / (float(np.max(xs**-0.25)) / float(np.min(dphi)))
