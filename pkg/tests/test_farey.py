import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jutila_lab.arithforms import coefficients
from jutila_lab.farey import (
    DegenerateInterval, FareyParams, block_decomposition_check, block_weight_F, build_farey_system,
    derivative_decay_diagnostic, farey_in_interval, good_bad_decompose, h_of, mediant, omega,
    omega_j, partition_sum,
)


def brute_farey(Q: int, lo: Fraction, hi: Fraction) -> list[Fraction]:
    out = set()
    for v in range(1, Q + 1):
        for u in range(math.ceil(lo * v), math.floor(hi * v) + 1):
            out.add(Fraction(u, v))
    return sorted(out)


@given(st.integers(min_value=1, max_value=40), st.fractions(min_value=-30, max_value=30, max_denominator=50),
       st.fractions(min_value=Fraction(1, 50), max_value=5, max_denominator=50))
def test_farey_enumeration_matches_brute_force(Q, lo, width):
    hi = lo + width
    got = farey_in_interval(Q + 0.5, (lo, hi))
    assert got == brute_farey(Q, lo, hi)


@given(st.integers(min_value=1, max_value=60), st.fractions(min_value=-20, max_value=0, max_denominator=30))
def test_consecutive_fractions_are_neighbours(Q, lo):
    fr = farey_in_interval(Q, (lo, lo + 2))
    for x, y in zip(fr, fr[1:]):
        assert y.numerator * x.denominator - x.numerator * y.denominator == 1
        assert x < mediant(x, y) < y
        assert mediant(x, y).denominator > Q


def test_farey_interval_validation():
    with pytest.raises(ValueError):
        farey_in_interval(3, (1, 0))
    with pytest.raises(ValueError):
        farey_in_interval(0.5, (0, 1))


def test_good_bad_example():
    sp = good_bad_decompose(Fraction(1, 6), 9)
    assert (sp.a, sp.q, sp.c, sp.d) == (1, 2, 1, 3)
    assert sp.recombine() == Fraction(-1, 6)


@given(st.integers(min_value=1, max_value=5000), st.integers(min_value=1, max_value=5000),
       st.sampled_from([1, 4, 9, 11, 12, 36, 72]))
def test_good_bad_properties(u, v, N):
    if math.gcd(u, v) != 1:
        return
    sp = good_bad_decompose((u, v), N)
    assert sp.q * sp.d == v
    assert sp.recombine() == Fraction(-u, v)
    assert math.gcd(sp.a, sp.q) == 1
    # d keeps exactly the primes whose exponent in v is below their exponent in N
    for p in range(2, 80):
        if sp.d % p == 0 and all(p % r for r in range(2, p)):
            e = 0
            while v % p ** (e + 1) == 0:
                e += 1
            assert 0 < e < next(k for k in range(20) if N % p ** (k + 1))


def test_good_bad_rejects_non_reduced():
    with pytest.raises(ValueError):
        good_bad_decompose((2, 4), 9)


def test_params_validation_and_H():
    p = FareyParams(1e5, 2154, 2154, 2154, 4308)
    assert p.H == 47 and p.R == 1.0
    with pytest.raises(ValueError):
        FareyParams(1e5, 100, 200, 1, 2)
    with pytest.raises(ValueError):
        FareyParams(1e5, 200, 100, 1, 2, s=7)


def test_reference_system_at_1e5():
    sysm = build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 4308))
    assert sysm.fractions == tuple(Fraction(-n) for n in (7, 6, 5, 4))
    assert sysm.breakpoints == (2248, 2449, 2894, 3537, 4214)


@pytest.mark.parametrize("t,M,M0", [(1e3, 100, 100), (1e4, 464, 100), (1e5, 2154, 2154), (1e6, 10000, 100)])
def test_system_invariants(t, M, M0):
    p = FareyParams(t, M, M0, M, 2 * M)
    sysm = build_farey_system(p)
    bps = sysm.breakpoints
    assert p.M1 < bps[0] < bps[-1] < p.M2 and all(b > a for a, b in zip(bps, bps[1:]))
    lo, hi = -t / (2 * math.pi * (p.M1 + 2 * p.H)), -t / (2 * math.pi * (p.M2 - 2 * p.H))
    assert all(lo <= float(a) <= hi and a.denominator <= p.R for a in sysm.fractions)
    for j in range(1, sysm.J):
        assert bps[j] == math.floor(h_of(t, sysm.mediants[j - 1]) + 0.5)
    # spacing band relative to H R / v_j, logged in the ledger
    if sysm.J > 2:
        ratios = [(bps[j] - bps[j - 1]) / (p.H * p.R / sysm.v(j)) for j in range(2, sysm.J)]
        assert 1 / 64 <= min(ratios) and max(ratios) <= 64


def test_degenerate_interval():
    with pytest.raises(DegenerateInterval):
        build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 2200))


def test_omega_values_and_symmetry():
    H = 10
    assert omega(0.0, H) == 0.5 and omega(H, H) == 1.0 and omega(-H, H) == 0.0
    xs = np.linspace(-H, H, 1001)
    assert np.allclose(omega(xs, H) + omega(-xs, H), 1.0, atol=1e-15)
    assert np.all(np.diff(omega(xs, H)) >= 0)


def test_partition_of_unity_and_support():
    sysm = build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 4308))
    p = sysm.params
    n = np.arange(p.M1 - 50, p.M2 + 51, dtype=float)
    tot = partition_sum(sysm, n)
    core = (n >= p.M1 + 3 * p.H) & (n <= p.M2 - 3 * p.H)
    assert np.max(np.abs(tot[core] - 1)) < 1e-12
    assert np.all(tot[(n <= p.M1) | (n >= p.M2)] == 0)
    for j in range(1, sysm.J + 1):
        w = omega_j(sysm, j, n)
        a, b = sysm.support(j)
        assert np.all((w >= 0) & (w <= 1))
        assert np.all(w[(n < a) | (n > b)] == 0)


def test_block_weight_modulus_is_window():
    sysm = build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 4308))
    x = np.linspace(2200, 4300, 500)
    for j in range(1, sysm.J + 1):
        assert np.allclose(np.abs(block_weight_F(sysm, j, x)), omega_j(sysm, j, x), atol=1e-15)
    assert np.allclose(block_weight_F(sysm, 1, x, t=0.0) * np.exp(2j * np.pi * float(sysm.alpha(1)) * x),
                       omega_j(sysm, 1, x))


@pytest.mark.parametrize("t,M", [(1e4, 464), (1e5, 2154)])
def test_block_decomposition_identity(t, M):
    sysm = build_farey_system(FareyParams(t, M, M, M, 2 * M))
    chk = block_decomposition_check(coefficients("1.12.a", 2 * M + 10), sysm)
    assert chk.residual < 1e-9


def test_derivative_diagnostic_is_bounded():
    sysm = build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 4308))
    for j in range(1, sysm.J + 1):
        r = derivative_decay_diagnostic(sysm, j)
        assert r.ratios[0] <= 1 + 1e-12
        assert max(r.ratios) < 10


def test_csv_dump_columns():
    sysm = build_farey_system(FareyParams(1e5, 2154, 2154, 2154, 4308))
    lines = sysm.to_csv().splitlines()
    assert lines[0] == "j,u_j,v_j,rho_num,rho_den,N_j,q_j,d_j,c_j,a_j"
    assert len(lines) == sysm.J + 1
