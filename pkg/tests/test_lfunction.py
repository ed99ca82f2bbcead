import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from jutila_lab.arithforms import coefficients, get_form
from jutila_lab.lfunction import (
    TruncationError, afe_evaluate, analytic_conductor, block_sum, coeff_average_stats,
    completed_lambda, completed_record, default_m0, determine_root_number, dirichlet_series,
    divisor_tail_bound, l_value_completed, root_number, subconvexity_scan,
)
from jutila_lab.special import CutoffG

LABELS = ("1.12.a", "4.6.a", "9.4.a", "11.2.a")
# L(E, 1) for the curve 11a, i.e. the central value of 11.2.a in the unitary normalization
L_11A_CENTRAL = 0.25384186085591068434


def test_analytic_conductor_grows_like_t_squared():
    spec = get_form("1.12.a")
    assert analytic_conductor(spec, 0) == pytest.approx(6.5 * 7.5 / math.pi**2)
    assert analytic_conductor(spec, 1e4) / 1e8 == pytest.approx(1 / math.pi**2, rel=1e-6)


@pytest.mark.parametrize("sigma", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("X", [100, 1000])
def test_divisor_tail_bound_dominates_true_tail(sigma, X):
    d = np.zeros(400001, dtype=np.int64)
    for m in range(1, 400001):
        d[m::m] += 1
    n = np.arange(X + 1, 400001, dtype=float)
    partial = float(np.sum(d[X + 1:] * n**-sigma))
    assert divisor_tail_bound(X, sigma) >= partial


@pytest.mark.parametrize("label", LABELS)
def test_dirichlet_series_error_within_tail_bound(label):
    tab = coefficients(label, 200000)
    long = dirichlet_series(tab, 2 + 1j)
    short = dirichlet_series(tab, 2 + 1j, X=2000)
    assert abs(long.value - short.value) <= short.tail_bound


def test_dirichlet_series_rejects_small_real_part():
    with pytest.raises(ValueError):
        dirichlet_series(coefficients("1.12.a", 10), 1.2)
    with pytest.raises(TruncationError):
        dirichlet_series(coefficients("1.12.a", 10), 2.0, X=20)


@pytest.mark.parametrize("label", LABELS)
def test_root_number_is_plus_one_and_stable(label):
    rep = determine_root_number(label)
    assert rep.snapped and rep.value == 1
    assert rep.spread < 1e-6
    assert root_number(label) == 1


@pytest.mark.parametrize("label", LABELS)
def test_completed_route_matches_dirichlet_series_at_two(label):
    tab = coefficients(label, 200000)
    for s in (2.0, 2.0 + 3j):
        ds = dirichlet_series(tab, s)
        assert abs(l_value_completed(label, s) - ds.value) <= ds.tail_bound + 1e-12


@given(st.sampled_from(LABELS), st.floats(min_value=-1.0, max_value=2.0), st.floats(min_value=-15, max_value=15))
def test_functional_equation(label, x, y):
    # without the N^(s/2) factor the relation carries N^(1/2 - s)
    s = complex(x, y)
    N = get_form(label).level
    lhs = completed_lambda(label, s)
    rhs = N ** (0.5 - s) * completed_lambda(label, 1 - s)
    assert abs(lhs - rhs) <= 1e-9 * max(1e-30, abs(lhs)) + 1e-14 * abs(_gamma_scale(label, s))


def _gamma_scale(label, s):
    from jutila_lab.special import gamma_c
    k = get_form(label).weight
    return gamma_c(complex(0.5, complex(s).imag) + (k - 1) / 2)


@pytest.mark.parametrize("label", LABELS)
def test_completed_value_independent_of_split(label):
    # float sums lose about pi t / (2 ln 10) digits, so only small heights are meaningful
    for t in (0.0, 5.0, 10.0):
        rec = completed_record(label, t)
        assert rec.error_estimate <= 1e-8 * max(1.0, abs(rec.L_half))


def test_completed_value_degrades_with_height():
    assert completed_record("1.12.a", 30.0).error_estimate > 1e-6


def test_central_value_of_11a_matches_reference():
    assert abs(completed_record("11.2.a", 0.0).L_half - L_11A_CENTRAL) < 1e-12


def test_completed_route_against_mpmath_independent_sum():
    # Lambda(s) from the plain Mellin split with mpmath's incomplete gamma, Delta at s = 1/2 + 3i
    mp.mp.dps = 25
    lam = coefficients("1.12.a", 200).lam
    s = mp.mpc(0.5, 3)
    w = s + 5.5
    A = sum(mp.mpf(lam[n]) * mp.power(n, -s) * mp.gammainc(w, 2 * mp.pi * n) for n in range(1, 201))
    B = sum(mp.mpf(lam[n]) * mp.power(n, s - 1) * mp.gammainc(6.5 - s, 2 * mp.pi * n) for n in range(1, 201))
    ref = 2 * (2 * mp.pi) ** (-w) * A + 2 * (2 * mp.pi) ** (-(6.5 - s)) * B
    assert abs(completed_lambda("1.12.a", complex(s)) - complex(ref)) < 1e-12 * abs(complex(ref))


@pytest.mark.parametrize("label", LABELS)
def test_afe_conjugate_symmetry(label):
    rng = np.random.default_rng(7)
    for t in rng.uniform(0, 300, 5):
        a = afe_evaluate(label, t).L_half
        b = afe_evaluate(label, -t).L_half
        assert abs(a - b.conjugate()) <= 1e-8 * max(1.0, abs(a))


def mp_central_value(label: str, t: float, nterms: int = 120, dps: int = 90) -> complex:
    """L(1/2 + it) from the Mellin split at high precision with exact coefficients.

    Lambda is of size exp(-pi t / 2) while the split terms are O(1), so both
    the working precision and exact lambda(n) matter.
    """
    spec = get_form(label)
    N, k = spec.level, spec.weight
    with mp.workdps(dps):
        raw = coefficients(label, nterms).raw
        lam = [mp.mpf(int(raw[n])) / mp.power(n, mp.mpf(k - 1) / 2) for n in range(1, nterms + 1)]
        s = mp.mpc(0.5, t)
        w, wd = s + mp.mpf(k - 1) / 2, 1 - s + mp.mpf(k - 1) / 2
        sq = mp.sqrt(N)
        A = sum(lam[n - 1] * mp.power(n, -s) * mp.gammainc(w, 2 * mp.pi * n / sq) for n in range(1, nterms + 1))
        B = sum(lam[n - 1] * mp.power(n, s - 1) * mp.gammainc(wd, 2 * mp.pi * n / sq) for n in range(1, nterms + 1))
        big = 2 * (2 * mp.pi) ** (-w) * A + 2 * mp.power(N, 0.5 - s) * (2 * mp.pi) ** (-wd) * B
        return complex(big / (2 * (2 * mp.pi) ** (-w) * mp.gamma(w)))


def test_mp_oracle_reproduces_reference_value():
    assert abs(mp_central_value("11.2.a", 0.0, nterms=60, dps=30) - L_11A_CENTRAL) < 1e-15


@pytest.mark.parametrize("label,t", [("1.12.a", 50.0), ("1.12.a", 100.0), ("11.2.a", 80.0)])
def test_afe_error_is_of_the_stated_scale(label, t):
    # the scale sqrt(N) C^(-1/4) is an order of magnitude, not a bound
    afe = afe_evaluate(label, t)
    ref = mp_central_value(label, t)
    assert abs(afe.L_half - ref) <= 5 * afe.error_estimate


def test_afe_two_cutoffs_agree_to_error_scale():
    for t in (50.0, 100.0, 200.0):
        a = afe_evaluate("1.12.a", t)
        b = afe_evaluate("1.12.a", t, CutoffG(power=0.5))
        assert abs(a.L_half - b.L_half) <= 10 * a.error_estimate


def test_afe_truncation_errors():
    with pytest.raises(TruncationError):
        afe_evaluate("1.12.a", 100.0, X=5)


def test_coefficient_statistics_settle():
    # Rankin-Selberg: the mean of lambda^2 tends to a constant
    a = coeff_average_stats("1.12.a", 50000)
    b = coeff_average_stats("1.12.a", 200000)
    assert abs(a.rankin_mean - b.rankin_mean) < 0.02 * b.rankin_mean
    assert b.abs_mean < math.sqrt(b.rankin_mean)


def test_block_sum_plain_and_compensated_agree():
    tab = coefficients("1.12.a", 50000)
    a = block_sum(tab, 1000, 50000, 1e4)
    b = block_sum(tab, 1000, 50000, 1e4, compensated=True)
    assert abs(a - b) < 1e-10
    assert block_sum(tab, 10, 5, 1.0) == 0


def test_scan_rows_and_thread_independence():
    grid = np.arange(100, 400, 25)
    one = subconvexity_scan("1.12.a", grid, threads=1)
    many = subconvexity_scan("1.12.a", grid, threads=3)
    assert one == many
    for row in one:
        assert row.weyl_ratio == pytest.approx(row.abs_L / (row.t ** (1 / 3) * math.log(row.t)))
        assert row.M0 == default_m0(row.t)


def test_scan_grid_bounds():
    with pytest.raises(ValueError):
        subconvexity_scan("1.12.a", [1.0])
