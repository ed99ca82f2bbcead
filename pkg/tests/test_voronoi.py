import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import jv

from jutila_lab.arithforms import char_group, coefficients, get_form, principal_character
from jutila_lab.special import QuadratureBudgetError
from jutila_lab.voronoi import (
    CALIBRATION_BUMP,
    ETA_TABLE,
    TestFunction,
    UnsupportedTwist,
    VoronoiSpec,
    additive_twist_decompose,
    calibrate_eta,
    hankel_integrals,
    q_star,
    snap_unit,
    split_fraction,
    twisted_form_resolve,
    verify_twist_identity,
    voronoi_lhs,
    voronoi_rhs,
)

LEVELS = [1, 4, 9, 11, 12, 36]


@given(q=st.integers(1, 400), a=st.integers(0, 10_000), N=st.sampled_from(LEVELS))
def test_split_recombines_and_separates_primes(q, a, N):
    if math.gcd(a, q) != 1:
        a = 1
    sp = split_fraction(a, q, N)
    assert Fraction(sp.a1, sp.q1) + Fraction(sp.a2, sp.q2) - Fraction(a, q) == int(
        Fraction(sp.a1, sp.q1) + Fraction(sp.a2, sp.q2) - Fraction(a, q))
    assert sp.q1 * sp.q2 == q
    assert math.gcd(sp.q1, sp.N2) == 1
    assert sp.N1 * sp.N2 == N
    for p in range(2, sp.q2 + 1):
        if sp.q2 % p == 0 and all(p % d for d in range(2, p)):
            assert sp.N2 % p == 0


def test_split_rejects_non_coprime():
    with pytest.raises(ValueError):
        split_fraction(2, 4, 1)


def test_q_star_values():
    assert [q_star(q) for q in (1, 2, 4, 6, 12)] == [1, 4, 8, 36, 72]


def test_principal_twist_is_identity():
    assert twisted_form_resolve("1.12.a", principal_character(7)).label == "1.12.a"


def test_cm_form_absorbs_its_character():
    g = get_form("9.4.a")
    assert twisted_form_resolve(g, g.cm_character).label == "9.4.a"


def test_non_cm_twist_raises():
    chi = [c for c in char_group(5) if not c.is_principal][0]
    with pytest.raises(UnsupportedTwist):
        twisted_form_resolve("1.12.a", chi)


def test_twist_decomposition_q_above_cap():
    with pytest.raises(ValueError):
        additive_twist_decompose("1.12.a", Fraction(1, 101))


@pytest.mark.parametrize("form,a,q", [("1.12.a", 1, 2), ("4.6.a", 1, 2), ("9.4.a", 1, 3),
                                      ("9.4.a", 2, 3), ("11.2.a", 1, 2), ("9.4.a", 1, 6)])
@pytest.mark.parametrize("s", [2.0, 2 + 3j])
def test_twist_identity_within_tail(form, a, q, s):
    dec = additive_twist_decompose(form, Fraction(a, q))
    res = verify_twist_identity(dec, s, X=20_000)
    assert res.residual <= res.tail_bound
    assert dec.check_divisibility()


def test_twist_identity_coefficientwise_exact_small_X():
    # with X small the two truncated sums agree to rounding, not just to the tail bound
    dec = additive_twist_decompose("9.4.a", Fraction(1, 3))
    res = verify_twist_identity(dec, 2.0, X=2000)
    assert res.residual < 1e-12


@pytest.mark.parametrize("kind", ["cinf", "smoothstep"])
def test_bump_shape(kind):
    F = TestFunction(100.0, 300.0, 40.0, kind)
    assert F(100.0) == 0.0 and F(300.0) == 0.0
    assert F(200.0) == pytest.approx(1.0)
    xs = np.linspace(90, 310, 500)
    vals = F(xs)
    assert np.all((vals >= 0) & (vals <= 1 + 1e-15))


@pytest.mark.parametrize("kind", ["cinf", "smoothstep"])
def test_bump_derivative_matches_difference_quotient(kind):
    F = TestFunction(100.0, 300.0, 40.0, kind)
    xs = np.linspace(101, 299, 97)
    h = 1e-5
    fd = (F(xs + h) - F(xs - h)) / (2 * h)
    assert np.max(np.abs(F.derivative(xs) - fd)) < 1e-7


def test_bump_validation():
    with pytest.raises(ValueError):
        TestFunction(10.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        TestFunction(10.0, 20.0, 6.0)
    with pytest.raises(ValueError):
        TestFunction(10.0, 20.0, 2.0, "gaussian")


def test_sum_function_knots_and_support():
    G = TestFunction(100.0, 300.0, 40.0) + TestFunction(200.0, 500.0, 50.0)
    assert G.support == (100.0, 500.0)
    assert G(250.0) == pytest.approx(2.0)
    assert len(G.knots) == 8


def test_lhs_matches_loop():
    F = TestFunction(50.0, 160.0, 30.0)
    table = coefficients("1.12.a", 200)
    loop = sum(table.lam[n] * np.exp(2j * np.pi * 3 * n / 7) * F(float(n)) for n in range(1, 200))
    assert voronoi_lhs(table, 3, 7, F) == pytest.approx(loop, abs=1e-13)


def test_lhs_support_beyond_table():
    with pytest.raises(ValueError):
        voronoi_lhs(coefficients("1.12.a", 100), 1, 1, TestFunction(50.0, 160.0, 30.0))


@pytest.mark.parametrize("ell", [1, 7, 40])
def test_hankel_integral_against_quad(ell):
    F = TestFunction(500.0, 900.0, 100.0)
    q1, r, k = 3, 1, 12
    beta = 4 * math.pi / (q1 * math.sqrt(r))
    f = lambda y: F(y) * jv(k - 1, beta * math.sqrt(ell * y)) / q1
    ref, _ = integrate.quad(f, 500, 900, limit=400, points=F.knots[1:3], epsabs=1e-14)
    got = hankel_integrals(F, np.array([ell]), q1, r, k)[0]
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_bessel_backends_agree():
    F = TestFunction(500.0, 4000.0, 1500.0, "smoothstep")
    ells = np.arange(1, 600)
    up, scale = hankel_integrals(F, ells, 1, 1, 12, VoronoiSpec(backend="upward"), with_scale=True)
    sp = hankel_integrals(F, ells, 1, 1, 12, VoronoiSpec(backend="scipy"))
    # the integrals cancel heavily, so compare against the weight scale
    assert np.max(np.abs(up - sp)) < 1e-12 * scale


def test_eta_table_matches_root_number_relation():
    from jutila_lab.lfunction import root_number
    for label in ("1.12.a", "4.6.a", "9.4.a", "11.2.a"):
        spec = get_form(label)
        eps = root_number(label)
        assert (1j ** spec.weight) * ETA_TABLE[(label, spec.level)] == pytest.approx(eps, abs=1e-6)


def test_calibration_snaps_to_table():
    for label in ("4.6.a", "11.2.a"):
        spec = get_form(label)
        z = calibrate_eta(label)
        assert snap_unit(z) == ETA_TABLE[(label, spec.level)]


def test_snap_unit_rejects_off_circle():
    with pytest.raises(ArithmeticError):
        snap_unit(0.7 + 0.7j)


@pytest.mark.parametrize("form,a,q", [("1.12.a", 1, 1), ("1.12.a", 2, 5), ("4.6.a", 1, 2),
                                      ("9.4.a", 1, 3), ("11.2.a", 1, 2)])
def test_voronoi_identity_cinf(form, a, q):
    F = TestFunction(600.0, 1400.0, 250.0)
    lhs = voronoi_lhs(coefficients(form, 1500), a, q, F)
    rhs = voronoi_rhs(form, a, q, F).value
    assert abs(lhs - rhs) <= 1e-7 * abs(lhs)


def test_voronoi_threads_do_not_change_value():
    F = TestFunction(600.0, 1400.0, 250.0)
    one = voronoi_rhs("9.4.a", 1, 6, F, VoronoiSpec(threads=1)).value
    many = voronoi_rhs("9.4.a", 1, 6, F, VoronoiSpec(threads=4)).value
    assert one == many


def test_unsupported_twist_in_decomposition():
    with pytest.raises(UnsupportedTwist):
        additive_twist_decompose("1.12.a", Fraction(1, 4))


def test_budget_error():
    F = TestFunction(500.0, 4000.0, 1500.0, "smoothstep")
    with pytest.raises(QuadratureBudgetError):
        voronoi_rhs("1.12.a", 1, 1, F, VoronoiSpec(tol=1e-12, max_terms=256))
