import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jutila_lab.farey import FareyParams, build_farey_system
from jutila_lab.statphase import (
    amplitude_h,
    amplitude_via_second_derivative,
    block_phase_data,
    block_transform_check,
    check_stationary_phase,
    ell_for_position,
    first_derivative_ratio,
    mid_support_ells,
    phase_phi,
    phase_phi_d1,
    phase_phi_d2,
    stationary_point,
    stationary_point_closed,
)


def _system(t):
    M = math.ceil(t ** (2 / 3))
    return build_farey_system(FareyParams(t, M, M, M, 2 * M))


SYS = _system(1e4)
BLOCKS = [block_phase_data(SYS, j) for j in range(1, SYS.J + 1)]


@given(j=st.integers(0, len(BLOCKS) - 1), y=st.floats(0.01, 400.0), sign=st.sampled_from("+-"))
def test_stationary_point_zeroes_derivative(j, y, sign):
    d = BLOCKS[j]
    x = stationary_point(d, y, sign)
    scale = d.t / (2 * math.pi * x) + d.u / d.v + math.sqrt(y / x) / d.q
    assert abs(phase_phi_d1(d, y * d.r, sign, x)) <= 1e-12 * scale


@given(j=st.integers(0, len(BLOCKS) - 1), y=st.floats(0.01, 400.0), sign=st.sampled_from("+-"))
def test_closed_form_root_agrees(j, y, sign):
    d = BLOCKS[j]
    assert stationary_point_closed(d, y, sign) == pytest.approx(stationary_point(d, y, sign), rel=1e-10)


@given(j=st.integers(0, len(BLOCKS) - 1), y=st.floats(0.05, 50.0), sign=st.sampled_from("+-"))
def test_amplitude_matches_second_derivative_form(j, y, sign):
    d = BLOCKS[j]
    assert amplitude_via_second_derivative(d, y * d.r, sign) == pytest.approx(amplitude_h(d, y, sign), rel=1e-9)


def test_phase_derivatives_against_differences():
    d = BLOCKS[0]
    x = np.linspace(SYS.support(1)[0] + 5, SYS.support(1)[1] - 5, 11)
    for sign in "+-":
        h = 1e-3
        fd1 = (phase_phi(d, 7.0, sign, x + h) - phase_phi(d, 7.0, sign, x - h)) / (2 * h)
        fd2 = (phase_phi_d1(d, 7.0, sign, x + h) - phase_phi_d1(d, 7.0, sign, x - h)) / (2 * h)
        assert np.allclose(fd1, phase_phi_d1(d, 7.0, sign, x), rtol=1e-6, atol=1e-9)
        assert np.allclose(fd2, phase_phi_d2(d, 7.0, sign, x), rtol=1e-5, atol=1e-12)


def test_negative_y_rejected():
    with pytest.raises(ValueError):
        stationary_point(BLOCKS[0], -1.0, "+")


def test_ell_for_position_inverts_stationary_point():
    d = BLOCKS[len(BLOCKS) // 2]
    for sign in "+-":
        for ell in mid_support_ells(d, sign):
            x = stationary_point(d, ell / d.r, sign)
            assert ell_for_position(d, x, sign) == pytest.approx(ell, rel=1e-9)


def test_mid_support_points_lie_in_flat_part():
    H = SYS.params.H
    for d in BLOCKS:
        lo, hi = SYS.breakpoints[d.j - 1] + H, SYS.breakpoints[d.j] - H
        for sign in "+-":
            for ell in mid_support_ells(d, sign):
                x = stationary_point(d, ell / d.r, sign)
                assert lo - 1 <= x <= hi + 1


def test_main_term_close_to_integral_on_one_block():
    d = BLOCKS[1]
    errs = [check_stationary_phase(d, ell, s).rel_err for s in "+-" for ell in mid_support_ells(d, s)]
    assert errs and np.median(errs) < 0.05


def test_median_error_decreases_with_t():
    medians = []
    for t in (1e4, 4e4):
        sysm = _system(t)
        errs = []
        for j in range(1, sysm.J + 1, 2):
            d = block_phase_data(sysm, j)
            for sign in "+-":
                errs += [check_stationary_phase(d, ell, sign).rel_err for ell in mid_support_ells(d, sign)]
        medians.append(float(np.median(errs)))
    assert medians[1] < medians[0]


def test_non_stationary_integral_is_small():
    d = BLOCKS[0]
    # a large l pushes the - branch stationary point far below the support
    ratio = first_derivative_ratio(d, 5000.0, "-")
    assert ratio < 10


def test_coprimality_of_r_enforced():
    sysm = build_farey_system(FareyParams(1e6, 10000, 100, 10000, 20000))
    j = next(i for i, sp in enumerate(sysm.splits, 1) if sp.q > 1)
    with pytest.raises(ValueError):
        block_phase_data(sysm, j, r=sysm.splits[j - 1].q)


def test_block_transform_recovers_direct_sum():
    rep = block_transform_check("1.12.a", SYS, 1)
    assert rep.terms > 0
    assert rep.rel_err < 0.2
