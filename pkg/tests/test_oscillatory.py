import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from _oracles import bessel_j_series, bessel_j_table_backward, free_propagator_entry
from lattice_dispersion import (LatticeWindow, PhaseSpec, Potential, ValidationError,
                                build_cutoffs, evolve_free_kernel, oscillatory_integral)
from lattice_dispersion.oscillatory import (classify_decay, energy_cutoffs, jensen_kato_series,
                                            oscillatory_integrals_on_grid, smooth_step,
                                            sup_over_a_scan)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 3), st.floats(-2, 3))
def test_smooth_step_is_monotone_in_unit_range(x, y):
    a, b = sorted((x, y))
    sa, sb = smooth_step(a), smooth_step(b)
    assert 0 <= sa <= sb <= 1
    if a <= 0:
        assert sa == 0
    if b >= 1:
        assert sb == 1


def test_smooth_step_symmetry():
    x = np.linspace(-0.5, 1.5, 401)
    np.testing.assert_allclose(smooth_step(x) + smooth_step(1 - x), 1, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, math.pi / 4))
def test_cutoffs_partition_unity(theta, theta0):
    c = build_cutoffs(theta0)
    assert c.chi0(theta) + c.chi(theta) == pytest.approx(1.0, abs=1e-15)


def test_cutoff_supports():
    c = build_cutoffs(math.pi / 4)
    near = np.array([0.0, 0.3, -0.39, math.pi - 0.2, -math.pi + 0.1])
    np.testing.assert_array_equal(c.chi0(near), 1.0)
    far = np.array([math.pi / 2, 1.0, -2.2, 0.8])
    np.testing.assert_array_equal(c.chi0(far), 0.0)
    for lo, hi in c.chi_support():
        assert c.chi(lo) == 0 and c.chi(hi) == 0


def test_cutoff_validation():
    with pytest.raises(ValidationError):
        build_cutoffs(0.0)
    with pytest.warns(UserWarning):
        c = build_cutoffs(1.2)
    assert c.theta0 == math.pi / 4
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_cutoffs(0.5)


def test_energy_cutoffs():
    chi1, chi2 = energy_cutoffs()
    w = np.linspace(0, 4, 81)
    np.testing.assert_allclose(chi1(w) + chi2(w), 1, atol=1e-15)
    assert np.all(chi1(w[w <= 1]) == 1) and np.all(chi1(w[w >= 3]) == 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(-math.pi, math.pi))
def test_phase_derivatives(a, theta):
    p = PhaseSpec(a)
    h = 1e-5
    assert p.dh(theta) == pytest.approx((p.h(theta + h) - p.h(theta - h)) / (2 * h), abs=1e-8)
    assert p.d2h(theta) == pytest.approx((p.dh(theta + h) - p.dh(theta - h)) / (2 * h), abs=1e-8)
    assert p.d3h(theta) == pytest.approx((p.d2h(theta + h) - p.d2h(theta - h)) / (2 * h), abs=1e-8)
    lhs = p.scaled_dh(theta) ** 2 + p.scaled_d2h(theta) ** 2
    assert lhs == pytest.approx(16 - 8 * a * math.sin(theta) + a * a, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("a", [-2.5, -2.0, 0.3, 1.9, 2.0])
def test_stationary_points(a):
    p = PhaseSpec(a)
    pts = p.stationary_points()
    assert len(pts) == (0 if abs(a) > 2 else (1 if abs(a) == 2 else 2))
    for x in pts:
        assert -math.pi <= x <= math.pi
        assert abs(p.dh(x)) < 1e-14


@pytest.mark.parametrize("t,a", [(3.0, 0.7), (10.0, -1.5), (25.0, 2.0)])
def test_oscillatory_integral_matches_adaptive_quad(t, a):
    c = build_cutoffs()
    p = PhaseSpec(a)
    res = oscillatory_integral(t, p, c.chi)

    def part(f):
        return quad(lambda x: f(np.exp(1j * t * p.h(x))) * c.chi(x), -math.pi, math.pi,
                    limit=400, epsabs=1e-13, epsrel=1e-13)[0]

    ref = part(np.real) + 1j * part(np.imag)
    assert res.converged
    assert abs(res.value - ref) < 1e-10


def test_zero_time_is_plain_integral():
    c = build_cutoffs()
    res = oscillatory_integral(0.0, PhaseSpec(1.0), c.chi0)
    ref = quad(c.chi0, -math.pi, math.pi, limit=200, points=[-math.pi / 4, math.pi / 4])[0]
    assert res.value == pytest.approx(ref, abs=1e-10)


def test_grid_matches_single_integrals():
    c = build_cutoffs()
    grid = np.array([-2.0, -0.5, 1.0, 2.0, 3.1])
    vals, errs, ok = oscillatory_integrals_on_grid(40.0, c.chi0, grid)
    assert ok
    for a, v in zip(grid, vals):
        assert abs(v - oscillatory_integral(40.0, PhaseSpec(a), c.chi0).value) < 1e-10
    assert np.all(errs < 1e-8)


def test_sup_refinement_never_decreases():
    c = build_cutoffs()
    grid = np.linspace(-4, 4, 81)
    coarse = sup_over_a_scan(300.0, c.chi, grid, c.chi_support(), refine=False)
    fine = sup_over_a_scan(300.0, c.chi, grid, c.chi_support(), refine=True)
    assert fine.sup >= coarse.sup
    # the degenerate peak sits next to a = +-2
    assert abs(abs(fine.argmax) - 2) < 0.1


def test_oscillatory_rejects_negative_time():
    with pytest.raises(ValidationError):
        oscillatory_integral(-1.0, PhaseSpec(0.0), build_cutoffs().chi)


def test_classify_decay_on_synthetic_power_laws():
    t = np.geomspace(100, 10000, 5)
    half = classify_decay(t, 2 * t ** -0.5)
    third = classify_decay(t, 2 * t ** (-1 / 3))
    assert half.k == 2 and half.spread_half == pytest.approx(1.0)
    assert third.k == 3 and third.spread_third == pytest.approx(1.0)


def ones(theta):
    return np.ones_like(theta)


def test_zero_time_unit_amplitude_gives_two_pi():
    assert oscillatory_integral(0.0, PhaseSpec(0.3), ones).value == pytest.approx(2 * math.pi,
                                                                                  abs=1e-12)


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_unit_amplitude_is_bessel_zero(t):
    # int exp(it(2 - 2 cos theta)) d theta = 2 pi exp(2it) J_0(2t)
    j0 = bessel_j_table_backward(int(4 * t) + 60, 2 * t)[0]
    res = oscillatory_integral(t, PhaseSpec(0.0), ones)
    assert abs(res.value - 2 * math.pi * np.exp(2j * t) * j0) < 1e-9


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_free_kernel_entries_against_bessel_series(t):
    w = LatticeWindow.symmetric(20)
    row = evolve_free_kernel(t, w).entries[w.index(0)]
    for k in range(21):
        expected = free_propagator_entry(k, t, bessel_j_series(k, 2 * t))
        assert abs(row[w.index(-k)] - expected) < 1e-9


def test_degenerate_phase_bound_from_single_fit():
    c = build_cutoffs()
    mag = {t: abs(oscillatory_integral(t, PhaseSpec(2.0), c.chi0).value)
           for t in (100.0, 200.0, 400.0, 800.0)}
    const = mag[100.0] * 100.0 ** (1 / 3)
    for t in (200.0, 400.0, 800.0):
        assert mag[t] <= const * t ** (-1 / 3)


def test_scaled_phase_derivatives_bounded_below_near_cutoff_support():
    c = build_cutoffs()
    theta = np.linspace(-math.pi, math.pi, 20001)
    theta = theta[c.chi0(theta) > 0]
    for a in np.linspace(-6, 6, 121):
        p = PhaseSpec(a)
        assert np.min(p.scaled_dh(theta) ** 2 + p.scaled_d2h(theta) ** 2) >= 8


def test_jensen_kato_weighted_decay():
    s = jensen_kato_series(Potential.delta(0, -1.5), np.geomspace(50, 1000, 6))
    assert s.slope <= -1.4


def test_error_estimates_cover_further_refinement():
    c = build_cutoffs()
    rng = np.random.default_rng(7)
    covered = total = 0
    for t in rng.uniform(1, 200, 15):
        for a in rng.uniform(-3, 3, 2):
            for g in (c.chi, c.chi0):
                res = oscillatory_integral(t, PhaseSpec(a), g)
                ref = oscillatory_integral(t, PhaseSpec(a), g, rtol=1e-14, atol=0.0)
                covered += abs(res.value - ref.value) <= res.error
                total += 1
    assert covered >= 0.99 * total
