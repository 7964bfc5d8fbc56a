import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from selfsim import builtin
from selfsim.ergodic import CylindricalFunction, default_function
from selfsim.errors import HypothesisViolated, InsufficientData
from selfsim.spectral import (KernelSpec, check_hypothesis, correlation, correlation_matrix, eta_profile,
                              expected_slope, gauss_cell_factor, scaling_profile, smoothed_ball_amplitude,
                              spectral_form)
from selfsim.substitution import spectral_data
from selfsim.tiling import make_window

GL_X, GL_W = np.polynomial.legendre.leggauss(8)


def gl(lo, hi):
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + half * GL_X, half * GL_W


@given(st.floats(-40, 40), st.floats(0.01, 5), st.floats(-3, 3), st.floats(0.3, 4))
@settings(max_examples=200, deadline=None)
def test_cell_factor_against_quad(lo, w, a, s):
    got = float(gauss_cell_factor(lo, lo + w, a, s))
    want = integrate.quad(lambda t: math.exp(-math.pi * (t - a) ** 2 / s ** 2), lo, lo + w,
                          epsabs=0, epsrel=1e-13)[0]
    assert got == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_cell_factor_far_tail_is_relative_accurate():
    # erf(z1) - erf(z0) would cancel to 0 here
    got = float(gauss_cell_factor(12.0, 13.0, 0.0, 1.0))
    want = integrate.quad(lambda t: math.exp(-math.pi * t * t), 12.0, 13.0, epsabs=0, epsrel=1e-12)[0]
    assert want > 0 and got == pytest.approx(want, rel=1e-9)


def test_amplitude_1d_against_quadrature(subs, spectra):
    sub = subs["ab42"]
    f = default_function(sub, spectra["ab42"], checker=True)
    W = make_window(sub, 0, 6)
    R, a = 27.0, 2048.3
    lo, hi, val = f.subcells(W.tiles().types, W.tiles().anchors)
    want = 0.0
    for l, h, v in zip(lo[:, 0], hi[:, 0], val):
        if abs(l - a) < 10 * R:
            x, w = gl(l, h)
            want += v * float(np.sum(w * np.exp(-math.pi * (x - a) ** 2 / R ** 2)))
    assert smoothed_ball_amplitude(f, W, (a,), R) == pytest.approx(want, rel=1e-10, abs=1e-9)


def test_amplitude_2d_against_quadrature(subs, spectra):
    sub = subs["sym95"]
    f = default_function(sub, spectra["sym95"], checker=True)
    W = make_window(sub, 0, 5)
    R, a = 9.0, np.array([121.3, 119.8])
    # oracle on a 4x refined grid with 8x8 Gauss-Legendre per sub-square
    F = f.field(W.raster())
    step = 1.0 / f.G
    reach = 8 * R
    y0, y1 = int((a[1] - reach) / step), int((a[1] + reach) / step)
    x0, x1 = int((a[0] - reach) / step), int((a[0] + reach) / step)
    gx = np.zeros(x1 - x0)
    gy = np.zeros(y1 - y0)
    for arr, start, c in ((gx, x0, a[0]), (gy, y0, a[1])):
        for i in range(len(arr)):
            tot = 0.0
            for q in range(4):
                l = (start + i) * step + q * step / 4
                x, w = gl(l, l + step / 4)
                tot += float(np.sum(w * np.exp(-math.pi * (x - c) ** 2 / R ** 2)))
            arr[i] = tot
    want = float(gy @ F[y0:y1, x0:x1] @ gx)
    assert smoothed_ball_amplitude(f, W, a, R) == pytest.approx(want, rel=1e-10, abs=1e-9)


def test_truncation_tail(subs, spectra):
    sub = subs["sym95"]
    f = default_function(sub, spectra["sym95"])
    W = make_window(sub, 0, 5)
    a = np.array([120.5, 122.25])
    v6 = smoothed_ball_amplitude(f, W, a, 9.0, KernelSpec(tau=6.0))
    v8 = smoothed_ball_amplitude(f, W, a, 9.0, KernelSpec(tau=8.0))
    assert abs(v6 - v8) < 1e-9
    assert KernelSpec(tau=6.0).tail_mass(2) < 1e-40


def test_dilated_kernel_equals_rescaled_radius(subs, spectra):
    sub = subs["ab42"]
    f = default_function(sub, spectra["ab42"])
    W = make_window(sub, 0, 6)
    a = (1900.7,)
    assert smoothed_ball_amplitude(f, W, a, 10.0, KernelSpec().dilated(3.0)) == \
        pytest.approx(smoothed_ball_amplitude(f, W, a, 30.0), rel=1e-14)


@pytest.mark.parametrize("which", ["ab42", "sym95"])
def test_constant_function_gives_c_squared(which):
    sub = builtin(which)
    W = make_window(sub, 0, 6 if which == "ab42" else 5)
    for c in (2.0, -0.5):
        f = CylindricalFunction.constant(sub, (c, c))
        for R in (1.0, 3.0, 9.0):
            est = spectral_form(f, W, R, anchors=16, seed=2)
            assert est.G == pytest.approx(c * c, rel=1e-12)
    zero = CylindricalFunction.constant(sub, (0, 0))
    assert spectral_form(zero, W, 3.0, anchors=16).G == 0.0


def test_anchor_floor(subs):
    W = make_window(subs["ab42"], 0, 6)
    f = CylindricalFunction.constant(subs["ab42"], (1, -1))
    with pytest.raises(InsufficientData):
        spectral_form(f, W, 3.0, anchors=8)


def test_hypothesis_guard(subs, spectra):
    f = default_function(subs["table"], spectra["table"])
    with pytest.raises(HypothesisViolated):
        check_hypothesis(spectra["table"], f)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert check_hypothesis(spectra["table"], f, allow_violation=True) is False
    assert rec
    biased = CylindricalFunction.constant(subs["ab42"], (1.0, 0.0))
    with pytest.raises(ValueError):
        check_hypothesis(spectra["ab42"], biased)
    assert expected_slope(spectra["ab42"]) == pytest.approx(-1.0)
    assert expected_slope(spectra["table"]) is None


def test_scaling_profile_short_ab42(subs, spectra):
    sub, sd = subs["ab42"], spectra["ab42"]
    W = make_window(sub, 0, 8)
    prof = scaling_profile(default_function(sub, sd), W, sd, range(1, 6), anchors=32, seed=4)
    assert prof.fit.slope == pytest.approx(-1.0, abs=0.3)
    assert all(r.value > 0 for r in prof.series.rows)


def test_eta_profile_is_monotone(subs, spectra):
    sub, sd = subs["ab42"], spectra["ab42"]
    W = make_window(sub, 0, 8)
    rows = eta_profile(default_function(sub, sd), W, sd, [0.5, 1.0, 2.0, 4.0], 3, anchors=32, seed=1)
    for a, b in zip(rows, rows[1:]):
        assert b.value >= a.value - 3 * max(a.stderr, b.stderr)


def test_correlation_at_zero_lag_is_mean_square(subs, spectra):
    sub, sd = subs["sym95"], spectra["sym95"]
    f = default_function(sub, sd, checker=True)
    W = make_window(sub, 0, 5)
    c = correlation(f, W, (0.0, 0.0), anchors=32, seed=0)
    # (+-1 +- 0.5)^2 averages to 1.25 on every tile
    assert c.value == pytest.approx(1.25, abs=1e-12)


def test_correlation_1d_against_sampling(subs, spectra):
    sub, sd = subs["ab42"], spectra["ab42"]
    f = default_function(sub, sd, checker=True)
    W = make_window(sub, 0, 6)
    p = np.array([[1500.25]] * 16)
    x = 2.3
    got = correlation(f, W, x, anchors=p, block=8.0).value
    lo, hi, val = f.subcells(W.tiles().types, W.tiles().anchors)
    starts = lo[:, 0]
    order = np.argsort(starts)
    u = 1500.25 + (np.arange(80000) + 0.5) / 10000
    F = lambda t: val[order][np.searchsorted(starts[order], t, side="right") - 1]
    assert got == pytest.approx(float(np.mean(F(u) * F(u + x))), abs=2e-3)


def test_correlation_matrix_is_psd(subs, spectra):
    for which, lags in (("ab42", [0.0, 0.7, 1.5, 3.0, 4.25]),
                        ("sym95", [(0, 0), (0.5, 0), (1, 1), (2, -0.5), (0, 3)])):
        sub, sd = subs[which], spectra[which]
        W = make_window(sub, 0, 6 if which == "ab42" else 4)
        C = correlation_matrix(default_function(sub, sd, checker=True), W, lags, anchors=16, seed=3)
        assert np.allclose(C, C.T)
        assert np.linalg.eigvalsh(C).min() > -1e-10


def test_off_grid_lag_rejected(subs, spectra):
    sub, sd = subs["sym95"], spectra["sym95"]
    W = make_window(sub, 0, 4)
    with pytest.raises(ValueError):
        correlation_matrix(default_function(sub, sd), W, [(0.3, 0.0)], anchors=4)
