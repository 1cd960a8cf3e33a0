"""Separable application engine: convolution, recursion, initialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmfilt.design import gaussian_fir, interp_diff, repeated_pole_blur
from vmfilt.engine import (SeparableFilter, apply_cols, apply_rows,
                           apply_separable, conv_cols, conv_rows, crop_border,
                           derivative_field, iir_rows, impulse_response,
                           max_threads, set_threads)
from vmfilt.errors import StabilityError
from vmfilt.polyz import ThreePartIIR

BLUR = repeated_pole_blur(4.0)
FIR_BLUR = gaussian_fir(1.5, 0, 8)


def _rand_image(seed, shape=(16, 24)):
    return np.random.default_rng(seed).standard_normal(shape)


@given(st.integers(0, 10**6), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_linearity(seed, alpha, beta):
    x1 = _rand_image(seed)
    x2 = _rand_image(seed + 1)
    for stage in (FIR_BLUR, BLUR):
        lhs = apply_rows(alpha * x1 + beta * x2, stage)
        rhs = alpha * apply_rows(x1, stage) + beta * apply_rows(x2, stage)
        scale = max(1.0, np.abs(rhs).max())
        assert np.abs(lhs - rhs).max() <= 1e-10 * scale


def test_shift_equivariance_interior():
    x = _rand_image(7, (20, 40))
    shifted = np.empty_like(x)
    shifted[:, 1:] = x[:, :-1]
    shifted[:, 0] = x[:, 0]
    k = FIR_BLUR.k
    y = conv_rows(x, FIR_BLUR)
    ys = conv_rows(shifted, FIR_BLUR)
    assert np.array_equal(ys[:, k + 2:-k], y[:, k + 1:-k - 1])


def test_constant_image_invariance_everywhere():
    x = np.full((20, 31), 3.7)
    for stage in (FIR_BLUR, BLUR):
        y = apply_cols(apply_rows(x, stage), stage)
        assert np.abs(y - 3.7).max() < 1e-10


def test_fir_iir_agreement_interior():
    f = repeated_pole_blur(1.5)
    h = impulse_response(f)  # adaptive length, tail below 1e-14
    k = (h.size - 1) // 2
    x = _rand_image(3, (16, 2 * k + 40))
    got = iir_rows(x, f)
    want = np.empty_like(x)
    for r in range(x.shape[0]):
        want[r] = np.convolve(x[r], h, mode="same")
    interior = (slice(None), slice(k, -k))
    assert np.abs(got[interior] - want[interior]).max() < 1e-8


def _tdf2_filter(b, a, x, w0):
    """Transposed direct-form II with explicit initial states."""
    k = len(a) - 1
    w = [float(v) for v in w0]
    y = np.empty_like(x)
    for n, xn in enumerate(x):
        yn = b[0] * xn + w[0]
        for j in range(k - 1):
            w[j] = b[j + 1] * xn - a[j + 1] * yn + w[j + 1]
        w[k - 1] = b[k] * xn - a[k] * yn
        y[n] = yn
    return y


def _init_matrix(b, a):
    b1, b2, b3 = b[1], b[2], b[3]
    a1, a2, a3 = a[1], a[2], a[3]
    return np.array([
        [b1, b2, b3],
        [b2, b3 + a1 * b2 - a2 * b1, a1 * b3 - a3 * b1],
        [b3, a1 * b3 - a3 * b1, a2 * b3 - a3 * b2],
    ])


def _reference_noncausal(f, x):
    """Forward + central + backward reference with steady-state init.

    The one-sided states start at the step response of each section to
    the first (or last) sample, mapped into transposed-form coordinates.
    """
    b = [0.0, *f.b_plus]
    a = [1.0, *f.a_plus]
    t = _init_matrix(b, a)
    gain = 1.0 + sum(f.a_plus)
    fwd = _tdf2_filter(b, a, x, t @ (np.ones(3) * x[0] / gain))
    bwd = _tdf2_filter(b, a, x[::-1], t @ (np.ones(3) * x[-1] / gain))[::-1]
    return fwd + f.b_zero * x + bwd


@pytest.mark.parametrize("levels", [(2.0, 5.0), (4.0, -1.0), (0.0, 1.0)])
def test_recursion_matches_transposed_form_on_steps(levels):
    lo, hi = levels
    x = np.array([lo] * 25 + [hi] * 25)
    f = repeated_pole_blur(4.0)
    want = _reference_noncausal(f, x)
    got = iir_rows(np.vstack([x, x]), f)
    assert np.abs(got[0] - want).max() < 1e-10
    assert np.abs(got[1] - want).max() < 1e-10


def test_thread_count_does_not_change_output():
    x = _rand_image(11, (40, 40))
    set_threads(1)
    y1 = apply_rows(x, BLUR)
    c1 = conv_rows(x, FIR_BLUR)
    set_threads(max_threads())
    y2 = apply_rows(x, BLUR)
    c2 = conv_rows(x, FIR_BLUR)
    assert np.array_equal(y1, y2)
    assert np.array_equal(c1, c2)


def test_unstable_filter_is_refused():
    bad = ThreePartIIR(b_plus=(0.5,), a_plus=(-1.5,), b_zero=0.2,
                       parity="sym")
    with pytest.raises(StabilityError):
        iir_rows(np.zeros((4, 16)), bad)


def test_row_too_short_for_recursion():
    with pytest.raises(ValueError):
        iir_rows(np.zeros((2, 6)), BLUR)  # needs 2K+1 = 7 samples


def test_impulse_response_matches_row_filtering():
    f = repeated_pole_blur(2.0)
    n = 101
    x = np.zeros((1, n))
    x[0, n // 2] = 1.0
    y = iir_rows(x, f)[0]
    h = impulse_response(f, half_len=n // 2)
    assert np.abs(y - h).max() < 1e-12


def test_stage_order_is_immaterial():
    x = _rand_image(5, (128, 128))
    iir = repeated_pole_blur(2.0)
    a = apply_cols(apply_rows(x, FIR_BLUR), iir)
    b = apply_rows(apply_cols(x, iir), FIR_BLUR)
    k = 54  # FIR half-width plus the recursive border transient extent
    interior = (slice(k, -k), slice(k, -k))
    assert np.abs(a[interior] - b[interior]).max() < 1e-10


def test_separable_outer_product_impulse():
    n = 33
    x = np.zeros((n, n))
    x[n // 2, n // 2] = 1.0
    hx = interp_diff(1)
    hy = gaussian_fir(1.0, 0, 4)
    y = apply_separable(x, SeparableFilter(hx, hy, (1, 0)))
    tx = np.zeros(n)
    tx[n // 2 - hx.k:n // 2 + hx.k + 1] = hx.taps
    ty = np.zeros(n)
    ty[n // 2 - hy.k:n // 2 + hy.k + 1] = hy.taps
    # y(r, c) = hy(r - c0) hx(c - c0) for the centered impulse
    want = np.outer(ty, tx)
    assert np.abs(y - want).max() < 1e-14


def test_derivative_field_on_quadratic_surface():
    n = 64
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    img = 0.5 * xx**2 - xx * yy + 3.0 * xx
    lpf = gaussian_fir(1.5, 0, 8)
    field = derivative_field(img, lpf, order=3)
    c = slice(20, n - 20)
    assert np.abs(field[(2, 0)][c, c] - 1.0).max() < 1e-8
    assert np.abs(field[(1, 1)][c, c] + 1.0).max() < 1e-8
    assert np.abs(field[(0, 2)][c, c]).max() < 1e-8
    want_dx = (xx - yy + 3.0)[c, c]
    assert np.abs(field[(1, 0)][c, c] - want_dx).max() < 1e-7


def test_crop_border():
    x = _rand_image(2, (10, 12))
    assert crop_border(x, 3).shape == (4, 6)
    with pytest.raises(ValueError):
        crop_border(x, 6)
