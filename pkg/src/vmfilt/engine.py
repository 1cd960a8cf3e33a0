"""Separable 2-D filtering: row/column convolution and three-pass recursion.

Images are float64 numpy arrays, row-major, indexed [y, x].  A separable
filter runs as an x-stage along rows followed by a y-stage along columns;
column passes reuse the row kernels through a transpose round-trip so FIR
and IIR stages see identical memory behavior.

FIR passes replicate the edge pixel outside the frame.  IIR passes run the
forward and backward recursions with direct-form-II states initialized to
the steady state of a step at the first-seen pixel, so a constant image is
reproduced exactly from the very first output pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from .design import FirKernel, fir_vm_bank
from .errors import StabilityError
from .polyz import ThreePartIIR


def set_threads(n: int) -> None:
    numba.set_num_threads(n)


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


@njit(parallel=True, cache=True)
def _conv_rows_kernel(x, taps, out):
    h, w = x.shape
    k = (taps.size - 1) // 2
    for i in prange(h):
        for n in range(k, w - k):
            acc = 0.0
            for m in range(-k, k + 1):
                acc += taps[k + m] * x[i, n - m]
            out[i, n] = acc
        for n in range(k):
            acc = 0.0
            for m in range(-k, k + 1):
                j = n - m
                if j < 0:
                    j = 0
                acc += taps[k + m] * x[i, j]
            out[i, n] = acc
        for n in range(w - k, w):
            acc = 0.0
            for m in range(-k, k + 1):
                j = n - m
                if j < 0:
                    j = 0
                elif j >= w:
                    j = w - 1
                acc += taps[k + m] * x[i, j]
            out[i, n] = acc


@njit(parallel=True, cache=True)
def _iir_rows_kernel(x, b_plus, a_plus, b_zero, b_sign, out):
    h, w = x.shape
    k = a_plus.size
    for i in prange(h):
        asum = 1.0
        for m in range(k):
            asum += a_plus[m]
        s = np.empty(k, dtype=np.float64)
        # forward: s holds w(n-1) .. w(n-k); all states start at the
        # steady state of a step of the first pixel
        w0 = x[i, 0] / asum
        for m in range(k):
            s[m] = w0
        for n in range(w):
            wn = x[i, n]
            acc = b_zero * x[i, n]
            for m in range(k):
                wn -= a_plus[m] * s[m]
                acc += b_plus[m] * s[m]
            out[i, n] = acc
            for m in range(k - 1, 0, -1):
                s[m] = s[m - 1]
            s[0] = wn
        # backward: mirror recursion, b- = b_sign * b+
        w0 = x[i, w - 1] / asum
        for m in range(k):
            s[m] = w0
        for n in range(w - 1, -1, -1):
            wn = x[i, n]
            acc = 0.0
            for m in range(k):
                wn -= a_plus[m] * s[m]
                acc += b_plus[m] * s[m]
            out[i, n] += b_sign * acc
            for m in range(k - 1, 0, -1):
                s[m] = s[m - 1]
            s[0] = wn


def _as_image(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("image must be a 2-D array")
    return np.ascontiguousarray(a)


def conv_rows(img, kernel: FirKernel) -> np.ndarray:
    x = _as_image(img)
    taps = np.asarray(kernel.taps, dtype=np.float64)
    if taps.size > x.shape[1]:
        raise ValueError(
            f"kernel length {taps.size} exceeds row length {x.shape[1]}"
        )
    out = np.empty_like(x)
    _conv_rows_kernel(x, taps, out)
    return out


def conv_cols(img, kernel: FirKernel) -> np.ndarray:
    x = _as_image(img)
    return np.ascontiguousarray(conv_rows(x.T, kernel).T)


def stability_margin(f: ThreePartIIR) -> float:
    """1 - max |pole|; positive for a usable recursion."""
    if f.k == 0:
        return 1.0
    roots = np.roots(np.concatenate(([1.0], np.asarray(f.a_plus))))
    return float(1.0 - np.max(np.abs(roots))) if roots.size else 1.0


def iir_rows(img, f: ThreePartIIR) -> np.ndarray:
    x = _as_image(img)
    if x.shape[1] < 2 * f.k + 1:
        raise ValueError(f"row length {x.shape[1]} < 2K+1 = {2 * f.k + 1}")
    if stability_margin(f) <= 0.0:
        raise StabilityError("recursion has a pole on or outside the unit circle")
    out = np.empty_like(x)
    sign = 1.0 if f.parity == "sym" else -1.0
    _iir_rows_kernel(
        x,
        np.asarray(f.b_plus, dtype=np.float64),
        np.asarray(f.a_plus, dtype=np.float64),
        f.b_zero,
        sign,
        out,
    )
    return out


def iir_cols(img, f: ThreePartIIR) -> np.ndarray:
    x = _as_image(img)
    return np.ascontiguousarray(iir_rows(x.T, f).T)


def apply_rows(img, stage) -> np.ndarray:
    if isinstance(stage, FirKernel):
        return conv_rows(img, stage)
    if isinstance(stage, ThreePartIIR):
        return iir_rows(img, stage)
    raise TypeError(f"unsupported stage type {type(stage).__name__}")


def apply_cols(img, stage) -> np.ndarray:
    if isinstance(stage, FirKernel):
        return conv_cols(img, stage)
    if isinstance(stage, ThreePartIIR):
        return iir_cols(img, stage)
    raise TypeError(f"unsupported stage type {type(stage).__name__}")


@dataclass(frozen=True)
class SeparableFilter:
    """A 2-D filter as an x-stage (rows) and a y-stage (columns)."""

    x_stage: object
    y_stage: object
    label: tuple = (0, 0)  # (d_x, d_y)


def apply_separable(img, f: SeparableFilter) -> np.ndarray:
    return apply_cols(apply_rows(img, f.x_stage), f.y_stage)


@dataclass
class DerivativeField:
    """Bank of smoothed derivative images D[(d_x, d_y)]."""

    images: dict
    order: int
    sigma: float = 0.0

    def __getitem__(self, key):
        return self.images[key]

    def __contains__(self, key):
        return key in self.images


def derivative_field(img, lpf, order: int = 3, sigma: float = 0.0,
                     keep_all: bool = False) -> DerivativeField:
    """Blur once per axis, then apply the small differentiator bank.

    The shared blur is the expensive part; every (d_x, d_y) output reuses
    it through cheap minimal-support stencils.  Pairs with
    d_x + d_y >= order are skipped unless keep_all is set.
    """
    if order % 2 != 1:
        raise ValueError("order must be odd")
    blurred = apply_cols(apply_rows(img, lpf), lpf)
    bank = fir_vm_bank(order, cascade_mode="behind_blur")
    images = {}
    for dx in range(order):
        for dy in range(order):
            if dx + dy >= order and not keep_all:
                continue
            out = blurred
            if dx:
                out = conv_rows(out, bank[dx])
            if dy:
                out = conv_cols(out, bank[dy])
            images[(dx, dy)] = out
    return DerivativeField(images, order, sigma)


def impulse_response(f: ThreePartIIR, half_len: int | None = None) -> np.ndarray:
    """Centered impulse response h(m), m = -N .. N.

    With half_len=None the response is extended until it decays below
    1e-14 of its peak (error if it never does).
    """
    if stability_margin(f) <= 0.0:
        raise StabilityError("impulse response of an unstable recursion")
    k = f.k
    b_plus = np.asarray(f.b_plus)
    a_plus = np.asarray(f.a_plus)
    sign = 1.0 if f.parity == "sym" else -1.0

    def causal(n):
        h = np.zeros(n + 1)
        for m in range(1, n + 1):
            acc = b_plus[m - 1] if m <= k else 0.0
            for j in range(1, min(k, m) + 1):
                acc -= a_plus[j - 1] * h[m - j]
            h[m] = acc
        return h

    if half_len is not None:
        hp = causal(half_len)
    else:
        n = 64
        while True:
            hp = causal(n)
            peak = max(np.max(np.abs(hp)), abs(f.b_zero))
            if np.max(np.abs(hp[-k - 1 :])) < 1e-14 * peak:
                break
            n *= 2
            if n > 1 << 22:
                raise StabilityError("impulse response does not decay")
        half_len = n
    out = np.empty(2 * half_len + 1)
    out[half_len] = f.b_zero
    out[half_len + 1 :] = hp[1:]
    out[:half_len] = sign * hp[1:][::-1]
    return out


def crop_border(img, n: int) -> np.ndarray:
    if n <= 0:
        return img
    if 2 * n >= min(img.shape):
        raise ValueError("crop larger than image")
    return img[n:-n, n:-n]
