"""Characterization instruments: moment tables, response grids, steering.

The moment table and the dc-derivative route measure the same thing two
ways: for a kernel estimating the d-th derivative,

    entry(l, d) = i^{l-d} (1/d!) sum_m m^l h_d(-m) = rho_l / (i^d d!),

so a vanishing-moment bank reports the identity matrix, and any deviation
is the truncation/leakage error of the realized kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import FirKernel
from .engine import impulse_response
from .polyz import RationalTF, ThreePartIIR, eval_freq


def _as_evaluable(f):
    """Form accepted by eval_freq; recursive filters stay in parallel form."""
    if isinstance(f, (RationalTF, ThreePartIIR)):
        return f
    return f.to_rational()


def _taps_of(f):
    """(taps h(m), half-width, derivative order) of a FIR or truncated IIR."""
    if isinstance(f, FirKernel):
        return np.asarray(f.taps), f.k, f.d
    if isinstance(f, ThreePartIIR):
        h = impulse_response(f)
        return h, (h.size - 1) // 2, 0
    raise TypeError(f"unsupported filter type {type(f).__name__}")


@dataclass(frozen=True)
class MomentReport:
    table: np.ndarray      # rows l, columns per filter order
    orders: tuple          # derivative order of each column
    extent: int            # largest |m| included in the sums
    max_dev: float         # max |complex entry - delta_{d,l}|

    def entry(self, l: int, d: int) -> float:
        return float(self.table[l, self.orders.index(d)])


def moment_table(h, order: int) -> MomentReport:
    """Moment matrix of a kernel or bank up to moment order-1."""
    bank = list(h) if isinstance(h, (list, tuple)) else [h]
    cols = []
    orders = []
    extent = 0
    for f in bank:
        taps, k, d = _taps_of(f)
        cols.append((taps, k))
        orders.append(d)
        extent = max(extent, k)
    table = np.zeros((order, len(cols)))
    max_dev = 0.0
    for c, ((taps, k), d) in enumerate(zip(cols, orders)):
        m = np.arange(-k, k + 1, dtype=np.float64)
        rev = taps[::-1]  # h(-m), aligned with ascending m
        for l in range(order):
            mu = float(np.dot(m**l, rev)) / math.factorial(d)
            val = 1j ** ((l - d) % 4) * mu
            table[l, c] = val.real
            max_dev = max(max_dev, abs(val - (1.0 if l == d else 0.0)))
    return MomentReport(table, tuple(orders), extent, max_dev)


FREQ_HEADER_1D = ("omega", "abs_h", "re_h", "im_h")
FREQ_HEADER_2D = ("omega_x", "omega_y", "abs_h", "re_h", "im_h")


def freq_grid(f, n_points: int = 256, dims: int = 1) -> np.ndarray:
    """Frequency response sampled on a uniform grid over [-pi, pi]^dims."""
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    tf = _as_evaluable(f)
    w = np.linspace(-math.pi, math.pi, n_points)
    h = np.array([eval_freq(tf, wi) for wi in w])
    if dims == 1:
        return np.column_stack([w, np.abs(h), h.real, h.imag])
    if dims == 2:
        rows = []
        for wy, hy in zip(w, h):
            prod = h * hy
            rows.append(np.column_stack(
                [w, np.full_like(w, wy), np.abs(prod), prod.real, prod.imag]
            ))
        return np.concatenate(rows)
    raise ValueError("dims must be 1 or 2")


def isotropy_score(f_x, f_y, radii: Sequence[float], n_angles: int = 256):
    """Angular ripple of |H(w_x) H(w_y)| on circles of radius r.

    Returns [(r, (max-min)/mean)]; 0 means perfectly isotropic at that
    radial frequency.
    """
    tf_x, tf_y = _as_evaluable(f_x), _as_evaluable(f_y)
    out = []
    theta = np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)
    for r in radii:
        if not 0 < r < math.pi:
            raise ValueError("radii must lie in (0, pi)")
        vals = np.array([
            abs(eval_freq(tf_x, r * math.cos(t)) * eval_freq(tf_y, r * math.sin(t)))
            for t in theta
        ])
        mean = float(vals.mean())
        out.append((float(r), float((vals.max() - vals.min()) / mean)))
    return out


def steer_matrix(d: int, phi: float) -> np.ndarray:
    """Linear map from raw to steered order-d coefficients.

    Index j within an order-d group addresses the (d-j, j) mixed term.
    Rotating the measurement frame by phi sends each raw monomial
    x^{d-j} y^j to (X cos phi - Y sin phi)^{d-j} (X sin phi + Y cos phi)^j;
    binomial bookkeeping is exact, trigonometry enters only at the end.
    """
    c, s = math.cos(phi), math.sin(phi)
    m = np.zeros((d + 1, d + 1))
    for j in range(d + 1):
        a, b = d - j, j
        for u in range(a + 1):
            for v in range(b + 1):
                coeff = (
                    math.comb(a, u) * math.comb(b, v)
                    * c**u * (-s) ** (a - u) * s**v * c ** (b - v)
                )
                m[d - (u + v), j] += coeff
    return m


def steer(beta: Sequence[Sequence[float]], phi: float):
    """Steer per-order coefficient groups to a frame rotated by phi."""
    out = []
    for d, group in enumerate(beta):
        g = np.asarray(group, dtype=np.float64)
        if g.size != d + 1:
            raise ValueError(f"order-{d} group must have {d + 1} entries")
        out.append(steer_matrix(d, phi) @ g)
    return out


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.asarray(rows):
            fh.write(",".join("%.17g" % v for v in row) + "\n")
