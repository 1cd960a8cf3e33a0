"""Laurent-polynomial and rational transfer-function algebra.

Filters here are built as non-causal rational functions

    H(z) = B(z) / A(z),    B(z) = sum_m b_m z^m,   m = -K .. K,

centered on the zero shift.  The convention throughout the package: z^{-1}
is the one-sample delay, so the impulse response is h(m) = b_{-m} (the
coefficient array read backwards) and the frequency response is
H(w) = H(e^{iw}) = sum_m h(m) e^{-imw}.

A non-causal H(z) with a symmetric denominator is realized recursively by
splitting it into a forward (causal) part, a backward (anti-causal) part and
a central gain:

    H(z) = B+(z)/A+(z) + b0 + B-(z)/A-(z)

where A+(z) = 1 + sum_{m>=1} a_m z^{-m} collects the poles inside the unit
circle and A-(z) mirrors it.  `three_part_decompose` computes the numerator
parts by solving a banded linear system; all of that algebra runs in mpmath
extended precision and the emitted coefficients are rounded to double.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath as mp

from .errors import DecompositionError, EvalError, SplitError

# Working precision (decimal digits) for the splitting/decomposition algebra.
DESIGN_DPS = 60

# Roots closer than this to the unit circle are treated as marginal.
UNIT_CIRCLE_TOL = 1e-9

_MP_TYPES = (mp.mpf, mp.mpc)


def _is_mp(x) -> bool:
    return isinstance(x, _MP_TYPES)


def _any_mp(coeffs) -> bool:
    return any(_is_mp(c) for c in coeffs)


@dataclass(frozen=True)
class LaurentPoly:
    """Coefficients c_m of sum_m c_m z^m for m = -k .. k, ascending order.

    Coefficients may be floats, complex, or mpmath scalars; arithmetic is
    generic so the same code serves double-precision analysis and
    extended-precision design.
    """

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) % 2 != 1:
            raise ValueError("coefficient array must have odd length 2K+1")

    @property
    def k(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @classmethod
    def const(cls, value=1.0) -> "LaurentPoly":
        return cls((value,))

    @classmethod
    def monomial(cls, m: int, value=1.0) -> "LaurentPoly":
        k = abs(m)
        c = [0.0] * (2 * k + 1)
        c[k + m] = value
        return cls(c)

    @classmethod
    def from_dict(cls, d: dict) -> "LaurentPoly":
        k = max(abs(m) for m in d) if d else 0
        c = [0.0] * (2 * k + 1)
        for m, v in d.items():
            c[k + m] = v
        return cls(c)

    def coeff(self, m: int):
        if abs(m) > self.k:
            return 0.0
        return self.coeffs[self.k + m]

    def padded(self, k: int) -> "LaurentPoly":
        if k < self.k:
            raise ValueError("cannot pad to a smaller half-order")
        extra = [0.0] * (k - self.k)
        return LaurentPoly(tuple(extra) + self.coeffs + tuple(extra))

    def trimmed(self) -> "LaurentPoly":
        """Drop zero outer coefficient pairs (keeps the center)."""
        c = list(self.coeffs)
        k = self.k
        while k > 0 and c[0] == 0 and c[-1] == 0:
            c = c[1:-1]
            k -= 1
        return LaurentPoly(c)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        k = max(self.k, other.k)
        a, b = self.padded(k), other.padded(k)
        return LaurentPoly(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            n = len(self.coeffs) + len(other.coeffs) - 1
            out = [0.0] * n
            for i, ci in enumerate(self.coeffs):
                if ci == 0:
                    continue
                for j, cj in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + ci * cj
            return LaurentPoly(out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, s) -> "LaurentPoly":
        return LaurentPoly(tuple(c * s for c in self.coeffs))

    def shifted(self, j: int) -> "LaurentPoly":
        """Multiply by z^j."""
        if j == 0:
            return self
        k = self.k + abs(j)
        c = [0.0] * (2 * k + 1)
        for m in range(-self.k, self.k + 1):
            c[k + m + j] = self.coeff(m)
        return LaurentPoly(c)

    def diff(self) -> "LaurentPoly":
        """Derivative with respect to z: sum m c_m z^{m-1}."""
        k = self.k + 1
        c = [0.0] * (2 * k + 1)
        for m in range(-self.k, self.k + 1):
            c[k + m - 1] = m * self.coeff(m)
        return LaurentPoly(c).trimmed()

    def flipped(self) -> "LaurentPoly":
        """Substitute z -> 1/z (reverses the coefficient array)."""
        return LaurentPoly(tuple(reversed(self.coeffs)))

    def eval(self, z):
        acc = 0.0
        zp = 1.0
        # positive powers
        for m in range(0, self.k + 1):
            acc = acc + self.coeff(m) * zp
            zp = zp * z
        zi = 1.0 / z
        zp = zi
        for m in range(1, self.k + 1):
            acc = acc + self.coeff(-m) * zp
            zp = zp * zi
        return acc

    def pow(self, n: int) -> "LaurentPoly":
        if n < 0:
            raise ValueError("negative power")
        out = LaurentPoly.const(1.0)
        for _ in range(n):
            out = out * self
        return out

    def max_abs(self) -> float:
        return max(abs(c) for c in self.coeffs)

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        s = self.max_abs() or 1.0
        return all(
            abs(self.coeff(m) - self.coeff(-m)) <= tol * s
            for m in range(1, self.k + 1)
        )

    def is_antisymmetric(self, tol: float = 1e-9) -> bool:
        s = self.max_abs() or 1.0
        if abs(self.coeff(0)) > tol * s:
            return False
        return all(
            abs(self.coeff(m) + self.coeff(-m)) <= tol * s
            for m in range(1, self.k + 1)
        )

    def to_mp(self) -> "LaurentPoly":
        return LaurentPoly(tuple(_to_mp_scalar(c) for c in self.coeffs))

    def to_float(self) -> "LaurentPoly":
        return LaurentPoly(tuple(_to_float_scalar(c) for c in self.coeffs))

    def taps(self) -> tuple:
        """Impulse response h(m) = c_{-m}, m = -k .. k ascending."""
        return tuple(reversed(self.coeffs))


def _to_mp_scalar(c):
    if isinstance(c, mp.mpc) or isinstance(c, complex):
        return mp.mpc(c)
    return mp.mpf(c)


def _to_float_scalar(c):
    if isinstance(c, mp.mpc):
        return complex(c) if abs(mp.im(c)) > 0 else float(mp.re(c))
    if isinstance(c, mp.mpf):
        return float(c)
    return c


@dataclass(frozen=True)
class RationalTF:
    """Transfer function H(z) = num(z)/den(z) of Laurent polynomials."""

    num: LaurentPoly
    den: LaurentPoly

    @classmethod
    def identity(cls) -> "RationalTF":
        return cls(LaurentPoly.const(1.0), LaurentPoly.const(1.0))

    @classmethod
    def fir(cls, num: LaurentPoly) -> "RationalTF":
        return cls(num, LaurentPoly.const(1.0))

    def is_fir(self) -> bool:
        d = self.den.trimmed()
        return d.k == 0

    def cascade(self, other: "RationalTF") -> "RationalTF":
        return RationalTF(self.num * other.num, self.den * other.den)

    def to_mp(self) -> "RationalTF":
        return RationalTF(self.num.to_mp(), self.den.to_mp())

    def to_float(self) -> "RationalTF":
        return RationalTF(self.num.to_float(), self.den.to_float())

    def dc_gain(self):
        return self.num.eval(1.0) / self.den.eval(1.0)


def eval_freq(tf, omega: float) -> complex:
    """Evaluate H(e^{iw}); raises EvalError on (near-)poles.

    Accepts a RationalTF or a ThreePartIIR.  The latter is evaluated part
    by part: recombining it first and evaluating the rational in doubles
    loses accuracy near dc when poles crowd the unit circle, because the
    recombined numerator cancels down to order (1 - p)^{2K} there.
    """
    if isinstance(tf, ThreePartIIR):
        zm = cmath.exp(-1j * omega)
        bp = sum(b * zm**m for m, b in enumerate(tf.b_plus, 1))
        ap = 1.0 + sum(a * zm**m for m, a in enumerate(tf.a_plus, 1))
        fwd = bp / ap
        # real coefficients: the backward part is the (anti)conjugate
        if tf.parity == "sym":
            return fwd + tf.b_zero + fwd.conjugate()
        return fwd - fwd.conjugate()
    if _any_mp(tf.num.coeffs) or _any_mp(tf.den.coeffs):
        z = mp.exp(mp.mpc(0, 1) * omega)
        num = tf.num.eval(z)
        den = tf.den.eval(z)
        scale = tf.den.max_abs()
        if abs(den) <= 1e-12 * scale:
            raise EvalError(f"denominator vanishes on the unit circle at omega={float(omega)}")
        return num / den
    z = cmath.exp(1j * omega)
    num = complex(tf.num.eval(z))
    den = complex(tf.den.eval(z))
    scale = tf.den.max_abs()
    if abs(den) <= 1e-12 * scale:
        raise EvalError(f"denominator vanishes on the unit circle at omega={omega}")
    return num / den


def _taylor_coeffs(poly: LaurentPoly, sign: int, l_max: int, imag_unit):
    """Taylor coefficients of poly(e^{iw}) around w=0 (sign=+1) or w=pi (-1).

    poly(e^{i(w0+u)}) = sum_m c_m (+-1)^m e^{imu}; the l-th Taylor
    coefficient in u is sum_m c_m (+-1)^m (im)^l / l!.
    """
    out = []
    for l in range(l_max + 1):
        acc = 0.0
        for m in range(-poly.k, poly.k + 1):
            c = poly.coeff(m)
            if c == 0:
                continue
            s = 1.0 if (sign > 0 or m % 2 == 0) else -1.0
            acc = acc + c * s * (imag_unit * m) ** l
        out.append(acc / math.factorial(l))
    return out


def dc_derivatives(tf: RationalTF, at: str = "dc", l_max: int = 4):
    """Frequency-response derivatives rho_l = d^l H / dw^l at dc or pi.

    Computed by truncated power-series division of the numerator and
    denominator Taylor expansions (never the literal quotient rule, which
    amplifies pole/zero sensitivity).
    """
    if at not in ("dc", "pi"):
        raise ValueError("at must be 'dc' or 'pi'")
    if l_max > 12:
        raise ValueError("l_max > 12 exceeds the conditioning limit")
    sign = 1 if at == "dc" else -1
    use_mp = _any_mp(tf.num.coeffs) or _any_mp(tf.den.coeffs)
    imag_unit = mp.mpc(0, 1) if use_mp else 1j
    num_t = _taylor_coeffs(tf.num, sign, l_max, imag_unit)
    den_t = _taylor_coeffs(tf.den, sign, l_max, imag_unit)
    scale = tf.den.max_abs() or 1.0
    if abs(den_t[0]) <= 1e-14 * scale:
        raise EvalError(
            f"series division at {at}: leading denominator coefficient vanishes"
        )
    q = [num_t[0] / den_t[0]]
    for l in range(1, l_max + 1):
        acc = num_t[l]
        for j in range(1, l + 1):
            acc = acc - den_t[j] * q[l - j]
        q.append(acc / den_t[0])
    return [math.factorial(l) * q[l] for l in range(l_max + 1)]


# ---------------------------------------------------------------------------
# Forward/backward denominator splitting and the three-part decomposition.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThreePartIIR:
    """Realizable difference-equation coefficients of a non-causal filter.

    y+(n) =  sum_m b_plus[m] x(n-m) - sum_m a_plus[m] y+(n-m)
    y-(n) =  sum_m b_minus[m] x(n+m) - sum_m a_plus[m] y-(n+m)
    y(n)  =  y+(n) + b_zero x(n) + y-(n)

    with b_minus = +b_plus (parity "sym") or -b_plus ("anti"); antisymmetric
    filters have b_zero = 0.  Arrays are indexed m = 1 .. K.
    """

    b_plus: tuple
    a_plus: tuple
    b_zero: float
    parity: str

    def __post_init__(self):
        if self.parity not in ("sym", "anti"):
            raise ValueError("parity must be 'sym' or 'anti'")
        if len(self.b_plus) != len(self.a_plus):
            raise ValueError("b_plus and a_plus must have equal length")
        object.__setattr__(self, "b_plus", tuple(float(v) for v in self.b_plus))
        object.__setattr__(self, "a_plus", tuple(float(v) for v in self.a_plus))
        object.__setattr__(self, "b_zero", float(self.b_zero))
        if self.parity == "anti" and self.b_zero != 0.0:
            raise ValueError("antisymmetric filters must have b_zero = 0")

    @property
    def k(self) -> int:
        return len(self.a_plus)

    @property
    def b_minus(self) -> tuple:
        if self.parity == "sym":
            return self.b_plus
        return tuple(-v for v in self.b_plus)

    @property
    def a_minus(self) -> tuple:
        return self.a_plus

    def to_rational(self) -> RationalTF:
        """Recombine the parts into H(z) = B(z)/A(z) (double precision)."""
        k = self.k
        a_plus = LaurentPoly.from_dict(
            {0: 1.0, **{-m: self.a_plus[m - 1] for m in range(1, k + 1)}}
        ) if k else LaurentPoly.const(1.0)
        a_minus = a_plus.flipped()
        b_plus = LaurentPoly.from_dict(
            {-m: self.b_plus[m - 1] for m in range(1, k + 1)}
        ) if k else LaurentPoly.const(0.0)
        b_minus = LaurentPoly.from_dict(
            {m: self.b_minus[m - 1] for m in range(1, k + 1)}
        ) if k else LaurentPoly.const(0.0)
        num = b_plus * a_minus + self.b_zero * (a_plus * a_minus) + b_minus * a_plus
        den = a_plus * a_minus
        return RationalTF(num.padded(den.k) if num.k < den.k else num, den)


def split_denominator(den: LaurentPoly, tol: float = UNIT_CIRCLE_TOL):
    """Split a symmetric denominator A(z) = a0deg * A+(z) * A-(z).

    A+(z) = 1 + sum_{m=1..K} a_m z^{-m} is built from the roots inside the
    unit circle; A-(z) mirrors it.  Returns (a_plus, a_minus, a_zero) with
    the polynomials in the same scalar flavor as the input.
    """
    use_mp = _any_mp(den.coeffs)
    with mp.workdps(DESIGN_DPS):
        d = den.to_mp().trimmed()
        k = d.k
        if k == 0:
            one = LaurentPoly.const(mp.mpf(1)) if use_mp else LaurentPoly.const(1.0)
            a0 = d.coeff(0) if use_mp else _to_float_scalar(d.coeff(0))
            return one, one.flipped(), a0
        # den(z) = z^{-k} P(z) with P of degree exactly 2k after trimming.
        pcoeffs = [d.coeff(m) for m in range(k, -k - 1, -1)]  # descending powers
        try:
            roots = mp.polyroots(pcoeffs, maxsteps=300, extraprec=2 * mp.mp.prec)
        except mp.libmp.libhyper.NoConvergence as exc:  # pragma: no cover
            raise SplitError(f"root finding failed: {exc}") from exc
        inside = []
        for r in roots:
            dist = abs(abs(r) - 1)
            if dist <= tol:
                raise SplitError(
                    f"marginally stable: root at |z| = {float(abs(r)):.12g} "
                    f"within {tol:g} of the unit circle"
                )
            if abs(r) < 1:
                inside.append(r)
        if len(inside) != k:
            raise SplitError(
                f"asymmetric root multiset: {len(inside)} of {2 * k} roots "
                "inside the unit circle (expected exactly half)"
            )
        # A+(z) = prod_m (1 - p_m z^{-1}): expand in powers z^0 .. z^{-k}.
        acc = [mp.mpc(1)]
        for p in inside:
            nxt = [mp.mpc(0)] * (len(acc) + 1)
            for i, c in enumerate(acc):
                nxt[i] += c
                nxt[i + 1] -= c * p
            acc = nxt
        imag_scale = max(abs(mp.im(c)) for c in acc)
        if imag_scale > mp.mpf(10) ** (-mp.mp.dps // 2):
            raise SplitError("forward factor is not real (unpaired complex roots)")
        a_plus_coeffs = [mp.re(c) for c in acc]  # index j -> coefficient of z^{-j}
        a_plus = LaurentPoly.from_dict({-j: a_plus_coeffs[j] for j in range(k + 1)})
        a_minus = a_plus.flipped()
        prod = a_plus * a_minus
        a_zero = d.coeff(0) / prod.coeff(0)
        # recombination must reproduce the input coefficientwise
        scale = d.max_abs()
        for m in range(-k, k + 1):
            if abs(a_zero * prod.coeff(m) - d.coeff(m)) > 1e-9 * scale:
                raise SplitError("split recombination mismatch (denominator not symmetric?)")
        if use_mp:
            return a_plus, a_minus, a_zero
        return a_plus.to_float(), a_minus.to_float(), float(a_zero)


def _parity_of(poly: LaurentPoly, tol: float = 1e-9) -> str:
    if poly.is_symmetric(tol):
        return "sym"
    if poly.is_antisymmetric(tol):
        return "anti"
    raise DecompositionError("numerator has no definite parity")


def three_part_decompose(tf: RationalTF, parity: str | None = None) -> ThreePartIIR:
    """Solve for the forward/backward/central parts of a non-causal TF.

    Builds the banded system b = Atilde btilde over the stacked unknowns
    [a0 b_K^+, ..., a0 b_1^+, b0, a0 b_1^-, ..., a0 b_K^-] and divides
    through by a0 so the returned coefficients realize H(z) directly.
    """
    with mp.workdps(DESIGN_DPS):
        num = tf.num.to_mp().trimmed()
        den = tf.den.to_mp().trimmed()
        if parity is None:
            parity = _parity_of(num)
        elif parity not in ("sym", "anti"):
            raise ValueError("parity must be 'sym' or 'anti'")
        a_plus_poly, a_minus_poly, a_zero = split_denominator(den)
        k = den.k if den.k >= 1 else num.k
        if k > 8:
            raise DecompositionError(f"half-order {k} exceeds the supported K <= 8")
        if den.k >= 1 and num.k > den.k:
            raise DecompositionError("numerator half-order exceeds denominator half-order")
        n = 2 * k + 1
        ap = [a_plus_poly.coeff(-m) for m in range(k + 1)]   # 1, a1 .. aK
        am = [a_minus_poly.coeff(m) for m in range(k + 1)]   # same values
        apm = a_plus_poly * a_minus_poly
        atil = mp.matrix(n, n)
        for j in range(n):
            if j < k:
                # column for a0*b^+_{k-j}: z^{-(k-j)} * A-(z)
                for t in range(k + 1):
                    atil[j + t, j] = am[t]
            elif j == k:
                for r in range(n):
                    atil[r, k] = apm.coeff(r - k)
            else:
                # column for a0*b^-_{j-k}: z^{+(j-k)} * A+(z)
                for t in range(k + 1):
                    atil[j - t, j] = ap[t]
        rhs = mp.matrix([num.coeff(m) for m in range(-k, k + 1)])
        try:
            btil = mp.lu_solve(atil, rhs)
        except (ZeroDivisionError, ValueError) as exc:
            cond = _condition_estimate(atil)
            raise DecompositionError(
                f"singular three-part system (condition estimate {cond:.3g})"
            ) from exc
        b_plus = [btil[k - m] / a_zero for m in range(1, k + 1)]
        b_minus = [btil[k + m] / a_zero for m in range(1, k + 1)]
        b_zero = btil[k] / a_zero
        scale = max(max((abs(v) for v in b_plus), default=mp.mpf(0)), abs(b_zero), mp.mpf(1e-300))
        sgn = 1 if parity == "sym" else -1
        for bp, bm in zip(b_plus, b_minus):
            if abs(bm - sgn * bp) > 1e-9 * scale:
                raise DecompositionError("solved parts violate the declared parity")
        if parity == "anti":
            if abs(b_zero) > 1e-9 * scale:
                raise DecompositionError("antisymmetric numerator left a central term")
            b_zero = mp.mpf(0)
        # reconstruction check against the original numerator (relative)
        b_plus_poly = LaurentPoly.from_dict(
            {-m: b_plus[m - 1] for m in range(1, k + 1)}
        ) if k else LaurentPoly.const(mp.mpf(0))
        b_minus_poly = LaurentPoly.from_dict(
            {m: b_minus[m - 1] for m in range(1, k + 1)}
        ) if k else LaurentPoly.const(mp.mpf(0))
        recon = (
            b_plus_poly * a_minus_poly
            + b_zero * (a_plus_poly * a_minus_poly)
            + b_minus_poly * a_plus_poly
        )
        nscale = num.max_abs()
        for m in range(-k, k + 1):
            if abs(a_zero * recon.coeff(m) - num.coeff(m)) > 1e-10 * nscale:
                raise DecompositionError("three-part reconstruction mismatch")
        return ThreePartIIR(
            b_plus=tuple(float(v) for v in b_plus),
            a_plus=tuple(float(a_plus_poly.coeff(-m)) for m in range(1, k + 1)),
            b_zero=float(b_zero),
            parity=parity,
        )


def _condition_estimate(atil: "mp.matrix") -> float:
    import numpy as np

    n = atil.rows
    a = np.array([[complex(atil[i, j]) for j in range(n)] for i in range(n)])
    try:
        return float(np.linalg.cond(a))
    except Exception:  # pragma: no cover
        return float("inf")


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def rational_to_json(tf: RationalTF) -> dict:
    k = max(tf.num.k, tf.den.k)
    num = tf.num.padded(k).to_float()
    den = tf.den.padded(k).to_float()
    return {
        "k": k,
        "num": [float(c) for c in num.coeffs],
        "den": [float(c) for c in den.coeffs],
    }


def rational_from_json(obj: dict) -> RationalTF:
    k = int(obj["k"])
    num = obj["num"]
    den = obj["den"]
    if len(num) != 2 * k + 1 or len(den) != 2 * k + 1:
        raise ValueError("coefficient arrays must have length 2K+1")
    return RationalTF(LaurentPoly(num), LaurentPoly(den))


def three_part_to_json(f: ThreePartIIR) -> dict:
    return {
        "b_plus": list(f.b_plus),
        "a_plus": list(f.a_plus),
        "b_zero": f.b_zero,
        "parity": f.parity,
    }


def three_part_from_json(obj: dict) -> ThreePartIIR:
    return ThreePartIIR(
        b_plus=tuple(obj["b_plus"]),
        a_plus=tuple(obj["a_plus"]),
        b_zero=float(obj["b_zero"]),
        parity=obj["parity"],
    )


def save_filter(path: str, f) -> None:
    if isinstance(f, ThreePartIIR):
        obj = three_part_to_json(f)
    elif isinstance(f, RationalTF):
        obj = rational_to_json(f)
    else:  # FirKernel and friends expose to_rational()
        obj = rational_to_json(f.to_rational())
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_filter(path: str):
    """Load either JSON schema; returns RationalTF or ThreePartIIR."""
    with open(path) as fh:
        obj = json.load(fh)
    if "b_plus" in obj:
        return three_part_from_json(obj)
    if "num" in obj and "den" in obj:
        return rational_from_json(obj)
    raise ValueError("unrecognized coefficient JSON (expected num/den or b_plus/a_plus)")
