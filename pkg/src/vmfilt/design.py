"""Design of FIR and IIR kernels with prescribed vanishing moments.

Every designed filter is pinned down by its frequency-response derivatives
at dc (and optionally at the Nyquist frequency pi): a kernel estimating the
d-th derivative must satisfy

    rho_l(dc) = d^l H / dw^l |_{w=0} = i^d d!  when l = d, else 0,

for all l up to the model order.  Working in derivative space keeps every
family - pure FIR stencils, windowed Gaussians, constrained least-squares
blurs, and rational (recursive) blurs - inside one linear solve:
rho = F c over a small basis.

Construction runs in mpmath extended precision and rounds the final
coefficients to double; float arithmetic appears only in the sampled
Gaussian, which involves no linear algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp

from .errors import DesignError, TruncationError
from .polyz import (
    DESIGN_DPS,
    LaurentPoly,
    RationalTF,
    ThreePartIIR,
    dc_derivatives,
    three_part_decompose,
)

COND_LIMIT = 1e12


@dataclass(frozen=True)
class FirKernel:
    """Finite impulse response h(m), m = -K .. K, estimating derivative d."""

    taps: tuple
    parity: str
    d: int = 0
    system: "ConstraintSystem | None" = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(float(t) for t in self.taps))
        if len(self.taps) % 2 != 1:
            raise ValueError("taps must have odd length 2K+1")
        if self.parity not in ("sym", "anti"):
            raise ValueError("parity must be 'sym' or 'anti'")
        k = self.k
        scale = max(abs(t) for t in self.taps) or 1.0
        sgn = 1.0 if self.parity == "sym" else -1.0
        for m in range(1, k + 1):
            if abs(self.taps[k - m] - sgn * self.taps[k + m]) > 1e-12 * scale:
                raise ValueError(f"taps violate declared parity '{self.parity}'")
        if self.parity == "anti" and abs(self.taps[k]) > 1e-12 * scale:
            raise ValueError("antisymmetric kernel must have zero center tap")
        if self.d == 0 and abs(sum(self.taps) - 1.0) > 1e-12:
            raise ValueError("blur kernel (d=0) must sum to 1")

    @property
    def k(self) -> int:
        return (len(self.taps) - 1) // 2

    def tap(self, m: int) -> float:
        if abs(m) > self.k:
            return 0.0
        return self.taps[self.k + m]

    def to_rational(self) -> RationalTF:
        # H(z) coefficient at z^m is h(-m)
        return RationalTF.fir(LaurentPoly(tuple(reversed(self.taps))))


@dataclass(frozen=True)
class ConstraintSystem:
    """The solved linear system rho = F c behind a designed kernel."""

    f_matrix: tuple          # rows x basis, real entries (i^l divided out)
    rho: tuple               # real targets per row
    c: tuple                 # solved basis coefficients
    rows: tuple              # (l, 'dc'|'pi') per row
    cond: float


@dataclass(frozen=True)
class DesignSpec:
    """Bag of design parameters; `build` dispatches on family."""

    family: str
    sigma: float = 0.0          # pixels; doubles as the scale lambda
    d: int = 0
    D: int = 3                  # model order, odd
    l_pi_bar: int = 2
    k: int | None = None        # FIR support override
    cascade_mode: str = "behind_blur"

    FAMILIES = (
        "interp_diff",
        "gaussian_fir",
        "fir_vm_bank",
        "colored_sg",
        "repeated_pole",
        "butterworth",
        "blunt_exponential",
        "butterworth_appendix",
    )

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown family '{self.family}'")
        if self.D % 2 != 1 or self.D < 1:
            raise ValueError("D must be odd and >= 1")
        if self.l_pi_bar < 0:
            raise ValueError("l_pi_bar must be >= 0")
        if self.family not in ("interp_diff", "fir_vm_bank") and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def l_d(self) -> int:
        return (self.D - 1) // 2


def build(spec: DesignSpec):
    """Construct the filter (or bank) described by a DesignSpec."""
    f = spec.family
    if f == "interp_diff":
        return interp_diff(spec.d)
    if f == "gaussian_fir":
        k = spec.k if spec.k is not None else math.ceil(5 * spec.sigma)
        return gaussian_fir(spec.sigma, spec.d, k)
    if f == "fir_vm_bank":
        return fir_vm_bank(spec.D, spec.l_pi_bar, spec.cascade_mode)
    if f == "colored_sg":
        return colored_sg_blur(spec.sigma, spec.l_d)
    if f == "repeated_pole":
        return repeated_pole_blur(spec.sigma, spec.l_d, spec.l_pi_bar)
    if f == "butterworth":
        return butterworth_blur(spec.sigma, spec.l_d)
    if f == "blunt_exponential":
        return blunt_exponential_blur(spec.sigma, spec.k or 3)
    if f == "butterworth_appendix":
        return butterworth_appendix(spec.sigma)
    raise ValueError(f"unknown family '{f}'")  # pragma: no cover


# ---------------------------------------------------------------------------
# Shared constraint solver
# ---------------------------------------------------------------------------


def _rho_real(tf: RationalTF, l: int, at: str):
    """rho_l / i^l, which is real for parity-definite real filters."""
    r = dc_derivatives(tf, at, l)[l]
    r = r / mp.mpc(0, 1) ** l
    if abs(mp.im(r)) > 1e-20 * (1 + abs(r)):
        raise DesignError("constraint row is not real (parity mismatch)")
    return mp.re(r)


def _solve_system(basis: Sequence[RationalTF], rows, targets):
    """Solve rho = F c for the basis weights; returns (c, ConstraintSystem)."""
    n = len(basis)
    if len(rows) != n:
        raise DesignError(f"non-square constraint system ({len(rows)} x {n})")
    f = mp.matrix(n, n)
    for r, (l, at) in enumerate(rows):
        for c_idx, tf in enumerate(basis):
            f[r, c_idx] = _rho_real(tf, l, at)
    rhs = mp.matrix([mp.mpf(t) for t in targets])
    cond = _cond(f)
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise DesignError(f"ill-conditioned constraint matrix (cond ~ {cond:.3g})")
    try:
        c = mp.lu_solve(f, rhs)
    except (ZeroDivisionError, ValueError) as exc:
        raise DesignError(f"singular constraint matrix (cond ~ {cond:.3g})") from exc
    system = ConstraintSystem(
        f_matrix=tuple(tuple(float(f[r, j]) for j in range(n)) for r in range(n)),
        rho=tuple(float(t) for t in targets),
        c=tuple(float(v) for v in c),
        rows=tuple(rows),
        cond=cond,
    )
    return list(c), system


def _cond(f: "mp.matrix") -> float:
    import numpy as np

    a = np.array([[float(f[i, j]) for j in range(f.cols)] for i in range(f.rows)])
    try:
        return float(np.linalg.cond(a))
    except Exception:  # pragma: no cover
        return float("inf")


def _delay_basis(k: int, delta: int) -> LaurentPoly:
    """Basis element after parity folding: z^{k+D} +- z^{-(k+D)}.

    For delta=0 the k=0 element collapses to the unit impulse (the two
    half-weight delays coincide at m=0).
    """
    s = k + delta
    if s == 0:
        return LaurentPoly.const(mp.mpf(1))
    hi = mp.mpf(1)
    lo = -hi if delta else hi
    return LaurentPoly.from_dict({s: hi, -s: lo})


def _fir_from_combo(c, delta: int, d: int, system) -> FirKernel:
    n = len(c)
    poly = LaurentPoly.const(mp.mpf(0))
    for k, ck in enumerate(c):
        poly = poly + _delay_basis(k, delta).scale(ck)
    k_max = n - 1 + delta
    poly = poly.padded(k_max)
    taps = tuple(float(v) for v in reversed(poly.coeffs))  # h(m) = c_{-m}
    return FirKernel(taps, "anti" if delta else "sym", d, system)


# ---------------------------------------------------------------------------
# FIR families
# ---------------------------------------------------------------------------


def interp_diff(d: int) -> FirKernel:
    """Minimal-support central differentiator of order d.

    Exact on monomials up to degree d; support half-width (d + parity)/2.
    """
    if not 0 <= d <= 8:
        raise ValueError("d must be in 0..8")
    delta = d % 2
    n = (d - delta) // 2 + 1
    with mp.workdps(DESIGN_DPS):
        basis = [RationalTF.fir(_delay_basis(k, delta)) for k in range(n)]
        rows = [(delta + 2 * j, "dc") for j in range(n)]
        targets = [mp.factorial(d) if l == d else mp.mpf(0) for l, _ in rows]
        c, system = _solve_system(basis, rows, targets)
        return _fir_from_combo(c, delta, d, system)


def fir_vm_bank(D: int, l_pi_bar: int = 2, cascade_mode: str = "behind_blur"):
    """Bank of D differentiators (d = 0 .. D-1) with common moment order.

    Every kernel annihilates all monomial moments l < D except its own
    (where the response is exactly d!).  In behind_blur mode no Nyquist
    constraints are imposed and the support is the minimal half-width L_D;
    standalone mode appends l_pi_bar zero-derivative rows at pi, widening
    the support accordingly.
    """
    if D % 2 != 1 or not 3 <= D <= 9:
        raise ValueError("D must be odd, 3 <= D <= 9")
    if cascade_mode not in ("behind_blur", "standalone"):
        raise ValueError("cascade_mode must be 'behind_blur' or 'standalone'")
    l_d = (D - 1) // 2
    kernels = []
    with mp.workdps(DESIGN_DPS):
        for d in range(D):
            delta = d % 2
            l_dc = l_d - delta + 1
            l_pi = 0 if cascade_mode == "behind_blur" else l_pi_bar
            n = l_dc + l_pi
            basis = [RationalTF.fir(_delay_basis(k, delta)) for k in range(n)]
            rows = [(delta + 2 * j, "dc") for j in range(l_dc)]
            rows += [(delta + 2 * j, "pi") for j in range(l_pi)]
            targets = [
                mp.factorial(d) if (l == d and at == "dc") else mp.mpf(0)
                for l, at in rows
            ]
            c, system = _solve_system(basis, rows, targets)
            kernels.append(_fir_from_combo(c, delta, d, system))
    return kernels


def _gauss_poly(d: int, sigma2: float):
    """Coefficients of p_d in g^(d)(x) = (-1)^d sigma^{-2d} p_d(x) g(x)."""
    p = [1.0]
    for _ in range(d):
        # p_{k+1} = x p_k - sigma^2 p_k'
        nxt = [0.0] * (len(p) + 1)
        for i, ci in enumerate(p):
            nxt[i + 1] += ci
            if i >= 1:
                nxt[i - 1] -= sigma2 * i * ci
        p = nxt
    return p


def gaussian_fir(sigma: float, d: int, k: int) -> FirKernel:
    """Windowed sampled Gaussian derivative, renormalized to unity dc blur gain.

    taps(m) = c_g * g^(d)(m) with unit sample spacing; c_g makes the d=0
    kernel sum to exactly 1, and the same constant rescales every
    derivative order.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if d < 0:
        raise ValueError("d must be >= 0")
    if k < math.ceil(3 * sigma):
        raise ValueError("K must be at least ceil(3*sigma)")
    sigma2 = sigma * sigma
    norm = 1.0 / (math.sqrt(2 * math.pi) * sigma)

    def g0(m):
        return norm * math.exp(-m * m / (2 * sigma2))

    # discrete tail mass beyond the window, relative to the full sum
    far = max(k + 1, math.ceil(12 * sigma))
    full = g0(0) + 2 * sum(g0(m) for m in range(1, far + 1))
    win = g0(0) + 2 * sum(g0(m) for m in range(1, k + 1))
    tail = 1.0 - win / full
    if tail > 1e-3:
        raise TruncationError(
            f"window K={k} leaves tail mass {tail:.2e} > 1e-3 for sigma={sigma}"
        )
    c_g = 1.0 / win
    p = _gauss_poly(d, sigma2)
    sgn = (-1.0) ** d / sigma2**d
    taps = []
    for m in range(-k, k + 1):
        pm = 0.0
        for i in reversed(range(len(p))):
            pm = pm * m + p[i]
        taps.append(c_g * sgn * pm * g0(m))
    return FirKernel(tuple(taps), "anti" if d % 2 else "sym", d)


def colored_sg_blur(sigma: float, l_d: int = 1) -> FirKernel:
    """Symmetric blur minimizing stopband (colored) noise gain.

    Minimizes c^T S c, the preserved noise power on [w_c, pi], subject to
    unity dc gain and vanishing even moments up to 2 l_d; solved as a
    saddle-point (Lagrange) system.  Support and cutoff follow the scale:
    K = ceil(5 sigma), w_c = 3/sigma (ceil(7 sigma) for l_d = 2).
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if l_d not in (1, 2):
        raise ValueError("l_d must be 1 or 2")
    k = math.ceil((5 if l_d == 1 else 7) * sigma)
    n = k + 1
    n_rows = l_d + 1
    # stopband Gram matrices shrink exponentially; scale precision with K
    dps = max(DESIGN_DPS, 40 + 2 * k)
    with mp.workdps(dps):
        wc = mp.mpf(3) / mp.mpf(sigma)
        pi = mp.pi

        def sbar(dm: int):
            if dm == 0:
                return (pi - wc) / pi
            return -mp.sin(wc * dm) / (pi * dm)

        sb = [sbar(j) for j in range(2 * k + 1)]
        # fold tap symmetry into the Gram matrix: S = J Sbar J^T
        s = mp.matrix(n, n)
        for k1 in range(n):
            for k2 in range(k1, n):
                if k1 == 0 and k2 == 0:
                    v = sb[0]
                elif k1 == 0:
                    v = 2 * sb[k2]
                else:
                    v = 2 * sb[abs(k1 - k2)] + 2 * sb[k1 + k2]
                s[k1, k2] = v
                s[k2, k1] = v
        f = mp.matrix(n_rows, n)
        for r in range(n_rows):
            l = 2 * r
            for j in range(n):
                if j == 0:
                    f[r, j] = mp.mpf(1) if l == 0 else mp.mpf(0)
                else:
                    f[r, j] = 2 * mp.mpf(j) ** l
        kkt = mp.matrix(n + n_rows, n + n_rows)
        for i in range(n):
            for j in range(n):
                kkt[i, j] = s[i, j]
        for r in range(n_rows):
            for j in range(n):
                kkt[j, n + r] = f[r, j]
                kkt[n + r, j] = f[r, j]
        rhs = mp.matrix(n + n_rows, 1)
        rhs[n, 0] = mp.mpf(1)  # unity dc gain; higher even moments zero
        try:
            sol = mp.lu_solve(kkt, rhs)
        except (ZeroDivisionError, ValueError) as exc:
            raise DesignError("singular saddle-point system") from exc
        c = [sol[j] for j in range(n)]
        taps = [float(c[abs(m)]) for m in range(-k, k + 1)]
        taps[k] = float(c[0])
        # re-center the rounding so the double-precision sum is exactly 1
        taps[k] += 1.0 - (taps[k] + 2 * math.fsum(taps[k + 1 :]))
    return FirKernel(tuple(taps), "sym", 0)


def colored_noise_gain(kernel: FirKernel, wc: float) -> float:
    """c^T S c of a symmetric kernel: preserved noise power on [wc, pi]."""
    k = kernel.k
    total = 0.0
    for m1 in range(-k, k + 1):
        for m2 in range(-k, k + 1):
            dm = m1 - m2
            if dm == 0:
                v = (math.pi - wc) / math.pi
            else:
                v = -math.sin(wc * dm) / (math.pi * dm)
            total += kernel.tap(-m1) * kernel.tap(-m2) * v
    return total


# ---------------------------------------------------------------------------
# IIR families
# ---------------------------------------------------------------------------


def _pole_basis(p, j_max: int):
    """Numerators N_k of the one-sided transforms sum_m m^k p^m z^{-m}.

    F+_k(z) = N_k(z) / B(z)^{k+1} with B = 1 - p z^{-1}, via the derivative
    recurrence N_{k+1} = -z (N' B - (k+1) N B').
    """
    b = LaurentPoly.from_dict({0: mp.mpf(1), -1: -p})
    bprime = LaurentPoly.from_dict({-2: p})  # dB/dz
    z = LaurentPoly.monomial(1, mp.mpf(1))
    nums = [LaurentPoly.const(mp.mpf(1))]
    for k in range(1, j_max):
        n_prev = nums[-1]
        nxt = -(z * (n_prev.diff() * b - k * (n_prev * bprime)))
        nums.append(nxt.trimmed())
    return nums, b


def repeated_pole_tf(sigma: float, l_d: int = 1, l_pi_bar: int = 2) -> RationalTF:
    """Transfer function of the repeated-pole blur (full precision).

    Basis elements are the symmetrized transforms of m^k p^|m| for
    k = 0 .. l_d + l_pi_bar - 1 plus the unit impulse; weights come from the
    dc and Nyquist derivative constraints.  The denominator order is fixed
    at K = l_d + l_pi_bar regardless of sigma.
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if l_d < 1 or l_pi_bar < 0 or l_d + l_pi_bar > 6:
        raise ValueError("need l_d >= 1 and l_d + l_pi_bar <= 6")
    j = l_d + l_pi_bar
    with mp.workdps(DESIGN_DPS):
        p = mp.exp(mp.mpf(-1) / mp.mpf(sigma))
        nums, b = _pole_basis(p, j)
        bbar = b.flipped()
        common = (b * bbar).pow(j)
        basis = []
        for k, nk in enumerate(nums):
            jk = k + 1
            fwd = nk * bbar.pow(jk) * (b * bbar).pow(j - jk)
            num = fwd + fwd.flipped()
            if k == 0:
                num = num - common  # forward IR of k=0 double-counts m=0
            basis.append(RationalTF(num.padded(common.k), common))
        basis.append(RationalTF(common, common))  # unit impulse element
        rows = [(2 * r, "dc") for r in range(l_d + 1)]
        rows += [(2 * r, "pi") for r in range(l_pi_bar)]
        targets = [mp.mpf(1) if (l == 0 and at == "dc") else mp.mpf(0) for l, at in rows]
        c, _ = _solve_system(basis, rows, targets)
        num = LaurentPoly.const(mp.mpf(0))
        for ck, tf in zip(c, basis):
            num = num + tf.num.scale(ck)
        return RationalTF(num.padded(common.k), common)


def repeated_pole_blur(sigma: float, l_d: int = 1, l_pi_bar: int = 2) -> ThreePartIIR:
    """Realizable form of repeated_pole_tf: all poles at p = exp(-1/sigma)."""
    return three_part_decompose(repeated_pole_tf(sigma, l_d, l_pi_bar), "sym")


def _butterworth_tf(wc, l_b: int) -> RationalTF:
    """Bilinear-transform Butterworth low-pass, centered on zero shift."""
    zp1 = LaurentPoly.from_dict({1: mp.mpf(1), 0: mp.mpf(1)})
    zm1 = LaurentPoly.from_dict({1: mp.mpf(1), 0: mp.mpf(-1)})
    num = zp1.pow(l_b).scale(wc**l_b)
    den = num + zm1.pow(l_b).scale((-1) ** (l_b // 2) * mp.mpf(2) ** l_b)
    h = l_b // 2
    return RationalTF(num.shifted(-h).trimmed(), den.shifted(-h).trimmed())


def butterworth_tf(sigma: float, l_d: int = 1) -> RationalTF:
    """Butterworth low-pass of order 2(l_d + 1), half-gain matched.

    The cutoff sqrt(2 log 2)/sigma is where a continuous Gaussian of scale
    sigma falls to half amplitude; no frequency pre-warping.
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if l_d < 1:
        raise ValueError("l_d must be >= 1")
    l_b = 2 * (l_d + 1)
    with mp.workdps(DESIGN_DPS):
        wc = mp.sqrt(2 * mp.log(2)) / mp.mpf(sigma)
        return _butterworth_tf(wc, l_b)


def butterworth_blur(sigma: float, l_d: int = 1) -> ThreePartIIR:
    """Realizable form of butterworth_tf."""
    return three_part_decompose(butterworth_tf(sigma, l_d), "sym")


def butterworth_cutoff(sigma: float) -> float:
    return float(math.sqrt(2 * math.log(2)) / sigma)


def blunt_exponential_blur(lam: float, k: int = 3) -> ThreePartIIR:
    """Blur built from K cascaded blunted two-sided exponentials.

    Each stage is (z^{-1} + 2 + z)/((1 - p z^{-1})(1 - p z)) with
    p = exp(-1/lambda); the leading constant normalizes the dc gain to 1.
    The numerator zeros at z = -1 null the response at Nyquist.
    """
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    return blunt_exponential_from_pole(math.exp(-1.0 / lam), k)


def blunt_exponential_tf(p: float, k: int = 3) -> RationalTF:
    """Transfer function of K cascaded blunted two-sided exponentials."""
    if not 0 < p < 1:
        raise ValueError("pole must satisfy 0 < p < 1")
    if not 1 <= k <= 4:
        raise ValueError("K must be in 1..4")
    with mp.workdps(DESIGN_DPS):
        pp = mp.mpf(p)
        c0 = ((1 - pp) ** 2 / 4) ** k
        num = LaurentPoly.from_dict({-1: mp.mpf(1), 0: mp.mpf(2), 1: mp.mpf(1)}).pow(k)
        den = LaurentPoly.from_dict({-1: -pp, 0: 1 + pp * pp, 1: -pp}).pow(k)
        return RationalTF(num.scale(c0), den)


def blunt_exponential_from_pole(p: float, k: int = 3) -> ThreePartIIR:
    """Same as blunt_exponential_blur but parameterized by the pole p."""
    return three_part_decompose(blunt_exponential_tf(p, k), "sym")


def butterworth_appendix_tf(lam: float) -> RationalTF:
    """Sixth-order Butterworth low-pass with cutoff 1/lambda."""
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    with mp.workdps(DESIGN_DPS):
        return _butterworth_tf(mp.mpf(1) / mp.mpf(lam), 6)


def butterworth_appendix(lam: float) -> ThreePartIIR:
    """Realizable form of butterworth_appendix_tf."""
    return three_part_decompose(butterworth_appendix_tf(lam), "sym")
