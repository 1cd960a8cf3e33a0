"""Laurent polynomial algebra, dc derivatives, splitting, decomposition."""

import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmfilt.errors import DecompositionError, EvalError, SplitError
from vmfilt.polyz import (LaurentPoly, RationalTF, ThreePartIIR, dc_derivatives,
                          eval_freq, load_filter, save_filter,
                          split_denominator, three_part_decompose)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False,
                   allow_infinity=False)


def coeff_lists(max_k=4):
    return st.lists(finite, min_size=1, max_size=2 * max_k + 1).filter(
        lambda c: len(c) % 2 == 1)


@given(coeff_lists(), coeff_lists(), st.floats(min_value=-3, max_value=3))
@settings(max_examples=60)
def test_mul_matches_pointwise_product(ca, cb, w):
    a = LaurentPoly(tuple(ca))
    b = LaurentPoly(tuple(cb))
    z = complex(math.cos(w), math.sin(w))
    lhs = (a * b).eval(z)
    scale = max(1.0, abs(a.eval(z)) * abs(b.eval(z)))
    assert abs(lhs - a.eval(z) * b.eval(z)) <= 1e-9 * scale


@given(coeff_lists(), st.integers(min_value=-3, max_value=3))
@settings(max_examples=40)
def test_shift_is_multiplication_by_monomial(c, n):
    a = LaurentPoly(tuple(c))
    z = complex(0.3, 0.7)
    assert abs(a.shifted(n).eval(z) - a.eval(z) * z**n) <= 1e-9 * max(
        1.0, abs(a.eval(z)))


def test_diff_product_rule():
    a = LaurentPoly((1.0, 2.0, 3.0))
    b = LaurentPoly((0.5, -1.0, 0.0, 2.0, 1.5))
    lhs = (a * b).diff()
    rhs = a.diff() * b + a * b.diff()
    k = max(lhs.k, rhs.k)
    assert lhs.padded(k).coeffs == pytest.approx(rhs.padded(k).coeffs,
                                                 abs=1e-12)


def test_parity_predicates():
    assert LaurentPoly((1.0, 2.0, 1.0)).is_symmetric()
    assert LaurentPoly((-1.0, 0.0, 1.0)).is_antisymmetric()
    assert not LaurentPoly((1.0, 0.0, 2.0)).is_symmetric()


def test_eval_freq_on_known_fir():
    # centered first difference (z - z^-1)/2 has response i sin(w)
    tf = RationalTF.fir(LaurentPoly((-0.5, 0.0, 0.5)))
    for w in (0.1, 1.0, 2.5):
        assert eval_freq(tf, w) == pytest.approx(1j * math.sin(w), abs=1e-14)


def test_eval_freq_raises_on_pole():
    tf = RationalTF(num=LaurentPoly.const(1.0),
                    den=LaurentPoly((0.0, 1.0, -1.0)))  # vanishes at dc
    with pytest.raises(EvalError) as err:
        eval_freq(tf, 0.0)
    assert "omega" in str(err.value)


def _direct_moment(c, k, l):
    # sum_m h(m) (-i m)^l with the transfer function storing c_m = h(-m)
    return sum(cm * (1j * m) ** l for m, cm in zip(range(-k, k + 1), c))


@given(coeff_lists(3), st.integers(min_value=0, max_value=8))
@settings(max_examples=60)
def test_dc_derivatives_match_direct_moments(c, l):
    k = (len(c) - 1) // 2
    tf = RationalTF.fir(LaurentPoly(tuple(c)))
    got = dc_derivatives(tf, l_max=l)[l]
    want = _direct_moment(c, k, l)
    assert abs(got - want) <= 1e-11 * max(1.0, abs(want))


@given(st.lists(finite, min_size=1, max_size=4))
@settings(max_examples=40)
def test_symmetric_fir_has_vanishing_odd_derivatives(half):
    c = list(reversed(half[1:])) + list(half)
    tf = RationalTF.fir(LaurentPoly(tuple(c)))
    ders = dc_derivatives(tf, l_max=7)
    scale = max(1.0, max(abs(v) for v in ders))
    for l in (1, 3, 5, 7):
        assert abs(ders[l]) < 1e-11 * scale


@given(st.lists(finite, min_size=2, max_size=4))
@settings(max_examples=40)
def test_antisymmetric_fir_has_vanishing_even_derivatives(half):
    c = [-v for v in reversed(half[1:])] + [0.0] + half[1:]
    tf = RationalTF.fir(LaurentPoly(tuple(c)))
    ders = dc_derivatives(tf, l_max=6)
    scale = max(1.0, max(abs(v) for v in ders))
    for l in (0, 2, 4, 6):
        assert abs(ders[l]) < 1e-11 * scale


def test_dc_derivatives_match_numerical_differentiation():
    # rational case: independent check against high-order numerical
    # differentiation of the frequency response
    den = LaurentPoly((0.25, 1.0, 0.25))
    num = LaurentPoly((0.5, 0.5, 0.5))
    tf = RationalTF(num=num, den=den)
    ders = dc_derivatives(tf, l_max=6)
    with mp.workdps(60):
        numm, denm = num.to_mp(), den.to_mp()

        def response(w):
            z = mp.exp(mp.mpc(0, 1) * w)
            return numm.eval(z) / denm.eval(z)

        for l in range(7):
            want = mp.diff(response, 0, l)
            assert abs(ders[l] - complex(want)) < 1e-10 * max(1.0, abs(want))


def test_pi_derivatives_are_dc_derivatives_of_modulated_filter():
    c = (0.2, -0.4, 1.0, -0.4, 0.2)
    tf = RationalTF.fir(LaurentPoly(c))
    mod = RationalTF.fir(LaurentPoly(tuple(v * (-1) ** m for m, v in
                                           zip(range(-2, 3), c))))
    at_pi = dc_derivatives(tf, "pi", 4)
    at_dc = dc_derivatives(mod, "dc", 4)
    for l in range(5):
        assert abs(at_pi[l] - at_dc[l]) < 1e-12


def _mirror_poly(poles, gain=1.0):
    """gain * prod (1 - p z^-1)(1 - p z) as a LaurentPoly."""
    acc = LaurentPoly.const(gain)
    for p in poles:
        acc = acc * LaurentPoly((-p, 1.0 + p * p, -p))
    return acc


@given(st.lists(st.floats(min_value=0.05, max_value=0.9), min_size=1,
                max_size=3),
       st.floats(min_value=0.2, max_value=5.0))
@settings(max_examples=40, deadline=None)
def test_split_recombines_to_original(poles, gain):
    den = _mirror_poly(poles, gain)
    a_plus, a_minus, a_zero = split_denominator(den)
    recomb = (a_plus * a_minus).scale(a_zero)
    k = max(recomb.k, den.k)
    for c_got, c_want in zip(recomb.padded(k).coeffs, den.padded(k).coeffs):
        assert abs(c_got - c_want) <= 1e-9 * max(1.0, abs(c_want))


def test_split_rejects_pole_on_unit_circle():
    den = _mirror_poly([1.0])
    with pytest.raises(SplitError):
        split_denominator(den)


def test_split_rejects_lopsided_root_multiset():
    # both roots inside the unit circle: cannot mirror into A+ A-
    den = LaurentPoly((0.15, -0.8, 1.0))
    with pytest.raises(SplitError):
        split_denominator(den)


def test_split_handles_repeated_poles():
    den = _mirror_poly([0.6, 0.6, 0.6])
    a_plus, a_minus, a_zero = split_denominator(den)
    recomb = (a_plus * a_minus).scale(a_zero)
    k = max(recomb.k, den.k)
    for c_got, c_want in zip(recomb.padded(k).coeffs, den.padded(k).coeffs):
        assert abs(c_got - c_want) <= 1e-9 * max(1.0, abs(c_want))
    # root locations themselves are only cbrt(eps)-conditioned in doubles
    coeffs = [float(a_plus.coeff(-m)) for m in range(0, a_plus.k + 1)]
    roots = np.roots(coeffs)
    assert np.allclose(sorted(np.abs(roots)), [0.6] * 3, atol=1e-3)


def test_three_part_reconstruction():
    den = _mirror_poly([0.4, 0.75])
    num_half = [2.0, -0.7, 0.3]
    num = LaurentPoly(tuple(reversed(num_half[1:])) + tuple(num_half))
    tf = RationalTF(num=num, den=den)
    f = three_part_decompose(tf)
    back = f.to_rational()
    for wi in np.linspace(-3.0, 3.0, 17):
        want = eval_freq(tf, wi)
        assert abs(eval_freq(back, wi) - want) <= 1e-10 * max(1.0, abs(want))


def test_three_part_rejects_asymmetric_numerator():
    den = _mirror_poly([0.5])
    num = LaurentPoly((1.0, 0.5, 0.2))
    with pytest.raises(DecompositionError):
        three_part_decompose(RationalTF(num=num, den=den))


def test_filter_json_round_trips(tmp_path):
    tf = RationalTF.fir(LaurentPoly((0.25, 0.5, 0.25)))
    path = tmp_path / "fir.json"
    save_filter(str(path), tf)
    back = load_filter(str(path))
    assert back.num.trimmed().coeffs == tf.num.trimmed().coeffs
    assert back.den.trimmed().coeffs == tf.den.trimmed().coeffs

    f = ThreePartIIR(b_plus=(0.1, -0.02), a_plus=(-0.9, 0.2),
                     b_zero=0.4, parity="sym")
    path2 = tmp_path / "iir.json"
    save_filter(str(path2), f)
    assert load_filter(str(path2)) == f


def test_load_filter_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"what": 1}))
    with pytest.raises(ValueError):
        load_filter(str(path))
