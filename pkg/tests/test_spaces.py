import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gawcga import Element, Functional, LqSpace, apply, dual_exponent, lq_norm, lq_norming_functional
from gawcga.errors import ExponentOutOfRange, ZeroElement

exponents = st.floats(1.05, 8.0)
coords = st.dictionaries(st.integers(0, 40), st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=12)


def test_pythagorean_norm_and_functional():
    s = LqSpace(2)
    x = Element({0: 3, 1: 4})
    assert lq_norm(s, x) == 5.0
    F = lq_norming_functional(s, x)
    assert F.to_dict() == pytest.approx({0: 0.6, 1: 0.8}, abs=1e-15)
    assert F(x) == pytest.approx(5.0, rel=1e-15)


def test_zero_norm_and_zero_functional():
    for q in (1.5, 2, 7):
        assert lq_norm(LqSpace(q), Element()) == 0.0
    with pytest.raises(ZeroElement):
        lq_norming_functional(LqSpace(3), Element())


def test_cube_norm_of_ones():
    s = LqSpace(3)
    x = Element({0: 1, 1: 1})
    expected = math.fsum([1.0, 1.0]) ** (1 / 3)
    assert lq_norm(s, x) == pytest.approx(2 ** (1 / 3), rel=1e-15)
    assert lq_norm(s, x) == pytest.approx(expected, rel=1e-15)
    F = lq_norming_functional(s, x)
    assert F.to_dict() == pytest.approx({0: 2 ** (-2 / 3), 1: 2 ** (-2 / 3)}, rel=1e-14)
    assert s.dual_norm(F) == pytest.approx(1.0, rel=1e-14)


def test_basis_functional():
    F = lq_norming_functional(LqSpace(2), Element.basis(7))
    assert F.to_dict() == {7: 1.0}


def test_apply_examples():
    assert apply(Functional({0: 0.6, 1: 0.8}), Element({0: 1})) == pytest.approx(0.6)
    assert apply(Functional(), Element({3: 2.0})) == 0.0
    assert apply(Functional({0: 1, 1: -1}), Element({0: 2, 1: 2})) == 0.0


def test_dual_exponent_examples():
    assert dual_exponent(2) == 2.0
    assert dual_exponent(4 / 3) == pytest.approx(4.0, rel=1e-12)
    p = dual_exponent(1.0001)
    assert p == pytest.approx(10001, rel=1e-9)
    assert 1 / p + 1 / 1.0001 == pytest.approx(1.0, abs=1e-12)
    for bad in (1.0, 0.5, -2.0):
        with pytest.raises(ExponentOutOfRange):
            dual_exponent(bad)
    with pytest.raises(ExponentOutOfRange):
        LqSpace(1.0)


def test_explicit_zero_coefficients_are_ignored():
    assert Element({0: 1.0, 5: 0.0}) == Element({0: 1.0})
    assert hash(Element({0: 1.0, 5: 0.0})) == hash(Element({0: 1.0}))
    assert Element({0: 1.0, 5: 0.0}).support == (0,)


def test_element_validation():
    with pytest.raises(ValueError):
        Element({-1: 1.0})
    with pytest.raises(ValueError):
        Element({0: math.inf})
    with pytest.raises(ValueError):
        Element({0: math.nan})


def test_arithmetic_and_immutability():
    x = Element({0: 1.0, 2: 3.0})
    y = Element({2: -3.0, 4: 1.0})
    assert (x + y) == Element({0: 1.0, 4: 1.0})
    assert (x - x).is_zero()
    assert (2 * x)[2] == 6.0 and (x / 2)[0] == 0.5
    assert x.horizon == 2 and Element().horizon == -1
    with pytest.raises(AttributeError):
        x.indices = None
    with pytest.raises(ValueError):
        x.values[0] = 5.0
    assert np.array_equal(x.dense(3), [1.0, 0.0, 3.0])


@given(exponents)
def test_dual_exponent_involution(q):
    assert dual_exponent(dual_exponent(q)) == pytest.approx(q, rel=1e-12)
    s = LqSpace(q)
    assert 1 / s.p + 1 / s.q == pytest.approx(1.0, abs=1e-12)


@given(exponents, coords, coords, st.floats(-50, 50))
def test_norm_axioms(q, a, b, lam):
    s = LqSpace(q)
    x, y = Element(a), Element(b)
    nx, ny = s.norm(x), s.norm(y)
    assert s.norm(x + y) <= (nx + ny) * (1 + 1e-12) + 1e-300
    assert s.norm(x * lam) == pytest.approx(abs(lam) * nx, rel=1e-12, abs=1e-300)
    assert (nx == 0) == x.is_zero()


@given(exponents, coords, coords)
def test_holder_and_norming_contract(q, a, b):
    s = LqSpace(q)
    x, F = Element(a), Functional(b)
    assert abs(apply(F, x)) <= s.dual_norm(F) * s.norm(x) * (1 + 1e-10) + 1e-300
    if not x.is_zero():
        G = s.norming_functional(x)
        assert G(x) == pytest.approx(s.norm(x), rel=1e-10)
        assert s.dual_norm(G) == pytest.approx(1.0, rel=1e-10)


@given(exponents, coords)
def test_dual_norming_element_inverts_duality(q, b):
    s = LqSpace(q)
    a = Functional(b)
    if a.is_zero():
        return
    x = s.dual_norming_element(a)
    assert s.norm(x) == pytest.approx(1.0, rel=1e-10)
    assert a(x) == pytest.approx(s.dual_norm(a), rel=1e-10)
