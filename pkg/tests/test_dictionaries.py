import pytest

from gawcga import Element, Functional, LqSpace, SmoothSpaceX, canonical_dictionary, g_dictionary, sup_functional, weak_select
from gawcga.dictionaries import explicit_dictionary, weakest_admissible
from gawcga.errors import HorizonExceeded, WeakSelectionImpossible

L2 = LqSpace(2)


def test_canonical_dictionary_contents():
    D = canonical_dictionary(L2, 1, 3)
    assert len(D) == 3 and D.labels == (1, 2, 3)
    assert {a.describe() for p in range(3) for a in (D.atom(p, 1), D.atom(p, -1))} == {"+1", "-1", "+2", "-2", "+3", "-3"}
    D0 = canonical_dictionary(L2, 0, 0)
    assert D0.units == (Element.basis(0),)
    assert all(L2.norm(u) == 1.0 for u in D.units)


def test_g_dictionary_norms():
    X = SmoothSpaceX(horizon=10)
    D = g_dictionary(X, 9)
    for k in range(1, 10):
        assert float(D.norms[k]) == pytest.approx(2 ** (1 / float(X.p(k + 1))), rel=1e-12)
        assert float(D.norms[k]) < float(D.norms[0])
        assert float(D.norms[k]) <= 2.0
    p2, p3 = float(X.p(2)), float(X.p(3))
    assert float(D.norms[0]) == pytest.approx((1 + 2 ** (p3 / p2)) ** (1 / p3), rel=1e-12)
    assert all(abs(float(X.x_norm(u)) - 1) <= 1e-12 for u in D.units)
    with pytest.raises(HorizonExceeded):
        g_dictionary(X, 10)


def test_sup_functional_examples():
    D = canonical_dictionary(L2, 1, 2)
    val, atom = sup_functional(D, Functional({1: 0.6, 2: 0.8}))
    assert val == pytest.approx(0.8) and atom.label == 2 and atom.sign == 1
    val, atom = sup_functional(D, Functional())
    assert val == 0 and atom.label == 1 and atom.sign == 1
    val, atom = sup_functional(D, Functional({1: -0.9, 2: 0.9}))
    assert atom.label == 1 and atom.sign == -1


def test_sup_functional_matches_enumeration_on_g_dictionary():
    X = SmoothSpaceX(horizon=6)
    D = g_dictionary(X, 5)
    F = X.x_norming_functional(Element({1: 1.0}))
    val, atom = sup_functional(D, F)
    enumerated = max((s * F(u), -p, s) for p, u in enumerate(D.units) for s in (1, -1))
    assert val == enumerated[0]
    assert atom.label == 1
    # raw values tie on g_0 and g_1; normalization makes g_1 win
    assert F(Element({1: 1, 2: 1, 3: 1})) == F(Element({1: 1, 2: 1}))


def test_weak_select_examples():
    D = canonical_dictionary(L2, 1, 2)
    F = Functional({1: 0.6, 2: 0.8})
    assert weak_select(D, F, 1.0, 0.0)[0].label == 2
    e1 = D.atom_by_label(1)
    assert weak_select(D, F, 0.5, 0.0, preference=e1)[0] == e1
    assert weak_select(D, F, 1.0, 0.3, preference=e1)[0] == e1
    assert weak_select(D, F, 1.0, 0.0, preference=e1)[0].label == 2
    with pytest.raises(ValueError):
        weak_select(D, F, 1.5, 0.0)


def test_weak_select_is_always_admissible():
    import numpy as np

    rng = np.random.default_rng(5)
    D = canonical_dictionary(L2, 0, 20)
    for _ in range(300):
        F = Functional(dict(enumerate(rng.standard_normal(21))))
        t, tp = rng.uniform(0, 1), rng.uniform(0, 0.5)
        pref = D.atom(int(rng.integers(21)), int(rng.choice([-1, 1])))
        atom, sup, thr = weak_select(D, F, t, tp, preference=pref)
        assert F(atom.element) >= t * sup - tp


def test_weakest_admissible():
    D = canonical_dictionary(L2, 1, 3)
    F = Functional({1: 0.9, 2: -0.5, 3: 0.1})
    a = weakest_admissible(D, F, 0.45)
    assert a.label == 2 and a.sign == -1
    assert weakest_admissible(D, F, 5.0) is None


def test_explicit_dictionary_normalizes():
    D = explicit_dictionary(L2, [Element({0: 3, 1: 4}), {2: 2.0}])
    assert [L2.norm(u) for u in D.units] == pytest.approx([1.0, 1.0])
    with pytest.raises(ValueError):
        explicit_dictionary(L2, [Element()])


def test_weak_selection_impossible_is_unreachable_for_symmetric():
    D = canonical_dictionary(L2, 0, 2)
    assert weak_select(D, Functional(), 1.0, 0.0)[0].label == 0
    assert issubclass(WeakSelectionImpossible, Exception)
