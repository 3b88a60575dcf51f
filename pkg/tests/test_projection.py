import numpy as np
import pytest
from scipy.optimize import minimize

from gawcga import Element, LqSpace, SmoothSpaceX, best_approximation, g_dictionary, perturbed_approximant
from gawcga.errors import NonConvergence, SlackViolated
from gawcga.projection import _descent, _matrix, _support_union


def lq_objective(f, atoms, q):
    V = _support_union(f, atoms)
    Phi = _matrix(atoms, V)
    fv = f.coefficients_at(V).astype(float)
    return lambda c: np.sum(np.abs(fv - Phi @ c) ** q) ** (1 / q)


def test_coordinate_projection_l2():
    r = best_approximation(LqSpace(2), Element({0: 1, 1: 0.5}), [Element.basis(0)])
    assert r.G == Element({0: 1.0}) and r.E == pytest.approx(0.5)


@pytest.mark.parametrize("q", [1.3, 2.0, 5.0])
def test_basis_span_splits_coordinates(q):
    f = Element({0: 1.0, 1: -2.0, 4: 0.5, 7: 3.0})
    r = best_approximation(LqSpace(q), f, [Element.basis(1), Element.basis(7), -Element.basis(1)])
    assert r.method == "basis"
    assert r.E == pytest.approx((1 + 0.5**q) ** (1 / q), rel=1e-14)


def test_empty_span():
    r = best_approximation(LqSpace(3), Element({2: 2.0}), [])
    assert r.E == 2.0 and r.G.is_zero()


@pytest.mark.parametrize("q", [1.5, 3.0, 4.0])
@pytest.mark.parametrize("seed", range(4))
def test_agrees_with_generic_minimizer(q, seed):
    rng = np.random.default_rng(seed)
    atoms = [Element.from_dense(rng.standard_normal(7)) for _ in range(3)]
    f = Element.from_dense(rng.standard_normal(7))
    r = best_approximation(LqSpace(q), f, atoms)
    obj = lq_objective(f, atoms, q)
    ref = minimize(obj, np.zeros(3), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    assert r.E <= ref.fun + 1e-8
    assert r.E == pytest.approx(ref.fun, rel=1e-6)
    assert r.certificate <= 1e-9


def test_codimension_one_closed_form_matches_descent():
    rng = np.random.default_rng(11)
    f = Element.from_dense(rng.standard_normal(4))
    atoms = [Element.from_dense(rng.standard_normal(4)) for _ in range(3)]
    space = LqSpace(3.0)
    closed = best_approximation(space, f, atoms)
    assert closed.method == "dual-codim1"
    V = _support_union(f, atoms)
    desc = _descent(space, f, atoms, V, _matrix(atoms, V), 1e-10, 100_000)
    assert closed.E == pytest.approx(desc.E, rel=1e-8)
    assert closed.E <= desc.E + 1e-12


def test_l2_least_squares_agrees_with_descent():
    rng = np.random.default_rng(3)
    space = LqSpace(2.0)
    for _ in range(5):
        f = Element.from_dense(rng.standard_normal(8))
        atoms = [Element.from_dense(rng.standard_normal(8)) for _ in range(3)]
        ls = best_approximation(space, f, atoms)
        V = _support_union(f, atoms)
        desc = _descent(space, f, atoms, V, _matrix(atoms, V), 1e-11, 100_000)
        assert ls.E == pytest.approx(desc.E, abs=1e-10)


def test_errors_non_increasing_as_span_grows():
    rng = np.random.default_rng(8)
    space = LqSpace(1.5)
    f = Element.from_dense(rng.standard_normal(6))
    atoms = [Element.from_dense(rng.standard_normal(6)) for _ in range(6)]
    E = [best_approximation(space, f, atoms[:k]).E for k in range(7)]
    assert all(b <= a + 1e-10 for a, b in zip(E, E[1:]))
    assert E[-1] < 1e-10


def test_first_order_certificate_matches_finite_differences():
    rng = np.random.default_rng(21)
    q = 3.0
    space = LqSpace(q)
    f = Element.from_dense(rng.standard_normal(6))
    atoms = [Element.from_dense(rng.standard_normal(6)) for _ in range(2)]
    obj = lq_objective(f, atoms, q)
    c = rng.standard_normal(2)
    G = atoms[0] * c[0] + atoms[1] * c[1]
    F = space.norming_functional(f - G)
    h = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (obj(c + e) - obj(c - e)) / (2 * h)
        assert fd == pytest.approx(-F(atoms[j]), rel=1e-4)


def test_smooth_space_residual_satisfies_annihilation():
    X = SmoothSpaceX(horizon=8)
    D = g_dictionary(X, 7)
    r = best_approximation(X, Element({1: 1.0}), [D.units[k] for k in range(1, 5)])
    F = X.x_norming_functional(r.residual)
    assert max(abs(float(F(D.units[k]))) for k in range(1, 5)) < 1e-40


def test_smooth_space_against_generic_minimizer():
    X = SmoothSpaceX(horizon=6)
    D = g_dictionary(X, 5)
    f = Element({1: 1.0})
    for m in range(1, 5):
        atoms = [D.units[k] for k in range(1, m + 1)]
        r = best_approximation(X, f, atoms)

        def obj(c):
            G = Element.zero()
            for a, v in zip(atoms, c):
                G = G + a * float(v)
            return float(X.x_norm(f - G))

        ref = minimize(obj, np.zeros(m), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 40000})
        assert float(r.E) <= ref.fun + 1e-9
        assert float(r.E) == pytest.approx(ref.fun, rel=1e-5)


def test_descent_reports_failure():
    rng = np.random.default_rng(0)
    space = LqSpace(1.5)
    f = Element.from_dense(rng.standard_normal(9))
    atoms = [Element.from_dense(rng.standard_normal(9)) for _ in range(4)]
    with pytest.raises(NonConvergence) as info:
        best_approximation(space, f, atoms, cert_tol=1e-15, max_iter=2)
    assert info.value.achieved is not None and info.value.iterations <= 2


def test_perturbed_approximant():
    space = LqSpace(2)
    f = Element({1: 0.5, 2: 0.3, 3: 0.3})
    G = Element({1: 0.5})
    E = space.norm(f - G)
    assert perturbed_approximant(space, f, G, E, 0, 0) is G
    spiked = perturbed_approximant(space, f, G, E, 2.0, 0.0, spike=(Element.basis(1), 0.5))
    assert spiked == Element({1: 1.0})
    assert perturbed_approximant(space, f, G, E, 0.0, 0.5, spike=(Element.basis(1), 0.5)) == spiked
    with pytest.raises(SlackViolated):
        perturbed_approximant(space, f, G, E, 0.1, 0.0, spike=(Element.basis(1), 0.5))
