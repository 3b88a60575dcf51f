"""Best approximation of an element from the span of finitely many atoms.

Strategies, tried in order:

* empty span, or a span of scaled basis vectors in a lattice norm, where the
  answer is read off the coordinates;
* ``l_2``, via least squares;
* span of codimension 0 or 1 inside the coordinate subspace spanned by the
  supports, where the dual problem has a closed form (the minimal distance is
  ``a(f)`` for the unit functional ``a`` annihilating the span);
* otherwise descent on the coefficients with the norming functional of the
  residual as gradient, Barzilai-Borwein trial steps and Armijo backtracking.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._numeric import MP, object_array
from .errors import NonConvergence, SlackViolated
from .spaces import Element

__all__ = ["Approximation", "best_approximation", "perturbed_approximant", "certificate"]

ZERO_RESIDUAL = 1e-13


@dataclass(frozen=True)
class Approximation:
    G: Element
    E: float
    coefficients: np.ndarray
    residual: Element
    method: str
    certificate: float
    iterations: int = 0
    notes: dict = field(default_factory=dict)


def certificate(space, residual, atoms):
    """``max_j |F_r(phi_j)|`` for the norming functional ``F_r`` of the residual."""
    if not atoms or residual.is_zero() or float(space.norm(residual)) < ZERO_RESIDUAL:
        return 0.0
    F = space.norming_functional(residual)
    return max(abs(float(F(a))) for a in atoms)


def _finish(space, f, G, coefs, method, iterations=0, notes=None, atoms=()):
    r = f - G
    E = space.norm(r)
    cert = certificate(space, r, list(atoms))
    return Approximation(G, E, np.asarray(coefs), r, method, cert, iterations, notes or {})


def _support_union(f, atoms):
    idx = f.indices
    for a in atoms:
        idx = np.union1d(idx, a.indices)
    return idx.astype(np.int64)


def _matrix(atoms, V):
    Phi = np.zeros((len(V), len(atoms)))
    for j, a in enumerate(atoms):
        Phi[np.searchsorted(V, a.indices), j] = [float(v) for v in a.values]
    return Phi


def _combination(atoms, coefs):
    G = Element.zero()
    for a, c in zip(atoms, coefs):
        if c != 0:
            G = G + a * c
    return G


def _is_basis_span(atoms):
    return all(len(a.indices) == 1 for a in atoms)


def _basis_projection(space, f, atoms):
    coords = sorted({int(a.indices[0]) for a in atoms})
    G = Element._from_arrays(coords, f.coefficients_at(coords))
    coefs = np.zeros(len(atoms))
    seen = set()
    for j, a in enumerate(atoms):
        i = int(a.indices[0])
        if i not in seen:
            seen.add(i)
            coefs[j] = float(f[i]) / float(a.values[0])
    return _finish(space, f, G, coefs, "basis", atoms=atoms)


def _mp_left_null_vector(rows, ncols):
    """A nonzero vector orthogonal to every row (rows span a hyperplane)."""
    M = [[MP.mpf(v) for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = max(range(r, len(M)), key=lambda i: abs(M[i][c]), default=None)
        if piv is None or M[piv][c] == 0:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                fac = M[i][c]
                M[i] = [a - fac * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    free = [c for c in range(ncols) if c not in pivots][0]
    x = [MP.zero] * ncols
    x[free] = MP.one
    for i, c in enumerate(pivots):
        x[c] = -M[i][free]
    return x


def _dual_closed_form(space, f, atoms, V, Phi, mp):
    if mp:
        rows = [a.coefficients_at(V) for a in atoms]
        b = _mp_left_null_vector(rows, len(V))
        a = Element._from_arrays(V, object_array(b))
    else:
        u, s, vt = np.linalg.svd(Phi.T, full_matrices=True)
        a = Element._from_arrays(V, vt[-1])
    from .spaces import Functional

    a = Functional._from_arrays(a.indices, a.values)
    a = a / space.dual_norm(a)
    val = a(f)
    if val < 0:
        a = -a
        val = -val
    r = space.dual_norming_element(a) * val
    G = f - r
    coefs, *_ = np.linalg.lstsq(Phi, G.dense(len(V) and int(V[-1]) + 1)[V], rcond=None)
    return _finish(space, f, G, coefs, "dual-codim1", atoms=atoms)


def _dense_norm_and_grad(space, V, vec):
    """Norm of the dense residual over coordinates ``V`` and its norming coefficients."""
    if getattr(space, "kind", None) == "lq":
        q = space.q
        a = np.abs(vec)
        m = a.max()
        if m == 0:
            return 0.0, np.zeros_like(vec)
        s = a / m
        n = m * np.sum(s**q) ** (1 / q)
        return n, np.sign(vec) * (a / n) ** (q - 1)
    x = Element._from_arrays(V, vec)
    n = float(space.norm(x))
    if n == 0:
        return 0.0, np.zeros_like(vec)
    F = space.norming_functional(x)
    return n, F.coefficients_at(V).astype(float)


def _newton_polish(q, fv, Phi, c, cert_tol, max_iter=200):
    """Damped Newton on the q-th power of the residual norm, accepting only decreases."""
    val = np.sum(np.abs(fv - Phi @ c) ** q)
    for k in range(1, max_iter + 1):
        r = fv - Phi @ c
        a = np.abs(r)
        n = val ** (1 / q)
        g = -q * (Phi.T @ (np.sign(r) * a ** (q - 1)))
        if n < ZERO_RESIDUAL or np.max(np.abs(g)) / (q * n ** (q - 1)) <= cert_tol:
            return c, k - 1
        floor = 1e-12 * a.max()
        w = np.maximum(a, floor) ** (q - 2)
        H = q * (q - 1) * (Phi.T * w) @ Phi
        H += 1e-14 * np.trace(H) * np.eye(len(c))
        try:
            d = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            d = -g
        gmax = np.max(np.abs(g))
        step = 1.0
        while step > 1e-12:
            trial = c + step * d
            tr = fv - Phi @ trial
            tval = np.sum(np.abs(tr) ** q)
            if tval < val:
                break
            # value changes below rounding: fall back to the gradient as merit
            if tval <= val * (1 + 1e-14):
                tg = np.max(np.abs(Phi.T @ (np.sign(tr) * np.abs(tr) ** (q - 1)))) * q
                if tg < gmax:
                    break
            step /= 2
        else:
            return c, k
        c, val = trial, tval
    return c, max_iter


def _face_polish(space, f, atoms, V, fv, Phi, c, cert_tol, budget):
    """Retry with near-zero residual coordinates pinned to exactly zero.

    For ``q < 2`` a residual coordinate of size ``eps`` still contributes
    ``eps^(q-1)`` to the norming functional, so a minimizer sitting on such a
    face cannot be certified in floating point without pinning it.
    """
    q = space.q
    r = fv - Phi @ c
    scale = np.max(np.abs(r))
    tried = set()
    for thr in (1e-10, 1e-8, 1e-6, 1e-4, 1e-3):
        act = np.abs(r) <= thr * scale
        key = act.tobytes()
        if not act.any() or act.all() or key in tried:
            continue
        tried.add(key)
        PA = Phi[act]
        c0, *_ = np.linalg.lstsq(PA, fv[act], rcond=None)
        if np.max(np.abs(PA @ c0 - fv[act])) > 1e-10 * max(1.0, scale):
            continue
        _, sv, vt = np.linalg.svd(PA)
        rank = int(np.sum(sv > 1e-12 * sv[0])) if sv.size else 0
        N = vt[rank:].T
        cc = c0
        if N.shape[1]:
            free = ~act
            z, _ = _newton_polish(q, fv[free] - Phi[free] @ c0, Phi[free] @ N, N.T @ (c - c0), cert_tol, budget)
            cc = c0 + N @ z
        rr = fv - Phi @ cc
        free = ~act
        # pinned coordinates take the sub-rounding values that make the point stationary
        u_free = np.sign(rr[free]) * np.abs(rr[free]) ** (q - 1)
        u_act, *_ = np.linalg.lstsq(PA.T, -(Phi[free].T @ u_free), rcond=None)
        rr[act] = np.sign(u_act) * np.abs(u_act) ** (1 / (q - 1))
        if np.max(np.abs(rr[act])) > 10 * thr * scale:
            continue
        residual = Element(dict(zip(V.tolist(), rr.tolist())))
        G = f - residual
        cert = certificate(space, residual, list(atoms))
        if cert <= cert_tol:
            return Approximation(G, space.norm(residual), np.asarray(cc), residual, "descent", cert, 0, {"pinned": int(act.sum())})
    return None


def _descent(space, f, atoms, V, Phi, cert_tol, max_iter):
    fv = f.coefficients_at(V).astype(float)
    c = np.zeros(Phi.shape[1])
    val, Fr = _dense_norm_and_grad(space, V, fv)
    grad = -Phi.T @ Fr
    step = None
    prev = None
    stalled = 0
    it = 0
    lq = getattr(space, "kind", None) == "lq"
    # l_q problems keep part of the budget for the Newton polish
    reserve = min(200, max_iter // 2) if lq else 0
    phase = min(max_iter - reserve, 2000) if lq else max_iter
    for it in range(1, phase + 1):
        if val < ZERO_RESIDUAL or np.max(np.abs(grad)) <= cert_tol:
            break
        if prev is None:
            step = 1.0 / max(np.linalg.norm(grad), 1e-300)
        else:
            sc, gc = c - prev[0], grad - prev[1]
            denom = float(sc @ gc)
            step = float(sc @ sc) / denom if denom > 0 else step * 2
        gg = float(grad @ grad)
        while True:
            trial = c - step * grad
            tval, tF = _dense_norm_and_grad(space, V, fv - Phi @ trial)
            if tval <= val - 1e-4 * step * gg or step < 1e-16:
                break
            step /= 2
        if step < 1e-16 and tval > val:
            break
        stalled = stalled + 1 if tval > val * (1 - 1e-15) else 0
        if stalled >= 20:
            break
        prev = (c, grad)
        c, val, Fr = trial, tval, tF
        grad = -Phi.T @ Fr
    if lq and np.max(np.abs(grad)) > cert_tol and val >= ZERO_RESIDUAL:
        c, extra = _newton_polish(space.q, fv, Phi, c, cert_tol, max(0, min(200, max_iter - it)))
        it += extra
    G = _combination(atoms, c)
    out = _finish(space, f, G, c, "descent", iterations=it, atoms=atoms)
    if out.E >= ZERO_RESIDUAL and out.certificate > cert_tol and lq and space.q < 2:
        alt = _face_polish(space, f, atoms, V, fv, Phi, c, cert_tol, max(0, min(200, max_iter - it)))
        if alt is not None and alt.E <= out.E * (1 + 1e-12):
            out = replace(alt, iterations=it)
    if out.E >= ZERO_RESIDUAL and out.certificate > cert_tol:
        raise NonConvergence(
            f"descent stopped with certificate {out.certificate:.3g} > {cert_tol:.3g}",
            achieved=out.E,
            iterations=it,
        )
    return out


def best_approximation(space, f, span, tol=1e-12, cert_tol=1e-9, max_iter=100_000):
    """Minimize ``||f - G||`` over ``G`` in the span of ``span``.

    Parameters
    ----------
    space : LqSpace or SmoothSpaceX
    f : Element
    span : sequence of Element
        Spanning atoms (duplicates allowed).
    tol, cert_tol : float
        Accuracy target; the returned first-order certificate is compared
        against ``cert_tol``.
    max_iter : int
        Iteration budget of the descent fallback.

    Returns
    -------
    Approximation
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    atoms = [a for a in span]
    if not atoms:
        return Approximation(Element.zero(), space.norm(f), np.zeros(0), f, "empty", 0.0)
    lattice = getattr(space, "lattice", False)
    if lattice and _is_basis_span(atoms):
        return _basis_projection(space, f, atoms)
    V = _support_union(f, atoms)
    Phi = _matrix(atoms, V)
    mp = f.is_mp or any(a.is_mp for a in atoms)
    if getattr(space, "kind", None) == "lq" and space.q == 2.0:
        coefs, *_ = np.linalg.lstsq(Phi, f.coefficients_at(V).astype(float), rcond=None)
        return _finish(space, f, _combination(atoms, coefs), coefs, "least-squares", atoms=atoms)
    rank = np.linalg.matrix_rank(Phi)
    if rank == len(V):
        coefs, *_ = np.linalg.lstsq(Phi, f.coefficients_at(V).astype(float), rcond=None)
        return Approximation(f, 0.0, coefs, Element.zero(), "full-rank", 0.0)
    if lattice and rank == len(V) - 1:
        return _dual_closed_form(space, f, atoms, V, Phi, mp)
    return _descent(space, f, atoms, V, Phi, cert_tol, max_iter)


def perturbed_approximant(space, f, G_exact, E, eta, eta_prime, spike=None, tol=1e-12):
    """Return ``G_exact`` shifted by ``spike = (direction, magnitude)`` if still admissible.

    Raises ``SlackViolated`` when ``||f - G|| > (1 + eta) E + eta_prime``.
    """
    G = G_exact if spike is None else G_exact + spike[0] * spike[1]
    bound = (1 + eta) * float(E) + eta_prime
    got = float(space.norm(f - G))
    if got > bound + tol * max(1.0, bound):
        raise SlackViolated(f"approximant error {got:.6g} exceeds allowed {bound:.6g}")
    return G
