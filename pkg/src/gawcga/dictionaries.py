"""Finite symmetric dictionaries and the weak selection oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numeric import MP
from .errors import HorizonExceeded, WeakSelectionImpossible
from .spaces import Element

__all__ = [
    "Atom",
    "Dictionary",
    "canonical_dictionary",
    "g_dictionary",
    "explicit_dictionary",
    "sup_functional",
    "weak_select",
]


@dataclass(frozen=True)
class Atom:
    """A signed dictionary element ``sign * unit[position]``.

    ``label`` is the user-facing identifier: the basis index for canonical
    dictionaries, ``k`` for ``g_k``, or the list position otherwise.
    """

    position: int
    label: int
    sign: int
    element: Element

    def describe(self):
        return f"{'+' if self.sign > 0 else '-'}{self.label}"


@dataclass(frozen=True)
class Dictionary:
    kind: str
    space: object
    units: tuple
    labels: tuple
    norms: tuple

    def __len__(self):
        return len(self.units)

    def atom(self, position, sign=1):
        unit = self.units[position]
        return Atom(position, self.labels[position], 1 if sign >= 0 else -1, unit if sign >= 0 else -unit)

    def position_of(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no atom labelled {label}") from None

    def atom_by_label(self, label, sign=1):
        return self.atom(self.position_of(label), sign)

    def values(self, F):
        """``F(unit_k)`` for every unit, float64 or mpmath object array."""
        if self.kind == "canonical":
            return F.coefficients_at(np.asarray(self.labels, dtype=np.int64))
        vals = [F(u) for u in self.units]
        if F.is_mp or any(u.is_mp for u in self.units):
            out = np.empty(len(vals), dtype=object)
            out[:] = vals
            return out
        return np.asarray(vals, dtype=float)

    def to_config(self):
        if self.kind == "canonical":
            return {"kind": "canonical", "i0": self.labels[0], "N": self.labels[-1]}
        if self.kind == "g":
            return {"kind": "g", "K": self.labels[-1]}
        return {"kind": "explicit", "elements": [u.to_dict() for u in self.units]}


def canonical_dictionary(space, i0, N):
    """``{+-e_j : i0 <= j <= N}``."""
    if i0 < 0 or N < i0:
        raise ValueError(f"need 0 <= i0 <= N, got i0={i0}, N={N}")
    if getattr(space, "kind", None) == "smooth":
        if i0 < 1 or N > space.horizon:
            raise HorizonExceeded(f"canonical range {i0}..{N} outside 1..{space.horizon}")
    units = tuple(Element.basis(j) for j in range(i0, N + 1))
    return Dictionary("canonical", space, units, tuple(range(i0, N + 1)), (1.0,) * len(units))


def g_dictionary(X, K):
    """Normalized ``g_0 = e_1+e_2+e_3`` and ``g_k = e_k+e_{k+1}`` for ``1 <= k <= K``."""
    if K < 1 or max(K + 1, 3) > X.horizon:
        raise HorizonExceeded(f"K={K} needs horizon >= {max(K + 1, 3)}, have {X.horizon}")
    raw = [Element({1: MP.one, 2: MP.one, 3: MP.one})]
    raw += [Element({k: MP.one, k + 1: MP.one}) for k in range(1, K + 1)]
    norms = tuple(X.x_norm(g) for g in raw)
    units = tuple(g / n for g, n in zip(raw, norms))
    return Dictionary("g", X, units, tuple(range(K + 1)), norms)


def explicit_dictionary(space, elements):
    units, norms = [], []
    for e in elements:
        e = e if isinstance(e, Element) else Element(e)
        n = space.norm(e)
        if n == 0:
            raise ValueError("dictionary elements must be nonzero")
        units.append(e / n)
        norms.append(n)
    return Dictionary("explicit", space, tuple(units), tuple(range(len(units))), tuple(norms))


def _argmax_abs(values):
    mags = np.abs(values)
    best = mags.max()
    pos = int(np.flatnonzero(mags == best)[0])
    return pos, best


def sup_functional(dictionary, F):
    """Largest ``F(g)`` over all signed atoms.

    Ties go to the lowest position, and a zero value takes the positive sign.
    Returns ``(value, atom)``.
    """
    vals = dictionary.values(F)
    pos, best = _argmax_abs(vals)
    sign = 1 if vals[pos] >= 0 else -1
    return best, dictionary.atom(pos, sign)


def weak_select(dictionary, F, t, t_prime, preference=None, tol=0.0):
    """Pick an atom with ``F(atom) >= t * sup F - t_prime``.

    ``preference`` is honored when admissible (up to ``tol``); otherwise the
    maximizer is returned.  Returns ``(atom, sup_value, threshold)``.
    """
    if not 0.0 <= t <= 1.0 or t_prime < 0.0:
        raise ValueError(f"weakness parameters out of range: t={t}, t'={t_prime}")
    sup, best = sup_functional(dictionary, F)
    threshold = t * sup - t_prime
    if preference is not None and F(preference.element) >= threshold - tol:
        return preference, sup, threshold
    if F(best.element) < threshold - tol:
        raise WeakSelectionImpossible(f"no atom reaches threshold {float(threshold):.6g}")
    return best, sup, threshold


def weakest_admissible(dictionary, F, threshold):
    """Signed atom with the smallest value ``F(atom)`` that still meets ``threshold``.

    Ties go to the lowest position, positive sign first.  Returns ``None`` when
    nothing qualifies.
    """
    vals = dictionary.values(F)
    best = None
    for pos, v in enumerate(vals):
        for sign in (1, -1):
            sv = v if sign > 0 else -v
            if sv >= threshold and (best is None or sv < best[0]):
                best = (sv, pos, sign)
    if best is None:
        return None
    return dictionary.atom(best[1], best[2])
