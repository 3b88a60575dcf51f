"""Finitely supported sequences, linear functionals, and the l_q spaces.

Elements and functionals are sparse maps from non-negative integer indices to
real coefficients.  Values are stored either as float64 or, when any
coefficient is an mpmath number, as an object array of mpmath numbers.
Both types are immutable once constructed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numeric import MP, exact_sum, is_mp, object_array
from .errors import ExponentOutOfRange, ZeroElement

__all__ = [
    "Element",
    "Functional",
    "LqSpace",
    "apply",
    "dual_exponent",
    "lq_norm",
    "lq_norming_functional",
]


def _pack(indices, values):
    """Sort, validate, and drop exact zeros; return (idx, val) arrays."""
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    values = list(values) if not isinstance(values, np.ndarray) else values
    if len(indices) != len(values):
        raise ValueError("indices and values differ in length")
    if len(indices) and indices.min() < 0:
        raise ValueError("indices must be non-negative")
    if len(np.unique(indices)) != len(indices):
        raise ValueError("duplicate indices")
    mp = (isinstance(values, np.ndarray) and values.dtype == object) or any(
        is_mp(v) for v in values
    )
    if mp:
        vals = object_array([v if is_mp(v) else MP.mpf(float(v)) for v in values])
        if not all(MP.isfinite(v) for v in vals):
            raise ValueError("coefficients must be finite")
        keep = np.array([v != 0 for v in vals], dtype=bool)
    else:
        vals = np.asarray(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        keep = vals != 0.0
    order = np.argsort(indices[keep], kind="stable")
    idx = indices[keep][order]
    val = vals[keep][order]
    idx.setflags(write=False)
    val.setflags(write=False)
    return idx, val


class _Sparse:
    __slots__ = ("indices", "values")

    def __init__(self, coords=None):
        if coords is None:
            coords = {}
        if isinstance(coords, _Sparse):
            idx, val = coords.indices, coords.values
        else:
            items = dict(coords)
            idx = list(items.keys())
            val = [items[k] for k in idx]
            idx, val = _pack(idx, val)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def _from_arrays(cls, indices, values, **extra):
        obj = cls.__new__(cls)
        idx, val = _pack(indices, values)
        object.__setattr__(obj, "indices", idx)
        object.__setattr__(obj, "values", val)
        for k, v in extra.items():
            object.__setattr__(obj, k, v)
        return obj

    @classmethod
    def from_arrays(cls, indices, values):
        return cls._from_arrays(indices, values)

    @classmethod
    def from_dense(cls, values, offset=0):
        """Build from a dense vector whose entry ``i`` sits at index ``offset + i``."""
        values = np.asarray(values) if not isinstance(values, np.ndarray) else values
        return cls._from_arrays(np.arange(offset, offset + len(values)), values)

    @property
    def is_mp(self):
        return self.values.dtype == object

    @property
    def support(self):
        return tuple(int(i) for i in self.indices)

    @property
    def horizon(self):
        """Largest index carrying a nonzero coefficient (-1 for zero)."""
        return int(self.indices[-1]) if len(self.indices) else -1

    def is_zero(self):
        return len(self.indices) == 0

    def __getitem__(self, index):
        pos = np.searchsorted(self.indices, index)
        if pos < len(self.indices) and self.indices[pos] == index:
            return self.values[pos]
        return 0.0

    def items(self):
        return list(zip((int(i) for i in self.indices), self.values))

    def to_dict(self):
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}

    def coefficients_at(self, indices):
        """Coefficients at ``indices`` (zeros where unsupported)."""
        indices = np.asarray(indices, dtype=np.int64)
        pos = np.searchsorted(self.indices, indices)
        pos_c = np.minimum(pos, max(len(self.indices) - 1, 0))
        hit = (pos < len(self.indices)) & (self.indices[pos_c] == indices) if len(self.indices) else np.zeros(len(indices), bool)
        if self.is_mp:
            out = object_array([MP.zero] * len(indices))
        else:
            out = np.zeros(len(indices))
        if hit.any():
            out[hit] = self.values[pos_c[hit]]
        return out

    def dense(self, size, offset=0):
        """Float64 dense vector over indices ``offset .. offset+size-1``."""
        out = np.zeros(size)
        sel = (self.indices >= offset) & (self.indices < offset + size)
        out[self.indices[sel] - offset] = [float(v) for v in self.values[sel]]
        return out

    def _combine(self, other, sign):
        if not isinstance(other, _Sparse):
            return NotImplemented
        idx = np.union1d(self.indices, other.indices)
        mp = self.is_mp or other.is_mp
        if mp:
            a = object_array([MP.zero] * len(idx))
            b = object_array([MP.zero] * len(idx))
        else:
            a = np.zeros(len(idx))
            b = np.zeros(len(idx))
        a[np.searchsorted(idx, self.indices)] = self.values
        b[np.searchsorted(idx, other.indices)] = other.values
        return self._rebuild(idx, a + b if sign > 0 else a - b)

    def _rebuild(self, indices, values):
        return type(self)._from_arrays(indices, values)

    def __add__(self, other):
        return self._combine(other, +1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self._rebuild(self.indices, -self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, _Sparse):
            return NotImplemented
        if is_mp(scalar) and not self.is_mp:
            vals = object_array([MP.mpf(float(v)) * scalar for v in self.values])
        elif self.is_mp:
            vals = object_array([v * scalar for v in self.values])
        else:
            vals = self.values * float(scalar)
        return self._rebuild(self.indices, vals)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if is_mp(scalar) or self.is_mp:
            return self * (MP.one / scalar)
        return self._rebuild(self.indices, self.values / float(scalar))

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and all(
            a == b for a, b in zip(self.values, other.values)
        )

    def __hash__(self):
        return hash((type(self).__name__, tuple(self.indices), tuple(float(v) for v in self.values)))

    def __repr__(self):
        body = ", ".join(f"{i}: {float(v):.6g}" for i, v in self.items()[:8])
        more = ", ..." if len(self.indices) > 8 else ""
        return f"{type(self).__name__}({{{body}{more}}})"


class Element(_Sparse):
    """A finitely supported real sequence ``x = sum_j x_j e_j``."""

    __slots__ = ()

    @classmethod
    def basis(cls, j, value=1.0):
        return cls._from_arrays([j], [value])

    @classmethod
    def zero(cls):
        return cls._from_arrays([], [])

    def truncate(self, max_index):
        """Drop every coordinate above ``max_index``."""
        sel = self.indices <= max_index
        return Element._from_arrays(self.indices[sel], self.values[sel])


class Functional(_Sparse):
    """A coordinate functional ``a(x) = sum_j a_j x_j``.

    ``declared_dual_norm`` records what the producer claims the dual norm is;
    auditing code recomputes it from the coefficients instead of trusting it.
    """

    __slots__ = ("declared_dual_norm",)

    def __init__(self, coords=None, declared_dual_norm=None):
        super().__init__(coords)
        object.__setattr__(self, "declared_dual_norm", declared_dual_norm)

    @classmethod
    def _from_arrays(cls, indices, values, declared_dual_norm=None):
        return super()._from_arrays(indices, values, declared_dual_norm=declared_dual_norm)

    def _rebuild(self, indices, values):
        return Functional._from_arrays(indices, values)

    def __call__(self, y):
        return apply(self, y)


def apply(F, y):
    """Coordinate pairing ``sum_j F_j y_j`` over the common support."""
    common, ia, ib = np.intersect1d(F.indices, y.indices, assume_unique=True, return_indices=True)
    if len(common) == 0:
        return 0.0
    if F.is_mp or y.is_mp:
        return exact_sum(a * b for a, b in zip(F.values[ia], y.values[ib]))
    return math.fsum(F.values[ia] * y.values[ib])


def dual_exponent(q):
    """Conjugate exponent ``q/(q-1)``."""
    q = float(q)
    if not q > 1.0 or not math.isfinite(q):
        raise ExponentOutOfRange(f"exponent must satisfy 1 < q < inf, got {q}")
    return q / (q - 1.0)


def _lq(values, q):
    a = np.abs(np.asarray(values, dtype=float))
    if a.size == 0:
        return 0.0
    m = a.max()
    if m == 0.0:
        return 0.0
    return float(m * np.sum((a / m) ** q) ** (1.0 / q))


def _float_values(x):
    return x.values if not x.is_mp else np.array([float(v) for v in x.values])


@dataclass(frozen=True)
class LqSpace:
    """The sequence space ``l_q`` over indices ``0, 1, 2, ...``."""

    q: float

    kind = "lq"
    lattice = True

    def __post_init__(self):
        dual_exponent(self.q)
        object.__setattr__(self, "q", float(self.q))

    @property
    def p(self):
        return dual_exponent(self.q)

    def norm(self, x):
        return _lq(_float_values(x), self.q)

    def dual_norm(self, F):
        return _lq(_float_values(F), self.p)

    def norming_functional(self, x):
        vals = _float_values(x)
        nrm = _lq(vals, self.q)
        if nrm == 0.0:
            raise ZeroElement("the zero element has no norming functional")
        coef = np.sign(vals) * (np.abs(vals) / nrm) ** (self.q - 1.0)
        return Functional._from_arrays(x.indices, coef, declared_dual_norm=1.0)

    def dual_norming_element(self, a):
        """Unit element ``x`` with ``a(x) = ||a||_p`` (the duality map of ``l_p``)."""
        vals = _float_values(a)
        nrm = _lq(vals, self.p)
        if nrm == 0.0:
            raise ZeroElement("the zero functional norms no element")
        coef = np.sign(vals) * (np.abs(vals) / nrm) ** (self.p - 1.0)
        return Element._from_arrays(a.indices, coef)

    def to_config(self):
        return {"kind": "lq", "q": self.q}


def lq_norm(space, x):
    """``(sum_j |x_j|^q)^(1/q)``."""
    return space.norm(x)


def lq_norming_functional(space, x):
    """Coefficients ``sgn(x_j)|x_j|^(q-1) / ||x||_q^(q-1)``."""
    return space.norming_functional(x)
