"""A recursively renormed sequence space with varying exponents.

Coordinates are indexed from 1.  Given exponents ``p_1 >= p_2 >= ... > 1`` the
norm of ``x`` is the limit of

    theta_n(x) = (theta_{n-1}(x)^{p_n} + |x_n|^{p_n})^(1/p_n),  theta_0 = 0,

and the dual norm uses the conjugate exponents ``q_n`` in the same recursion.
All arithmetic runs on a 50-digit mpmath context because greedy residuals in
this space shrink far below the double-precision range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._numeric import MP, is_mp, object_array
from .errors import DivergentExponentSum, ExponentOutOfRange, HorizonExceeded, ZeroElement
from .spaces import Element, Functional

__all__ = [
    "ExplicitExponents",
    "GeometricExponents",
    "PowerExponents",
    "ConstantExponents",
    "SmoothSpaceX",
    "exponents_from_config",
]


@dataclass(frozen=True)
class GeometricExponents:
    """``p_k = 1 + c * r^(k-1)``."""

    c: float = 1.0
    r: float = 0.5

    def __post_init__(self):
        if not (self.c > 0 and 0 < self.r < 1):
            raise ExponentOutOfRange("geometric exponents need c > 0 and 0 < r < 1")

    def __call__(self, k):
        return 1 + MP.mpf(self.c) * MP.mpf(self.r) ** (k - 1)

    def tail_bound(self, K):
        # 1 - 1/p_k <= p_k - 1
        return self.c * self.r**K / (1 - self.r)

    def to_config(self):
        return {"kind": "geometric", "c": self.c, "r": self.r}


@dataclass(frozen=True)
class PowerExponents:
    """``p_k = 1 + c * k^(-s)`` with ``s > 1``."""

    c: float = 1.0
    s: float = 2.0

    def __post_init__(self):
        if not (self.c > 0 and self.s > 1):
            raise ExponentOutOfRange("power exponents need c > 0 and s > 1")

    def __call__(self, k):
        return 1 + MP.mpf(self.c) * MP.mpf(k) ** (-MP.mpf(self.s))

    def tail_bound(self, K):
        return self.c * K ** (1 - self.s) / (self.s - 1)

    def to_config(self):
        return {"kind": "power", "c": self.c, "s": self.s}


@dataclass(frozen=True)
class ConstantExponents:
    p: float = 2.0

    def __call__(self, k):
        return MP.mpf(self.p)

    def tail_bound(self, K):
        return math.inf

    def to_config(self):
        return {"kind": "constant", "p": self.p}


@dataclass(frozen=True)
class ExplicitExponents:
    """Exponents listed up to the horizon.

    ``tail`` bounds the sum of ``1 - 1/p_k`` over the unlisted indices; the
    default 0 treats the space as exactly ``l_1`` beyond the list.
    """

    values: tuple = ()
    tail: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, k):
        if k > len(self.values):
            raise HorizonExceeded(f"no exponent listed for index {k}")
        return MP.mpf(self.values[k - 1])

    def tail_bound(self, K):
        rest = self.values[K:]
        return math.fsum(1 - 1 / v for v in rest) + float(self.tail)

    def to_config(self):
        return {"kind": "explicit", "values": list(self.values), "tail": self.tail}


def exponents_from_config(cfg):
    cfg = dict(cfg or {})
    kind = cfg.pop("kind", "geometric")
    if kind == "geometric":
        return GeometricExponents(**cfg)
    if kind == "power":
        return PowerExponents(**cfg)
    if kind == "constant":
        return ConstantExponents(**cfg)
    if kind == "explicit":
        return ExplicitExponents(tuple(cfg.get("values", ())), cfg.get("tail", 0.0))
    raise ValueError(f"unknown exponent kind {kind!r}")


def _combine(acc, c, e):
    """``(acc^e + |c|^e)^(1/e)`` scaled by the larger term, so it never drops below ``acc``."""
    c = abs(c)
    big, small = (acc, c) if acc >= c else (c, acc)
    if small == 0:
        return big
    return big * MP.power(1 + MP.power(small / big, e), 1 / e)


@dataclass(frozen=True)
class SmoothSpaceX:
    """The renormed space over coordinates ``1..horizon``.

    Parameters
    ----------
    exponents : callable
        Exponent sequence spec (``GeometricExponents()`` by default).
    horizon : int
        Largest admissible coordinate index.
    """

    exponents: object = field(default_factory=GeometricExponents)
    horizon: int = 32

    kind = "smooth"
    lattice = True

    def __post_init__(self):
        if self.horizon < 1:
            raise HorizonExceeded("horizon must be at least 1")
        if math.isinf(self.exponents.tail_bound(self.horizon)):
            raise DivergentExponentSum("sum of (1 - 1/p_k) is not certified finite")
        ps = [MP.mpf(0)] + [self.exponents(k) for k in range(1, self.horizon + 1)]
        for k in range(1, self.horizon + 1):
            if not ps[k] > 1:
                raise ExponentOutOfRange(f"p_{k} = {ps[k]} is not > 1")
            if k > 1 and ps[k] > ps[k - 1]:
                raise ExponentOutOfRange(f"exponents increase at index {k}")
        qs = [MP.mpf(0)] + [p / (p - 1) for p in ps[1:]]
        object.__setattr__(self, "_p", tuple(ps))
        object.__setattr__(self, "_q", tuple(qs))
        partial, tail, terms = self._certified_exponent_sum()
        object.__setattr__(self, "exponent_partial_sum", partial)
        object.__setattr__(self, "exponent_tail_bound", tail)
        object.__setattr__(self, "exponent_terms", terms)
        object.__setattr__(self, "rho", float(MP.power(2, -(partial + MP.mpf(tail)))))

    def _certified_exponent_sum(self):
        K = 16
        while True:
            tail = self.exponents.tail_bound(K)
            try:
                partial = MP.fsum(1 - 1 / self.exponents(k) for k in range(1, K + 1))
            except HorizonExceeded:
                K = len(self.exponents.values)
                partial = MP.fsum(1 - 1 / self.exponents(k) for k in range(1, K + 1))
                return partial, float(self.exponents.tail_bound(K)), K
            if tail <= 1e-6 * float(partial) or K > 1 << 22:
                if tail > 1e-6 * float(partial):
                    raise DivergentExponentSum("tail of the exponent sum converges too slowly")
                return partial, float(tail), K
            K *= 2

    def p(self, k):
        self._check_index(k)
        return self._p[k]

    def q(self, k):
        self._check_index(k)
        return self._q[k]

    def _check_index(self, n):
        if n > self.horizon:
            raise HorizonExceeded(f"index {n} exceeds horizon {self.horizon}")

    def _check_support(self, v):
        if len(v.indices) and (v.indices[0] < 1 or v.indices[-1] > self.horizon):
            raise HorizonExceeded(
                f"support must lie in 1..{self.horizon}, got {v.indices[0]}..{v.indices[-1]}"
            )

    def _recursion(self, v, n, exps):
        self._check_index(n)
        self._check_support(v)
        acc = MP.zero
        # zero coordinates leave the recursion unchanged, so only the support is visited
        for i, c in v.items():
            if i > n:
                break
            e = exps[i]
            acc = _combine(acc, MP.mpf(c), e)
        return acc

    def theta_norm(self, x, n):
        """``theta_n(x)`` as an mpmath number."""
        return self._recursion(x, n, self._p)

    def nu_dual_norm(self, a, n):
        return self._recursion(a, n, self._q)

    def x_norm(self, x):
        return self.theta_norm(x, max(x.horizon, 0))

    norm = x_norm

    def dual_norm(self, a):
        return self.nu_dual_norm(a, max(a.horizon, 0))

    def _norming(self, v, exps, cls):
        self._check_support(v)
        if v.is_zero():
            raise ZeroElement("zero has no norming functional")
        coefs = []
        acc = MP.zero
        for i, c in v.items():
            e = exps[i]
            c = MP.mpf(c) if not is_mp(c) else c
            new = _combine(acc, c, e)
            if acc != 0:
                scale = MP.power(acc / new, e - 1)
                coefs = [a * scale for a in coefs]
            coefs.append(MP.sign(c) * MP.power(abs(c) / new, e - 1))
            acc = new
        return cls._from_arrays(v.indices, object_array(coefs))

    def x_norming_functional(self, x):
        """Coefficients of the norming functional of ``x`` (unit dual norm)."""
        f = self._norming(x, self._p, Functional)
        return Functional._from_arrays(f.indices, f.values, declared_dual_norm=1.0)

    norming_functional = x_norming_functional

    def dual_norming_element(self, a):
        """Unit element ``x`` with ``a(x)`` equal to the dual norm of ``a``."""
        return self._norming(a, self._q, Element)

    def equivalence_constant(self):
        return self.rho

    def to_config(self):
        return {"kind": "smooth", "exponents": self.exponents.to_config(), "horizon": self.horizon}
