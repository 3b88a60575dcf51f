"""Parameter sequences for weakness, perturbation and error slack."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Constant",
    "PowerDecay",
    "Table",
    "Indicator",
    "Schedules",
    "sequence_from_config",
]


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, n):
        return self.value

    def sup(self, start=0):
        return self.value

    def tail_sum(self, power, H):
        return 0.0 if self.value == 0 else math.inf

    def to_config(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class PowerDecay:
    """``c * n^(-a)``; index 0 is evaluated as index 1."""

    c: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("decay exponent must be non-negative")

    def __call__(self, n):
        return self.c * max(n, 1) ** (-self.a)

    def sup(self, start=0):
        return self(start)

    def tail_sum(self, power, H):
        """Upper bound on ``sum_{n>H} value(n)^power`` (integral test)."""
        if self.c == 0:
            return 0.0
        e = self.a * power
        if e <= 1:
            return math.inf
        return self.c**power * max(H, 1) ** (1 - e) / (e - 1)

    def to_config(self):
        return {"kind": "power", "c": self.c, "a": self.a}


@dataclass(frozen=True)
class Table:
    """Explicit values at listed indices, ``default`` elsewhere."""

    values: dict = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", {int(k): float(v) for k, v in dict(self.values).items()})

    def __call__(self, n):
        return self.values.get(n, self.default)

    def sup(self, start=0):
        vals = [v for k, v in self.values.items() if k >= start]
        return max(vals + [self.default])

    def tail_sum(self, power, H):
        if self.default != 0:
            return math.inf
        return math.fsum(v**power for k, v in self.values.items() if k > H)

    def __hash__(self):
        return hash((tuple(sorted(self.values.items())), self.default))

    def to_config(self):
        return {
            "kind": "table",
            "indices": sorted(self.values),
            "values": [self.values[k] for k in sorted(self.values)],
            "default": self.default,
        }


@dataclass(frozen=True)
class Indicator:
    """``on`` at the listed indices and ``off`` elsewhere."""

    indices: frozenset = frozenset()
    on: float = 1.0
    off: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))

    def __call__(self, n):
        return self.on if n in self.indices else self.off

    def sup(self, start=0):
        hit = any(i >= start for i in self.indices)
        return max(self.on, self.off) if hit else self.off

    def tail_sum(self, power, H):
        if self.off != 0:
            return math.inf
        return sum(1 for i in self.indices if i > H) * self.on**power

    def to_config(self):
        return {"kind": "indicator", "indices": sorted(self.indices), "on": self.on, "off": self.off}


def sequence_from_config(cfg):
    if isinstance(cfg, (int, float)):
        return Constant(float(cfg))
    cfg = dict(cfg)
    kind = cfg.pop("kind", "constant")
    if kind == "constant":
        return Constant(float(cfg.get("value", 0.0)))
    if kind == "power":
        return PowerDecay(float(cfg.get("c", 1.0)), float(cfg.get("a", 1.0)))
    if kind == "table":
        idx, vals = cfg.get("indices", []), cfg.get("values", [])
        if len(idx) != len(vals):
            raise ValueError("table indices and values differ in length")
        return Table(dict(zip(idx, vals)), float(cfg.get("default", 0.0)))
    if kind == "indicator":
        return Indicator(frozenset(cfg.get("indices", [])), float(cfg.get("on", 1.0)), float(cfg.get("off", 0.0)))
    raise ValueError(f"unknown sequence kind {kind!r}")


_NAMES = ("t", "t_prime", "delta", "delta_prime", "eta", "eta_prime")


@dataclass(frozen=True)
class Schedules:
    """The six slack sequences.

    ``t``, ``t_prime``, ``eta`` and ``eta_prime`` are read at the step index
    ``n >= 1``; ``delta`` and ``delta_prime`` at ``n - 1 >= 0``.
    """

    t: object = field(default_factory=lambda: Constant(1.0))
    t_prime: object = field(default_factory=Constant)
    delta: object = field(default_factory=Constant)
    delta_prime: object = field(default_factory=Constant)
    eta: object = field(default_factory=Constant)
    eta_prime: object = field(default_factory=Constant)

    def validate(self, horizon):
        for n in range(0, horizon + 1):
            if n >= 1 and not 0.0 <= self.t(n) <= 1.0:
                raise ValueError(f"t_{n} = {self.t(n)} outside [0, 1]")
            for name in _NAMES[1:]:
                v = getattr(self, name)(n)
                if not v >= 0.0 or not math.isfinite(v):
                    raise ValueError(f"{name}_{n} = {v} must be finite and >= 0")
        return self

    def eta0(self):
        """Least upper bound of ``eta_n`` over ``n >= 1``."""
        return self.eta.sup(1)

    def eta0_prime(self):
        return self.eta_prime.sup(1)

    def is_zero_slack(self):
        return all(getattr(self, n) == Constant(0.0) for n in _NAMES[1:])

    def zero_slack(self):
        """Same weakness ``t`` with every other sequence set to zero."""
        return Schedules(t=self.t)

    def to_config(self):
        return {name: getattr(self, name).to_config() for name in _NAMES}

    @classmethod
    def from_config(cls, cfg):
        cfg = dict(cfg or {})
        unknown = set(cfg) - set(_NAMES)
        if unknown:
            raise ValueError(f"unknown schedule fields {sorted(unknown)}")
        return cls(**{k: sequence_from_config(v) for k, v in cfg.items()})

    @classmethod
    def uniform(cls, t=1.0, slack=None):
        """Every slack sequence equal to ``slack``; numbers become constants."""
        slack = slack or Constant(0.0)
        t = t if not isinstance(t, (int, float)) else Constant(float(t))
        return cls(t, slack, slack, slack, slack, slack)
