"""TOML run configurations and the builders that turn them into objects."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import tomli
import tomli_w

from .dictionaries import canonical_dictionary, explicit_dictionary, g_dictionary
from .engine import adversarial_policy, exact_policy, weakest_policy
from .schedules import Schedules
from .smooth import SmoothSpaceX, exponents_from_config
from .spaces import Element, LqSpace

__all__ = ["ConfigError", "RunConfig", "load_config", "loads_config", "dumps_config"]

POLICIES = ("exact", "weakest", "adversarial")
SECTIONS = ("space", "dictionary", "element", "schedules", "witness", "check", "sweep", "modulus")


class ConfigError(ValueError):
    """A configuration file is malformed or inconsistent."""


@dataclass
class RunConfig:
    space: dict = field(default_factory=lambda: {"kind": "lq", "q": 2.0})
    dictionary: dict = field(default_factory=lambda: {"kind": "canonical"})
    element: dict = field(default_factory=dict)
    schedules: dict = field(default_factory=dict)
    policy: str = "exact"
    seed: int = 0
    max_steps: int = 100
    stop_tol: float = 0.0
    witness: dict = field(default_factory=dict)
    check: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    modulus: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"policy": self.policy, "seed": self.seed, "max_steps": self.max_steps, "stop_tol": self.stop_tol}
        for name in SECTIONS:
            val = getattr(self, name)
            if val:
                out[name] = copy.deepcopy(val)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - set(SECTIONS) - {"policy", "seed", "max_steps", "stop_tol"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        cfg = cls(**{k: copy.deepcopy(v) for k, v in data.items()})
        cfg.validate()
        return cfg

    def validate(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy: expected one of {POLICIES}, got {self.policy!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: expected a non-negative integer, got {self.seed!r}")
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            raise ConfigError(f"max_steps: expected a positive integer, got {self.max_steps!r}")
        if not isinstance(self.stop_tol, (int, float)) or self.stop_tol < 0:
            raise ConfigError(f"stop_tol: expected a non-negative number, got {self.stop_tol!r}")
        for name in SECTIONS:
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"[{name}] must be a table")
        kind = self.space.get("kind", "lq")
        if kind not in ("lq", "smooth"):
            raise ConfigError(f"space.kind: expected 'lq' or 'smooth', got {kind!r}")
        if kind == "lq":
            q = self.space.get("q")
            if not isinstance(q, (int, float)) or not q > 1:
                raise ConfigError(f"space.q: expected a number > 1, got {q!r}")
        return self


def loads_config(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return RunConfig.from_dict(data)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read())


def dumps_config(cfg):
    return tomli_w.dumps(cfg.to_dict())


def _only(spec, allowed, where):
    extra = sorted(set(spec) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def build_space(spec):
    spec = dict(spec)
    _only(spec, ("kind", "q", "exponents", "horizon"), "space")
    kind = spec.get("kind", "lq")
    if kind == "lq":
        return LqSpace(float(spec["q"]))
    if kind == "smooth":
        return SmoothSpaceX(exponents_from_config(spec.get("exponents")), int(spec.get("horizon", 32)))
    raise ConfigError(f"space.kind: unknown {kind!r}")


def build_element(spec, seed, space=None):
    spec = dict(spec)
    _only(spec, ("indices", "values", "random", "witness", "params"), "element")
    if "indices" in spec:
        idx, vals = spec["indices"], spec.get("values", [])
        if len(idx) != len(vals):
            raise ConfigError("element: indices and values differ in length")
        return Element(dict(zip(idx, vals)))
    if "random" in spec:
        r = dict(spec["random"])
        _only(r, ("size", "nonzeros", "offset", "instance"), "element.random")
        size, nnz = int(r.get("size", 100)), int(r.get("nonzeros", 10))
        offset = int(r.get("offset", 1 if getattr(space, "kind", None) == "smooth" else 0))
        if not 1 <= nnz <= size:
            raise ConfigError("element.random: need 1 <= nonzeros <= size")
        rng = np.random.default_rng([seed, int(r.get("instance", 0))])
        idx = np.sort(rng.choice(size, nnz, replace=False)) + offset
        return Element(dict(zip(idx.tolist(), rng.standard_normal(nnz).tolist())))
    raise ConfigError("element: give 'indices'/'values', a 'random' table, or 'witness'")


def build_dictionary(spec, space, f):
    spec = dict(spec)
    _only(spec, ("kind", "i0", "N", "K", "elements"), "dictionary")
    kind = spec.get("kind", "canonical")
    if kind == "canonical":
        i0 = int(spec.get("i0", 1 if getattr(space, "kind", None) == "smooth" else 0))
        N = int(spec.get("N", max(f.horizon, i0)))
        return canonical_dictionary(space, i0, N)
    if kind == "g":
        return g_dictionary(space, int(spec["K"]))
    if kind == "explicit":
        elements = [Element(dict(zip(e["indices"], e["values"]))) for e in spec.get("elements", [])]
        if not elements:
            raise ConfigError("dictionary.elements: at least one element is required")
        return explicit_dictionary(space, elements)
    raise ConfigError(f"dictionary.kind: unknown {kind!r}")


def build_policy(name, seed):
    if name == "exact":
        return exact_policy()
    if name == "weakest":
        return weakest_policy()
    if name == "adversarial":
        return adversarial_policy(seed)
    raise ConfigError(f"policy: unknown {name!r}")


def build_schedules(spec):
    try:
        return Schedules.from_config(spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedules: {exc}") from exc
