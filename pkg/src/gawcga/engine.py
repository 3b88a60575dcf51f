"""The generalized approximate weak Chebyshev greedy loop.

Each step takes a (possibly perturbed) norming functional of the current
residual, selects an atom whose functional value is within the weakness slack
of the best one, and replaces the approximant by an element of the span of the
selected atoms whose error is within the approximation slack of the best.  The
existential choices are delegated to a ``RealizationPolicy``; whatever the
policy returns is re-checked against the three step inequalities.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dictionaries import sup_functional, weak_select, weakest_admissible
from .errors import ConstraintViolation, ZeroElement
from .projection import best_approximation
from .schedules import Constant, Schedules
from .spaces import Element

__all__ = [
    "StepContext",
    "RealizationPolicy",
    "StepRecord",
    "Trace",
    "run_gawcga",
    "run_wcga",
    "audit_step",
    "exact_policy",
    "adversarial_policy",
    "weakest_policy",
]


@dataclass
class StepContext:
    n: int
    f: Element
    residual: Element
    residual_norm: float
    atoms: list
    space: object
    dictionary: object
    schedules: Schedules
    records: list


@dataclass(frozen=True)
class RealizationPolicy:
    """Hooks realizing the free choices of a step; ``None`` means the exact choice.

    functional(ctx) -> Functional
    atom(ctx, F, sup, threshold) -> Atom | None   (a preference; falls back to the maximizer)
    approximant(ctx, approx: Approximation) -> Element
    """

    name: str = "exact"
    functional: Optional[Callable] = None
    atom: Optional[Callable] = None
    approximant: Optional[Callable] = None


@dataclass
class StepRecord:
    n: int
    atom: object
    F: object
    sup: float
    threshold: float
    G: Element
    residual: Element
    residual_norm: float
    E: float
    prev_norm: float
    F_dual_norm: float
    F_at_prev: float
    F_at_atom: float
    params: dict
    preference_honored: Optional[bool]
    method: str
    iterations: int
    certificate: float
    wall_time: float
    margins: dict = field(default_factory=dict)


@dataclass
class Trace:
    f: Element
    initial_norm: float
    steps: list
    status: str
    policy: str
    dictionary_size: int

    @property
    def residual_norms(self):
        return [self.initial_norm] + [s.residual_norm for s in self.steps]

    @property
    def errors(self):
        return [s.E for s in self.steps]

    @property
    def final_residual(self):
        return self.steps[-1].residual_norm if self.steps else self.initial_norm

    @property
    def atom_labels(self):
        return [s.atom.label for s in self.steps]

    def min_margin(self):
        vals = [m for s in self.steps for m in s.margins.values()]
        return min(vals) if vals else 0.0


def audit_step(record):
    """Signed slack of the three step inequalities (negative means violated)."""
    p = record.params
    functional = min(
        1.0 - float(record.F_dual_norm),
        float(record.F_at_prev - ((1 - p["delta"]) * record.prev_norm - p["delta_prime"])),
    )
    select = float(record.F_at_atom - record.threshold)
    approx = float((1 + p["eta"]) * record.E + p["eta_prime"] - record.residual_norm)
    return [("functional", functional), ("select", select), ("approximant", approx)]


def _step_params(sched, n):
    return {
        "t": sched.t(n),
        "t_prime": sched.t_prime(n),
        "delta": sched.delta(n - 1),
        "delta_prime": sched.delta_prime(n - 1),
        "eta": sched.eta(n),
        "eta_prime": sched.eta_prime(n),
    }


def _in_span(G, atoms, dictionary):
    if G.is_zero():
        return True
    if dictionary.kind == "canonical":
        allowed = {int(a.element.indices[0]) for a in atoms}
        return set(G.support) <= allowed
    idx = G.indices
    for a in atoms:
        idx = np.union1d(idx, a.element.indices)
    Phi = np.zeros((len(idx), len(atoms)))
    for j, a in enumerate(atoms):
        Phi[np.searchsorted(idx, a.element.indices), j] = [float(v) for v in a.element.values]
    g = G.coefficients_at(idx).astype(float)
    c, *_ = np.linalg.lstsq(Phi, g, rcond=None)
    return np.linalg.norm(Phi @ c - g) <= 1e-9 * max(1.0, np.linalg.norm(g))


def run_gawcga(
    space,
    dictionary,
    f,
    sched=None,
    policy=None,
    max_steps=100,
    stop_tol=0.0,
    audit_tol=1e-9,
    cert_tol=1e-9,
):
    """Run the greedy loop from ``f`` and return its ``Trace``.

    Stops when the residual norm is at most ``stop_tol`` (a zero residual always
    stops) or after ``max_steps`` steps.  Raises ``ConstraintViolation`` as soon
    as a step inequality fails by more than ``audit_tol``.
    """
    if f.is_zero():
        raise ZeroElement("cannot approximate the zero element")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    sched = sched or Schedules()
    policy = policy or exact_policy()
    residual = f
    norm = space.norm(f)
    atoms, records = [], []
    status = "max_steps"
    for n in range(1, max_steps + 1):
        if norm == 0 or norm <= stop_tol:
            status = "converged"
            break
        t0 = time.perf_counter()
        params = _step_params(sched, n)
        ctx = StepContext(n, f, residual, norm, atoms, space, dictionary, sched, records)
        F = policy.functional(ctx) if policy.functional else None
        if F is None:
            F = space.norming_functional(residual)
        sup, _best = sup_functional(dictionary, F)
        threshold = params["t"] * sup - params["t_prime"]
        pref = policy.atom(ctx, F, sup, threshold) if policy.atom else None
        atom, _, _ = weak_select(dictionary, F, params["t"], params["t_prime"], preference=pref, tol=audit_tol)
        honored = None if pref is None else atom == pref
        atoms.append(atom)
        approx = best_approximation(space, f, [a.element for a in atoms], cert_tol=cert_tol)
        G = policy.approximant(ctx, approx) if policy.approximant else None
        if G is None:
            G = approx.G
        elif not _in_span(G, atoms, dictionary):
            raise ConstraintViolation(n, "span", float("nan"))
        new_residual = approx.residual if G is approx.G else f - G
        new_norm = space.norm(new_residual) if G is not approx.G else approx.E
        rec = StepRecord(
            n=n,
            atom=atom,
            F=F,
            sup=sup,
            threshold=threshold,
            G=G,
            residual=new_residual,
            residual_norm=new_norm,
            E=approx.E,
            prev_norm=norm,
            F_dual_norm=space.dual_norm(F),
            F_at_prev=F(residual),
            F_at_atom=F(atom.element),
            params=params,
            preference_honored=honored,
            method=approx.method,
            iterations=approx.iterations,
            certificate=approx.certificate,
            wall_time=time.perf_counter() - t0,
        )
        rec.margins = dict(audit_step(rec))
        records.append(rec)
        for which, margin in rec.margins.items():
            if margin < -audit_tol:
                raise ConstraintViolation(n, which, margin, trace=Trace(f, space.norm(f), records, "violation", policy.name, len(dictionary)))
        residual, norm = new_residual, new_norm
    else:
        if norm == 0 or norm <= stop_tol:
            status = "converged"
    return Trace(f, space.norm(f), records, status, policy.name, len(dictionary))


def run_wcga(space, dictionary, f, t=None, max_steps=100, stop_tol=0.0, **kwargs):
    """Weak Chebyshev greedy: every slack sequence except ``t`` is zero."""
    t = t if t is not None else Constant(1.0)
    if isinstance(t, (int, float)):
        t = Constant(float(t))
    return run_gawcga(space, dictionary, f, Schedules(t=t), exact_policy(), max_steps, stop_tol, **kwargs)


def exact_policy():
    return RealizationPolicy("exact")


def _weakest_atom(ctx, F, sup, threshold):
    return weakest_admissible(ctx.dictionary, F, threshold)


def weakest_policy():
    """Exact functional and approximant, but the least valuable admissible atom."""
    return RealizationPolicy("weakest", atom=_weakest_atom)


def _perturbed_functional(seed):
    def hook(ctx):
        exact = ctx.space.norming_functional(ctx.residual)
        d, dp = ctx.schedules.delta(ctx.n - 1), ctx.schedules.delta_prime(ctx.n - 1)
        budget = d * float(ctx.residual_norm) + dp
        if budget <= 0:
            return exact
        rng = np.random.default_rng([seed, ctx.n])
        idx = ctx.residual.indices
        other = Element._from_arrays(idx, rng.standard_normal(len(idx)))
        Fo = ctx.space.norming_functional(other)
        gap = float(ctx.residual_norm) - float(Fo(ctx.residual))
        if gap <= 0:
            return exact
        # shrink slightly so rounding stays inside the budget
        s = min(1.0, budget / gap) * (1 - 1e-9)
        return exact * (1 - s) + Fo * s

    return hook


def _lazy_approximant(ctx, approx):
    """Scale the best approximant toward 0 as far as the error slack allows."""
    sched, n = ctx.schedules, ctx.n
    bound = (1 + sched.eta(n)) * float(approx.E) + sched.eta_prime(n)
    space, f, G = ctx.space, ctx.f, approx.G
    if bound <= float(approx.E) or G.is_zero():
        return None

    def ok(lam):
        return float(space.norm(f - G * lam)) <= bound * (1 - 1e-12)

    if ok(0.0):
        return G * 0.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return G * hi if ok(hi) else None


def adversarial_policy(seed=0):
    """Spend every slack: perturbed functional, weakest atom, lazy approximant."""
    return RealizationPolicy(
        f"adversarial(seed={seed})",
        functional=_perturbed_functional(seed),
        atom=_weakest_atom,
        approximant=_lazy_approximant,
    )
