"""Moduli of smoothness and the quantitative bounds around the greedy step.

Everything here is a finite computation.  Conditions that concern limits of
infinite sequences are reported as finite-horizon diagnostics and are never
claimed as decided.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ExponentOutOfRange, HypothesisViolated, NoRoot, WitnessInvalid
from .spaces import Element, LqSpace

__all__ = [
    "SmoothnessModel",
    "modulus_lp_bound",
    "modulus_empirical",
    "xi_solve",
    "beta_bound",
    "lemma2_lemma3_diagnostics",
    "lemma4_check",
    "find_subsequence",
    "check_conditions",
    "ConditionReport",
    "corollary_report",
]

DIAGNOSTIC_LABEL = "finite-horizon diagnostic - cannot decide the infinite-limit conditions"


def modulus_lp_bound(q, u):
    """Upper bound on the modulus of smoothness of ``l_q``."""
    if not q > 1 or not math.isfinite(q):
        raise ExponentOutOfRange(f"need q > 1, got {q}")
    if u < 0:
        raise ValueError("u must be non-negative")
    if q <= 2:
        return u**q / q
    return (q - 1) * u * u / 2


def _l2_exact(u):
    # sqrt(1+u^2) - 1 without cancellation
    return u * u / (math.sqrt(1 + u * u) + 1)


def modulus_empirical(space, u, samples=1000, seed=0, dim=2):
    """Largest ``(||x+uy|| + ||x-uy||)/2 - 1`` over random unit pairs.

    This is a lower estimate of the modulus of smoothness.
    """
    if u < 0 or samples < 1:
        raise ValueError("need u >= 0 and samples >= 1")
    if u == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    if isinstance(space, LqSpace):
        q = space.q

        def nrm(M):
            return np.sum(np.abs(M) ** q, axis=1) ** (1 / q)

        X = rng.standard_normal((samples, dim))
        Y = rng.standard_normal((samples, dim))
        X /= nrm(X)[:, None]
        Y /= nrm(Y)[:, None]
        vals = (nrm(X + u * Y) + nrm(X - u * Y)) / 2 - 1
        return float(max(vals.max(), 0.0))
    offset = 1 if getattr(space, "kind", None) == "smooth" else 0
    best = 0.0
    for _ in range(samples):
        x = Element.from_dense(rng.standard_normal(dim), offset)
        y = Element.from_dense(rng.standard_normal(dim), offset)
        x = x / space.norm(x)
        y = y / space.norm(y)
        best = max(best, float((space.norm(x + y * u) + space.norm(x - y * u)) / 2 - 1))
    return best


@dataclass(frozen=True)
class SmoothnessModel:
    """A computable modulus of smoothness ``u -> rho(u)``.

    kinds: ``lp-upper-bound`` (uses ``q``), ``l2-exact``, ``power``
    (``gamma * u^q``), ``empirical`` (sampled lower estimate over ``space``).
    """

    kind: str
    q: float = 2.0
    gamma: float = 1.0
    space: object = None
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("lp-upper-bound", "l2-exact", "power", "empirical"):
            raise ValueError(f"unknown smoothness model {self.kind!r}")
        if self.kind in ("lp-upper-bound", "power") and not self.q > 1:
            raise ExponentOutOfRange(f"need q > 1, got {self.q}")
        if self.kind == "empirical" and self.space is None:
            raise ValueError("empirical model needs a space")

    def __call__(self, u):
        if self.kind == "lp-upper-bound":
            return modulus_lp_bound(self.q, u)
        if self.kind == "l2-exact":
            return _l2_exact(u)
        if self.kind == "power":
            return self.gamma * u**self.q
        return modulus_empirical(self.space, u, self.samples, self.seed)

    @property
    def power_type(self):
        if self.kind == "l2-exact":
            return 2.0
        if self.kind == "lp-upper-bound":
            return min(self.q, 2.0)
        if self.kind == "power":
            return self.q
        return None

    @classmethod
    def for_space(cls, space):
        if isinstance(space, LqSpace):
            return cls("l2-exact") if space.q == 2 else cls("lp-upper-bound", q=space.q)
        return cls("empirical", space=space)


def xi_solve(model, theta, t, rel_tol=1e-10):
    """Positive root of ``rho(xi) = theta * t * xi`` by bracketing bisection."""
    if not 0 < theta <= 0.5 or not 0 < t <= 1:
        raise ValueError(f"need 0 < theta <= 1/2 and 0 < t <= 1, got {theta}, {t}")
    c = theta * t

    def g(u):
        return model(u) - c * u

    lo = 1.0
    while g(lo) >= 0:
        lo /= 2
        if lo < 1e-300:
            raise NoRoot("no lower bracket: rho(u) >= theta t u near 0")
    hi = lo
    while g(hi) <= 0:
        hi *= 2
        if hi > 1e9:
            raise NoRoot(f"no upper bracket below 1e9 for theta*t = {c}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm <= 0:
            lo = mid
        else:
            hi = mid
        if abs(gm) <= rel_tol * max(1.0, mid) * c and hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


DEFAULT_LAMBDA_GRID = np.geomspace(1e-6, 1e3, 200)


def beta_bound(model, delta, eta, delta_p, eta_p, norm_fn, norm_phi, lambda_grid=None):
    """Grid minimum of ``(delta + eta + (delta' + eta')/||f_n|| + 2 rho(lambda ||phi||)) / lambda``."""
    if norm_fn <= 0:
        raise ValueError("residual norm must be positive")
    grid = DEFAULT_LAMBDA_GRID if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    const = delta + eta + (delta_p + eta_p) / norm_fn
    vals = [(const + 2 * model(lam * norm_phi)) / lam for lam in grid]
    return float(min(vals))


def lemma4_check(q, a, b):
    """``(a + b^q)^(1/q) <= a + b`` for ``q > 1``, ``a >= 0``, ``b >= 1``."""
    if not q > 1 or a < 0 or b < 1:
        raise HypothesisViolated(f"need q > 1, a >= 0, b >= 1; got q={q}, a={a}, b={b}")
    # b (1 + a b^-q)^(1/q) is exact at a = 0 and cannot overflow
    ratio = math.exp(math.log(a) - q * math.log(b)) if a > 0 else 0.0
    lhs = b * (1 + ratio) ** (1 / q)
    return bool(lhs <= (a + b) * (1 + 1e-14))


def _verify_convex_witness(space, h, A, combination, tol=1e-9):
    if A <= 0:
        raise WitnessInvalid("A must be positive")
    total = math.fsum(abs(c) for c, _ in combination)
    if total > 1 + tol:
        raise WitnessInvalid(f"coefficients sum to {total} > 1")
    built = Element.zero()
    for c, g in combination:
        if abs(float(space.norm(g)) - 1) > 1e-9:
            raise WitnessInvalid("combination uses a non-normalized element")
        built = built + g * c
    gap = float(space.norm(h / A - built))
    if gap > tol * max(1.0, float(space.norm(h / A))):
        raise WitnessInvalid(f"h/A differs from the convex combination by {gap:.3g}")


def lemma2_lemma3_diagnostics(trace, n, h, A, eps, combination, sched, space, model=None, mu_grid=None):
    """Check the selection lower bound and the error upper bound at step ``n``.

    ``combination`` lists ``(coefficient, unit element)`` pairs certifying
    ``h / A`` lies in the closed convex hull of the dictionary.  ``n`` counts
    completed steps (``1 <= n < len(trace.steps)``).
    """
    f = trace.f
    if float(space.norm(f - h)) > eps + 1e-12:
        raise WitnessInvalid(f"||f - h|| exceeds eps = {eps}")
    _verify_convex_witness(space, h, A, combination)
    if not 1 <= n < len(trace.steps):
        raise ValueError("step index outside the trace")
    model = model or SmoothnessModel.for_space(space)
    rec, nxt = trace.steps[n - 1], trace.steps[n]
    fn = float(rec.residual_norm)
    d, dp = sched.delta(n), sched.delta_prime(n)
    e, ep = sched.eta(n), sched.eta_prime(n)
    t1, tp1 = sched.t(n + 1), sched.t_prime(n + 1)
    beta_G = beta_bound(model, d, e, dp, ep, fn, float(space.norm(rec.G))) if not rec.G.is_zero() else (
        beta_bound(model, d, e, dp, ep, fn, 0.0)
    )
    core = (1 - d) * fn - dp - beta_G - eps
    lower = t1 / A * core - tp1
    actual = abs(float(nxt.F_at_atom))
    mus = np.geomspace(1e-6, 1e3, 200) if mu_grid is None else np.asarray(mu_grid, dtype=float)
    mus = np.concatenate([[0.0], mus])
    upper = min(
        fn * (1 + d + dp / fn + 2 * model(mu / fn) - mu * t1 / (A * fn) * core) + mu * tp1 for mu in mus
    )
    later = [float(s.E) for s in trace.steps[n:]]
    eta0, eta0p = sched.eta0(), sched.eta0_prime()
    alpha = min(float(s.E) for s in trace.steps)
    C_f = (2 + eta0) * float(space.norm(f)) + eta0p
    return {
        "step": n,
        "beta_G": beta_G,
        "selection_lower_bound": lower,
        "selection_actual": actual,
        "selection_margin": actual - lower,
        "error_upper_bound": upper,
        "error_actual_max": max(later),
        "error_margin": upper - max(later),
        "theta_annotation": alpha**2 / (24 * A * C_f) if alpha > 0 else 0.0,
    }


@dataclass
class Subsequence:
    indices: list
    partial_sums: list

    @property
    def total(self):
        return self.partial_sums[-1] if self.partial_sums else 0.0


def find_subsequence(a, b, horizon, start=1):
    """Greedy subsequence with ``a_n <= b_n / k`` after ``k`` acceptances.

    ``a`` and ``b`` are callables on indices.  Returns the accepted indices up
    to ``horizon`` with the running sums of ``b`` over them.
    """
    idx, sums, acc = [], [], 0.0
    for n in range(start, horizon + 1):
        an, bn = a(n), b(n)
        if an < 0 or bn < 0:
            raise ValueError("sequences must be non-negative")
        if an <= bn / max(len(idx), 1):
            idx.append(n)
            acc += bn
            sums.append(acc)
    return Subsequence(idx, sums)


def lambda_partition(sched, p, alpha, horizon):
    """Split ``2..horizon`` into the index set where slack dominates ``t^p`` and the rest."""
    lam1, lam2 = [], []
    for n in range(2, horizon + 1):
        tp = sched.t(n) ** p
        in1 = (
            sched.delta(n - 1) + sched.delta_prime(n - 1) >= alpha * tp
            or sched.eta(n - 1) + sched.eta_prime(n - 1) >= alpha * tp
            or sched.t_prime(n) >= alpha ** (1 / p) * sched.t(n)
        )
        (lam1 if in1 else lam2).append(n)
    return lam1, lam2


def _growing(sub, horizon, tol=1e-8):
    """Did the subsequence sum still grow over the second half of the horizon?"""
    late = [s for i, s in zip(sub.indices, sub.partial_sums) if i > horizon // 2]
    early = [s for i, s in zip(sub.indices, sub.partial_sums) if i <= horizon // 2]
    if not late:
        return False
    return late[-1] - (early[-1] if early else 0.0) > tol


def _limit(seq):
    from .schedules import Constant, Indicator, PowerDecay, Table

    if isinstance(seq, Constant):
        return seq.value
    if isinstance(seq, PowerDecay):
        return 0.0 if seq.a > 0 else seq.c
    if isinstance(seq, Table):
        return seq.default
    if isinstance(seq, Indicator):
        return seq.off
    return math.nan


@dataclass
class ConditionReport:
    horizon: int
    p: float
    alpha_grid: list
    partitions: dict
    lambda2_tp_sums: dict
    lambda1_density: dict
    subsequence: list
    subsequence_partial_sums: list
    flags: dict
    theorem1: dict = field(default_factory=dict)
    label: str = DIAGNOSTIC_LABEL

    def to_dict(self):
        return {
            "label": self.label,
            "horizon": self.horizon,
            "p": self.p,
            "alpha_grid": list(self.alpha_grid),
            "partitions": {
                str(a): {"lambda1": v[0], "lambda2": v[1]} for a, v in self.partitions.items()
            },
            "lambda2_tp_sums": {str(a): v for a, v in self.lambda2_tp_sums.items()},
            "lambda1_density": {str(a): v for a, v in self.lambda1_density.items()},
            "subsequence": self.subsequence,
            "subsequence_partial_sums": self.subsequence_partial_sums,
            "flags": self.flags,
            "theorem1": self.theorem1,
        }


def check_conditions(sched, p, horizon, alpha_grid=(1.0, 0.1, 0.01), theta_grid=(0.5, 0.25, 0.125), model=None):
    """Evaluate the convergence conditions on ``1..horizon``.

    For each ``alpha`` the indices ``2..horizon`` are split by whether any slack
    reaches ``alpha t_n^p``; the complement's ``t^p`` sum includes index 1.
    A subsequence along which the slack is ``o(t^p)`` is extracted greedily,
    and, when ``model`` is given, the same is done with ``t_n xi_n`` in place
    of ``t_n^p`` for each ``theta`` in ``theta_grid``.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    if not p > 1:
        raise ExponentOutOfRange(f"need p > 1, got {p}")
    alpha_grid = [float(a) for a in alpha_grid]
    if not alpha_grid or any(a <= 0 for a in alpha_grid):
        raise ValueError("alpha values must be positive")
    parts, sums, dens = {}, {}, {}
    for alpha in alpha_grid:
        l1, l2 = lambda_partition(sched, p, alpha, horizon)
        parts[alpha] = (l1, l2)
        sums[alpha] = math.fsum(sched.t(j) ** p for j in [1] + l2)
        dens[alpha] = len(l1) / (horizon - 1)

    def slack(n):
        t1 = sched.t(n + 1)
        return max(
            sched.delta(n), sched.delta_prime(n), sched.eta(n), sched.eta_prime(n),
            sched.t_prime(n + 1) * t1 ** (p - 1) if t1 > 0 else (math.inf if sched.t_prime(n + 1) > 0 else 0.0),
        )

    sub = find_subsequence(slack, lambda n: sched.t(n + 1) ** p, horizon - 1)
    late = [i for i in sub.indices if i > (horizon - 1) // 2]
    flags = {
        "eta_bounded": math.isfinite(sched.eta0()),
        "eta_prime_vanishes": _limit(sched.eta_prime) == 0.0,
        "t_p_sum_diverges": math.isinf(sched.t.tail_sum(p, horizon)),
        "subsequence_sum_growing": _growing(sub, horizon - 1),
        "subsequence_reaches_horizon": bool(late),
    }
    flags["favorable"] = all(flags.values())
    report = ConditionReport(horizon, p, alpha_grid, parts, sums, dens, sub.indices, sub.partial_sums, flags)
    if model is not None:
        report.theorem1 = theorem1_check(sched, model, horizon, theta_grid)
    return report


def theorem1_check(sched, model, horizon, theta_grid=(0.5, 0.25, 0.125)):
    out = {}
    for theta in theta_grid:
        cache = lru_cache(maxsize=None)(lambda tv: xi_solve(model, theta, tv))

        def b(n):
            t1 = sched.t(n + 1)
            return t1 * cache(t1) if t1 > 0 else 0.0

        def a(n):
            t1 = sched.t(n + 1)
            xi = cache(t1) if t1 > 0 else 0.0
            return max(sched.delta(n), sched.delta_prime(n), sched.eta(n), sched.eta_prime(n), sched.t_prime(n + 1) * xi)

        sub = find_subsequence(a, b, horizon - 1)
        out[str(theta)] = {
            "subsequence_length": len(sub.indices),
            "t_xi_partial_sum": sub.total,
            "sum_growing": _growing(sub, horizon - 1),
        }
    return out


def corollary_report(sched, p, horizon, tail_tol=1e-8):
    """Preset sufficient conditions: t bounded away from 0, and slack summable in l_1."""
    lo = max(horizon // 2, 1)
    # liminf estimates sample at most ~2000 indices from the second half
    second = range(lo, horizon) if horizon - lo <= 2000 else sorted(set(np.linspace(lo, horizon - 1, 2000).astype(int).tolist()))
    liminf_t = min(sched.t(n) for n in second)
    liminf_slack = min(
        sched.t_prime(n + 1) + sched.delta(n) + sched.delta_prime(n) + sched.eta(n) for n in second
    )
    tails = {
        name: getattr(sched, name).tail_sum(1.0, horizon)
        for name in ("t_prime", "delta", "delta_prime", "eta", "eta_prime")
    }
    l1 = all(v <= tail_tol for v in tails.values())
    return {
        "label": DIAGNOSTIC_LABEL,
        "liminf_t_positive": liminf_t > 0,
        "liminf_t_estimate": liminf_t,
        "liminf_slack_estimate": liminf_slack,
        "slack_tail_bounds": tails,
        "slack_in_l1": l1,
        "t_p_sum_diverges": math.isinf(sched.t.tail_sum(p, horizon)),
        "l1_corollary_predicts_convergence": l1 and math.isinf(sched.t.tail_sum(p, horizon)),
    }
