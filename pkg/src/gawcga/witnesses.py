"""Ready-to-run divergence instances.

Each constructor returns a ``Witness`` bundling a space, dictionary, starting
element, slack schedules and a realization policy, plus the predicates its run
must satisfy.  Divergence is finite-horizon: the residual stays above a stated
floor for every computed step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

from ._numeric import MP
from .dictionaries import canonical_dictionary, g_dictionary
from .engine import RealizationPolicy, Trace, run_gawcga
from .errors import ConstructionInvalid
from .projection import perturbed_approximant
from .schedules import Constant, PowerDecay, Schedules, Table
from .smooth import GeometricExponents, SmoothSpaceX
from .spaces import Element, Functional, LqSpace, dual_exponent
from .theory import lambda_partition

__all__ = [
    "Witness",
    "WitnessResult",
    "witness_unbounded_eta",
    "witness_finite_lambda1",
    "witness_infinite_lambda1",
    "witness_smooth_space_divergence",
    "build_witness",
    "WITNESS_NAMES",
]


@dataclass
class WitnessResult:
    trace: Trace
    checks: dict

    @property
    def passed(self):
        return all(ok for ok, _ in self.checks.values())


@dataclass(frozen=True)
class Witness:
    name: str
    space: object
    dictionary: object
    f: Element
    sched: Schedules
    policy: RealizationPolicy
    max_steps: int
    expected: Callable
    floor: float
    params: dict = field(default_factory=dict)
    note: str = ""
    stop_tol: float = 0.0

    def run(self, audit_tol=1e-9):
        trace = run_gawcga(
            self.space, self.dictionary, self.f, self.sched, self.policy,
            self.max_steps, self.stop_tol, audit_tol=audit_tol,
        )
        return WitnessResult(trace, self.expected(trace))

    def contrast(self):
        """Same element and dictionary with every slack removed and exact choices."""
        return replace(
            self,
            name=self.name + "/zero-slack",
            sched=self.sched.zero_slack(),
            policy=RealizationPolicy("exact"),
            expected=lambda trace: {},
        )

    def to_config(self):
        return {"name": self.name, **self.params}


def _floor_check(trace, floor, tol):
    norms = [float(r) for r in trace.residual_norms[1:]]
    worst = min(norms) if norms else math.inf
    return worst >= floor - tol, f"min residual {worst:.17g} vs floor {floor:.17g}"


# ---------------------------------------------------------------- unbounded eta


def _unbounded_eta_profile(q, alpha, nks, horizon):
    a = []
    k = 0
    prev = alpha
    for j in range(1, horizon + 1):
        while k < len(nks) and j > nks[k]:
            k += 1
        if k == 0:
            v = alpha
        else:
            if k >= len(nks):
                raise ConstructionInvalid(
                    f"subsequence ends at {nks[-1]} before the horizon {horizon}; extend it"
                )
            gap = nks[k] - nks[k - 1]
            v = min(prev, (1.0 / k) * gap ** (-1.0 / q))
        a.append(v)
        prev = v
    return a


def witness_unbounded_eta(q=2.0, alpha=0.5, n_k=None, horizon=100, mode="relative", gap=10):
    """Unbounded relative approximation slack along ``n_k`` defeats convergence.

    ``n_k`` defaults to ``gap, 2 gap, 3 gap, ...`` past the horizon.  At each ``n_k`` the approximant is
    shifted by ``alpha e_1``; ``eta_{n_k} = alpha k`` pays for the shift where
    the tail bound is certified within the horizon, and ``eta'_{n_k} = alpha``
    elsewhere (everywhere in ``mode='absolute'``).
    """
    if alpha <= 0:
        raise ConstructionInvalid("alpha must be positive")
    if gap < 1:
        raise ConstructionInvalid("gap must be a positive integer")
    if mode not in ("relative", "absolute"):
        raise ValueError(f"unknown mode {mode!r}")
    space = LqSpace(q)
    nks = list(n_k) if n_k is not None else list(range(gap, horizon + gap + 1, gap))
    if any(b <= a for a, b in zip(nks, nks[1:])) or not nks or nks[0] < 1:
        raise ConstructionInvalid("n_k must be positive and strictly increasing")
    gaps = [b - a for a, b in zip(nks, nks[1:])]
    if any(g2 < g1 for g1, g2 in zip(gaps, gaps[1:])):
        raise ConstructionInvalid("gaps of n_k must be non-decreasing")
    a = _unbounded_eta_profile(q, alpha, nks, horizon)
    if a[0] < alpha:
        raise ConstructionInvalid(f"a_1 = {a[0]} < alpha = {alpha}")
    if any(y > x for x, y in zip(a, a[1:])) or any(v <= 0 for v in a):
        raise ConstructionInvalid("profile is not positive and non-increasing")
    validated = []
    for k, (nk, nk1) in enumerate(zip(nks, nks[1:]), start=1):
        if nk1 > horizon:
            break
        tail = math.fsum(v**q for v in a[nk:]) ** (1 / q)
        if tail < 1.0 / k:
            raise ConstructionInvalid(
                f"tail after n_{k} = {nk} is {tail:.6g} < 1/{k}; enlarge the gaps of n_k"
            )
        validated.append(nk)
    spikes = [nk for nk in nks if nk <= horizon]
    if mode == "relative":
        eta = Table({nk: alpha * (k + 1) for k, nk in enumerate(nks) if nk in validated})
        eta_p = Table({nk: alpha for nk in spikes if nk not in validated})
    else:
        eta, eta_p = Table({}), Table({nk: alpha for nk in spikes})
    sched = Schedules(eta=eta, eta_prime=eta_p)
    spike_set = frozenset(spikes)
    e1 = Element.basis(1)

    def approximant(ctx, approx):
        if ctx.n not in spike_set:
            return None
        return perturbed_approximant(
            ctx.space, ctx.f, approx.G, approx.E, ctx.schedules.eta(ctx.n),
            ctx.schedules.eta_prime(ctx.n), spike=(e1, alpha),
        )

    def expected(trace):
        steps = {s.n: s for s in trace.steps}
        vals = [float(steps[nk].residual_norm) for nk in spikes if nk in steps]
        ok = bool(vals) and min(vals) >= alpha - 1e-12
        return {"residual_at_n_k": (ok, f"min over n_k {min(vals) if vals else math.nan:.17g} vs {alpha}")}

    f = Element({j: v for j, v in enumerate(a, start=1)})
    return Witness(
        "unbounded-eta", space, canonical_dictionary(space, 0, horizon), f, sched,
        RealizationPolicy("spike", approximant=approximant), horizon, expected, alpha,
        {"q": q, "alpha": alpha, "n_k": nks, "horizon": horizon, "mode": mode, "gap": gap},
        "approximant shifted by alpha*e_1 at every n_k; atoms chosen greedily",
    )


# ---------------------------------------------------------------- finite Lambda_1


def witness_finite_lambda1(q=2.0, t=None, horizon=400):
    """Summable ``t^p``: the first coordinate is never selected and the residual stays >= 1."""
    t = t if t is not None else PowerDecay(1.0, 2.0)
    p = dual_exponent(q)
    tail = t.tail_sum(p, horizon)
    if not tail < 1e-8:
        raise ConstructionInvalid(f"sum of t^p not certified convergent at horizon {horizon} (tail {tail:.3g})")
    space = LqSpace(q)
    coords = {0: 1.0}
    coords.update({j: t(j) ** (p / q) for j in range(1, horizon + 1)})
    f = Element(coords)
    dictionary = canonical_dictionary(space, 0, horizon)

    def atom(ctx, F, sup, threshold):
        if ctx.n <= horizon:
            return dictionary.atom_by_label(ctx.n)
        return None

    def expected(trace):
        chosen0 = [s.n for s in trace.steps if s.atom.label == 0]
        return {
            "residual_floor": _floor_check(trace, 1.0, 1e-12),
            "first_coordinate_unselected": (not chosen0, f"steps selecting index 0: {chosen0}"),
            "preferences_honored": (
                all(s.preference_honored for s in trace.steps),
                "every step took e_n",
            ),
        }

    return Witness(
        "finite-lambda1", space, dictionary, f, Schedules(t=t), RealizationPolicy("prefer-e_n", atom=atom),
        horizon, expected, 1.0, {"q": q, "t": t.to_config(), "horizon": horizon},
        "atoms e_1, e_2, ... in order; index 0 carries the undetected mass",
    )


# ---------------------------------------------------------------- infinite Lambda_1


def witness_infinite_lambda1(q=2.0, sched=None, alpha=0.1, horizon=200):
    """Slack large relative to ``t^p`` on infinitely many steps lets an adversary stall."""
    sched = sched if sched is not None else Schedules(delta=Constant(0.25))
    p = dual_exponent(q)
    eta0, eta0p = sched.eta0(), sched.eta0_prime()
    if not (math.isfinite(eta0) and math.isfinite(eta0p)):
        raise ConstructionInvalid("error sequences must be bounded")
    lam1, rest = lambda_partition(sched, p, alpha, horizon)
    lam2 = [1] + rest
    need = math.ceil(1 / alpha - 1e-12)
    if len(lam1) < need:
        raise ConstructionInvalid(
            f"only {len(lam1)} slack-dominated indices up to {horizon}; need {need}"
        )
    late = math.fsum(sched.t(j) ** p for j in lam2 if j > horizon // 2)
    if late > 1e-8:
        raise ConstructionInvalid(f"t^p over the complement is not settling (late mass {late:.3g})")
    a = {j: 1.0 for j in lam1[:need]}
    lam1_set, lam2_set = set(lam1), set(lam2)
    S = math.fsum(v**q for v in a.values()) + math.fsum(sched.t(j) ** p for j in lam2)
    beta = (eta0 + eta0p + alpha * S) ** (-1 / q)
    scale = alpha ** (1 / q) * beta
    coords = {j: scale * v for j, v in a.items()}
    coords.update({j: scale * sched.t(j) ** (p / q) for j in lam2})
    f = Element(coords)
    space = LqSpace(q)
    dictionary = canonical_dictionary(space, 0, horizon)

    def chosen(ctx):
        return {a_.label for a_ in ctx.atoms}

    def functional(ctx):
        m = ctx.n - 1
        if m == 0:
            coef = {j: v ** (q / p) for j, v in a.items()}
            coef.update({j: sched.t(j) for j in lam2})
            denom = (alpha * beta**q) ** (-1 / p) * float(space.norm(f)) ** (q / p)
            return Functional({j: v / denom for j, v in coef.items()})
        d = sched.delta(m) + sched.delta_prime(m)
        e = sched.eta(m) + sched.eta_prime(m)
        A = (beta ** (-q) * (1 + d) * float(ctx.residual_norm) ** q) ** (-1 / p)
        gamma = chosen(ctx)
        coef = {j: alpha ** (1 / p) * v ** (q / p) for j, v in a.items()}
        coef.update({j: alpha ** (1 / p) * sched.t(j) for j in lam2 if j not in gamma})
        coef[0] = d ** (1 / p)
        coef[1] = coef.get(1, 0.0) + e ** (1 / p)
        return Functional({j: A * v for j, v in coef.items()})

    def atom(ctx, F, sup, threshold):
        n = ctx.n
        if n in lam2_set:
            return dictionary.atom_by_label(n)
        e0, e1 = dictionary.atom_by_label(0), dictionary.atom_by_label(1)
        return e0 if F(e0.element) >= F(e1.element) else e1

    def approximant(ctx, approx):
        n = ctx.n
        gamma = chosen(ctx)
        fn = {j: scale * v for j, v in a.items()}
        fn.update({j: scale * sched.t(j) ** (p / q) for j in lam2 if j not in gamma})
        e = sched.eta(n) + sched.eta_prime(n)
        fn[1] = fn.get(1, 0.0) + beta * e ** (1 / q)
        return f - Element(fn)

    def expected(trace):
        picked = sorted({s.atom.label for s in trace.steps} & lam1_set)
        return {
            "residual_floor": _floor_check(trace, beta, 1e-9),
            "slack_indices_unselected": (not picked, f"selected slack-dominated indices: {picked}"),
        }

    return Witness(
        "infinite-lambda1", space, dictionary, f, sched,
        RealizationPolicy("adversarial-explicit", functional=functional, atom=atom, approximant=approximant),
        horizon, expected, beta,
        {"q": q, "alpha": alpha, "horizon": horizon, "schedules": sched.to_config()},
        f"beta = {beta:.17g}; slack-dominated set has {len(lam1)} indices up to the horizon",
    )


# ---------------------------------------------------------------- smooth space


def _c_recursion_error(X, residual, m):
    """Worst relative defect of the coefficient recursion on a residual with ``m`` coordinates."""
    c = [None] + [residual[k] for k in range(1, m + 1)]
    if any(v == 0 for v in c[1:]):
        return math.inf
    theta = [None] + [X.theta_norm(residual, n) for n in range(1, m + 1)]
    worst = MP.zero
    base = MP.power(abs(c[1]), X.p(2) - 1)
    lhs2 = MP.power(abs(c[2]), X.p(2) - 1)
    worst = abs(lhs2 - base) / abs(base)
    prod = MP.one
    for k in range(3, m + 1):
        prod *= MP.power(theta[k - 1], X.p(k) - X.p(k - 1))
        lhs = MP.power(abs(c[k]), X.p(k) - 1)
        rhs = base * prod
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return float(worst)


def witness_smooth_space_divergence(exponents=None, K=20):
    """Exact greedy from ``e_1`` in the renormed space picks ``g_m`` forever."""
    exponents = exponents if exponents is not None else GeometricExponents()
    X = SmoothSpaceX(exponents, K + 1)
    D = g_dictionary(X, K)
    raw = [Element({1: 1.0, 2: 1.0, 3: 1.0})] + [Element({k: 1.0, k + 1: 1.0}) for k in range(1, K + 1)]
    rho = X.rho

    def expected(trace):
        labels = [s.atom.label for s in trace.steps]
        atoms_ok = labels == list(range(1, len(labels) + 1))
        rec_err = 0.0
        for j, s in enumerate(trace.steps, start=1):
            if j + 1 <= X.horizon:
                rec_err = max(rec_err, _c_recursion_error(X, s.residual, j + 1))
        ties = []
        for m, s in enumerate(trace.steps, start=1):
            v0, vm = abs(s.F(raw[0])), abs(s.F(raw[m]))
            ties.append((m, float(v0), float(vm)))
        tie_ok = all(abs(v0 - vm) <= 1e-8 for m, v0, vm in ties if m != 2)
        m2 = [t for t in ties if t[0] == 2]
        second_ok = all(v0 < vm for _, v0, vm in m2)
        return {
            "atoms_are_g_m": (atoms_ok, f"labels {labels}"),
            "coefficient_recursion": (rec_err <= 1e-6, f"max relative defect {rec_err:.3g}"),
            "residual_floor": _floor_check(trace, rho, 1e-9),
            "functional_tie": (tie_ok and second_ok, "equal raw values except step 2 where g_0 scores 0"),
        }

    return Witness(
        "smooth-space", X, D, Element({1: 1.0}), Schedules(), RealizationPolicy("exact"), K, expected, rho,
        {"exponents": exponents.to_config(), "K": K},
        f"floor rho = {rho:.17g}",
    )


WITNESS_NAMES = ("unbounded-eta", "finite-lambda1", "infinite-lambda1", "smooth-space")


def build_witness(name, params=None):
    """Construct a witness from its name and plain-data parameters."""
    from .schedules import sequence_from_config
    from .smooth import exponents_from_config

    params = dict(params or {})
    if name == "unbounded-eta":
        return witness_unbounded_eta(**params)
    if name == "finite-lambda1":
        if "t" in params:
            params["t"] = sequence_from_config(params["t"])
        return witness_finite_lambda1(**params)
    if name == "infinite-lambda1":
        if "schedules" in params:
            params["sched"] = Schedules.from_config(params.pop("schedules"))
        return witness_infinite_lambda1(**params)
    if name == "smooth-space":
        if "exponents" in params:
            params["exponents"] = exponents_from_config(params["exponents"])
        return witness_smooth_space_divergence(**params)
    raise KeyError(f"unknown witness {name!r}; choose from {', '.join(WITNESS_NAMES)}")
