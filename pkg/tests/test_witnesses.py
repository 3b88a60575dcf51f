import mpmath
import pytest

from gawcga import Element, canonical_dictionary, run_wcga
from gawcga.errors import ConstructionInvalid
from gawcga.schedules import Constant, PowerDecay, Schedules
from gawcga.smooth import SmoothSpaceX
from gawcga.witnesses import (
    WITNESS_NAMES,
    build_witness,
    witness_finite_lambda1,
    witness_infinite_lambda1,
    witness_smooth_space_divergence,
    witness_unbounded_eta,
)


@pytest.fixture(scope="module")
def smooth_run():
    w = witness_smooth_space_divergence(K=20)
    return w, w.run()


def test_unbounded_eta_default():
    w = witness_unbounded_eta()
    res = w.run()
    assert res.passed
    spikes = [s for s in res.trace.steps if s.n % 10 == 0]
    assert len(spikes) == 10
    assert min(float(s.residual_norm) for s in spikes) >= 0.5
    assert res.trace.min_margin() >= -1e-9
    contrast = w.contrast().run().trace
    assert contrast.final_residual <= 1e-6


def test_unbounded_eta_slack_schedule():
    w = witness_unbounded_eta()
    # the relative slack grows without bound along the spikes
    assert w.sched.eta(10) == pytest.approx(0.5)
    assert w.sched.eta(80) == pytest.approx(4.0)
    assert w.sched.eta(11) == 0.0


def test_unbounded_eta_absolute_mode():
    res = witness_unbounded_eta(mode="absolute").run()
    assert res.passed


def test_unbounded_eta_rejects_bad_constructions():
    with pytest.raises(ConstructionInvalid):
        witness_unbounded_eta(gap=1)
    with pytest.raises(ConstructionInvalid):
        witness_unbounded_eta(alpha=0.0)
    with pytest.raises(ConstructionInvalid):
        witness_unbounded_eta(n_k=[10, 5, 30])


def test_finite_lambda1():
    w = witness_finite_lambda1()
    res = w.run()
    assert res.passed
    assert all(s.atom.label != 0 for s in res.trace.steps)
    assert min(res.trace.residual_norms) >= 1.0 - 1e-12
    with pytest.raises(ConstructionInvalid):
        witness_finite_lambda1(t=Constant(0.5), horizon=50)


def test_infinite_lambda1():
    w = witness_infinite_lambda1()
    res = w.run()
    assert res.passed
    beta = 1.1 ** -0.5
    assert w.floor == pytest.approx(beta, rel=1e-15)
    assert min(res.trace.residual_norms) >= beta - 1e-9
    for s in res.trace.steps:
        assert float(s.F_dual_norm) <= 1 + 1e-12
        assert s.margins["functional"] >= -1e-9
    assert w.contrast().run().trace.final_residual <= 1e-9


def test_infinite_lambda1_rejects_zero_slack():
    with pytest.raises(ConstructionInvalid):
        witness_infinite_lambda1(sched=Schedules())
    with pytest.raises(ConstructionInvalid):
        witness_infinite_lambda1(sched=Schedules(delta=PowerDecay(0.25, 2.0)))


def test_smooth_space_checks(smooth_run):
    w, res = smooth_run
    assert res.passed, res.checks
    assert res.trace.atom_labels == list(range(1, 21))
    assert abs(w.floor - 0.416) <= 1e-3
    assert min(float(r) for r in res.trace.residual_norms) >= w.floor - 1e-9


def test_smooth_space_residual_coefficients(smooth_run):
    w, res = smooth_run
    X = w.space
    # residual after m steps is supported on 1..m+1 and is never small
    for m, s in enumerate(res.trace.steps, start=1):
        assert s.residual.horizon == m + 1
        assert float(X.x_norm(s.residual)) >= X.rho


def test_smooth_space_floor_from_independent_sum():
    X = SmoothSpaceX(horizon=25)
    exponent = mpmath.nsum(lambda k: 1 - 1 / (1 + mpmath.mpf(2) ** (1 - k)), [1, mpmath.inf])
    assert X.rho == pytest.approx(float(2 ** (-exponent)), abs=1e-9)


def test_canonical_dictionary_converges_in_smooth_space():
    X = SmoothSpaceX(horizon=6)
    D = canonical_dictionary(X, 1, 6)
    tr = run_wcga(X, D, Element({1: 1.0, 2: 0.5, 5: -0.25}), max_steps=10)
    assert tr.final_residual == 0


def test_build_witness_by_name():
    assert set(WITNESS_NAMES) == {"unbounded-eta", "finite-lambda1", "infinite-lambda1", "smooth-space"}
    w = build_witness("finite-lambda1", {"t": {"kind": "power", "c": 1.0, "a": 2.0}, "horizon": 500})
    assert w.run().passed
    w = build_witness("smooth-space", {"K": 6})
    assert w.run().passed and w.to_config()["K"] == 6
    with pytest.raises(KeyError):
        build_witness("nope")
