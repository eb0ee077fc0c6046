import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptive_sgd.controller import (
    ControllerState,
    Limits,
    Phase,
    PhasePolicy,
    accept_step,
    line_search,
    phase_of,
    propose_step,
    raw_step,
)
from adaptive_sgd.errors import ContractError, LineSearchError
from adaptive_sgd.hilbert import InnerProductOperator, Point
from adaptive_sgd.sop import (
    QuadraticSopSpec,
    SampleStream,
    quadratic_make,
    single_atom_quadratic,
)

pos = st.floats(1e-6, 1e6)


@pytest.mark.parametrize(
    "L, var, g, phase, expected",
    [
        (4.0, 0.0, 3.0, Phase.LOCAL, 0.25),
        (2.0, 4.0, 10.0, Phase.LOCAL, 0.3),
        (2.0, -5.0, 10.0, Phase.LOCAL, 0.5),  # negative variance is ignored
        (2.0, 4.0, 10.0, Phase.GLOBAL, 0.5),
        (2.0, 10.0, 10.0, Phase.LOCAL, None),  # var = g gives zero: disregarded
        (2.0, 12.0, 10.0, Phase.LOCAL, None),
    ],
)
def test_raw_step_examples(L, var, g, phase, expected):
    r = raw_step(L, var, g, phase)
    if expected is None:
        assert r is None
    else:
        assert r == pytest.approx(expected, rel=1e-15)


@given(pos, pos, st.floats(0.0, 1e6))
def test_raw_step_bounded_by_inverse_L(L, g, var):
    r = raw_step(L, var, g, Phase.LOCAL)
    assert r is None or r <= 1.0 / L * (1 + 1e-15)
    assert raw_step(L, var, g, Phase.GLOBAL) == 1.0 / L


@given(pos, pos, st.floats(0.0, 1.0))
def test_raw_step_scale_invariant(L, g, frac):
    var = frac * g
    a = raw_step(L, var, g)
    b = raw_step(L, 2 * var, 2 * g)
    assert (a is None and b is None) or a == pytest.approx(b, rel=1e-14)


def test_propose_step_skip_keeps_alpha():
    s = ControllerState.initial(0.5, g0=1.0)
    s.k = 3
    s.var.value = 2.0
    assert propose_step(s) == 0.5


def test_propose_step_smoothing_and_clamp():
    s = ControllerState.initial(0.5, g0=1.0)
    s.k = 1  # gamma_1 = 0: suggestion replaces alpha
    s.L.value = 4.0
    assert propose_step(s) == 0.25
    s.k = 2
    s.L.value = 1.0
    gamma = 1 - 2**-0.7
    assert propose_step(s) == pytest.approx(gamma * 0.25 + (1 - gamma) * 1.0)
    s = ControllerState.initial(0.5, g0=1.0, limits=Limits(alpha_max=0.1))
    assert s.alpha.value == 0.1
    s.k = 1
    s.L.value = 1e-3
    assert propose_step(s) == 0.1


def test_propose_step_unsmoothed():
    s = ControllerState.initial(0.5, g0=1.0, smooth_alpha=False)
    s.k = 10
    s.L.value = 8.0
    assert propose_step(s) == 0.125


@pytest.mark.parametrize("before, after, ok", [(1.0, 0.9, True), (1.0, 1.0, True), (1.0, 1.1, False),
                                               (1.0, math.nan, False), (math.inf, 1.0, False)])
def test_accept_step(before, after, ok):
    assert accept_step(before, after) is ok


@pytest.mark.parametrize(
    "k, budget, frac, phase",
    [(59, 100, 0.6, Phase.GLOBAL), (60, 100, 0.6, Phase.LOCAL), (0, 10, 0.0, Phase.LOCAL),
     (10**6, 10, 0.0, Phase.LOCAL), (99, 100, 1.0, Phase.GLOBAL)],
)
def test_phase_of(k, budget, frac, phase):
    assert phase_of(k, budget, PhasePolicy(frac)) == phase


def test_phase_policy_validation():
    with pytest.raises(ContractError):
        PhasePolicy(1.5)
    with pytest.raises(ContractError):
        phase_of(0, 0, PhasePolicy())


def test_line_search_scalar_quadratic():
    # f = c/2 w^2: decrease iff alpha < 2/c, so 3/c fails and 1.5/c is accepted
    c = 4.0
    sop = single_atom_quadratic([[c]])
    res = line_search(sop, InnerProductOperator.identity(1), 3.0 / c, Point([1.0]), 0.5, SampleStream(0))
    assert res.alpha == pytest.approx(1.5 / c)
    assert res.trials == 2
    assert res.sample.payload == 0
    assert res.w_next.entries[0] == pytest.approx(1.0 - 1.5)


def test_line_search_accepts_immediately_below_inverse_lmax():
    sop = quadratic_make(QuadraticSopSpec(10, 1.0, 50.0, 0.0, 0.0, seed=0))
    w = Point(np.random.default_rng(0).standard_normal(10))
    res = line_search(sop, InnerProductOperator.identity(10), 1.0 / 50.0, w, 0.5, SampleStream(1))
    assert res.trials == 1
    assert res.f_next <= res.f_curr


def test_line_search_trial_bound_deterministic():
    c = 1e3
    sop = single_atom_quadratic([[c]])
    alpha0, eta = 1e4, 0.5
    res = line_search(sop, InnerProductOperator.identity(1), alpha0, Point([1.0]), eta, SampleStream(0))
    assert res.trials <= math.ceil(math.log(alpha0 * 2 * c) / math.log(1 / eta)) + 1


def test_line_search_draws_fresh_samples():
    sop = quadratic_make(QuadraticSopSpec(3, 1.0, 2.0, 0.1, 0.1, seed=0))
    stream = SampleStream(5)
    res = line_search(sop, InnerProductOperator.identity(3), 1e6, Point([1.0, 1.0, 1.0]), 0.5, stream)
    assert res.trials > 1
    assert stream.index == res.trials
    assert res.sample.index == res.trials - 1


def test_line_search_cap():
    sop = single_atom_quadratic([[1.0]])
    with pytest.raises(LineSearchError) as exc:
        line_search(sop, InnerProductOperator.identity(1), 1e6, Point([1.0]), 0.5, SampleStream(0), max_shrinks=3)
    assert exc.value.trials == 4


@pytest.mark.parametrize("alpha0, eta", [(0.0, 0.5), (1.0, 1.0), (1.0, 0.0)])
def test_line_search_contract(alpha0, eta):
    sop = single_atom_quadratic([[1.0]])
    with pytest.raises(ContractError):
        line_search(sop, InnerProductOperator.identity(1), alpha0, Point([1.0]), eta, SampleStream(0))


def test_limits_validation():
    with pytest.raises(ContractError):
        Limits(alpha_min=1.0, alpha_max=0.5)
    lim = Limits()
    assert lim.clamp_alpha(1e9) == 1e6
    assert lim.clamp_L(0.0) == 1e-12
