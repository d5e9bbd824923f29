import math

import numpy as np
import pytest

from stableld.errors import DomainError, UnsupportedCase
from stableld.tails import NormingPlan, SlowlyVarying, TailModel, tail_prob

LOG = SlowlyVarying("logpower", gamma=1.0)


def test_pareto_tail_values():
    m = TailModel(0.75, p=0.5, q=0.5)
    assert tail_prob(m, 16.0) == pytest.approx(0.0625, rel=1e-14)
    assert tail_prob(m, 1.0) == pytest.approx(0.5, rel=1e-14)
    assert tail_prob(m, 16.0, side="left") == pytest.approx(0.0625, rel=1e-14)


def test_log_tail_value():
    m = TailModel(1.5, ell=LOG, x_min=2.0)
    # p * log(x) * x^-alpha at x = e^2
    assert tail_prob(m, math.e**2) == pytest.approx(2 * math.exp(-3), rel=1e-12)
    assert tail_prob(m, math.e**2) == pytest.approx(0.09957413673572789, rel=1e-12)


def test_tail_prob_rejects_nonpositive():
    with pytest.raises(DomainError):
        tail_prob(TailModel(1.5), 0.0)


def test_alpha_one_unsupported():
    with pytest.raises(UnsupportedCase, match="alpha=1 unsupported"):
        TailModel(1.0)


def test_logpower_needs_monotone_threshold():
    with pytest.raises(DomainError):
        TailModel(0.75, ell=LOG, x_min=1.0)


def test_ell0():
    plan = NormingPlan(TailModel(2.0))
    assert plan.ell0(math.e**3 - 1) == pytest.approx(4.0, rel=1e-13)
    assert NormingPlan(TailModel(0.75)).ell0(100.0) == 1.0
    # 1 + int_1^11 log(u)/u du, checked against mpmath
    plan = NormingPlan(TailModel(2.0, ell=LOG, x_min=2.0))
    assert plan.ell0(10.0) == pytest.approx(3.874950869654386, rel=1e-12)


def test_ell_hat_quadrature_route_matches_closed_form():
    func = SlowlyVarying("callable", func=lambda x: np.log(np.maximum(x, 1.0)))
    assert func.hat(10.0) == pytest.approx(LOG.hat(10.0), rel=1e-9)


@pytest.mark.parametrize("alpha, n, expected", [(0.5, 100, 1e4), (1.5, 1000, 100.0)])
def test_a_n_pure_power(alpha, n, expected):
    assert NormingPlan(TailModel(alpha)).a(n) == pytest.approx(expected, rel=1e-10)


def test_a_n_gaussian_regime():
    # mpmath findroot of a^2 = 1e4 (1 + log(1 + a))
    a = NormingPlan(TailModel(2.0)).a(10**4)
    assert a == pytest.approx(255.904354266140894, rel=1e-10)
    assert a**2 == pytest.approx(1e4 * (1 + math.log1p(a)), rel=1e-10)


def test_b_n():
    assert NormingPlan(TailModel(0.75, p=0.5, q=0.5)).b(123) == 0.0
    assert NormingPlan(TailModel(1.5, centered=True)).b(500) == pytest.approx(0.0, abs=1e-12)
    assert NormingPlan(TailModel(1.5)).b(10) == pytest.approx(30.0, rel=1e-12)


def test_error_rate():
    assert NormingPlan(TailModel(0.75)).D(math.e**4) == pytest.approx(4 * math.exp(-3), rel=1e-12)
    assert NormingPlan(TailModel(1.5)).D(100.0, delta=0.1) == pytest.approx(100**-1.4, rel=1e-12)
    assert NormingPlan(TailModel(2.0)).D(10.0, delta=0.5) == pytest.approx(10**-1.5, rel=1e-12)
    with pytest.raises(DomainError):
        NormingPlan(TailModel(1.5)).D(100.0)


def test_isf_threshold_branch():
    m = TailModel(1.5)
    assert m.isf(1.0) == pytest.approx(1.0, rel=1e-15)
    assert m.sample(np.random.default_rng(0), (3, 4)).shape == (3, 4)


def test_sampler_tail_matches_tail_prob(rng):
    m = TailModel(0.75, p=0.5, q=0.5)
    M = 10**6
    x = m.sample(rng, M)
    p = tail_prob(m, 16.0)
    se = math.sqrt(p * (1 - p) / M)
    assert abs(np.mean(x > 16.0) - p) <= 3 * se


def test_centered_sampler_mean(rng):
    m = TailModel(1.5, centered=True)
    assert m.mean == pytest.approx(0.0, abs=1e-12)
    x = m.sample(rng, 10**6)
    # infinite variance; use a robust bound from a truncated second moment
    sigma = math.sqrt(np.mean(np.minimum(x * x, 1e6)))
    assert abs(x.mean()) <= 3 * sigma / math.sqrt(x.size)


def test_record_round_trip():
    m = TailModel(1.5, p=0.7, q=0.3, ell=SlowlyVarying("logpower", c=2.0, gamma=0.5), x_min=3.0, centered=True)
    assert TailModel.from_record(m.to_record()) == m
