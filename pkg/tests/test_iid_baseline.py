import math

import numpy as np
import pytest
from scipy import integrate, special

from stableld.errors import DomainError, InsufficientSamples
from stableld.iid_baseline import (
    charfn_Psi,
    charfn_table,
    fact23_check,
    inversion_tail,
    lemma39_check,
    mc_charfn_table,
    mc_tail_Sn,
    one_minus_Psi,
    sample_X,
    verify_thm_LD,
)
from stableld.tails import NormingPlan, SlowlyVarying, TailModel, tail_prob

SYM = TailModel(0.75, p=0.5, q=0.5)


def test_sampler_threshold_and_tail(rng):
    x = sample_X(SYM, rng, 10**6)
    p = 0.0625
    assert abs(np.mean(x > 16) - p) <= 3 * math.sqrt(p * (1 - p) / x.size)


def test_charfn_basics():
    assert charfn_Psi(SYM, 0.0) == pytest.approx(1.0)
    t = np.geomspace(1e-3, 10, 30)
    assert np.max(np.abs(np.imag(charfn_Psi(SYM, t)))) <= 1e-10


def test_charfn_contour_against_direct_quadrature():
    m = TailModel(1.5, p=0.7, q=0.3, x_min=2.0, centered=True)
    t = np.array([0.01, 0.3, 2.0])
    # E e^{itX}: uniform middle part plus Pareto density integrated by QAWF
    a, xm, s = m.alpha, m.x_min, m.shift
    ref = []
    for ti in t:
        mid = m.middle_mass * np.sinc(ti * xm / math.pi)
        dens = lambda x: a * xm**-a * 0 + a * x ** (-a - 1)
        c, _ = integrate.quad(dens, xm, np.inf, weight="cos", wvar=ti)
        si, _ = integrate.quad(dens, xm, np.inf, weight="sin", wvar=ti)
        val = mid + m.p * (c + 1j * si) + m.q * (c - 1j * si)
        ref.append(val * np.exp(-1j * ti * s))
    assert np.allclose(charfn_Psi(m, t), ref, atol=1e-9)


def test_charfn_against_monte_carlo():
    m = TailModel(1.5, centered=True)
    tab = mc_charfn_table(m, 2.0, 10**6, seed=11, n_points=9)
    exact = charfn_Psi(m, tab.t)
    assert np.all(np.abs(tab.values - exact) <= 4 * tab.error)
    quad_tab = charfn_table(m, 2.0, n_points=9)
    assert np.allclose(quad_tab.values, exact, atol=1e-9)


def test_one_minus_psi_slope():
    t = np.geomspace(1e-4, 1e-1, 40)
    slope = np.polyfit(np.log(t), np.log(np.real(one_minus_Psi(SYM, t))), 1)[0]
    assert slope == pytest.approx(0.75, abs=0.02)


def test_one_minus_psi_methods_agree():
    m = TailModel(0.75, p=0.8, q=0.2, ell=SlowlyVarying("logpower", gamma=0.5), x_min=3.0)
    t = np.array([1e-4, 1e-2, 0.5])
    assert np.allclose(one_minus_Psi(m, t, "contour"), one_minus_Psi(m, t, "quad"), rtol=1e-6)


def test_mc_tail_sentinel_and_gate():
    m = TailModel(1.5, centered=True)
    assert mc_tail_Sn(m, 10, -1e308, 100, seed=0).p_hat == 1.0
    with pytest.raises(InsufficientSamples):
        mc_tail_Sn(m, 10, 1e6, 1000, seed=0)
    with pytest.raises(DomainError):
        mc_tail_Sn(m, 0, 10.0, 1000, seed=0)


def test_mc_tail_single_summand():
    m = TailModel(1.5, centered=True)
    est = mc_tail_Sn(m, 1, 20.0, 10**6, seed=2)
    assert est.ci_lo <= tail_prob(m, 20.0) <= est.ci_hi


def test_inversion_gaussian():
    res = inversion_tail(lambda t: np.exp(-t * t / 2), 0.0, 1e3)
    assert res.value == pytest.approx(0.5, abs=1e-4)
    assert res.warning is None


def test_inversion_against_exact_law():
    m = TailModel(1.5)
    res = inversion_tail(lambda t: charfn_Psi(m, t), 20.0, 1e3, T=200.0)
    assert res.value == pytest.approx(tail_prob(m, 20.0) - tail_prob(m, 1020.0), abs=1e-3)


def test_inversion_interval_mass_tends_to_tail():
    # P(X in (N, N+g]) / P(X > N) -> 1 when n N = o(g); here g = 10 n N
    m = TailModel(1.5)
    n = 10
    ratios = []
    for N in (20.0, 80.0, 320.0):
        g = max(N**1.1, 10 * n * N)
        res = inversion_tail(lambda t: charfn_Psi(m, t), N, g, T=400.0)
        ratios.append(res.value / tail_prob(m, N))
    assert ratios == pytest.approx([1 - (1 + 10 * n) ** -1.5] * 3, abs=0.02)
    assert 1 - ratios[-1] < 0.02


def test_verify_domain():
    with pytest.raises(DomainError, match="N/a_n >= 3"):
        verify_thm_LD(TailModel(1.5, centered=True), 100, 1.0, 1000, seed=0)


@pytest.mark.slow
def test_verify_ratio_alpha15():
    m = TailModel(1.5, centered=True)
    rep = verify_thm_LD(m, 100, 10 * NormingPlan(m).a(100), 10**6, seed=5)
    assert rep.N == pytest.approx(215.443469, rel=1e-6)
    assert 0.85 <= rep.ratio <= 1.15
    assert rep.budget_ok


def test_verify_gaussian_components():
    m = TailModel(2.0, p=0.5, q=0.5)
    n = 1000
    a = NormingPlan(m).a(n)
    rep = verify_thm_LD(m, n, 3.5 * a, 10**5, seed=1)
    c = rep.components
    assert c["gaussian"] == pytest.approx(special.ndtr(-3.5))
    assert c["gaussian_over_pareto"] == pytest.approx(c["gaussian"] / c["pareto"])
    assert rep.prediction == pytest.approx(c["gaussian"] + c["pareto"])


def test_fact23_exact_envelope():
    c = 0.8
    rep = fact23_check(lambda t: -np.expm1(-c * t**1.5), 1.5, lambda x: np.ones_like(x), 1e-3, 0.5)
    assert rep.c_min == pytest.approx(c, rel=1e-9)
    assert rep.violations == 0


def test_fact23_pareto_model():
    m = TailModel(0.75, p=0.5, q=0.5)
    plan = NormingPlan(m)
    rep = fact23_check(lambda t: one_minus_Psi(m, t), 0.75, lambda x: plan.ell0(np.maximum(x, m.x_min)), 1e-3, 1.0)
    assert rep.c_fit > 0 and rep.violations == 0


@pytest.mark.parametrize("beta", [-0.25, 0.5, 1.0])
def test_lemma39_stable_closed_form(beta):
    # |Psi^n| = exp(-n c t^a) gives Gamma((b+1)/a) / (a c^((b+1)/a)) for large n
    a, c = 0.75, 1.3
    rep = lemma39_check(lambda t: -np.expm1(-c * t**a), a, lambda n: n ** (1 / a), [10**2, 10**4, 10**6], beta, 1.0)
    lim = special.gamma((beta + 1) / a) / (a * c ** ((beta + 1) / a))
    assert rep.ratio[-1] == pytest.approx(lim, rel=1e-6)
    assert not rep.growth_trend


def test_lemma39_domain():
    with pytest.raises(DomainError):
        lemma39_check(lambda t: t, 1.5, lambda n: n, [10], -1.0, 1.0)
