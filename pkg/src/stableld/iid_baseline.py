"""The i.i.d. baseline: sampling, characteristic functions, Monte Carlo tails
of S_n, Fourier inversion and the large-deviation verification harness."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from . import kernels
from .charfn import PiecewiseLaw, TailPiece, log_one_minus
from .errors import DomainError, NumericError
from .mc import TailEstimate, check_gate, run_sharded
from .report import LdReport, error_budget, g_of
from .stable_dist import gaussian_tail_bar_phi
from .tails import NormingPlan, TailModel, tail_prob

__all__ = [
    "sample_X",
    "model_law",
    "charfn_Psi",
    "one_minus_Psi",
    "CharFnTable",
    "charfn_table",
    "mc_charfn_table",
    "mc_tail_Sn",
    "InversionResult",
    "inversion_tail",
    "verify_thm_LD",
    "Fact23Report",
    "fact23_check",
    "Lemma39Report",
    "lemma39_check",
]

_NEG_HUGE = -1e300


def sample_X(model: TailModel, stream: np.random.Generator, size=None):
    """Exact inverse-survival draws from the model."""
    return model.sample(stream, size)


def model_law(model: TailModel) -> PiecewiseLaw:
    """Piecewise description of the model law for characteristic functions."""
    right = TailPiece(model.x_min, model.right_survival, model.ell.analytic) if model.p > 0 else None
    left = TailPiece(model.x_min, model.left_survival, model.ell.analytic) if model.q > 0 else None
    return PiecewiseLaw(right, left, model.middle_mass, model.x_min, model.shift)


def one_minus_Psi(model: TailModel, t, method: str = "contour"):
    """``1 - Psi(t)`` computed without cancellation."""
    return model_law(model).one_minus_charfn(t, method)


def charfn_Psi(model: TailModel, t, method: str = "contour"):
    """Characteristic function ``Psi(t) = E e^{itX}``.

    ``method="contour"`` uses the rotated-contour trapezoid rule (analytic
    ell); ``method="quad"`` uses oscillatory QAWF quadrature.
    """
    out = 1.0 - one_minus_Psi(model, t, method)
    return complex(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class CharFnTable:
    """Tabulated characteristic function on a symmetric t-grid."""

    t: np.ndarray
    values: np.ndarray
    provenance: str
    error: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t-grid must be strictly increasing")

    def __call__(self, t):
        re = np.interp(t, self.t, self.values.real)
        im = np.interp(t, self.t, self.values.imag)
        return re + 1j * im


def charfn_table(model: TailModel, t_max: float, n_points: int = 201) -> CharFnTable:
    """Quadrature table on ``[-t_max, t_max]`` (odd point count keeps t=0)."""
    t = np.linspace(-t_max, t_max, n_points | 1)
    vals = charfn_Psi(model, t)
    vals[t == 0] = 1.0
    return CharFnTable(t, vals, "quadrature", np.full(t.shape, 1e-12))


def mc_charfn_table(model: TailModel, t_max: float, samples: int, seed: int,
                    n_points: int = 21) -> CharFnTable:
    """Monte Carlo table ``mean(e^{itX})`` with error bound ``1/sqrt(M)``."""
    t = np.linspace(-t_max, t_max, n_points | 1)
    x = sample_X(model, np.random.default_rng(seed), samples)
    vals = np.exp(1j * np.outer(t, x)).mean(axis=1)
    vals[t == 0] = 1.0
    return CharFnTable(t, vals, "monte-carlo", np.full(t.shape, 1.0 / math.sqrt(samples)))


def _sum_sampler(model: TailModel, n: int) -> Callable[[np.ndarray], np.ndarray]:
    ell = model.ell
    if ell.kind == "constant" or (ell.kind == "logpower" and ell.gamma == 0.0):
        c = ell.c
        args = (model.right_mass, model.middle_mass, model.x_min, 1.0 / model.alpha,
                model.p * c, model.q * c, model.shift)
        return lambda u: kernels.pareto_row_sums(u, *args)
    return lambda u: model.isf(u.ravel()).reshape(u.shape).sum(axis=1)


def mc_tail_Sn(model: TailModel, n: int, N: float, samples: int, seed: int,
               shards: int = 1, workers: int | None = None, chunk_draws: int = 1 << 22,
               gate: int = 100) -> TailEstimate:
    """Monte Carlo estimate of ``P(S_n - b_n > N)`` with a 99% Wilson interval.

    The a priori gate uses ``n P(X > N)`` (plus the Gaussian term at
    alpha = 2) and refuses to run below ``gate`` expected hits.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if N <= _NEG_HUGE:
        return TailEstimate.from_counts(samples, samples, float(samples))
    plan = NormingPlan(model)
    b_n = plan.b(n)
    p_pred = _prediction(model, plan, n, N)
    expected = check_gate(samples, min(1.0, p_pred), gate)
    rows = max(1, chunk_draws // n)
    summer = _sum_sampler(model, n)
    thresh = N + b_n

    def shard(rng: np.random.Generator, k: int) -> tuple[int, int]:
        hits = 0
        done = 0
        while done < k:
            r = min(rows, k - done)
            s = summer(rng.random((r, n)))
            hits += int(np.count_nonzero(s > thresh))
            done += r
        return hits, k

    hits, used = run_sharded(seed, samples, shards, shard, workers)
    return TailEstimate.from_counts(hits, used, expected)


def _prediction(model: TailModel, plan: NormingPlan, n: int, N: float) -> float:
    pareto = n * tail_prob(model, N) if N > 0 else 1.0
    if model.alpha == 2.0 and N > 0:
        return pareto + gaussian_tail_bar_phi(N / plan.a(n))
    return pareto


@dataclass(frozen=True)
class InversionResult:
    """Truncated inversion estimate of ``P(X in (N, N+g])``."""

    value: float
    sensitivity: float
    T: float
    warning: str | None = None


def _inversion_term(Psi: Callable, omega: float, T: float) -> tuple[float, float]:
    """``2 int_0^T Im(e^{-i omega t} Psi(t))/t dt`` via QAWO and Si."""

    def psi(t):
        return complex(np.asarray(Psi(np.array([t])))[0])

    f1 = lambda t: psi(t).imag / t if t > 0 else 0.0
    f2 = lambda t: (psi(t).real - 1.0) / t if t > 0 else 0.0
    edges = np.linspace(0.0, T, max(2, int(math.ceil(T / 10.0)) + 1))
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if omega == 0.0:
            c, ec = integrate.quad(f1, lo, hi, limit=400)
            s, es = 0.0, 0.0
        else:
            c, ec = integrate.quad(f1, lo, hi, weight="cos", wvar=omega, limit=400)
            s, es = integrate.quad(f2, lo, hi, weight="sin", wvar=omega, limit=400)
        total += c - s
        err += ec + es
    si = special.sici(omega * T)[0] if omega != 0 else 0.0
    return 2.0 * (total - si), 2.0 * err


def inversion_tail(Psi: Callable, N: float, g: float, T: float | None = None,
                   tol: float = 1e-4) -> InversionResult:
    """Truncated Fourier inversion of ``P(X in (N, N+g])``.

    With ``T=None`` the truncation doubles from 8 until the T versus T/2
    difference is below ``tol`` (at most ``2^14``).
    """
    if not g > 0:
        raise DomainError("g must be positive")

    def value(TT: float) -> float:
        a, _ = _inversion_term(Psi, N, TT)
        b, _ = _inversion_term(Psi, N + g, TT)
        return (a - b) / (2 * math.pi)

    if T is not None:
        v, v2 = value(T), value(T / 2)
        sens = abs(v - v2)
        warn = None if sens <= max(tol, 10 * abs(v) * 1e-3) else "truncation sensitivity not decaying"
        return InversionResult(v, sens, T, warn)
    TT, prev = 8.0, value(4.0)
    while True:
        v = value(TT)
        sens = abs(v - prev)
        if sens <= tol:
            return InversionResult(v, sens, TT)
        if TT >= 2.0**14:
            return InversionResult(v, sens, TT, "truncation sensitivity not decaying")
        TT, prev = 2 * TT, v


def verify_thm_LD(model: TailModel, n: int, N: float, samples: int, seed: int,
                  shards: int = 1, workers: int | None = None, C_D: float = 1.0,
                  slack: float = 0.2, delta: float = 0.1) -> LdReport:
    """Monte Carlo check of the i.i.d. large-deviation asymptotic.

    For alpha < 2 the ratio is ``p_hat / (n P(X>N))``; for alpha = 2 it is
    ``p_hat / (Phi-bar(N/a_n) + n P(X>N))`` and both components are reported.
    """
    t0 = time.perf_counter()
    plan = NormingPlan(model)
    a_n = plan.a(n)
    if N / a_n < 3.0:
        raise DomainError("requires N/a_n >= 3")
    est = mc_tail_Sn(model, n, N, samples, seed, shards, workers)
    pareto = n * tail_prob(model, N)
    comps = {"pareto": pareto}
    pred = pareto
    if model.alpha == 2.0:
        gauss = gaussian_tail_bar_phi(N / a_n)
        comps["gaussian"] = gauss
        comps["gaussian_over_pareto"] = gauss / pareto
        comps["gaussian_variance_norming"] = gaussian_tail_bar_phi(N / _variance_norming(model, n))
        pred = pareto + gauss
    budget, parts = error_budget(plan, n, N, C_D, slack, delta)
    comps.update(parts)
    return LdReport(
        system="iid", observable=_model_tag(model), alpha=model.alpha, n=n, N=N,
        N_over_an=N / a_n, a_n=a_n, g=g_of(n, N), p_hat=est.p_hat, ci_lo=est.ci_lo,
        ci_hi=est.ci_hi, hits=est.hits, samples=est.samples, prediction=pred,
        ratio=est.p_hat / pred, budget=budget,
        budget_ok=abs(est.p_hat - pred) <= est.half_width + budget, components=comps,
        seed=seed, shards=shards, backend=kernels.BACKEND_NAME,
        runtime=time.perf_counter() - t0,
    )


def _model_tag(model: TailModel) -> str:
    return f"pareto(p={model.p:g},ell={model.ell.kind},centered={model.centered})"


def _variance_norming(model: TailModel, n: int) -> float:
    """Root of ``a^2 = n sigma^2(a)``, ``sigma^2(x) = E[X^2; |X| <= x]``."""
    from scipy.optimize import brentq

    def sigma2(x: float) -> float:
        xm = model.x_min
        mid = model.middle_mass * xm * xm / 3.0
        if x <= xm:
            return mid
        f = lambda y: 2.0 * y * float(model.right_survival(np.array(y)) + model.left_survival(np.array(y)))
        tail, _ = integrate.quad(f, xm, x, limit=200)
        edge = (model.right_mass + model.left_mass) * xm * xm
        surv_x = float(model.right_survival(np.array(x)) + model.left_survival(np.array(x)))
        return mid + edge + tail - x * x * surv_x

    h = lambda a: a * a - n * sigma2(a)
    lo = model.x_min
    if h(lo) >= 0:
        return lo
    hi = max(2 * lo, math.sqrt(n))
    while h(hi) < 0:
        lo, hi = hi, 2 * hi
    return brentq(h, lo, hi)


# envelope checks shared with the dynamical side --------------------------------


@dataclass(frozen=True)
class Fact23Report:
    """Fit of ``|Psi(t)| <= exp(-c t^alpha ell0(1/t))``."""

    c_fit: float
    c_min: float
    violations: int
    t_fit: np.ndarray
    t_check: np.ndarray
    ratio: np.ndarray


def fact23_check(one_minus: Callable[[np.ndarray], np.ndarray], alpha: float,
                 ell0_fn: Callable[[np.ndarray], np.ndarray], t_lo: float, t_hi: float,
                 n_fit: int = 200, margin: float = 0.9) -> Fact23Report:
    """Fit c on a log grid and count envelope violations on a 4x denser grid.

    ``c_fit = margin * min_t(-log|Psi(t)| / (t^alpha ell0(1/t)))`` over the
    fit grid; violations are counted on the check grid.
    """
    t_fit = np.geomspace(t_lo, t_hi, n_fit)
    t_chk = np.geomspace(t_lo, t_hi, 4 * n_fit + 1)

    def rate(t):
        w = one_minus(t)
        return -np.real(log_one_minus(w)) / (t**alpha * ell0_fn(1.0 / t))

    r_fit = rate(t_fit)
    c_min = float(np.min(r_fit))
    c_fit = margin * c_min
    r_chk = rate(t_chk)
    viol = int(np.count_nonzero(r_chk < c_fit))
    return Fact23Report(c_fit, c_min, viol, t_fit, t_chk, r_chk)


@dataclass(frozen=True)
class Lemma39Report:
    """Ratios ``int_0^eps t^beta L(1/t)|Psi^n| dt / (L(a_n) a_n^-(1+beta))``."""

    beta: float
    L_name: str
    n: np.ndarray
    ratio: np.ndarray
    constant: float
    spearman_rho: float
    spearman_p: float
    growth_p: float

    @property
    def growth_trend(self) -> bool:
        """True for a significant increasing trend (one-sided p <= 0.1).

        A two-sided test also rejects ratios that decrease monotonically to
        their limit, which is the expected bounded behaviour.
        """
        return self.growth_p <= 0.1


def lemma39_check(one_minus: Callable[[np.ndarray], np.ndarray], alpha: float,
                  a_n: Callable[[int], float], n_grid, beta: float, epsilon: float,
                  L: Callable[[np.ndarray], np.ndarray] | None = None,
                  L_name: str = "1") -> Lemma39Report:
    """Evaluate the integral-bound ratio over ``n_grid``.

    The bound is classical for ``beta > 0``; ``-1 < beta <= 0`` is accepted
    since ``t^beta`` stays integrable at 0 and the same scaling applies.
    The integral is computed in ``y = log t`` on panels around ``1/a_n``.
    """
    if not beta > -1:
        raise DomainError("beta must exceed -1 (integrability at t = 0)")
    Lf = L if L is not None else (lambda x: np.ones_like(np.asarray(x, dtype=float)))
    ns = np.asarray(list(n_grid), dtype=float)
    ratios = []
    for n in ns:
        an = a_n(int(n))

        def f(y):
            t = np.exp(y)
            w = one_minus(np.array([t]))
            mod = float(np.exp(n * np.real(log_one_minus(w)))[0])
            return t ** (beta + 1.0) * float(Lf(np.array(1.0 / t))) * mod

        y_hi = math.log(epsilon)
        y_lo = math.log(1e-8 / an)
        ymid = min(y_hi, math.log(1.0 / an))
        pts = sorted({y_lo, ymid - 3, ymid, ymid + 3, y_hi})
        pts = [p for p in pts if y_lo <= p <= y_hi]
        # below y_lo the modulus is 1 to rounding: integrate t^beta in closed form
        val = f(y_lo) / (beta + 1.0)
        for lo, hi in zip(pts[:-1], pts[1:]):
            v, e = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, epsrel=1e-9)
            val += v
        ratios.append(val / (float(Lf(np.array(an))) * an ** -(1.0 + beta)))
    ratios = np.asarray(ratios)
    if ratios.size >= 3:
        rho, pv = stats.spearmanr(ns, ratios)
        pg = stats.spearmanr(ns, ratios, alternative="greater").pvalue
    else:
        rho = pv = pg = math.nan
    return Lemma39Report(beta, L_name, ns, ratios, float(np.max(ratios)), float(rho), float(pv), float(pg))
