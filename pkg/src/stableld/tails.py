"""Regularly varying tail models, norming sequences and the error rate D(N).

A :class:`TailModel` describes a two-sided law whose tails are exactly

    P(X > x) = p * ell(x) * x**-alpha,   P(X < -x) = q * ell(x) * x**-alpha

for ``x >= x_min``.  The remaining mass is spread uniformly on
``[-x_min, x_min]``.  A centered model is this law shifted by its exact mean,
so ``tail_prob`` of a centered model is the tail of the shifted variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericError, UnsupportedCase

__all__ = [
    "SlowlyVarying",
    "TailModel",
    "NormingPlan",
    "tail_prob",
    "ell0",
    "solve_a_n",
    "centering_b_n",
    "error_rate_D",
]

_KINDS = ("constant", "logpower", "callable")


@dataclass(frozen=True)
class SlowlyVarying:
    """A slowly varying function ell.

    Parameters
    ----------
    kind : {"constant", "logpower", "callable"}
        ``constant`` is ``c``; ``logpower`` is ``c * (log x)**gamma``;
        ``callable`` wraps ``func``.
    c : float
        Multiplicative constant (must be positive).
    gamma : float
        Exponent of the logarithm for ``logpower``.
    func : callable, optional
        Vectorized positive function for ``callable``.
    """

    kind: str = "constant"
    c: float = 1.0
    gamma: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown slowly varying kind {self.kind!r}")
        if not self.c > 0:
            raise ValueError("ell constant c must be positive")
        if self.kind == "callable" and self.func is None:
            raise ValueError("kind='callable' requires func")

    @property
    def analytic(self) -> bool:
        """True when the function extends analytically to the right half-plane."""
        return self.kind != "callable"

    def __call__(self, x):
        x = np.asarray(x)
        if self.kind == "constant":
            return np.full(x.shape, self.c, dtype=np.result_type(x, float))
        if self.kind == "logpower":
            if self.gamma == 0.0:
                return np.full(x.shape, self.c, dtype=np.result_type(x, float))
            return self.c * np.exp(self.gamma * np.log(np.log(x)))
        return np.asarray(self.func(x), dtype=float)

    def hat(self, x):
        """Return ``1 + int_1^{1+x} ell(u)/u du`` for ``x >= 0``."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("ell-hat needs x >= 0")
        if self.kind == "constant" or (self.kind == "logpower" and self.gamma == 0.0):
            return 1.0 + self.c * np.log1p(x)
        if self.kind == "logpower" and self.gamma > -1.0:
            g1 = self.gamma + 1.0
            return 1.0 + self.c * np.log1p(x) ** g1 / g1
        return np.vectorize(self._hat_quad, otypes=[float])(x)

    def _hat_quad(self, x: float) -> float:
        if x == 0.0:
            return 1.0
        f = lambda u: float(self(np.array(u))) / u
        val, err = integrate.quad(f, 1.0, 1.0 + x, limit=200)
        if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
            raise NumericError(f"ell-hat quadrature did not converge at x={x}", err)
        return 1.0 + val

    def to_record(self) -> dict[str, str]:
        if self.kind == "callable":
            raise ValueError("callable slowly varying functions are not serializable")
        return {"ell.kind": self.kind, "ell.c": repr(self.c), "ell.gamma": repr(self.gamma)}


@dataclass(frozen=True)
class TailModel:
    """Two-sided law with exact regularly varying tails beyond ``x_min``.

    Parameters
    ----------
    alpha : float
        Tail index in (0, 1) or (1, 2].
    p, q : float
        Right and left tail weights, ``p + q = 1``.
    ell : SlowlyVarying
        Slowly varying factor.
    x_min : float
        Threshold from which the tails are exact.
    centered : bool
        Subtract the exact mean (only meaningful for alpha > 1).
    """

    alpha: float
    p: float = 1.0
    q: float = 0.0
    ell: SlowlyVarying = field(default_factory=SlowlyVarying)
    x_min: float = 1.0
    centered: bool = False

    def __post_init__(self):
        a = self.alpha
        if a == 1.0:
            raise UnsupportedCase("alpha=1 unsupported (case postponed; not covered by the theory)")
        if not 0.0 < a <= 2.0:
            raise DomainError(f"alpha must lie in (0,1) or (1,2], got {a}")
        if not 0.0 < self.p <= 1.0 or self.q < 0.0 or abs(self.p + self.q - 1.0) > 1e-12:
            raise DomainError("need 0 < p <= 1, q >= 0 and p + q = 1")
        if not self.x_min > 0:
            raise DomainError("x_min must be positive")
        if self.ell.kind == "logpower":
            if self.x_min <= 1.0:
                raise DomainError("log-power ell needs x_min > 1")
            if self.ell.gamma > 0 and math.log(self.x_min) < self.ell.gamma / a:
                raise DomainError("log-power ell needs log(x_min) >= gamma/alpha for a monotone tail")
        if not self.ell_at_min > 0:
            raise DomainError("ell(x_min) must be positive")
        if self.right_mass + self.left_mass > 1.0 + 1e-12:
            raise DomainError("tail masses at x_min exceed 1; raise x_min")

    @cached_property
    def ell_at_min(self) -> float:
        return float(self.ell(np.array(self.x_min)))

    @cached_property
    def right_mass(self) -> float:
        """P(Z >= x_min) for the unshifted law Z."""
        return self.p * self.ell_at_min * self.x_min ** -self.alpha

    @cached_property
    def left_mass(self) -> float:
        return self.q * self.ell_at_min * self.x_min ** -self.alpha

    @cached_property
    def middle_mass(self) -> float:
        return max(0.0, 1.0 - self.right_mass - self.left_mass)

    def _tail_integral(self) -> float:
        """Return ``int_{x_min}^inf ell(x) x^-alpha dx`` (alpha > 1)."""
        a, xm, ell = self.alpha, self.x_min, self.ell
        if ell.kind == "constant" or (ell.kind == "logpower" and ell.gamma == 0.0):
            return ell.c * xm ** (1.0 - a) / (a - 1.0)
        if ell.kind == "logpower":
            g, lo = ell.gamma, math.log(xm)
            f = lambda y: y**g * math.exp(-(a - 1.0) * y)
            val, err = integrate.quad(f, lo, np.inf, limit=200, epsabs=0, epsrel=1e-13)
            return ell.c * val
        f = lambda x: float(ell(np.array(x))) * x**-a
        val, err = integrate.quad(f, xm, np.inf, limit=400, epsrel=1e-12)
        if err > 1e-9 * max(1.0, abs(val)):
            raise NumericError("mean quadrature did not converge", err)
        return val

    @cached_property
    def raw_mean(self) -> float:
        """Exact mean of the unshifted law (alpha > 1)."""
        if self.alpha < 1.0:
            return math.inf
        ti = self._tail_integral()
        return (self.p - self.q) * (self.x_min * self.ell_at_min * self.x_min**-self.alpha + ti)

    @property
    def shift(self) -> float:
        """Amount subtracted from the unshifted law."""
        return self.raw_mean if (self.centered and self.alpha > 1.0) else 0.0

    @property
    def mean(self) -> float:
        return self.raw_mean - self.shift

    # survival pieces of the unshifted law ---------------------------------

    def right_survival(self, x):
        """``p ell(x) x^-alpha`` for x >= x_min (complex arguments allowed)."""
        x = np.asarray(x)
        return self.p * self.ell(x) * np.exp(-self.alpha * np.log(x))

    def left_survival(self, x):
        x = np.asarray(x)
        return self.q * self.ell(x) * np.exp(-self.alpha * np.log(x))

    def _base_survival(self, z: np.ndarray) -> np.ndarray:
        xm, mid = self.x_min, self.middle_mass
        out = np.empty_like(z, dtype=float)
        hi = z >= xm
        lo = z < -xm
        md = ~(hi | lo)
        out[hi] = self.right_survival(z[hi])
        out[md] = self.right_mass + mid * (xm - z[md]) / (2 * xm)
        out[lo] = 1.0 - self.left_survival(-z[lo])
        return out

    def _base_cdf_strict(self, y: np.ndarray) -> np.ndarray:
        """P(Z < y) of the unshifted law."""
        return 1.0 - self._base_survival(y)

    def survival(self, x):
        """P(X > x) of the model variable (shift applied)."""
        x = np.asarray(x, dtype=float)
        return self._base_survival(np.atleast_1d(x + self.shift)).reshape(x.shape)

    def isf(self, u):
        """Inverse survival: the x with P(X > x) = u, for u in (0, 1).

        ``u <= right_mass`` lands in the right tail, ``u = right_mass``
        giving ``x_min`` exactly (before the shift).
        """
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        xm, pr, pl, mid = self.x_min, self.right_mass, self.left_mass, self.middle_mass
        out = np.empty_like(u)
        r = u <= pr
        left = u > pr + mid
        md = ~(r | left)
        out[r] = self._right_isf(u[r], self.p)
        if mid > 0:
            out[md] = xm - 2 * xm * (u[md] - pr) / mid
        else:
            out[md] = xm
        if np.any(left):
            out[left] = -self._right_isf(1.0 - u[left], self.q)
        out -= self.shift
        return float(out[0]) if scalar else out

    def _right_isf(self, u: np.ndarray, w: float) -> np.ndarray:
        """Solve ``w ell(x) x^-alpha = u`` for x >= x_min."""
        a, ell, xm = self.alpha, self.ell, self.x_min
        if u.size == 0:
            return u.copy()
        if ell.kind == "constant" or (ell.kind == "logpower" and ell.gamma == 0.0):
            x = (w * ell.c / u) ** (1.0 / a)
            return np.maximum(x, xm)
        if ell.kind == "logpower":
            g, ymin = ell.gamma, math.log(xm)
            target = math.log(w * ell.c) - np.log(u)
            y = np.maximum(ymin, target / a)
            for _ in range(100):
                f = g * np.log(y) - a * y + target
                step = f / (g / y - a)
                y_new = np.maximum(ymin, y - step)
                done = np.all(np.abs(y_new - y) <= 1e-15 * np.maximum(1.0, y))
                y = y_new
                if done:
                    break
            else:
                # Newton can cycle between neighbouring floats; accept a tiny residual
                f = g * np.log(y) - a * y + target
                if not np.all(np.abs(f) <= 1e-12 * np.maximum(1.0, np.abs(target))):
                    raise NumericError("log-power inverse survival did not converge")
            return np.exp(y)
        out = np.empty_like(u)
        lx = math.log(xm)
        for i, ui in enumerate(u):
            f = lambda s: math.log(w * float(ell(np.array(math.exp(s))))) - a * s - math.log(ui)
            if f(lx) <= 0:
                out[i] = xm
                continue
            hi = lx + 1.0
            while f(hi) > 0:
                hi = lx + 2 * (hi - lx)
            out[i] = math.exp(optimize.brentq(f, lx, hi, xtol=1e-14, rtol=1e-15))
        return out

    def sample(self, rng: np.random.Generator, size=None):
        """Draw from the model by inverse survival of uniforms."""
        u = rng.random(size)
        return self.isf(u)

    # config ------------------------------------------------------------------

    def to_record(self) -> dict[str, str]:
        rec = {"alpha": repr(self.alpha), "p": repr(self.p), "q": repr(self.q)}
        rec.update(self.ell.to_record())
        rec["x_min"] = repr(self.x_min)
        rec["centered"] = "true" if self.centered else "false"
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, str]) -> "TailModel":
        """Build a model from ``key = value`` strings (see :meth:`to_record`)."""
        alpha = float(rec["alpha"])
        p = float(rec.get("p", "1"))
        q = float(rec.get("q", repr(1.0 - p)))
        ell = SlowlyVarying(
            kind=rec.get("ell.kind", "constant").strip(),
            c=float(rec.get("ell.c", "1")),
            gamma=float(rec.get("ell.gamma", "0")),
        )
        centered = str(rec.get("centered", "false")).strip().lower() in ("1", "true", "yes", "on")
        return cls(alpha=alpha, p=p, q=q, ell=ell, x_min=float(rec.get("x_min", "1")), centered=centered)


def tail_prob(model: TailModel, x, side: str = "right"):
    """Exact tail of the model: P(X > x) or P(X < -x) for x > 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("tail_prob needs x > 0")
    if side == "right":
        out = model.survival(xa)
    elif side == "left":
        z = np.atleast_1d(model.shift - xa)
        out = model._base_cdf_strict(z).reshape(xa.shape)
    else:
        raise ValueError("side must be 'right' or 'left'")
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NormingPlan:
    """Norming data bound to a tail model: ell0, a_n, b_n and D(N)."""

    model: TailModel

    def ell0(self, x):
        return ell0(self, x)

    def a(self, n: int) -> float:
        return solve_a_n(self, n)

    def b(self, n: int) -> float:
        return centering_b_n(self, n)

    def D(self, N: float, delta: float | None = None) -> float:
        return error_rate_D(self, N, delta)


def ell0(plan: NormingPlan, x):
    """ell for alpha < 2 and ell-hat for alpha = 2."""
    m = plan.model
    xa = np.asarray(x, dtype=float)
    if m.alpha == 2.0:
        if np.any(xa < 0):
            raise DomainError("ell0 needs x >= 0 when alpha = 2")
        out = m.ell.hat(xa)
    else:
        if np.any(xa < m.x_min):
            raise DomainError(f"ell0 needs x >= x_min = {m.x_min}")
        out = m.ell(xa)
    return float(out) if np.ndim(out) == 0 else out


def solve_a_n(plan: NormingPlan, n: int, rtol: float = 1e-10, max_iter: int = 500) -> float:
    """Fixed point of ``a**alpha = n * ell0(a)``.

    Damped fixed-point iteration from ``n**(1/alpha)``, with a bracketing
    root search as fallback.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    m = plan.model
    a_exp = 1.0 / m.alpha
    lo_x = 0.0 if m.alpha == 2.0 else m.x_min

    def l0(a: float) -> float:
        return float(ell0(plan, max(a, lo_x)))

    def resid(a: float) -> float:
        rhs = n * l0(a)
        return abs(a**m.alpha - rhs) / rhs

    a = float(n) ** a_exp
    theta = 1.0
    prev = resid(a)
    for _ in range(max_iter):
        a_new = (1.0 - theta) * a + theta * (n * l0(a)) ** a_exp
        r = resid(a_new)
        if abs(a_new - a) <= rtol * a:
            a = a_new
            break
        if r > prev and theta > 1e-3:
            theta *= 0.5
            continue
        a, prev = a_new, r
    else:
        a = _bracket_a(l0, n, m.alpha, a)
    if resid(a) > 1e-8:
        a = _bracket_a(l0, n, m.alpha, a)
        if resid(a) > 1e-8:
            raise NumericError(f"a_n solver did not converge for n={n}", resid(a))
    return a


def _bracket_a(l0: Callable[[float], float], n: int, alpha: float, guess: float) -> float:
    f = lambda s: alpha * s - math.log(n) - math.log(l0(math.exp(s)))
    lo = hi = math.log(guess)
    while f(lo) > 0:
        lo -= 1.0
    while f(hi) < 0:
        hi += 1.0
    return math.exp(optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4e-16))


def centering_b_n(plan: NormingPlan, n: int) -> float:
    """0 for alpha < 1 and n E X for alpha in (1, 2]."""
    if n < 1:
        raise DomainError("n must be >= 1")
    m = plan.model
    if m.alpha < 1.0:
        return 0.0
    return n * m.mean


def error_rate_D(plan: NormingPlan, N: float, delta: float | None = None) -> float:
    """Large-deviation error rate: ``(log N) ell(N) N^-alpha`` or ``N^-(alpha-delta)``."""
    m = plan.model
    if not N > max(m.x_min, math.e):
        raise DomainError("D(N) needs N > max(x_min, e)")
    if m.alpha < 1.0:
        return math.log(N) * float(m.ell(np.array(N))) * N**-m.alpha
    if delta is None or not delta > 0:
        raise DomainError("alpha > 1 needs delta > 0")
    return N ** -(m.alpha - delta)
