"""Gibbs-Markov interval maps, heavy-tailed observables and ergodic sums.

Two systems are built in: the doubling map ``2x mod 1`` (Lebesgue invariant)
and the Gauss map ``1/x mod 1`` with density ``1/((1+x) log 2)``.

Doubling-map orbits are generated symbolically: x_0 is a string of random
binary digits and ``T^j x_0`` is read from the digits after position j, so
orbits never collapse to 0 the way double-precision iteration does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate

from . import kernels
from .charfn import PiecewiseLaw, TailPiece
from .errors import DomainError, ModelMismatch, OrbitDegenerate
from .mc import TailEstimate, check_gate, run_sharded
from .tails import SlowlyVarying, TailModel

__all__ = [
    "IntervalSystem",
    "DoublingSystem",
    "GaussSystem",
    "builtin_system",
    "SYSTEMS",
    "PowerObservable",
    "FunctionObservable",
    "BlockObservable",
    "ergodic_sum",
    "sample_invariant",
    "orbit_sums",
    "mc_tail_vn",
    "H1Fit",
    "check_H1",
    "GibbsMarkovReport",
    "gibbs_markov_diagnostics",
]

_LOG2 = math.log(2.0)


class IntervalSystem:
    """Piecewise expanding Markov map of (0, 1) with full branches.

    Subclasses provide the branch structure and invariant density; branch
    ``j`` maps ``branch_interval(j)`` onto (0, 1).
    """

    name: str = ""
    theta: float = 0.5
    n_branches: int | None = None

    def map(self, x):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def inverse_cdf(self, u):
        raise NotImplementedError

    def branch_interval(self, j: int) -> tuple[float, float]:
        raise NotImplementedError

    def branch_inverse(self, j: int, y):
        raise NotImplementedError

    def derivative(self, x):
        """``|T'(x)|``."""
        raise NotImplementedError

    def branch_of(self, x):
        raise NotImplementedError

    def on_endpoint(self, x: float) -> bool:
        raise NotImplementedError

    def branch_range(self, j_max: int) -> range:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class DoublingSystem(IntervalSystem):
    name = "doubling"
    theta = 0.5
    n_branches = 2

    def map(self, x):
        return np.mod(2.0 * np.asarray(x, dtype=float), 1.0)

    def density(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def cdf(self, x):
        return np.asarray(x)

    def inverse_cdf(self, u):
        return np.asarray(u, dtype=float)

    def branch_interval(self, j):
        return (j / 2.0, (j + 1) / 2.0)

    def branch_inverse(self, j, y):
        return (np.asarray(y, dtype=float) + j) / 2.0

    def derivative(self, x):
        return np.full_like(np.asarray(x, dtype=float), 2.0)

    def branch_of(self, x):
        return (np.asarray(x) >= 0.5).astype(int)

    def on_endpoint(self, x):
        return x == 0.0 or x == 0.5 or x == 1.0

    def branch_range(self, j_max):
        return range(min(2, j_max + 1))


class GaussSystem(IntervalSystem):
    name = "gauss"
    theta = 0.5
    n_branches = None

    def map(self, x):
        y = 1.0 / np.asarray(x, dtype=float)
        return y - np.floor(y)

    def density(self, x):
        return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * _LOG2)

    def cdf(self, x):
        return np.log1p(np.asarray(x)) / _LOG2

    def inverse_cdf(self, u):
        return np.expm1(np.asarray(u, dtype=float) * _LOG2)

    def branch_interval(self, j):
        return (1.0 / (j + 1), 1.0 / j)

    def branch_inverse(self, j, y):
        return 1.0 / (j + np.asarray(y, dtype=float))

    def derivative(self, x):
        return 1.0 / np.asarray(x, dtype=float) ** 2

    def branch_of(self, x):
        return np.floor(1.0 / np.asarray(x, dtype=float)).astype(int)

    def on_endpoint(self, x):
        if x <= 0.0 or x >= 1.0:
            return True
        y = 1.0 / x
        return y == math.floor(y)

    def branch_range(self, j_max):
        return range(1, j_max + 1)


SYSTEMS: dict[str, type[IntervalSystem]] = {"doubling": DoublingSystem, "gauss": GaussSystem}


def builtin_system(name: str) -> IntervalSystem:
    """Return the named system (``doubling`` or ``gauss``)."""
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; known: {sorted(SYSTEMS)}") from None


def sample_invariant(system: IntervalSystem, stream: np.random.Generator, size=None):
    """Exact draws from the invariant measure by inverse CDF."""
    return system.inverse_cdf(stream.random(size))


# observables -------------------------------------------------------------------

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _gl_cell_average(func: Callable, density: Callable, edges: np.ndarray, idx: np.ndarray) -> np.ndarray:
    lo, hi = edges[idx], edges[idx + 1]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x = mid[:, None] + rad[:, None] * _GL8_X[None, :]
    wts = _GL8_W[None, :] * density(x)
    return (func(x) * wts).sum(axis=1) / wts.sum(axis=1)


class _ObservableBase:
    system: IntervalSystem
    name: str

    @property
    def bounded(self) -> bool:
        return True

    def cell_means(self, edges: np.ndarray) -> np.ndarray:
        """mu-average of v over each cell."""
        idx = np.arange(edges.size - 1)
        return _gl_cell_average(self.value, self.system.density, edges, idx).real

    def cell_charfn(self, edges: np.ndarray, t: float, exact_cells: int = 1, mode: str = "average") -> np.ndarray:
        """Per-cell twist ``e_i(t)``.

        ``mode="average"`` gives the mu-average of ``e^{itv}`` on every cell
        (exact for the first ``exact_cells`` cells next to the singularity,
        8-point Gauss-Legendre elsewhere); ``mode="midpoint"`` uses
        ``e^{itv(midpoint)}`` except on the exact cells.
        """
        m = edges.size - 1
        k = min(exact_cells, m) if not self.bounded else 0
        out = np.empty(m, dtype=complex)
        if k:
            out[:k] = self._exact_cell_charfn(edges[: k + 1], t)
        rest = np.arange(k, m)
        if mode == "average":
            out[k:] = _gl_cell_average(lambda x: np.exp(1j * t * self.value(x)), self.system.density, edges, rest)
        elif mode == "midpoint":
            mid = 0.5 * (edges[rest] + edges[rest + 1])
            out[k:] = np.exp(1j * t * self.value(mid))
        else:
            raise ValueError("mode must be 'average' or 'midpoint'")
        return out

    def _exact_cell_charfn(self, edges: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerObservable(_ObservableBase):
    """``v(x) = s (x^{-1/alpha} - c)`` with c the mu-mean when centered.

    Parameters
    ----------
    system : IntervalSystem
    alpha : float
        Tail index; ``mu(v > y) = F_mu((y + c)^-alpha)``.
    centered : bool
        Subtract the mean (alpha > 1 only).
    negate : bool
        Use ``-v`` (left tails).
    """

    system: IntervalSystem
    alpha: float
    centered: bool = True
    negate: bool = False
    c: float = field(init=False)

    def __post_init__(self):
        if self.alpha == 1.0:
            from .errors import UnsupportedCase

            raise UnsupportedCase("alpha=1 unsupported (case postponed; not covered by the theory)")
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0,1) or (1,2]")
        c = self.raw_mean if (self.centered and self.alpha > 1) else 0.0
        object.__setattr__(self, "c", c)

    @property
    def name(self) -> str:
        tag = "centered" if self.c else "raw"
        return f"{'-' if self.negate else ''}power(alpha={self.alpha:g},{tag})"

    @property
    def bounded(self) -> bool:
        return False

    @property
    def sign(self) -> float:
        return -1.0 if self.negate else 1.0

    @cached_property
    def raw_mean(self) -> float:
        """``int x^{-1/alpha} dmu`` (finite for alpha > 1)."""
        if self.alpha < 1:
            return math.inf
        s = self.system
        if isinstance(s, DoublingSystem):
            return self.alpha / (self.alpha - 1.0)
        f = lambda x: float(s.density(x))
        val, err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(-1.0 / self.alpha, 0.0), epsabs=0, epsrel=1e-13)
        return val

    @property
    def mean(self) -> float:
        return self.sign * (self.raw_mean - self.c)

    @property
    def tail_constant(self) -> float:
        """kappa with ``mu(v > y) ~ kappa y^-alpha``."""
        return float(self.system.density(0.0))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.sign * (x ** (-1.0 / self.alpha) - self.c)

    __call__ = value

    def survival(self, y):
        """``mu(s^-1 v > y) = F_mu((y + c)^-alpha)``; complex y allowed."""
        y = np.asarray(y)
        return self.system.cdf(np.exp(-self.alpha * np.log(y + self.c)))

    @property
    def v_min(self) -> float:
        return 1.0 - self.c

    def tail(self, N):
        """Exact ``mu(v > N)``."""
        N = np.asarray(N, dtype=float)
        if self.negate:
            # mu(-w > N) = mu(w < -N) = 1 - S(-N)
            out = np.where(-N <= self.v_min, 0.0, 1.0 - np.real(self.survival(np.maximum(-N, self.v_min))))
        else:
            out = np.where(N < self.v_min, 1.0, np.real(self.survival(np.maximum(N, self.v_min))))
        return float(out) if out.ndim == 0 else out

    @cached_property
    def piece(self) -> TailPiece:
        return TailPiece(self.v_min, self.survival, True)

    def law(self) -> PiecewiseLaw:
        if self.negate:
            return PiecewiseLaw(left=TailPiece(self.v_min, self.survival, True))
        return PiecewiseLaw(right=self.piece)

    def one_minus_charfn(self, t):
        return self.law().one_minus_charfn(t)

    def charfn(self, t):
        return self.law().charfn(t)

    def tail_model(self) -> TailModel:
        """Regularly varying model with the same leading tail, for norming."""
        k = self.tail_constant
        # norming depends only on the tail constant, so one side suffices
        return TailModel(self.alpha, 1.0, 0.0, SlowlyVarying("constant", c=k), x_min=k ** (1.0 / self.alpha))

    def _exact_cell_charfn(self, edges: np.ndarray, t: float) -> np.ndarray:
        s = self.system
        tt = self.sign * t
        x = edges
        y = np.where(x > 0, np.where(x > 0, x, 1.0) ** (-1.0 / self.alpha) - self.c, np.inf)
        fin = np.isfinite(y)
        K = np.zeros(x.shape, dtype=complex)
        if np.any(fin):
            K[fin] = self.piece.upper_charfn(np.full(int(fin.sum()), tt), y[fin])
        mass = np.diff(np.real(s.cdf(x)))
        # v decreases in x: cell i carries v in (y_{i+1}, y_i]
        return (K[1:] - K[:-1]) / mass


@dataclass(frozen=True)
class FunctionObservable(_ObservableBase):
    """Observable from a vectorized function (bounded observables)."""

    system: IntervalSystem
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    name: str = "function"
    alpha: float = 2.0

    def value(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    __call__ = value

    @cached_property
    def mean(self) -> float:
        f = lambda x: float(self.value(x) * self.system.density(x))
        return integrate.quad(f, 0.0, 1.0, limit=400)[0]

    @property
    def c(self) -> float:
        return 0.0

    @property
    def raw_mean(self) -> float:
        return self.mean

    def tail(self, N):
        """``mu(v > N)`` by midpoint integration on a fine grid."""
        x = (np.arange(200_000) + 0.5) / 200_000
        vals = self.value(x)
        w = self.system.density(x) / x.size
        N = np.atleast_1d(np.asarray(N, dtype=float))
        out = np.array([w[vals > n].sum() for n in N])
        return float(out[0]) if out.size == 1 else out

    def charfn(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape, dtype=complex)
        for i, ti in enumerate(t):
            re = integrate.quad(lambda x: math.cos(ti * float(self.value(x))) * float(self.system.density(x)), 0, 1, limit=400)[0]
            im = integrate.quad(lambda x: math.sin(ti * float(self.value(x))) * float(self.system.density(x)), 0, 1, limit=400)[0]
            out[i] = complex(re, im)
        return out

    def one_minus_charfn(self, t):
        return 1.0 - self.charfn(t)


@dataclass(frozen=True)
class BlockObservable(_ObservableBase):
    """Doubling-map observable depending on the first ``K`` binary digits.

    The block ``B(x) = floor(2^K x)`` is scrambled by a bijection sigma of
    ``{0, ..., 2^K - 1}`` (multiply-xorshift rounds) and ``v = U^{-1/alpha}``
    with ``U = (sigma(B) + 1/2)/2^K``, so ``v`` has a discretized Pareto law.
    An affine sigma would commute with the shift up to a constant and keep
    the clustering of the doubling map; the xorshift rounds break it, so
    large values at consecutive times are nearly independent.
    """

    system: IntervalSystem
    alpha: float
    K: int = 20
    A: int = 0x9E3779B1
    C: int = 12345

    def __post_init__(self):
        if not isinstance(self.system, DoublingSystem):
            raise DomainError("BlockObservable is defined for the doubling map")
        if self.A % 2 == 0:
            raise DomainError("A must be odd")

    @property
    def name(self) -> str:
        return f"block(alpha={self.alpha:g},K={self.K})"

    @property
    def c(self) -> float:
        return 0.0

    @property
    def mean(self) -> float:
        return math.inf if self.alpha < 1 else float(np.mean(self._levels()))

    @property
    def bounded(self) -> bool:
        return True

    def _levels(self) -> np.ndarray:
        return ((np.arange(2**self.K) + 0.5) / 2.0**self.K) ** (-1.0 / self.alpha)

    def scramble(self, block):
        """The bijection sigma on K-bit blocks."""
        mask = np.uint64((1 << self.K) - 1)
        s = np.asarray(block, dtype=np.uint64) & mask
        for shift in (self.K // 2 + 1, self.K // 3 + 1, self.K // 2 + 1):
            s = (s * np.uint64(self.A) + np.uint64(self.C)) & mask
            s ^= s >> np.uint64(shift)
        return s

    def block_value(self, block):
        s = self.scramble(block)
        return ((s.astype(float) + 0.5) / 2.0**self.K) ** (-1.0 / self.alpha)

    def value(self, x):
        b = np.floor(np.asarray(x, dtype=float) * 2.0**self.K).astype(np.uint64)
        return self.block_value(b)

    __call__ = value

    def tail(self, N):
        """Exact ``mu(v > N)`` for the discretized law."""
        N = np.asarray(N, dtype=float)
        # v > N  <=>  U < N^-alpha  <=>  sigma(B) + 1/2 < 2^K N^-alpha
        cnt = np.clip(np.ceil(2.0**self.K * N**-self.alpha - 0.5), 0, 2**self.K)
        out = cnt / 2.0**self.K
        return float(out) if out.ndim == 0 else out

    def sample_iid(self, rng: np.random.Generator, size):
        blocks = rng.integers(0, 2**self.K, size=size, dtype=np.uint64)
        return self.block_value(blocks)


# orbits ------------------------------------------------------------------------


def ergodic_sum(system: IntervalSystem, obs, x0, n: int, precision: int | None = None) -> float:
    """``sum_{j<n} v(T^j x0)``.

    Double precision with exact (fsum) accumulation, or mpmath arithmetic at
    ``precision`` decimal digits.  Raises :class:`OrbitDegenerate` when the
    orbit reaches a partition endpoint within n steps.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return 0.0
    if precision is not None:
        return _ergodic_sum_mp(system, obs, x0, n, precision)
    x = float(x0)
    if not 0.0 < x < 1.0:
        raise DomainError("x0 must lie in (0, 1)")
    terms = []
    for j in range(n):
        terms.append(float(obs.value(np.array(x))))
        if j < n - 1:
            if system.on_endpoint(x):
                raise OrbitDegenerate(f"orbit reaches a partition endpoint at step {j + 1}")
            x = float(system.map(np.array(x)))
    return math.fsum(terms)


def _ergodic_sum_mp(system, obs, x0, n, precision):
    with mpmath.workdps(precision):
        x = mpmath.mpf(x0)
        total = mpmath.mpf(0)
        for j in range(n):
            if x <= 0 or x >= 1:
                raise OrbitDegenerate(f"orbit reaches a partition endpoint at step {j}")
            if isinstance(obs, PowerObservable):
                total += obs.sign * (mpmath.power(x, -mpmath.mpf(1) / obs.alpha) - obs.c)
            else:
                total += obs.value(np.array(float(x)))
            if isinstance(system, DoublingSystem):
                x = 2 * x
                x = x - mpmath.floor(x)
            else:
                y = 1 / x
                x = y - mpmath.floor(y)
        return float(total)


def _digit_words(rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    cols = max(3, (max(n, 1) - 1) // 64 + 3)
    return rng.bit_generator.random_raw((rows, cols)).astype(np.uint64, copy=False)


def orbit_sums(system: IntervalSystem, obs, n: int, rng: np.random.Generator, rows: int) -> np.ndarray:
    """Ergodic sums of ``obs`` over ``rows`` stationary orbits of length n.

    NaN marks degenerate (endpoint-hitting) Gauss orbits.
    """
    if isinstance(obs, PowerObservable):
        inv = 1.0 / obs.alpha
        if isinstance(system, DoublingSystem):
            return kernels.doubling_power_sums(_digit_words(rng, rows, n), n, inv, obs.c, obs.sign)
        x0 = sample_invariant(system, rng, rows)
        return kernels.gauss_power_sums(np.ascontiguousarray(x0), n, inv, obs.c, obs.sign)
    if isinstance(system, DoublingSystem):
        words = _digit_words(rng, rows, n + (obs.K if isinstance(obs, BlockObservable) else 0))
        s = np.zeros(rows)
        for j in range(n):
            k, sh = divmod(j, 64)
            hi = kernels.python_backend._window(words, k, sh)
            if isinstance(obs, BlockObservable):
                s += obs.block_value(hi >> np.uint64(64 - obs.K))
            else:
                lo = kernels.python_backend._window(words, k + 1, sh)
                x = hi.astype(float) * 2.0**-64 + lo.astype(float) * 2.0**-128
                s += obs.value(x)
        return s
    x = sample_invariant(system, rng, rows)
    s = np.zeros(rows)
    for _ in range(n):
        s += obs.value(x)
        x = system.map(np.where(x > 0, x, 0.5))
    return s


def mc_tail_vn(system: IntervalSystem, obs, n: int, N: float, samples: int, seed: int,
               shards: int = 1, workers: int | None = None, chunk_draws: int = 1 << 22,
               gate: int = 100) -> TailEstimate:
    """Monte Carlo estimate of ``mu(v_n - b_n > N)`` from stationary starts."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if N <= -1e300:
        return TailEstimate.from_counts(samples, samples, float(samples))
    b_n = n * obs.mean if (obs.alpha > 1 and obs.c == 0.0 and math.isfinite(obs.mean)) else 0.0
    p_pred = min(1.0, n * float(obs.tail(N))) if N > 0 else 1.0
    expected = check_gate(samples, p_pred, gate)
    rows = max(1, chunk_draws // n)
    thresh = N + b_n

    def shard(rng: np.random.Generator, k: int) -> tuple[int, int]:
        hits = used = done = 0
        while done < k:
            r = min(rows, k - done)
            s = orbit_sums(system, obs, n, rng, r)
            ok = ~np.isnan(s)
            hits += int(np.count_nonzero(s[ok] > thresh))
            used += int(np.count_nonzero(ok))
            done += r
        return hits, used

    hits, used = run_sharded(seed, samples, shards, shard, workers)
    return TailEstimate.from_counts(hits, used, expected)


# diagnostics -------------------------------------------------------------------


@dataclass(frozen=True)
class H1Fit:
    """Log-log fit of ``mu(v > N) = kappa N^-alpha``."""

    alpha_hat: float
    kappa_hat: float
    N: np.ndarray
    tail: np.ndarray
    residuals: np.ndarray


def check_H1(system: IntervalSystem, obs, N_grid, max_residual: float = 0.05) -> H1Fit:
    """Fit the exact tail on ``N_grid`` (spanning at least two decades)."""
    N = np.asarray(N_grid, dtype=float)
    if N.min() <= 0 or N.max() / N.min() < 100:
        raise DomainError("N_grid must be positive and span >= 2 decades")
    tail = np.asarray(obs.tail(N), dtype=float)
    if np.any(tail <= 0):
        raise ModelMismatch("observable has no tail on the grid (bounded or constant)")
    X = np.column_stack([np.ones_like(N), np.log(N)])
    coef, *_ = np.linalg.lstsq(X, np.log(tail), rcond=None)
    resid = np.log(tail) - X @ coef
    if np.max(np.abs(resid)) > max_residual:
        raise ModelMismatch(f"log-log residual {np.max(np.abs(resid)):.3g} exceeds {max_residual}")
    return H1Fit(float(-coef[1]), float(math.exp(coef[0])), N, tail, resid)


@dataclass(frozen=True)
class GibbsMarkovReport:
    image_measure: np.ndarray
    min_image_measure: float
    distortion_C: float
    min_expansion: float
    min_expansion_2: float
    eq41_ratio: np.ndarray | None
    eq41_sup: float | None
    branches: np.ndarray


def _separation(system: IntervalSystem, y: np.ndarray, yp: np.ndarray, max_steps: int = 40) -> np.ndarray:
    """First step at which the orbits of y and y' lie in different branches."""
    s = np.full(y.shape, max_steps)
    a, b = y.copy(), yp.copy()
    alive = np.ones(y.shape, dtype=bool)
    for k in range(max_steps):
        diff = alive & (system.branch_of(a) != system.branch_of(b))
        s[diff] = k
        alive &= ~diff
        if not alive.any():
            break
        a = system.map(np.clip(a, 1e-300, None))
        b = system.map(np.clip(b, 1e-300, None))
    return s


def gibbs_markov_diagnostics(system: IntervalSystem, j_max: int, pair_samples: int = 200,
                             obs=None, seed: int = 0) -> GibbsMarkovReport:
    """Image measures, sampled distortion constant, expansion and the
    per-branch Lipschitz/infimum ratio of an observable."""
    rng = np.random.default_rng(seed)
    js = np.array(list(system.branch_range(j_max)))
    images, dist, ratios = [], 0.0, []
    min_exp, min_exp2 = math.inf, math.inf
    for j in js:
        lo, hi = system.branch_interval(int(j))
        # full branches: image is (0, 1)
        y_lo = float(system.map(np.array(lo + 1e-12 * (hi - lo))))
        y_hi = float(system.map(np.array(hi - 1e-12 * (hi - lo))))
        a, b = sorted((y_lo, y_hi))
        images.append(float(np.real(system.cdf(b) - system.cdf(a))))
        y = lo + (hi - lo) * rng.uniform(0.001, 0.999, pair_samples)
        yp = lo + (hi - lo) * rng.uniform(0.001, 0.999, pair_samples)
        s = _separation(system, y, yp)
        d = system.theta ** s
        lg = np.abs(np.log(system.derivative(y)) - np.log(system.derivative(yp)))
        dist = max(dist, float(np.max(lg / d)))
        der = system.derivative(y)
        min_exp = min(min_exp, float(der.min()))
        min_exp2 = min(min_exp2, float((der * system.derivative(system.map(y))).min()))
        if obs is not None:
            raw = lambda x: np.abs(np.asarray(x, dtype=float) ** (-1.0 / obs.alpha)) if isinstance(obs, PowerObservable) else np.abs(obs.value(x))
            lip = float(np.max(np.abs(raw(y) - raw(yp)) / d))
            grid = np.linspace(lo, hi, 257)[1:-1]
            inf_v = float(np.min(raw(grid)))
            ratios.append(lip / inf_v if inf_v > 0 else math.inf)
    images = np.asarray(images)
    eq41 = np.asarray(ratios) if obs is not None else None
    return GibbsMarkovReport(images, float(images.min()), dist, min_exp, min_exp2, eq41,
                             float(np.max(eq41)) if eq41 is not None else None, js)
