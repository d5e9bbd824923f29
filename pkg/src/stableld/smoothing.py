"""Smoothing variable Y with compactly supported characteristic function.

Y has density ``3 eps/(8 pi) * sinc^4(eps x/4)`` (``sinc(u) = sin u/u``).  Its
characteristic function is the normalized cubic B-spline

    psi_Y(t) = 1.5 * B3(2 t/eps),
    B3(u) = 2/3 - u^2 + |u|^3/2   (|u| <= 1),   (2 - |u|)^3/6   (1 <= |u| <= 2),

which is real, even, C^2 and vanishes for ``|t| >= eps``.

The gap integral

    I(N) = int_{-eps}^{eps} (e^{-itN} - e^{-it(N+g)}) psi_Y(t) (Psi^n - n Psi)/(it) dt

equals ``2 pi [P(S_n + Y in (N, N+g]) - n P(X + Y in (N, N+g])]``.  It is
evaluated as ``term(N) - term(N+g)`` with
``term(w) = 2 int_0^eps Im(e^{-itw} G(t))/t dt`` and ``G = psi_Y (Psi^n - n Psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from .charfn import log_one_minus
from .errors import InsufficientSamples, NumericError
from .mc import wilson_interval

__all__ = [
    "SmoothingKernel",
    "psi_Y",
    "sample_Y",
    "shift_insensitivity_check",
    "ShiftReport",
    "cf_gap_integral",
    "GapIntegral",
    "gap_nodes",
    "gap_integral_from_values",
]


@dataclass(frozen=True)
class SmoothingKernel:
    """Jackson-type smoothing kernel with support half-width ``epsilon``."""

    epsilon: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def density_constant(self) -> float:
        return 3.0 * self.epsilon / (8.0 * math.pi)

    def psi(self, t):
        u = np.abs(2.0 * np.asarray(t, dtype=float) / self.epsilon)
        inner = 2.0 / 3.0 - u * u + 0.5 * u**3
        outer = (2.0 - u) ** 3 / 6.0
        out = 1.5 * np.where(u <= 1.0, inner, np.where(u < 2.0, outer, 0.0))
        return float(out) if np.ndim(out) == 0 else out

    def density(self, x):
        u = self.epsilon * np.asarray(x, dtype=float) / 4.0
        return self.density_constant * np.sinc(u / math.pi) ** 4

    def abs_tail(self, y: float) -> float:
        """``P(|Y| > y)`` by quadrature of the density."""
        if y <= 0:
            return 1.0
        u0 = self.epsilon * y / 4.0
        f = lambda u: np.sinc(u / math.pi) ** 4
        # integral over u > u0 of sinc^4, scaled to the x variable
        head = 0.0
        upper = max(u0, 50.0)
        if u0 < upper:
            head, _ = integrate.quad(f, u0, upper, limit=400)
        # beyond upper, sin^4 u = (3 - 4 cos 2u + cos 4u)/8 with Fourier-weight quadrature
        w = lambda u: 1.0 / (8.0 * u**4)
        c2, _ = integrate.quad(w, upper, np.inf, weight="cos", wvar=2.0)
        c4, _ = integrate.quad(w, upper, np.inf, weight="cos", wvar=4.0)
        tail = 3.0 / (24.0 * upper**3) - 4.0 * c2 + c4
        return 2.0 * self.density_constant * (4.0 / self.epsilon) * (head + tail)

    def second_difference(self, t: float, h: float) -> float:
        """Central second difference of psi_Y at t."""
        return (self.psi(t + h) - 2 * self.psi(t) + self.psi(t - h)) / (h * h)


def psi_Y(kernel: SmoothingKernel, t):
    """Characteristic function of Y."""
    return kernel.psi(t)


def sample_Y(kernel: SmoothingKernel, stream: np.random.Generator, size=None):
    """Draw Y by rejection in ``u = eps Y/4`` from the envelope ``min(1, u^-4)``.

    The envelope has mass 2 on ``|u| <= 1`` and 2/3 beyond, so with
    probability 3/4 a uniform on [-1, 1] is proposed and otherwise
    ``|u| = V^(-1/3)``.  Acceptance probability is pi/4.
    """
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = max(16, int(1.4 * (n - filled)) + 16)
        body = stream.random(k) < 0.75
        u = np.where(body, stream.uniform(-1.0, 1.0, k), 0.0)
        tail_u = stream.random(k) ** (-1.0 / 3.0)
        sign = np.where(stream.random(k) < 0.5, -1.0, 1.0)
        u = np.where(body, u, sign * tail_u)
        env = np.where(np.abs(u) <= 1.0, 1.0, u**-4)
        acc = stream.random(k) * env <= np.sinc(u / math.pi) ** 4
        good = u[acc]
        take = min(good.size, n - filled)
        out[filled : filled + take] = good[:take]
        filled += take
    x = 4.0 * out / kernel.epsilon
    return float(x[0]) if size is None else x.reshape(size)


@dataclass(frozen=True)
class ShiftReport:
    """Estimates of P(Z > N) and P(Z + Y > N)."""

    N: float
    h_N: float
    samples: int
    hits_Z: int
    hits_ZY: int
    p_Z: float
    p_ZY: float
    ci_Z: tuple[float, float]
    ci_ZY: tuple[float, float]
    ratio: float
    y_tail_at_h: float
    degenerate: bool = False


def shift_insensitivity_check(
    tail_of_Z: Callable[[np.random.Generator, int], np.ndarray],
    kernel: SmoothingKernel,
    N: float,
    h_N: float,
    samples: int,
    seed: int = 0,
    expected_tail: float | None = None,
    chunk: int = 1_000_000,
) -> ShiftReport:
    """Compare ``P(Z > N)`` with ``P(Z + Y > N)`` for independent Y.

    Parameters
    ----------
    tail_of_Z : callable
        ``tail_of_Z(rng, k)`` returns k draws of Z.
    expected_tail : float, optional
        A priori value of ``P(Z > N)`` for the sample gate.  When 0 the
        degenerate-tail guard is raised and no sampling happens.
    """
    y_tail = kernel.abs_tail(h_N)
    if expected_tail is not None:
        if expected_tail <= 0.0:
            return ShiftReport(N, h_N, 0, 0, 0, 0.0, math.nan, (0.0, 0.0), (0.0, 1.0), math.nan, y_tail, True)
        if samples * expected_tail < 100:
            need = int(math.ceil(100 / expected_tail))
            raise InsufficientSamples(samples * expected_tail, need)
    rng = np.random.default_rng(seed)
    hz = hzy = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        z = np.asarray(tail_of_Z(rng, k), dtype=float)
        y = sample_Y(kernel, rng, k)
        hz += int(np.count_nonzero(z > N))
        hzy += int(np.count_nonzero(z + y > N))
        done += k
    if hz == 0:
        return ShiftReport(N, h_N, samples, 0, hzy, 0.0, hzy / samples, (0.0, 0.0),
                           wilson_interval(hzy, samples), math.nan, y_tail, True)
    return ShiftReport(
        N, h_N, samples, hz, hzy, hz / samples, hzy / samples,
        wilson_interval(hz, samples), wilson_interval(hzy, samples), hzy / hz, y_tail,
    )


# gap integrals ---------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def gap_nodes(epsilon: float, omega: float, refine: int = 1, t_floor: float = 1e-12):
    """Composite Gauss-Legendre nodes and weights on (0, epsilon).

    Panels are geometric from ``t_floor`` up to the uniform width, then
    uniform with width at most a quarter period of ``e^{-i omega t}``;
    ``epsilon/2`` (a knot of psi_Y) is always a panel edge.
    """
    width = min(epsilon / 8.0, 0.5 * math.pi / max(omega, 1e-300)) / refine
    edges = [0.0, t_floor]
    while edges[-1] * 2.0 < width:
        edges.append(edges[-1] * 2.0)
    edges.append(width)
    half = epsilon / 2.0
    for lo_end, hi_end in ((width, half), (half, epsilon)):
        if hi_end <= lo_end:
            continue
        k = max(1, math.ceil((hi_end - lo_end) / width))
        edges.extend(np.linspace(lo_end, hi_end, k + 1)[1:].tolist())
    edges = np.unique(np.asarray(edges))
    lo, hi = edges[:-1], edges[1:]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    t = (mid[:, None] + rad[:, None] * _GL_X[None, :]).ravel()
    w = (rad[:, None] * _GL_W[None, :]).ravel()
    return t, w


@dataclass(frozen=True)
class GapIntegral:
    """Gap integral and its probability-scale value ``value / (2 pi)``."""

    value: float
    error: float
    probability: float
    near_term: float
    far_term: float


def _far_term(t: np.ndarray, G: np.ndarray, G0: float, omega: float, epsilon: float,
              f1: Callable | None = None, f2: Callable | None = None) -> tuple[float, float]:
    """``2 int_0^eps Im(e^{-i omega t} G)/t dt`` for large omega.

    ``-2 G0 Si(omega eps)`` is exact; the smooth remainder is integrated by
    QAWO, either with exact callables or with cubic-spline interpolants.
    """
    si, _ = special.sici(omega * epsilon)
    base = -2.0 * G0 * si
    if f1 is None:
        f1 = CubicSpline(t, G.imag / t, extrapolate=True)
        f2 = CubicSpline(t, (G.real - G0) / t, extrapolate=True)
    total, err = 0.0, 0.0
    for lo, hi in ((0.0, epsilon / 2.0), (epsilon / 2.0, epsilon)):
        c, ec = integrate.quad(lambda s: float(f1(s)), lo, hi, weight="cos", wvar=omega, limit=400)
        s, es = integrate.quad(lambda s: float(f2(s)), lo, hi, weight="sin", wvar=omega, limit=400)
        total += c - s
        err += ec + es
    return base + 2.0 * total, 2.0 * err


def _near_term(t: np.ndarray, w: np.ndarray, G: np.ndarray, omega: float) -> float:
    return 2.0 * float(np.sum(w * np.imag(np.exp(-1j * omega * t) * G) / t))


def gap_integral_from_values(
    G_of_t: Callable[[np.ndarray], np.ndarray],
    G0: float,
    N: float,
    g: float,
    epsilon: float,
    far_callables: tuple[Callable, Callable] | None = None,
) -> GapIntegral:
    """Evaluate the gap integral from a vectorized ``G(t)`` on (0, eps).

    The near term is computed on two composite grids (panel widths w and
    w/2); their difference is reported as the error estimate.
    """
    t1, w1 = gap_nodes(epsilon, N, refine=1)
    t2, w2 = gap_nodes(epsilon, N, refine=2)
    G1 = G_of_t(t1)
    G2 = G_of_t(t2)
    near1 = _near_term(t1, w1, G1, N)
    near2 = _near_term(t2, w2, G2, N)
    if far_callables is None:
        far, far_err = _far_term(t2, G2, G0, N + g, epsilon)
    else:
        far, far_err = _far_term(t2, G2, G0, N + g, epsilon, *far_callables)
    value = near2 - far
    err = abs(near2 - near1) + far_err
    if not np.isfinite(value):
        raise NumericError("gap integral is not finite", err)
    return GapIntegral(value, err, value / (2 * math.pi), near2, far)


def cf_gap_integral(
    Psi: Callable[[np.ndarray], np.ndarray],
    n: int,
    N: float,
    g: float,
    kernel: SmoothingKernel,
    one_minus_Psi: Callable[[np.ndarray], np.ndarray] | None = None,
) -> GapIntegral:
    """Gap integral for a characteristic function ``Psi``.

    Parameters
    ----------
    Psi : callable
        Vectorized characteristic function with ``Psi(0) = 1``.
    one_minus_Psi : callable, optional
        Accurate ``1 - Psi``; when given, ``Psi^n`` is formed from it.
    """
    if n == 1:
        return GapIntegral(0.0, 0.0, 0.0, 0.0, 0.0)
    eps = kernel.epsilon

    def G(t):
        t = np.asarray(t, dtype=float)
        if one_minus_Psi is not None:
            w = one_minus_Psi(t)
            ps = 1.0 - w
            pn = np.exp(n * log_one_minus(w))
        else:
            ps = np.asarray(Psi(t), dtype=complex)
            pn = ps**n
        return kernel.psi(t) * (pn - n * ps)

    G0 = 1.0 - n
    f1 = lambda s: float(np.imag(G(np.array([s]))[0])) / s if s > 0 else 0.0
    f2 = lambda s: (float(np.real(G(np.array([s]))[0])) - G0) / s if s > 0 else 0.0
    return gap_integral_from_values(G, G0, N, g, eps, far_callables=(f1, f2))
