"""Ulam discretization of the transfer operator and its twisted perturbation.

The Ulam matrix ``P`` (row-stochastic, ``P_ij = m Leb(I_i & T^-1 I_j)`` on the
uniform grid ``I_i = [i/m, (i+1)/m]``) is a Markov chain on cells.  With
``pi`` its stationary vector, the transfer operator acting on densities with
respect to the discretized invariant measure is ``A = D_pi^-1 P^T D_pi``, so
``A 1 = 1`` and ``sum(pi * A f) = sum(pi * f)``.  The twisted operator is
``R(t) f = A(e(t) f)`` where ``e_i(t)`` averages ``e^{itv}`` over cell i.

All eigen-computations are power iterations; diagnostics derived from the
discretization are finite-dimensional proxies of the operator statements.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, sparse, special

from .charfn import power_of_charfn
from .dynamics import DoublingSystem, GaussSystem, IntervalSystem, PowerObservable
from .errors import DomainError, FitDegenerate, ResourceError, SpectralDegeneracy
from .tails import NormingPlan

__all__ = [
    "UlamOperator",
    "build_ulam",
    "twist",
    "perturbed_apply",
    "SpectralData",
    "leading_eig",
    "select_epsilon",
    "ScalingFit",
    "scaling_exponent_fit",
    "charfn_vn",
    "DiagnosticTable",
    "DIAGNOSTIC_COLUMNS",
    "discrete_charfn",
    "V_diagnostic",
    "U_diagnostic",
    "QDecay",
    "q_decay",
    "PPrimeReport",
    "p_prime_zero_check",
    "refinement_check",
]

DIAGNOSTIC_COLUMNS = ("t", "n", "quantity", "envelope", "ratio", "m", "residual")
_DEFAULT_MEMORY = 2 * 1024**3
_DUMP_LIMIT = 8192


@dataclass(eq=False)
class UlamOperator:
    """Row-stochastic Ulam matrix with its stationary weights.

    Attributes
    ----------
    system : IntervalSystem
    m : int
    edges : ndarray
        Cell boundaries ``i/m``.
    P : scipy.sparse.csr_matrix
        Transition matrix.
    pi : ndarray
        Stationary weights (``pi P = pi``, summing to 1).
    """

    system: IntervalSystem
    m: int
    edges: np.ndarray
    P: sparse.csr_matrix
    pi: np.ndarray
    A: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        d = sparse.diags(self.pi)
        dinv = sparse.diags(1.0 / self.pi)
        self.A = (dinv @ self.P.T @ d).tocsr()

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        """Stationary density with respect to Lebesgue (approximates h)."""
        return self.pi / self.widths

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def apply(self, f):
        """Transfer operator on mu-densities, ``A f``."""
        return self.A @ f

    def integrate(self, f):
        """``int f dmu`` for cellwise-constant f (axis 0)."""
        return self.pi @ f

    def dump(self, path: Path | str) -> Path:
        """Dense binary dump: int64 m, then the m*m matrix row-major,
        all little-endian, entries float64."""
        if self.m > _DUMP_LIMIT:
            raise ResourceError(f"dense dump of m={self.m} exceeds the {_DUMP_LIMIT} limit")
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(np.array([self.m], dtype="<i8").tobytes())
            fh.write(np.ascontiguousarray(self.P.toarray(), dtype="<f8").tobytes())
        return path

    @staticmethod
    def load_dense(path: Path | str) -> np.ndarray:
        raw = Path(path).read_bytes()
        m = int(np.frombuffer(raw[:8], dtype="<i8")[0])
        return np.frombuffer(raw[8:], dtype="<f8").reshape(m, m)


def _stationary(P: sparse.csr_matrix, tol: float = 1e-15, maxiter: int = 20000) -> np.ndarray:
    m = P.shape[0]
    pi = np.full(m, 1.0 / m)
    PT = P.T.tocsr()
    for _ in range(maxiter):
        nxt = PT @ pi
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise SpectralDegeneracy("stationary vector did not converge")
    if np.any(pi <= 0):
        raise SpectralDegeneracy("Ulam chain is not irreducible on the grid")
    return pi


def _doubling_matrix(m: int) -> sparse.csr_matrix:
    i = np.arange(m)
    rows = np.repeat(i, 2)
    cols = np.stack([(2 * i) % m, (2 * i + 1) % m], axis=1).ravel()
    return sparse.csr_matrix((np.full(2 * m, 0.5), (rows, cols)), shape=(m, m))


def _hurwitz_block(K1: int, K2: float, m: int, terms: int = 8) -> np.ndarray:
    """``sum_{k=K1}^{K2} Leb(branch_k^-1 of cell j)`` for every column j.

    Uses ``1/(k+a) - 1/(k+a+d) = sum_r (-1)^{r+1} d^r (k+a)^{-r-1}`` and
    Hurwitz zeta sums over k; valid because ``d/(K1+a)`` is tiny.
    """
    d = 1.0 / m
    a = np.arange(m) * d
    out = np.zeros(m)
    for r in range(1, terms + 1):
        s = special.zeta(r + 1, K1 + a)
        if math.isfinite(K2):
            s = s - special.zeta(r + 1, K2 + 1 + a)
        out += (-1) ** (r + 1) * d**r * s
    return out


def _gauss_matrix(m: int, direct_min: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols, vals = [], [], []
    dense_rows = {}

    def add_piece(i, k, A, B):
        # x-measure of {x in cell i, branch k, T x in [A, B]} split over columns
        j0 = int(math.floor(A * m))
        j1 = min(m, int(math.ceil(B * m)))
        j = np.arange(j0, max(j1, j0 + 1))
        lo = np.maximum(j / m, A)
        hi = np.minimum((j + 1) / m, B)
        keep = hi > lo
        j, lo, hi = j[keep], lo[keep], hi[keep]
        rows.append(np.full(j.size, i))
        cols.append(j)
        vals.append((hi - lo) / ((k + lo) * (k + hi)))

    def add_full(i, K1, K2):
        if math.isfinite(K2) and (K1 < direct_min or K2 - K1 < 2):
            for k in range(K1, int(K2) + 1):
                add_piece(i, k, 0.0, 1.0)
        else:
            dense_rows[i] = dense_rows.get(i, 0.0) + _hurwitz_block(K1, K2, m)

    add_full(0, m, math.inf)
    for i in range(1, m):
        lo_y, hi_y = m / (i + 1), m / i  # 1/x range over the cell
        k_first = int(math.floor(lo_y))
        k_last = int(math.ceil(hi_y)) - 1
        for k in {k_first, k_last}:
            A = max(lo_y - k, 0.0)
            B = min(hi_y - k, 1.0)
            if B > A and not (A == 0.0 and B == 1.0):
                add_piece(i, k, A, B)
        full_lo = k_first if lo_y - k_first == 0.0 else k_first + 1
        full_hi = k_last if hi_y - k_last == 1.0 else k_last - 1
        if full_hi >= full_lo:
            add_full(i, full_lo, full_hi)
    for i, row in dense_rows.items():
        rows.append(np.full(m, i))
        cols.append(np.arange(m))
        vals.append(row)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _gauss_nnz_estimate(m: int) -> int:
    r = int(math.isqrt(m)) + 2
    return r * m + 4 * m * int(math.log2(max(m, 2)) + 1)


def build_ulam(system: IntervalSystem, m: int, memory_limit: int = _DEFAULT_MEMORY) -> UlamOperator:
    """Ulam matrix from closed-form branch inverses (no sampling).

    Raises
    ------
    ResourceError
        If the estimated storage exceeds ``memory_limit`` bytes.
    """
    m = int(m)
    if m < 2:
        raise DomainError("m must be >= 2")
    if isinstance(system, DoublingSystem):
        nnz = 2 * m
    elif isinstance(system, GaussSystem):
        nnz = _gauss_nnz_estimate(m)
    else:
        raise DomainError(f"no Ulam construction for {system!r}")
    # COO triplets plus CSR copies plus the transposed operator
    if nnz * 48 > memory_limit:
        raise ResourceError(f"Ulam matrix with m={m} needs ~{nnz * 48 / 2**20:.0f} MiB")
    if isinstance(system, DoublingSystem):
        P = _doubling_matrix(m)
    else:
        r, c, v = _gauss_matrix(m)
        P = sparse.csr_matrix((v * m, (r, c)), shape=(m, m))
        P.sum_duplicates()
        P.eliminate_zeros()
        rs = np.asarray(P.sum(axis=1)).ravel()
        P = sparse.diags(1.0 / rs) @ P
        P = P.tocsr()
    edges = np.arange(m + 1) / m
    return UlamOperator(system, m, edges, P, _stationary(P))


# twisting ----------------------------------------------------------------------


def _cell_means(U: UlamOperator, obs, exact_cells: int) -> np.ndarray:
    means = obs.cell_means(U.edges)
    if isinstance(obs, PowerObservable) and obs.alpha > 1:
        h = U.system.density
        inv = -1.0 / obs.alpha
        for i in range(min(exact_cells, U.m)):
            a, b = U.edges[i], U.edges[i + 1]
            num = integrate.quad(lambda x: float(h(x)), a, b, weight="alg", wvar=(inv, 0.0))[0] if a == 0 else \
                integrate.quad(lambda x: x**inv * float(h(x)), a, b)[0]
            mass = integrate.quad(lambda x: float(h(x)), a, b)[0]
            means[i] = obs.sign * (num / mass - obs.c)
    return means


@lru_cache(maxsize=64)
def _drift(U: UlamOperator, obs, exact_cells: int) -> float:
    """Discrete mean minus exact mean (0 when the mean is infinite)."""
    mean = obs.mean
    if not (obs.alpha > 1 and math.isfinite(mean)):
        return 0.0
    return float(U.pi @ _cell_means(U, obs, exact_cells)) - mean


def twist(U: UlamOperator, obs, t: float, mode: str = "average", exact_cells: int = 8,
          recenter: bool = True) -> np.ndarray:
    """Cell twist ``e_i(t)``.

    With ``recenter`` (finite-mean observables) the factor
    ``exp(-it (m_d - E v))`` removes the drift between the discrete mean
    ``m_d = sum pi_i vbar_i`` and the exact mean.
    """
    e = obs.cell_charfn(U.edges, float(t), exact_cells=exact_cells, mode=mode)
    if recenter:
        d = _drift(U, obs, exact_cells)
        if d:
            e = e * np.exp(-1j * t * d)
    return e


def perturbed_apply(U: UlamOperator, t: float, obs, f, mode: str = "average", exact_cells: int = 8):
    """``R(t) f = A(e(t) f)``."""
    f = np.asarray(f)
    if f.shape[0] != U.m:
        raise DomainError("vector length must equal the grid size")
    e = twist(U, obs, t, mode, exact_cells)
    return U.A @ (e * f if f.ndim == 1 else e[:, None] * f)


def discrete_charfn(U: UlamOperator, obs, t, **kw) -> np.ndarray:
    """``Psi_m(t) = sum_i pi_i e_i(t)``: characteristic function of the
    discretized law of v under the Ulam weights."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    # at t = 0 every twist is 1 and the weights sum to 1
    return np.array([1.0 + 0j if ti == 0 else U.pi @ twist(U, obs, ti, **kw) for ti in t])


# eigendata ---------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralData:
    """Leading eigendata of ``R(t)``.

    ``zeta`` is a mu-density normalized by ``sum(pi*zeta) = 1`` and ``left``
    satisfies ``sum(pi*left*zeta) = 1``, so ``P(t) f = zeta <left, f>``.
    """

    t: float
    lam: complex
    zeta: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    gap: float
    second: float
    residual: float
    left_residual: float
    iterations: int
    m: int
    pi: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)

    @property
    def density(self) -> np.ndarray:
        """``zeta`` as a density with respect to Lebesgue."""
        return self.zeta * self.pi / self.widths

    def project(self, f):
        return self.zeta * (self.pi @ (self.left * f))

    def integral_of_projection(self) -> complex:
        """``int P(t) 1 dmu``."""
        return complex(self.pi @ self.left) * complex(self.pi @ self.zeta)


def _mu_norm(pi, f):
    return float(pi @ np.abs(f))


def leading_eig(U: UlamOperator, t: float, obs, tol: float = 1e-8, maxiter: int = 5000,
                mode: str = "average", exact_cells: int = 8, seed: int = 0,
                second_iters: int = 80) -> SpectralData:
    """Dominant eigenpair of ``R(t)`` by power iteration.

    The eigenvalue is the two-sided Rayleigh quotient; residuals are in the
    mu-weighted L1 norm.  The second modulus comes from power iteration on
    the deflated operator ``Q = R - lam zeta <left, .>``.

    Raises
    ------
    SpectralDegeneracy
        No convergence within ``maxiter``, or ``|lam| <= second``.
    """
    pi = U.pi
    e = twist(U, obs, t, mode, exact_cells)
    A, P = U.A, U.P
    R = lambda f: A @ (e * f)
    Rs = lambda g: e * (P @ g)
    z = np.ones(U.m, dtype=complex)
    w = np.ones(U.m, dtype=complex)
    lam = 1.0 + 0j
    res = lres = math.inf
    it = 0
    for it in range(1, maxiter + 1):
        Rz = R(z)
        Rw = Rs(w)
        den = pi @ (w * z)
        if den == 0:
            raise SpectralDegeneracy("left and right iterates became orthogonal")
        lam = (pi @ (w * Rz)) / den
        res = _mu_norm(pi, Rz - lam * z) / _mu_norm(pi, z)
        lres = _mu_norm(pi, Rw - lam * w) / _mu_norm(pi, w)
        if res <= tol * 1e-2 and lres <= tol * 1e-2:
            break
        z = Rz / (pi @ Rz) if abs(pi @ Rz) > 1e-300 else Rz / _mu_norm(pi, Rz)
        w = Rw / _mu_norm(pi, Rw)
    s = pi @ z
    if abs(s) < 1e-12:
        raise SpectralDegeneracy("eigenvector has vanishing mu-integral")
    z = z / s
    w = w / (pi @ (w * z))
    res = _mu_norm(pi, R(z) - lam * z)
    lres = _mu_norm(pi, Rs(w) - lam * w) / _mu_norm(pi, w)
    if not (res <= tol and lres <= tol):
        raise SpectralDegeneracy(f"power iteration stalled (residual {res:.2e})")
    second = _second_modulus(R, lam, z, w, pi, seed, second_iters)
    gap = abs(lam) - second
    if gap <= 0:
        raise SpectralDegeneracy(f"no spectral gap at t={t:g}")
    return SpectralData(float(t), complex(lam), z, w, float(gap), float(second), float(res), float(lres),
                        it, U.m, U.pi, U.widths)


def _second_modulus(R, lam, z, w, pi, seed, iters) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(z.size) + 1j * rng.standard_normal(z.size)
    Q = lambda f: R(f) - lam * z * (pi @ (w * f))
    x = x - z * (pi @ (w * x))
    nx = _mu_norm(pi, x)
    logs = []
    for _ in range(iters):
        y = Q(x)
        ny = _mu_norm(pi, y)
        if ny <= 1e-15 * nx or ny == 0:
            return 0.0
        logs.append(math.log(ny / nx))
        x, nx = y / ny, 1.0
    tail = logs[len(logs) // 2:]
    return float(math.exp(np.mean(tail)))


def select_epsilon(U: UlamOperator, obs, eps_max: float = 1.0, min_gap: float = 0.05,
                   n_t: int = 12, max_halvings: int = 12, **kw) -> float:
    """Largest dyadic ``eps <= eps_max`` with gap > ``min_gap`` on ``0 < t <= 3 eps``.

    Negative t are covered by the conjugate symmetry ``lam(-t) = conj lam(t)``.
    """
    eps = eps_max
    for _ in range(max_halvings + 1):
        try:
            ok = all(leading_eig(U, t, obs, **kw).gap > min_gap for t in np.linspace(0, 3 * eps, n_t + 1)[1:])
        except SpectralDegeneracy:
            ok = False
        if ok:
            return eps
        eps /= 2
    raise SpectralDegeneracy("no admissible epsilon found")


def _spectra(U, obs, t_grid, **kw):
    return [leading_eig(U, float(t), obs, **kw) for t in t_grid]


# scaling fit -------------------------------------------------------------------


def _ell_of(obs):
    """``ell0(1/t)`` for the observable's induced tail model."""
    if isinstance(obs, PowerObservable):
        plan = NormingPlan(obs.tail_model())
        return lambda x: plan.ell0(x)
    return lambda x: np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ScalingFit:
    """Fit of ``|1 - lam(t)| = c |t|^alpha ell0(1/|t|)``."""

    alpha_hat: float
    c_hat: float
    residuals: np.ndarray
    alpha_hat_real: float
    t: np.ndarray
    lam: np.ndarray
    non_H1: bool
    max_residual: float

    def to_dict(self) -> dict:
        return {"alpha_hat": self.alpha_hat, "c_hat": self.c_hat, "alpha_hat_real": self.alpha_hat_real,
                "non_H1": self.non_H1, "max_residual": self.max_residual}


def scaling_exponent_fit(U: UlamOperator, obs, t_grid, **kw) -> ScalingFit:
    """Regress ``log|1 - lam| - log ell0(1/t)`` on ``log t``.

    The same regression on ``Re(1 - lam)`` is reported as
    ``alpha_hat_real``.  ``non_H1`` is set for bounded observables or
    ``alpha_hat`` near 2.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.min() <= 0 or t.max() / t.min() < 100:
        raise DomainError("t_grid must be positive and span >= 2 decades")
    lam = np.array([sd.lam for sd in _spectra(U, obs, t, **kw)])
    one = 1.0 - lam
    if np.any(np.abs(one) == 0):
        raise FitDegenerate("1 - lambda vanishes on the grid")
    ell = np.asarray(_ell_of(obs)(1.0 / t), dtype=float)
    X = np.column_stack([np.ones_like(t), np.log(t)])
    y = np.log(np.abs(one)) - np.log(ell)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    alpha_real = math.nan
    if np.all(one.real > 0):
        cr, *_ = np.linalg.lstsq(X, np.log(one.real) - np.log(ell), rcond=None)
        alpha_real = float(cr[1])
    alpha_hat = float(coef[1])
    non_h1 = bool(obs.bounded or alpha_hat > 1.9)
    return ScalingFit(alpha_hat, float(math.exp(coef[0])), resid, alpha_real, t, lam, non_h1,
                      float(np.max(np.abs(resid))))


# characteristic function of v_n -------------------------------------------------


def charfn_vn(U: UlamOperator, obs, t, n, **kw) -> np.ndarray | complex:
    """``int R(t)^n 1 dmu``.

    ``t`` and ``n`` may be arrays; the result then has shape
    ``(len(t), len(n))``.  All t are advanced together.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    n_arr = np.atleast_1d(np.asarray(n, dtype=int))
    if np.any(n_arr < 0):
        raise DomainError("n must be >= 0")
    E = np.column_stack([twist(U, obs, ti, **kw) for ti in t_arr])
    F = np.ones((U.m, t_arr.size), dtype=complex)
    out = np.empty((t_arr.size, n_arr.size), dtype=complex)
    order = np.argsort(n_arr)
    step = 0
    k = t_arr.size
    for idx in order:
        while step < n_arr[idx]:
            # one real sparse product on [Re | Im] is ~2x faster than complex
            G = E * F
            Y = U.A @ np.hstack([G.real, G.imag])
            F = Y[:, :k] + 1j * Y[:, k:]
            step += 1
        out[:, idx] = U.pi @ F
    # R(0)^n 1 = 1 and n = 0 give exactly 1 (A is row-stochastic)
    out[t_arr == 0, :] = 1.0
    out[:, n_arr == 0] = 1.0
    if np.ndim(t) == 0 and np.ndim(n) == 0:
        return complex(out[0, 0])
    return out


@dataclass
class DiagnosticTable:
    """Rows of ``(t, n, quantity, envelope, ratio, m, residual)``."""

    name: str
    rows: list[dict] = field(default_factory=list)

    def add(self, t, n, quantity, envelope, m, residual):
        ratio = quantity / envelope if envelope > 0 else (0.0 if quantity == 0 else math.inf)
        self.rows.append({"t": float(t), "n": int(n), "quantity": float(quantity), "envelope": float(envelope),
                          "ratio": float(ratio), "m": int(m), "residual": float(residual)})

    def column(self, key) -> np.ndarray:
        return np.array([r[key] for r in self.rows])

    @property
    def max_ratio(self) -> float:
        return float(self.column("ratio").max()) if self.rows else 0.0

    def write_csv(self, path: Path | str) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=DIAGNOSTIC_COLUMNS)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return path


def _psi(U, obs, t, psi, **kw):
    if psi == "discrete":
        return discrete_charfn(U, obs, t, **kw)
    if psi == "exact":
        return np.asarray(obs.charfn(t), dtype=complex)
    raise ValueError("psi must be 'discrete' or 'exact'")


def _kappa(obs) -> float:
    return obs.tail_constant if isinstance(obs, PowerObservable) else 1.0


def V_diagnostic(U: UlamOperator, obs, t_grid, psi: str = "discrete", **kw) -> DiagnosticTable:
    """``|V(t)| = |lam(t) - Psi(t)|`` against ``t^2`` (alpha > 1) or
    ``t^{2 alpha} ell(1/t)^2`` (alpha < 1)."""
    t = np.asarray(t_grid, dtype=float)
    ps = _psi(U, obs, t, psi, **_twist_kw(kw))
    table = DiagnosticTable("V")
    k = _kappa(obs)
    for ti, p in zip(t, ps):
        if ti == 0:
            table.add(0.0, 1, 0.0, 0.0, U.m, 0.0)
            continue
        sd = leading_eig(U, ti, obs, **kw)
        env = ti**2 if obs.alpha > 1 else abs(ti) ** (2 * obs.alpha) * k**2
        table.add(ti, 1, abs(sd.lam - p), env, U.m, sd.residual)
    return table


def _twist_kw(kw):
    return {k: v for k, v in kw.items() if k in ("mode", "exact_cells")}


def U_diagnostic(U: UlamOperator, obs, t_grid, n_grid, alpha_prime: float | None = None,
                 psi: str = "discrete", **kw) -> DiagnosticTable:
    """``|U(t,n)| = |int R(t)^n 1 dmu - Psi(t)^n|`` against the envelope
    ``(t^a ell + n t^{2a} ell^2)|Psi^n|`` (alpha < 1) or
    ``(t^{a'} + n t^2)|Psi^n|`` (alpha > 1)."""
    t = np.asarray(t_grid, dtype=float)
    n = np.asarray(n_grid, dtype=int)
    a = obs.alpha
    if a > 1:
        ap = 0.5 * (1 + a) if alpha_prime is None else alpha_prime
        if not 1 < ap < a:
            raise DomainError("alpha_prime must lie in (1, alpha)")
    tk = _twist_kw(kw)
    cf = charfn_vn(U, obs, t, n, **tk)
    ps = _psi(U, obs, t, psi, **tk)
    k = _kappa(obs)
    table = DiagnosticTable("U")
    for i, ti in enumerate(t):
        for j, nj in enumerate(n):
            pn = power_of_charfn(np.array([1.0 - ps[i]]), float(nj))[0]
            q = abs(cf[i, j] - pn)
            if a < 1:
                env = abs(ti) ** a * k + nj * abs(ti) ** (2 * a) * k**2
            else:
                env = abs(ti) ** ap + nj * ti**2
            table.add(ti, nj, q, env * abs(pn), U.m, 0.0)
    return table


# Q(t) decay and P'(0) ----------------------------------------------------------


@dataclass(frozen=True)
class QDecay:
    norms: np.ndarray
    rate: float
    one_minus_gap: float
    second: float


def q_decay(U: UlamOperator, obs, t: float, n_max: int, floor: float = 1e-12, **kw) -> QDecay:
    """``||Q(t)^n 1||`` for ``n = 1..n_max`` and a log-linear decay rate.

    The rate is fitted on norms above ``floor``; it is 0 when ``Q 1``
    already vanishes.
    """
    sd = leading_eig(U, t, obs, **kw)
    e = twist(U, obs, t, **_twist_kw(kw))
    pi = U.pi
    Q = lambda f: U.A @ (e * f) - sd.lam * sd.zeta * (pi @ (sd.left * f))
    f = np.ones(U.m, dtype=complex)
    norms = np.empty(n_max)
    for k in range(n_max):
        f = Q(f)
        norms[k] = _mu_norm(pi, f)
    ok = norms > floor
    if ok.sum() >= 3:
        nn = np.arange(1, n_max + 1)[ok]
        slope = np.polyfit(nn, np.log(norms[ok]), 1)[0]
        rate = float(math.exp(slope))
    else:
        rate = 0.0
    return QDecay(norms, rate, 1.0 - sd.gap, sd.second)


@dataclass(frozen=True)
class PPrimeReport:
    """Central difference of ``F(t) = int P(t) 1 dmu`` at 0."""

    magnitude: float
    h_fd: float
    precondition_breach: bool
    passed: bool

    def __float__(self):
        return self.magnitude


def p_prime_zero_check(U: UlamOperator, obs, h_fd: float, tol: float = 1e-2, **kw) -> PPrimeReport:
    """``|F(h) - F(-h)| / (2h)`` with ``F(-h) = conj F(h)``.

    The precondition (centered observable, alpha > 1) is checked; when it
    fails the report carries ``precondition_breach`` and ``passed=False``.
    """
    if h_fd <= 0:
        raise DomainError("h_fd must be positive")
    Fp = leading_eig(U, h_fd, obs, **kw).integral_of_projection()
    Fm = leading_eig(U, -h_fd, obs, **kw).integral_of_projection()
    mag = abs(Fp - Fm) / (2 * h_fd)
    centered = obs.alpha > 1 and abs(obs.mean) < 1e-9
    return PPrimeReport(float(mag), float(h_fd), not centered, bool(centered and mag <= tol))


def refinement_check(system: IntervalSystem, obs, t: float, ms=(2**10, 2**11, 2**12), **kw) -> dict:
    """Cauchy-style refinement of ``lam(t)`` over the grids ``ms``."""
    lams = [leading_eig(build_ulam(system, m), t, obs, **kw).lam for m in ms]
    d = [abs(lams[i] - lams[i + 1]) for i in range(len(lams) - 1)]
    return {"m": list(ms), "lam": lams, "diffs": d,
            "ok": all(d[i] < 10 * d[i + 1] or d[i] < 1e-12 for i in range(len(d) - 1))}
