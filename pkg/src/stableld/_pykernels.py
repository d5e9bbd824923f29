"""Pure numpy versions of the Monte Carlo kernels."""

from __future__ import annotations

import numpy as np

_TWO64 = 2.0**-64
_TWO128 = 2.0**-128


def pareto_row_sums(u, p_r, mid, x_min, inv_alpha, c_r, c_l, shift):
    """Row sums of inverse-survival draws of a constant-ell tail model."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        right = np.maximum((c_r / u) ** inv_alpha, x_min)
        left = -np.maximum((c_l / (1.0 - u)) ** inv_alpha, x_min)
    middle = x_min - 2.0 * x_min * (u - p_r) / mid if mid > 0 else x_min
    x = np.where(u <= p_r, right, np.where(u <= p_r + mid, middle, left))
    return (x - shift).sum(axis=1)


def gauss_power_sums(x0, n, inv_alpha, shift, sign):
    """Ergodic sums of ``sign*(x^-inv_alpha - shift)`` along Gauss-map orbits."""
    x = np.array(x0, dtype=float)
    s = np.zeros_like(x)
    bad = np.zeros(x.shape, dtype=bool)
    for _ in range(n):
        bad |= x <= 0.0
        xs = np.where(bad, 0.5, x)
        s += sign * (xs**-inv_alpha - shift)
        y = 1.0 / xs
        x = y - np.floor(y)
    s[bad] = np.nan
    return s


def _window(words, k, sh):
    if sh == 0:
        return words[:, k]
    return (words[:, k] << np.uint64(sh)) | (words[:, k + 1] >> np.uint64(64 - sh))


def doubling_power_sums(words, n, inv_alpha, shift, sign):
    """Ergodic sums along exact doubling-map orbits given by binary digits."""
    words = np.asarray(words, dtype=np.uint64)
    if n > 0 and words.shape[1] < (n - 1) // 64 + 3:
        raise ValueError("not enough digit words for n steps")
    s = np.zeros(words.shape[0])
    for j in range(n):
        k, sh = divmod(j, 64)
        x = _window(words, k, sh).astype(float) * _TWO64 + _window(words, k + 1, sh).astype(float) * _TWO128
        s += sign * (x**-inv_alpha - shift)
    return s
