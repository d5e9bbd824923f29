import math

import numpy as np
import pytest
from scipy import stats

from stableld.errors import InsufficientSamples
from stableld.mc import TailEstimate, check_gate, run_sharded, shard_sizes, wilson_interval


def test_wilson_against_formula():
    lo, hi = wilson_interval(30, 1000)
    z = stats.norm.ppf(0.995)
    # statsmodels-style closed form written out independently
    p, n = 0.03, 1000
    c = (p + z * z / (2 * n)) / (1 + z * z / n)
    h = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert (lo, hi) == pytest.approx((c - h, c + h), rel=1e-12)


def test_wilson_zero_hits():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.1


def test_shard_sizes():
    assert shard_sizes(10, 3) == [4, 3, 3]
    assert sum(shard_sizes(10**7 + 1, 7)) == 10**7 + 1


def test_gate():
    assert check_gate(10**6, 1e-3) == pytest.approx(1000)
    with pytest.raises(InsufficientSamples) as exc:
        check_gate(1000, 1e-3)
    assert exc.value.required_samples == 100000


def test_sharding_independent_of_workers():
    def fn(rng, k):
        return int(np.count_nonzero(rng.random(k) < 0.1)), k

    a = run_sharded(5, 100000, 4, fn)
    b = run_sharded(5, 100000, 4, fn, workers=4)
    assert a == b and a[1] == 100000


def test_tail_estimate_half_width():
    est = TailEstimate.from_counts(50, 10**4)
    assert est.half_width == pytest.approx(0.5 * (est.ci_hi - est.ci_lo))
    assert est.ci_lo < est.p_hat < est.ci_hi
