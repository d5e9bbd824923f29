import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from stableld import kernels

needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled backend not built")
ROOT = Path(__file__).resolve().parents[1]


@needs_compiled
def test_backends_agree():
    sys.path.insert(0, str(ROOT / "benchmarks"))
    try:
        from bench_kernels import cases
    finally:
        sys.path.pop(0)
    for name, call in cases(2000, 150, seed=3).items():
        a = call(kernels.compiled_backend)
        b = call(kernels.python_backend)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True), name


@needs_compiled
def test_pareto_two_sided_parity():
    u = np.random.default_rng(0).random((500, 40))
    args = (0.4, 0.2, 2.0, 1 / 0.75, 0.4 * 2.0**0.75, 0.4 * 2.0**0.75, 0.0)
    a = kernels.compiled_backend.pareto_row_sums(u, *args)
    b = kernels.python_backend.pareto_row_sums(u, *args)
    assert np.allclose(a, b, rtol=1e-12)


def test_empty_inputs():
    for be in (kernels.compiled_backend, kernels.python_backend):
        if be is None:
            continue
        assert be.gauss_power_sums(np.empty(0), 5, 0.5, 0.0, 1.0).size == 0
        assert be.doubling_power_sums(np.empty((0, 3), dtype=np.uint64), 5, 0.5, 0.0, 1.0).size == 0


def test_pure_python_switch():
    env = dict(os.environ, STABLELD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from stableld import kernels; print(kernels.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_benchmark_runs(capsys):
    sys.path.insert(0, str(ROOT / "benchmarks"))
    try:
        from bench_kernels import main
    finally:
        sys.path.pop(0)
    rows = main(["--rows", "500", "--n", "20", "--repeat", "1"])
    assert {r["kernel"] for r in rows} == {"pareto_row_sums", "gauss_power_sums", "doubling_power_sums"}
    assert all(r["max_rel_diff"] < 1e-10 for r in rows)
