import os
import subprocess
import sys

import numpy as np
import pytest

from pnbounds import _kernels

numba_only = pytest.mark.skipif(not hasattr(_kernels, "logistic_newton_numba"), reason="numba not installed")


def _logit_problem(seed, n=500, d=4):
    rng = np.random.default_rng(seed)
    design = np.column_stack([np.ones(n), rng.normal(size=(n, d - 1))])
    beta = rng.normal(size=d)
    y = (rng.random(n) < 1 / (1 + np.exp(-design @ beta))).astype(float)
    return design, y


@numba_only
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("ridge", [0.0, 1e-4])
def test_newton_backends_agree(seed, ridge):
    design, y = _logit_problem(seed)
    args = (design, y, np.zeros(design.shape[1]), ridge, 1e-8, 100, 20, True)
    b_np, it_np, st_np, _ = _kernels.logistic_newton_numpy(*args)
    b_nb, it_nb, st_nb, _ = _kernels.logistic_newton_numba(*args)
    assert st_np == st_nb == _kernels.CONVERGED
    assert it_np == it_nb
    np.testing.assert_allclose(b_nb, b_np, rtol=0, atol=1e-9)


@numba_only
@pytest.mark.parametrize("k", [1, 3, 17])
def test_knn_backends_agree(k):
    rng = np.random.default_rng(k)
    train = rng.integers(0, 3, size=(200, 2)).astype(float)  # many distance ties
    ty = rng.integers(0, 2, size=200).astype(float)
    ev = rng.normal(size=(50, 2))
    np.testing.assert_array_equal(
        _kernels.knn_mean_numba(train, ty, ev, k), _kernels.knn_mean_numpy(train, ty, ev, k)
    )


def test_knn_brute_force():
    rng = np.random.default_rng(3)
    train = rng.normal(size=(40, 3))
    ty = rng.random(40)
    ev = rng.normal(size=(7, 3))
    out = _kernels.knn_mean(train, ty, ev, 5)
    for i, e in enumerate(ev):
        nearest = np.argsort(((train - e) ** 2).sum(axis=1), kind="stable")[:5]
        assert out[i] == pytest.approx(ty[nearest].mean(), abs=1e-14)


def test_env_flag_selects_numpy():
    env = dict(os.environ, PNBOUNDS_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import pnbounds; print(pnbounds.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
