"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``PNBOUNDS_DISABLE_NUMBA=1`` before import to force the numpy versions.
Both variants are always importable under explicit names so they can be
compared against each other (see ``benchmarks/bench_kernels.py``).
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLE_ENV = "PNBOUNDS_DISABLE_NUMBA"

USE_NUMBA = numba is not None and os.environ.get(DISABLE_ENV, "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)

# Newton status codes
CONVERGED = 0
MAX_ITER = 1
DIVERGED = 2

# |linear predictor| beyond which an unpenalized fit is treated as separated
DIVERGENCE_ETA = 35.0


# ---------------------------------------------------------------------------
# penalized logistic log-likelihood, Newton with step halving
# ---------------------------------------------------------------------------


def _softplus_np(eta):
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def _objective_np(design, y, beta, ridge, penalize):
    eta = design @ beta
    ll = np.mean(y * eta - _softplus_np(eta))
    return ll - 0.5 * ridge * np.sum(penalize * beta * beta)


def logistic_newton_numpy(design, y, beta0, ridge, tol, max_iter, max_halvings, check_divergence):
    """Maximize the mean log-likelihood minus ``ridge/2 * |beta[1:]|^2``.

    Returns ``(beta, n_iter, status, max_abs_score)``.
    """
    n, q = design.shape
    penalize = np.ones(q)
    penalize[0] = 0.0
    beta = beta0.copy()
    obj = _objective_np(design, y, beta, ridge, penalize)
    score_max = np.inf
    for it in range(max_iter):
        eta = design @ beta
        prob = 1.0 / (1.0 + np.exp(-eta))
        score = design.T @ (y - prob) / n - ridge * penalize * beta
        score_max = np.max(np.abs(score))
        if score_max < tol:
            return beta, it, CONVERGED, score_max
        w = prob * (1.0 - prob)
        hess = (design.T * w) @ design / n + np.diag(ridge * penalize)
        step = np.linalg.solve(hess, score)
        t = 1.0
        for _ in range(max_halvings):
            cand = beta + t * step
            cand_obj = _objective_np(design, y, cand, ridge, penalize)
            if cand_obj >= obj:
                break
            t *= 0.5
        beta = cand
        obj = cand_obj
        if check_divergence and np.max(np.abs(design @ beta)) > DIVERGENCE_ETA:
            return beta, it + 1, DIVERGED, score_max
    return beta, max_iter, MAX_ITER, score_max


def _knn_mean_numpy(train_v, train_y, eval_v, k):
    out = np.empty(eval_v.shape[0])
    # chunked to bound memory at n_eval * n_train
    chunk = max(1, 2_000_000 // max(train_v.shape[0], 1))
    for start in range(0, eval_v.shape[0], chunk):
        block = eval_v[start : start + chunk]
        diff = block[:, None, :] - train_v[None, :, :]
        dist = np.zeros((block.shape[0], train_v.shape[0]))
        for j in range(train_v.shape[1]):
            dist += diff[:, :, j] * diff[:, :, j]
        order = np.argsort(dist, axis=1, kind="mergesort")[:, :k]
        out[start : start + chunk] = train_y[order].mean(axis=1)
    return out


def knn_mean_numpy(train_v, train_y, eval_v, k):
    """Mean of ``train_y`` over the ``k`` nearest training rows (squared Euclidean).

    Ties in distance keep the lower training index (stable sort).
    """
    return _knn_mean_numpy(train_v, train_y, eval_v, k)


if numba is not None:

    @numba.njit(cache=True)
    def _objective_nb(design, y, beta, ridge):
        n, q = design.shape
        total = 0.0
        for i in range(n):
            eta = 0.0
            for j in range(q):
                eta += design[i, j] * beta[j]
            sp = max(eta, 0.0) + np.log1p(np.exp(-abs(eta)))
            total += y[i] * eta - sp
        pen = 0.0
        for j in range(1, q):
            pen += beta[j] * beta[j]
        return total / n - 0.5 * ridge * pen

    @numba.njit(cache=True)
    def logistic_newton_numba(design, y, beta0, ridge, tol, max_iter, max_halvings, check_divergence):
        n, q = design.shape
        beta = beta0.copy()
        obj = _objective_nb(design, y, beta, ridge)
        score = np.empty(q)
        hess = np.empty((q, q))
        score_max = np.inf
        for it in range(max_iter):
            score[:] = 0.0
            hess[:, :] = 0.0
            for i in range(n):
                eta = 0.0
                for j in range(q):
                    eta += design[i, j] * beta[j]
                prob = 1.0 / (1.0 + np.exp(-eta))
                r = y[i] - prob
                w = prob * (1.0 - prob)
                for j in range(q):
                    dij = design[i, j]
                    score[j] += dij * r
                    wd = w * dij
                    for l in range(j + 1):
                        hess[j, l] += wd * design[i, l]
            for j in range(q):
                score[j] /= n
                for l in range(j + 1):
                    hess[j, l] /= n
                    hess[l, j] = hess[j, l]
            for j in range(1, q):
                score[j] -= ridge * beta[j]
                hess[j, j] += ridge
            score_max = np.max(np.abs(score))
            if score_max < tol:
                return beta, it, CONVERGED, score_max
            step = np.linalg.solve(hess, score)
            t = 1.0
            cand = beta + step
            cand_obj = obj
            for _ in range(max_halvings):
                cand = beta + t * step
                cand_obj = _objective_nb(design, y, cand, ridge)
                if cand_obj >= obj:
                    break
                t *= 0.5
            beta = cand
            obj = cand_obj
            if check_divergence:
                worst = 0.0
                for i in range(n):
                    eta = 0.0
                    for j in range(q):
                        eta += design[i, j] * beta[j]
                    worst = max(worst, abs(eta))
                if worst > DIVERGENCE_ETA:
                    return beta, it + 1, DIVERGED, score_max
        return beta, max_iter, MAX_ITER, score_max

    @numba.njit(cache=True)
    def knn_mean_numba(train_v, train_y, eval_v, k):
        m = eval_v.shape[0]
        n, d = train_v.shape
        out = np.empty(m)
        dist = np.empty(n)
        for a in range(m):
            for i in range(n):
                s = 0.0
                for j in range(d):
                    diff = eval_v[a, j] - train_v[i, j]
                    s += diff * diff
                dist[i] = s
            order = np.argsort(dist, kind="mergesort")
            acc = 0.0
            for i in range(k):
                acc += train_y[order[i]]
            out[a] = acc / k
        return out

else:  # pragma: no cover
    logistic_newton_numba = None
    knn_mean_numba = None


if USE_NUMBA:
    logistic_newton = logistic_newton_numba
    knn_mean = knn_mean_numba
else:
    logistic_newton = logistic_newton_numpy
    knn_mean = knn_mean_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
