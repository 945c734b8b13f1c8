"""Nuisance estimation: arm marginals, outcome regressions pi(x, v) and plug-in deltas."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import DataError, Dataset

CLAMP_EPS = 1e-6
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 100
NEWTON_MAX_HALVINGS = 20
RIDGE = 1e-4


class ConvergenceError(RuntimeError):
    """Newton iterations did not reach the score tolerance."""


class SeparationWarning(RuntimeWarning):
    """The unpenalized likelihood diverged; a ridge-stabilized fit was used instead."""


def fit_marginals(data: Dataset):
    """Return ``(p_hat, mu11_hat, mu10_hat)``: P(X=1), P(Y=1|X=1), P(Y=1|X=0)."""
    x = data.x.astype(bool)
    n1 = int(x.sum())
    if n1 == 0 or n1 == data.n:
        raise DataError("both treatment arms must be nonempty (positivity)")
    p = n1 / data.n
    mu11 = float(data.y[x].mean())
    mu10 = float(data.y[~x].mean())
    if mu11 == 0.0:
        raise DataError("no treated unit with y=1; probability of necessity is undefined")
    return p, mu11, mu10


# ---------------------------------------------------------------------------
# outcome models
# ---------------------------------------------------------------------------


class OutcomeModel:
    """Fitted surface ``pi(x, v) = P(Y=1 | X=x, V=v)``, clamped to ``[eps, 1-eps]``."""

    learner_tag = "base"

    def _raw(self, x, v):
        raise NotImplementedError

    def predict(self, x, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, self.covariate_dim) if self.covariate_dim else np.empty((1, 0))
        x = np.broadcast_to(np.asarray(x, dtype=float), (v.shape[0],))
        return np.clip(self._raw(x, v), CLAMP_EPS, 1.0 - CLAMP_EPS)

    def predict_arms(self, v):
        """``(pi(1, v), pi(0, v))`` for each row of ``v``."""
        return self.predict(1.0, v), self.predict(0.0, v)

    def to_dict(self) -> dict:
        return {"learner": self.learner_tag}


def _design(x, v, interaction):
    cols = [np.ones_like(x), x, v]
    if interaction:
        cols.append(x[:, None] * v)
    return np.column_stack(cols)


class LogisticModel(OutcomeModel):
    def __init__(self, beta, interaction, covariate_dim, n_iter, separation, score_max):
        self.beta = beta
        self.interaction = interaction
        self.covariate_dim = covariate_dim
        self.n_iter = n_iter
        self.separation = separation
        self.score_max = score_max
        self.learner_tag = "logistic-interaction" if interaction else "logistic-main"

    def _raw(self, x, v):
        eta = _design(x, v, self.interaction) @ self.beta
        return 1.0 / (1.0 + np.exp(-eta))

    def to_dict(self):
        return {
            "learner": self.learner_tag,
            "coefficients": [float(b) for b in self.beta],
            "iterations": int(self.n_iter),
            "separation": bool(self.separation),
        }


def fit_logistic(data: Dataset, interaction=True) -> LogisticModel:
    """Maximum likelihood logistic regression of y on (1, x, v[, x*v]).

    Damped Newton; if the likelihood diverges (separation) or the plain fit
    stalls, refits with a 1e-4 ridge on all non-intercept coefficients.
    """
    x = data.x.astype(float)
    y = data.y.astype(float)
    design = np.ascontiguousarray(_design(x, data.v, interaction))
    beta0 = np.zeros(design.shape[1])
    try:
        beta, n_iter, status, score = _kernels.logistic_newton(
            design, y, beta0, 0.0, NEWTON_TOL, NEWTON_MAX_ITER, NEWTON_MAX_HALVINGS, True
        )
    except np.linalg.LinAlgError:
        status = _kernels.DIVERGED
    separation = status != _kernels.CONVERGED
    if separation:
        warnings.warn(
            "logistic likelihood did not converge (separation); using ridge-stabilized fit",
            SeparationWarning,
            stacklevel=2,
        )
        beta, n_iter, status, score = _kernels.logistic_newton(
            design, y, beta0, RIDGE, NEWTON_TOL, NEWTON_MAX_ITER, NEWTON_MAX_HALVINGS, False
        )
        if status != _kernels.CONVERGED:
            raise ConvergenceError(
                f"ridge-stabilized Newton failed after {n_iter} iterations (max |score| = {score:.3g})"
            )
    return LogisticModel(beta, interaction, data.covariate_dim, n_iter, separation, score)


class ArmMeanModel(OutcomeModel):
    learner_tag = "arm-mean"

    def __init__(self, mean1, mean0, covariate_dim):
        self.mean1 = mean1
        self.mean0 = mean0
        self.covariate_dim = covariate_dim

    def _raw(self, x, v):
        return np.where(x == 1, self.mean1, self.mean0)

    def to_dict(self):
        return {"learner": self.learner_tag, "mean1": self.mean1, "mean0": self.mean0}


def fit_arm_mean(data: Dataset) -> ArmMeanModel:
    x = data.x.astype(bool)
    if x.all() or not x.any():
        raise DataError("both treatment arms must be nonempty to fit arm means")
    return ArmMeanModel(float(data.y[x].mean()), float(data.y[~x].mean()), data.covariate_dim)


def local_average_k(n: int) -> int:
    return math.ceil(n**0.7 / 2)


class LocalAverageModel(OutcomeModel):
    """Within-arm k-nearest-neighbour mean on standardized covariates."""

    learner_tag = "local-average"

    def __init__(self, center, scale, arms, k):
        self.center = center
        self.scale = scale
        self.arms = arms  # {0: (v_std, y), 1: (v_std, y)}
        self.k = k
        self.covariate_dim = center.size

    def _raw(self, x, v):
        out = np.empty(x.size)
        z = np.ascontiguousarray((v - self.center) / self.scale)
        for arm in (0, 1):
            rows = np.flatnonzero(x == arm)
            if rows.size == 0:
                continue
            train_v, train_y = self.arms[arm]
            k = min(self.k, train_y.size)
            out[rows] = _kernels.knn_mean(train_v, train_y, np.ascontiguousarray(z[rows]), k)
        return out

    def to_dict(self):
        return {"learner": self.learner_tag, "k": self.k}


def fit_local_average(data: Dataset, k=None, n_total=None) -> LocalAverageModel:
    """Fit per-arm nearest-neighbour means.

    ``k`` defaults to ``ceil(N**0.7 / 2)`` with ``N = n_total`` (the full sample
    size when fitting inside cross-fitting) or ``len(data)``.
    """
    x = data.x.astype(bool)
    if x.all() or not x.any():
        raise DataError("both treatment arms must be nonempty to fit local averages")
    center = data.v.mean(axis=0)
    scale = data.v.std(axis=0)
    scale[scale == 0] = 1.0
    z = (data.v - center) / scale
    arms = {
        arm: (np.ascontiguousarray(z[x == arm]), data.y[x == arm].astype(float)) for arm in (0, 1)
    }
    return LocalAverageModel(center, scale, arms, k or local_average_k(n_total or data.n))


class StratumMeanModel(OutcomeModel):
    """Saturated model for discrete covariates: per-(arm, covariate value) mean.

    Unseen strata fall back to the arm mean.
    """

    learner_tag = "stratum-mean"

    def __init__(self, table, arm_means, covariate_dim):
        self.table = table
        self.arm_means = arm_means
        self.covariate_dim = covariate_dim

    def _raw(self, x, v):
        keys, inverse = np.unique(np.column_stack([x, v]), axis=0, return_inverse=True)
        values = np.array(
            [self.table.get((int(row[0]), tuple(row[1:].tolist())), self.arm_means[int(row[0])]) for row in keys]
        )
        return values[inverse.ravel()]

    def to_dict(self):
        return {"learner": self.learner_tag, "strata": len(self.table)}


def fit_stratum_mean(data: Dataset) -> StratumMeanModel:
    arm_model = fit_arm_mean(data)
    keys = np.column_stack([data.x, data.v])
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.bincount(inverse, weights=data.y.astype(float))
    counts = np.bincount(inverse)
    table = {
        (int(row[0]), tuple(row[1:].tolist())): s / c for row, s, c in zip(uniq, sums, counts)
    }
    return StratumMeanModel(table, {1: arm_model.mean1, 0: arm_model.mean0}, data.covariate_dim)


LEARNERS = {
    "logistic-interaction": lambda data, n_total: fit_logistic(data, interaction=True),
    "logistic-main": lambda data, n_total: fit_logistic(data, interaction=False),
    "arm-mean": lambda data, n_total: fit_arm_mean(data),
    "local-average": lambda data, n_total: fit_local_average(data, n_total=n_total),
    "stratum-mean": lambda data, n_total: fit_stratum_mean(data),
}


def fit_outcome_model(data: Dataset, learner: str, n_total=None) -> OutcomeModel:
    """Fit the learner named ``learner`` on ``data``.

    ``n_total`` is the full sample size when ``data`` is a cross-fitting
    auxiliary sample; only size-dependent learners use it.
    """
    try:
        fit = LEARNERS[learner]
    except KeyError:
        raise ValueError(f"unknown learner {learner!r}; choose from {sorted(LEARNERS)}") from None
    return fit(data, n_total)


# ---------------------------------------------------------------------------
# decision rules and plug-in deltas
# ---------------------------------------------------------------------------


def decision_rules(pi1, pi0):
    """Strict-inequality rules ``d_L = 1{pi1 > pi0}`` and ``d_U = 1{pi1 > 1 - pi0}``."""
    return (pi1 > pi0).astype(float), (pi1 > 1.0 - pi0).astype(float)


def plug_in_deltas(model: OutcomeModel, eval_points):
    """Average of ``d_L (pi1 - pi0)`` and ``d_U (pi1 + pi0 - 1)`` over ``eval_points``."""
    eval_points = np.asarray(eval_points, dtype=float)
    if eval_points.shape[0] == 0:
        raise ValueError("eval_points must be nonempty")
    pi1, pi0 = model.predict_arms(eval_points)
    d_l, d_u = decision_rules(pi1, pi0)
    return float(np.mean(d_l * (pi1 - pi0))), float(np.mean(d_u * (pi1 + pi0 - 1.0)))


@dataclass(frozen=True)
class NuisanceFit:
    p_hat: float
    mu11_hat: float
    model: OutcomeModel
    delta_l_hat: float
    delta_u_hat: float

    def d_l(self, v):
        pi1, pi0 = self.model.predict_arms(v)
        return decision_rules(pi1, pi0)[0]

    def d_u(self, v):
        pi1, pi0 = self.model.predict_arms(v)
        return decision_rules(pi1, pi0)[1]


def fit_nuisance(aux: Dataset, learner: str, n_total=None) -> NuisanceFit:
    """Fit every nuisance quantity on the auxiliary sample ``aux``."""
    n1 = int(aux.x.sum())
    if n1 == 0 or n1 == aux.n:
        raise DataError("auxiliary sample lacks a treatment arm")
    p = n1 / aux.n
    mu11 = float(np.mean(aux.x * aux.y)) / float(np.mean(aux.x))
    if mu11 == 0.0:
        raise DataError("auxiliary sample has no treated unit with y=1")
    model = fit_outcome_model(aux, learner, n_total)
    delta_l, delta_u = plug_in_deltas(model, aux.v)
    return NuisanceFit(p, mu11, model, delta_l, delta_u)
