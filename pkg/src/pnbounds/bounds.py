"""Bounds on the probability of necessity.

Two estimators live here: the closed-form no-covariate bounds ``[L_PT, U_PT]``
with delta-method variances, and the covariate-assisted bounds ``[L, U]``
estimated by cross-fitting their efficient influence functions.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, Dataset, make_folds, make_stratified_folds
from .nuisance import NuisanceFit, decision_rules, fit_marginals, fit_nuisance


class DegenerateVarianceWarning(RuntimeWarning):
    pass


class CrossingBoundsWarning(RuntimeWarning):
    """Estimated lower bound exceeds estimated upper bound."""


# ---------------------------------------------------------------------------
# no-covariate bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PtBounds:
    """Plug-in ``L0 = (mu11 - mu10)/mu11`` and ``U0 = (1 - mu10)/mu11``.

    ``sigma_l0``/``sigma_u0`` are asymptotic SDs of ``sqrt(n) * (estimate - truth)``;
    ``l_pt``/``u_pt`` are the sharp no-covariate bounds ``max(0, l0)``, ``min(1, u0)``.
    """

    l0: float
    u0: float
    l_pt: float
    u_pt: float
    sigma_l0: float
    sigma_u0: float
    n: int


def pt_bounds(p_hat, mu11_hat, mu10_hat, n) -> PtBounds:
    if mu11_hat <= 0:
        raise DataError("mu11 must be positive")
    if not 0 < p_hat < 1:
        raise DataError("p must lie strictly inside (0, 1)")
    m11, m10, p = mu11_hat, mu10_hat, p_hat
    l0 = (m11 - m10) / m11
    u0 = (1.0 - m10) / m11
    shared = m10 * (1.0 - m10) / (m11**2 * (1.0 - p))
    var_l0 = m10**2 * (1.0 - m11) / (m11**3 * p) + shared
    var_u0 = (1.0 - m10) ** 2 * (1.0 - m11) / (m11**3 * p) + shared
    if not 0 < m10 < 1:
        warnings.warn(
            f"mu10 = {m10} on the boundary; variance estimates are degenerate",
            DegenerateVarianceWarning,
            stacklevel=2,
        )
    return PtBounds(l0, u0, max(0.0, l0), min(1.0, u0), float(np.sqrt(var_l0)), float(np.sqrt(var_u0)), int(n))


def pt_bounds_from_data(data: Dataset) -> PtBounds:
    p, mu11, mu10 = fit_marginals(data)
    return pt_bounds(p, mu11, mu10, data.n)


# ---------------------------------------------------------------------------
# efficient influence functions
# ---------------------------------------------------------------------------


def _psi(x, y, pi1, pi0, d_l, d_u, p, mu11, delta_l, delta_u):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r1 = x * (y - pi1) / p
    r0 = (1.0 - x) * (y - pi0) / (1.0 - p)
    mu_correction = r1 + pi1 - mu11
    psi_l = d_l / mu11 * (pi1 - pi0 + r1 - r0) - delta_l / mu11**2 * mu_correction
    psi_u = 1.0 - d_u / mu11 * (pi1 + pi0 - 1.0 + r1 + r0) + delta_u / mu11**2 * mu_correction
    return psi_l, psi_u


def psi_values(x, y, v, fit: NuisanceFit):
    """Evaluate ``(psi_L, psi_U)`` at each observation under nuisance ``fit``."""
    pi1, pi0 = fit.model.predict_arms(v)
    d_l, d_u = decision_rules(pi1, pi0)
    return _psi(x, y, pi1, pi0, d_l, d_u, fit.p_hat, fit.mu11_hat, fit.delta_l_hat, fit.delta_u_hat)


def psi_L(x, y, v, fit: NuisanceFit):
    return psi_values(x, y, v, fit)[0]


def psi_U(x, y, v, fit: NuisanceFit):
    return psi_values(x, y, v, fit)[1]


# ---------------------------------------------------------------------------
# cross-fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundEstimate:
    which: str  # "lower" | "upper"
    value: float
    sigma_hat: float
    if_values: np.ndarray = field(repr=False)
    fold_estimates: np.ndarray = field(repr=False)
    n: int = 0
    k_folds: int = 0
    learner_tag: str = ""
    seed: int | None = None

    @property
    def se(self) -> float:
        return self.sigma_hat / np.sqrt(self.n)

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "value": float(self.value),
            "sigma_hat": float(self.sigma_hat),
            "n": int(self.n),
            "k_folds": int(self.k_folds),
            "learner_tag": self.learner_tag,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True, eq=False)
class CrossFitResult:
    lower: BoundEstimate
    upper: BoundEstimate
    folds: np.ndarray = field(repr=False)
    psi_l: np.ndarray = field(repr=False)
    psi_u: np.ndarray = field(repr=False)
    fits: tuple = field(repr=False, default=())

    @property
    def crossed(self) -> bool:
        return self.lower.value > self.upper.value

    def __iter__(self):
        yield self.lower
        yield self.upper


def _sigma_hat(psi, folds, k, pooled):
    return float(np.sqrt(np.mean([np.mean((psi[folds == j] - pooled) ** 2) for j in range(k)])))


def crossfit_bounds(data: Dataset, k: int = 5, learner: str = "logistic-interaction", seed: int = 0,
                    stratify: bool = True) -> CrossFitResult:
    """Cross-fitted efficient estimators of the covariate-assisted bounds.

    Each fold's nuisances are fit on the other folds; the per-fold estimate is
    the mean of psi over the fold and the final estimate averages the folds.
    Folds are stratified by treatment arm unless ``stratify=False``.
    Unpacks as ``lower, upper = crossfit_bounds(...)``.
    """
    data.check_identifiable()
    plan = make_stratified_folds(data.x, k, seed) if stratify else make_folds(data.n, k, seed)
    folds = plan.assignments
    psi_l = np.empty(data.n)
    psi_u = np.empty(data.n)
    est_l = np.empty(k)
    est_u = np.empty(k)
    fits = []
    for j in range(k):
        main = plan.indices(j)
        try:
            fit = fit_nuisance(data.subset(plan.complement(j)), learner, data.n)
        except (DataError, RuntimeError) as exc:
            raise type(exc)(f"fold {j}: {exc}") from exc
        fits.append(fit)
        pl, pu = psi_values(data.x[main], data.y[main], data.v[main], fit)
        psi_l[main] = pl
        psi_u[main] = pu
        est_l[j] = pl.mean()
        est_u[j] = pu.mean()
    l_hat = float(np.mean(est_l))
    u_hat = float(np.mean(est_u))
    tag = fits[0].model.learner_tag
    lower = BoundEstimate("lower", l_hat, _sigma_hat(psi_l, folds, k, l_hat), psi_l - l_hat, est_l,
                          data.n, k, tag, seed)
    upper = BoundEstimate("upper", u_hat, _sigma_hat(psi_u, folds, k, u_hat), psi_u - u_hat, est_u,
                          data.n, k, tag, seed)
    if l_hat > u_hat:
        warnings.warn(f"estimated lower bound {l_hat:.4f} exceeds upper bound {u_hat:.4f}",
                      CrossingBoundsWarning, stacklevel=2)
    return CrossFitResult(lower, upper, folds, psi_l, psi_u, tuple(fits))


def ordered_values(lower: BoundEstimate, upper: BoundEstimate):
    """``(L, U)`` with a crossed pair collapsed to its midpoint."""
    if lower.value <= upper.value:
        return lower.value, upper.value
    mid = 0.5 * (lower.value + upper.value)
    return mid, mid


# ---------------------------------------------------------------------------
# exact bounds for a known finite covariate law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteLaw:
    """Covariate strata with probabilities and arm-specific success probabilities."""

    weights: np.ndarray
    pi1: np.ndarray
    pi0: np.ndarray

    def __post_init__(self):
        for name in ("weights", "pi1", "pi0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not np.isclose(self.weights.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("stratum weights must sum to 1")

    @property
    def mu11(self):
        return float(self.weights @ self.pi1)

    @property
    def mu10(self):
        return float(self.weights @ self.pi0)


def exact_bounds(law: DiscreteLaw):
    """``(L, U, delta_L, delta_U)`` by summing over the strata of ``law``."""
    delta_l = float(law.weights @ np.maximum(0.0, law.pi1 - law.pi0))
    delta_u = float(law.weights @ np.maximum(0.0, law.pi1 + law.pi0 - 1.0))
    return delta_l / law.mu11, 1.0 - delta_u / law.mu11, delta_l, delta_u
