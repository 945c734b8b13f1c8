"""Coverage/width study on a two-covariate randomized-experiment design.

Design: ``V1, V2 ~ U(-1, 1)`` independent, ``X ~ Bernoulli(0.5)``,
``pi(x, V) = expit(x - V1 + 2 V2 + 5 x V1 - 5 x V2)``. The joint law of the
potential outcomes mixes the two extreme admissible couplings with weight
``lambda`` so that the true probability of necessity is ``lambda U + (1 - lambda) L``
while the observed-data law does not depend on ``lambda``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .bounds import crossfit_bounds, pt_bounds
from .data import DataError, Dataset
from .intervals import ci1, ci2, ci3, ci4, one_sided
from .nuisance import fit_marginals

STUDY_METHODS = ("CI1", "CI2", "CI3", "CI4", "ONE_SIDED_LOWER", "ONE_SIDED_UPPER")
TABLE1_METHODS = ("CI1", "CI2", "CI3", "CI4")
MAX_FAILURE_RATE = 0.01
QUADRATURE_NODES = 400


class StudyAbortedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n: int = 500
    lam: float = 0.0
    reps: int = 500
    k_folds: int = 5
    learner: str = "logistic-interaction"
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1]; got {self.lam}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 2 * self.k_folds:
            raise ValueError(f"n={self.n} too small for {self.k_folds} folds")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def arm_probabilities(v):
    """``(pi(1, v), pi(0, v))`` for rows ``v = (V1, V2)``."""
    v = np.asarray(v, dtype=float)
    v1, v2 = v[..., 0], v[..., 1]
    return expit(1.0 + 4.0 * v1 - 3.0 * v2), expit(-v1 + 2.0 * v2)


def cell_probabilities(pi1, pi0, lam):
    """Joint potential-outcome cells keyed by ``(Y(1), Y(0))``.

    Returns ``(p10, p11, p01, p00)``; ``p10 = P{Y(1)=1, Y(0)=0 | V}`` is the
    lambda-mixture of the Frechet extremes and the rest follow from the marginals.
    """
    q = lam * np.minimum(pi1, 1.0 - pi0) + (1.0 - lam) * np.maximum(0.0, pi1 - pi0)
    return q, pi1 - q, pi0 - pi1 + q, 1.0 - pi0 - q


def dgp_sample(n: int, lam: float, seed) -> Dataset:
    """Draw ``n`` observations ``(X, Y, V)``; ``seed`` is an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=(n, 2))
    x = (rng.random(n) < 0.5).astype(np.int8)
    pi1, pi0 = arm_probabilities(v)
    p10, p11, p01, _ = cell_probabilities(pi1, pi0, lam)
    u = rng.random(n)
    # cells ordered 10, 11, 01, 00
    y1 = (u < p10 + p11).astype(np.int8)
    y0 = ((u >= p10) & (u < p10 + p11 + p01)).astype(np.int8)
    y = np.where(x == 1, y1, y0)
    return Dataset(x, y, v, ("v1", "v2"))


@dataclass(frozen=True)
class OracleTruth:
    L_true: float
    U_true: float
    pn_true: float
    mu11: float
    mu10: float


@lru_cache(maxsize=None)
def _quadrature_functionals(nodes=QUADRATURE_NODES):
    t, w = np.polynomial.legendre.leggauss(nodes)
    g1, g2 = np.meshgrid(t, t, indexing="ij")
    weights = np.outer(w, w) / 4.0  # uniform density on (-1, 1)^2
    pi1, pi0 = arm_probabilities(np.stack([g1, g2], axis=-1))
    mu11 = float(np.sum(weights * pi1))
    mu10 = float(np.sum(weights * pi0))
    delta_l = float(np.sum(weights * np.maximum(0.0, pi1 - pi0)))
    delta_u = float(np.sum(weights * np.maximum(0.0, pi1 + pi0 - 1.0)))
    return mu11, mu10, delta_l, delta_u


def oracle_truth(lam: float, nodes=QUADRATURE_NODES) -> OracleTruth:
    """True bounds by tensor Gauss-Legendre quadrature over the covariate square."""
    mu11, mu10, delta_l, delta_u = _quadrature_functionals(nodes)
    lower = delta_l / mu11
    upper = 1.0 - delta_u / mu11
    return OracleTruth(lower, upper, lam * upper + (1.0 - lam) * lower, mu11, mu10)


def oracle_truth_mc(draws=10_000_000, seed=12345, chunk=1_000_000):
    """Monte Carlo estimates of ``(L, U, mu11, mu10)`` for cross-checking quadrature."""
    rng = np.random.default_rng(seed)
    acc = np.zeros(4)
    left = draws
    while left > 0:
        m = min(chunk, left)
        pi1, pi0 = arm_probabilities(rng.uniform(-1.0, 1.0, size=(m, 2)))
        acc += [pi1.sum(), pi0.sum(), np.maximum(0.0, pi1 - pi0).sum(), np.maximum(0.0, pi1 + pi0 - 1.0).sum()]
        left -= m
    mu11, mu10, delta_l, delta_u = acc / draws
    return delta_l / mu11, 1.0 - delta_u / mu11, mu11, mu10


@dataclass(frozen=True)
class StudyRow:
    method: str
    average_width: float
    coverage_rate: float
    reps: int
    n: int
    lam: float


@dataclass(frozen=True, eq=False)
class StudyReport:
    config: SimConfig
    truth: OracleTruth
    rows: tuple
    failures: int
    l_hat: np.ndarray = field(repr=False)
    u_hat: np.ndarray = field(repr=False)
    sigma_l: np.ndarray = field(repr=False)
    sigma_u: np.ndarray = field(repr=False)

    def row(self, method) -> StudyRow:
        return next(r for r in self.rows if r.method == method)

    def to_dict(self):
        return {
            "config": asdict(self.config),
            "truth": asdict(self.truth),
            "failures": self.failures,
            "rows": [asdict(r) for r in self.rows],
            "bias_lower": float(np.mean(self.l_hat) - self.truth.L_true) if self.l_hat.size else None,
            "bias_upper": float(np.mean(self.u_hat) - self.truth.U_true) if self.u_hat.size else None,
        }


def _one_rep(args):
    config, rep = args
    ss = np.random.SeedSequence(config.seed + rep)
    data_seq, fold_seq = ss.spawn(2)
    data = dgp_sample(config.n, config.lam, np.random.default_rng(data_seq))
    fold_seed = int(fold_seq.generate_state(1)[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            p, mu11, mu10 = fit_marginals(data)
            pt = pt_bounds(p, mu11, mu10, data.n)
            lower, upper = crossfit_bounds(data, config.k_folds, config.learner, fold_seed)
        except (DataError, RuntimeError, np.linalg.LinAlgError):
            return None
    a = config.alpha
    intervals = [
        ci1(mu11, mu10, p, data.n, a),
        ci2(lower, upper, a),
        ci3(lower, upper, a),
        ci4(pt, data.n, a),
        one_sided(lower, "lower", a),
        one_sided(upper, "upper", a),
    ]
    bounds = (lower.value, upper.value, lower.sigma_hat, upper.sigma_hat)
    return [(iv.lower, iv.upper) for iv in intervals], bounds


def run_study(config: SimConfig, workers: int = 1) -> StudyReport:
    """Replicate the design ``config.reps`` times and summarize width and coverage.

    Replication ``r`` is seeded from ``config.seed + r``; results are reduced in
    replication order so the report does not depend on ``workers``.
    """
    truth = oracle_truth(config.lam)
    tasks = [(config, r) for r in range(config.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_rep, tasks, chunksize=max(1, config.reps // (4 * workers))))
    else:
        results = [_one_rep(t) for t in tasks]
    ok = [r for r in results if r is not None]
    failures = len(results) - len(ok)
    if failures > MAX_FAILURE_RATE * config.reps:
        raise StudyAbortedError(f"{failures} of {config.reps} replications failed")
    ends = np.array([r[0] for r in ok]).reshape(len(ok), len(STUDY_METHODS), 2)
    est = np.array([r[1] for r in ok]).reshape(len(ok), 4)
    pn = truth.pn_true
    rows = []
    for j, method in enumerate(STUDY_METHODS):
        lo, hi = ends[:, j, 0], ends[:, j, 1]
        rows.append(
            StudyRow(
                method,
                float(np.mean(hi - lo)) if len(ok) else math.nan,
                float(np.mean((lo <= pn) & (pn <= hi))) if len(ok) else math.nan,
                len(ok),
                config.n,
                config.lam,
            )
        )
    return StudyReport(config, truth, tuple(rows), failures, est[:, 0], est[:, 1], est[:, 2], est[:, 3])


def table1_csv(reports) -> str:
    """Render reports as CSV with one line per (lambda, n) and AW/CR column pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["lambda", "n", "reps", "failures"]
    for m in TABLE1_METHODS:
        header += [f"{m}_AW", f"{m}_CR"]
    writer.writerow(header)
    for rep in reports:
        line = [rep.config.lam, rep.config.n, rep.config.reps, rep.failures]
        for m in TABLE1_METHODS:
            r = rep.row(m)
            line += [f"{r.average_width:.3f}", f"{r.coverage_rate:.3f}"]
        writer.writerow(line)
    return buf.getvalue()


def reports_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
