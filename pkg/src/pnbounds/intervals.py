"""Confidence intervals for the probability of necessity.

Every interval is intersected with [0, 1]. ``n`` is the sample size used to
scale the asymptotic SDs (``se = sigma / sqrt(n)``).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .bounds import BoundEstimate, PtBounds, ordered_values, pt_bounds

METHODS = ("CI0", "CI1", "CI2", "CI3", "CI4", "ONE_SIDED_LOWER", "ONE_SIDED_UPPER")
CI4_CASES = ("both_interior", "l_pos_u_free", "l_free_u_interior", "vacuous")

BISECTION_TOL = 1e-12
BRACKET_PAD = 1e-8


def normal_cdf(z):
    return ndtr(z)


def normal_quantile(u):
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= 1)) or np.any(np.isnan(u_arr)):
        raise ValueError("normal_quantile requires 0 < u < 1")
    return ndtri(u)


@dataclass(frozen=True)
class IntervalResult:
    method: str
    lower: float
    upper: float
    alpha: float
    critical_value: float
    case_tag: str | None = None

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper

    def to_dict(self):
        return asdict(self)


def _clip01(lo, hi):
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    return lo, hi


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1); got {alpha}")


def im_critical_value(l_hat, u_hat, sigma_l, sigma_u, n, alpha=0.05):
    """Solve ``Phi(C + sqrt(n) * gap / max(sigma_l, sigma_u)) - Phi(-C) = 1 - alpha`` for C.

    ``gap = max(0, u_hat - l_hat)``. The root lies in
    ``[Phi^-1(1 - alpha), Phi^-1(1 - alpha/2)]``; found by bisection.
    """
    _check_alpha(alpha)
    sigma_max = max(sigma_l, sigma_u)
    if not sigma_max > 0:
        raise ValueError("at least one of sigma_l, sigma_u must be positive")
    shift = math.sqrt(n) * max(0.0, u_hat - l_hat) / sigma_max
    target = 1.0 - alpha

    def excess(c):
        return float(ndtr(c + shift) - ndtr(-c)) - target

    lo = float(ndtri(1.0 - alpha)) - BRACKET_PAD
    hi = float(ndtri(1.0 - alpha / 2.0)) + BRACKET_PAD
    # excess is increasing in c
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _interval(method, lo, hi, alpha, crit, case_tag=None):
    lo, hi = _clip01(lo, hi)
    return IntervalResult(method, lo, hi, alpha, float(crit), case_tag)


def ci1(mu11_hat, mu10_hat, p_hat, n, alpha=0.05):
    """Wald interval for ``1 - mu10/mu11``; valid only under monotonicity."""
    _check_alpha(alpha)
    pt = pt_bounds(p_hat, mu11_hat, mu10_hat, n)
    z = float(ndtri(1.0 - alpha / 2.0))
    half = z * pt.sigma_l0 / math.sqrt(n)
    return _interval("CI1", pt.l0 - half, pt.l0 + half, alpha, z)


def ci2(lower: BoundEstimate, upper: BoundEstimate, alpha=0.05):
    """Two-sided interval for the identified set ``[L, U]``."""
    _check_alpha(alpha)
    l_hat, u_hat = ordered_values(lower, upper)
    z = float(ndtri(1.0 - alpha / 2.0))
    return _interval(
        "CI2", l_hat - z * lower.se, u_hat + z * upper.se, alpha, z
    )


def ci3(lower: BoundEstimate, upper: BoundEstimate, alpha=0.05):
    """Imbens-Manski interval for the parameter itself."""
    _check_alpha(alpha)
    l_hat, u_hat = ordered_values(lower, upper)
    if lower.sigma_hat == 0 and upper.sigma_hat == 0:
        return _interval("CI3", l_hat, u_hat, alpha, float(ndtri(1.0 - alpha / 2.0)))
    c = im_critical_value(l_hat, u_hat, lower.sigma_hat, upper.sigma_hat, lower.n, alpha)
    return _interval("CI3", l_hat - c * lower.se, u_hat + c * upper.se, alpha, c)


def ci0(pt: PtBounds, n, alpha=0.05):
    """Imbens-Manski interval around the smooth pair ``(L0, U0)``."""
    _check_alpha(alpha)
    rn = math.sqrt(n)
    if pt.sigma_l0 == 0 and pt.sigma_u0 == 0:
        return _interval("CI0", pt.l0, pt.u0, alpha, float(ndtri(1.0 - alpha / 2.0)))
    c = im_critical_value(pt.l0, pt.u0, pt.sigma_l0, pt.sigma_u0, n, alpha)
    return _interval("CI0", pt.l0 - c * pt.sigma_l0 / rn, pt.u0 + c * pt.sigma_u0 / rn, alpha, c)


def ci4(pt: PtBounds, n, alpha=0.05):
    """No-covariate interval whose form depends on the signs of ``L0`` and ``U0 - 1``."""
    _check_alpha(alpha)
    rn = math.sqrt(n)
    z1 = float(ndtri(1.0 - alpha))
    if pt.l0 > 0 and pt.u0 < 1:
        inner = ci0(pt, n, alpha)
        return IntervalResult("CI4", inner.lower, inner.upper, alpha, inner.critical_value, "both_interior")
    if pt.l0 > 0:
        return _interval("CI4", pt.l0 - z1 * pt.sigma_l0 / rn, 1.0, alpha, z1, "l_pos_u_free")
    if pt.u0 < 1:
        return _interval("CI4", 0.0, pt.u0 + z1 * pt.sigma_u0 / rn, alpha, z1, "l_free_u_interior")
    return _interval("CI4", 0.0, 1.0, alpha, 0.0, "vacuous")


def one_sided(bound: BoundEstimate, side=None, alpha=0.05):
    """One-sided interval from a lower bound ``[L - z se, 1]`` or an upper bound ``[0, U + z se]``."""
    _check_alpha(alpha)
    side = side or bound.which
    z = float(ndtri(1.0 - alpha))
    if side == "lower":
        return _interval("ONE_SIDED_LOWER", bound.value - z * bound.se, 1.0, alpha, z)
    if side == "upper":
        return _interval("ONE_SIDED_UPPER", 0.0, bound.value + z * bound.se, alpha, z)
    raise ValueError(f"side must be 'lower' or 'upper'; got {side!r}")


def rejects_at_most(interval: IntervalResult, theta):
    """Whether the one-sided lower interval rejects ``H0: PN <= theta``."""
    return theta < interval.lower
