"""Weighted mean-difference estimator and its asymptotic variance.

The estimator is a difference of block-weighted group means,

    D(w1, w2) = {w1 * mean(Y1 complete) + (1-w1) * mean(Y1 incomplete)}
              - {w2 * mean(Y2 complete) + (1-w2) * mean(Y2 incomplete)},

with weights in [0, 1].  Under missingness that is completely at random,
sqrt(n) * (D - (mu1 - mu2)) is asymptotically normal with variance

    sigma_D^2(w1, w2) = {w1^2/p12 + (1-w1)^2/(p1-p12)} * sigma1^2
                      + {w2^2/p12 + (1-w2)^2/(p2-p12)} * sigma2^2
                      - 2*w1*w2*rho*sigma1*sigma2/p12,

where p_g is the probability that group g is observed, p12 the probability
both are, sigma_g the marginal standard deviations and rho the pairwise
correlation.  When missing values occur in one group only, the weight of the
fully observed group is pinned to 1 and the corresponding 0/0 term drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .errors import InvalidParams, SingularVariance, WeightBlockMismatch
from .sample import MissingPattern, PartiallyPairedSample

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF, accurate to well below 1e-12 absolute error."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(x) == 0 else out


def normal_sf(x):
    """Standard normal survival function 1 - CDF, without cancellation."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(x) == 0 else out


def normal_quantile(q: float) -> float:
    return float(ndtri(q))


def two_sided_p(statistic: float) -> float:
    """Two-sided p-value of a standard-normal statistic, 2*(1 - CDF(|t|))."""
    return float(erfc(abs(statistic) / _SQRT2))


@dataclass(frozen=True)
class MomentParams:
    """Observation rates and second moments entering the variance formula.

    Either population values or their plug-in estimates.  Constraints:
    0 < p12 <= min(p1, p2) <= 1, p1 + p2 - p12 <= 1, sigmas > 0, |rho| <= 1.
    """

    p1: float
    p2: float
    p12: float
    sigma1: float
    sigma2: float
    rho: float

    def __post_init__(self):
        if not (0.0 < self.p12 <= min(self.p1, self.p2) <= 1.0):
            raise InvalidParams(
                f"observation rates must satisfy 0 < p12 <= min(p1, p2) <= 1, "
                f"got p1={self.p1}, p2={self.p2}, p12={self.p12}"
            )
        if self.p1 + self.p2 - self.p12 > 1.0 + 1e-12:
            raise InvalidParams(
                "p1 + p2 - p12 exceeds 1; the three rates do not describe a "
                "joint observation pattern"
            )
        if not (self.sigma1 > 0.0 and self.sigma2 > 0.0):
            raise InvalidParams("standard deviations must be positive")
        if not abs(self.rho) <= 1.0:
            raise InvalidParams("correlation must lie in [-1, 1]")

    @classmethod
    def from_summary(cls, stats) -> "MomentParams":
        return cls(
            p1=stats.p1_hat,
            p2=stats.p2_hat,
            p12=stats.p12_hat,
            sigma1=stats.sigma1_hat,
            sigma2=stats.sigma2_hat,
            rho=stats.rho_hat,
        )

    def infer_regime(self) -> MissingPattern:
        """Missingness regime implied by the observation rates."""
        if self.p1 == 1.0 and self.p2 == 1.0:
            return MissingPattern.NONE_MISSING
        if self.p2 == 1.0 and self.p12 == self.p1:
            return MissingPattern.MISSING_IN_GROUP1
        if self.p1 == 1.0 and self.p12 == self.p2:
            return MissingPattern.MISSING_IN_GROUP2
        if self.p12 < self.p1 and self.p12 < self.p2:
            return MissingPattern.MISSING_IN_BOTH
        raise InvalidParams(
            f"rates p1={self.p1}, p2={self.p2}, p12={self.p12} match no "
            "missingness regime"
        )


def weighted_mean_difference(sample: PartiallyPairedSample, w1: float, w2: float) -> float:
    """The estimate D(w1, w2); zero weight on an absent block contributes 0.

    A weight strictly between 0 and 1 (or equal to 0) needs the block it
    touches to be nonempty: raises WeightBlockMismatch otherwise.
    """
    if not (0.0 <= w1 <= 1.0 and 0.0 <= w2 <= 1.0):
        raise InvalidParams(f"weights must lie in [0, 1], got ({w1}, {w2})")
    for w, n_inc, label in ((w1, sample.n1, "group 1"), (w2, sample.n2, "group 2")):
        if w < 1.0 and n_inc == 0:
            raise WeightBlockMismatch(
                f"weight {w} puts mass on the empty incomplete block of {label}"
            )
        if w > 0.0 and sample.n0 == 0:
            raise WeightBlockMismatch(
                f"weight {w} puts mass on the empty complete-pair block ({label})"
            )

    def side(w, complete, incomplete):
        part = w * complete.mean() if w > 0.0 else 0.0
        if w < 1.0:
            part += (1.0 - w) * incomplete.mean()
        return part

    return float(
        side(w1, sample.y1_complete, sample.y1_only)
        - side(w2, sample.y2_complete, sample.y2_only)
    )


def _edge_term(w: float, p: float, p12: float) -> float:
    # (1-w)^2 / (p - p12) with the 0/0 = 0 convention
    num = (1.0 - w) ** 2
    den = p - p12
    if den <= 0.0:
        if num == 0.0:
            return 0.0
        raise SingularVariance(
            f"(1-w)^2/(p-p12) has zero denominator with w={w}, p={p}, p12={p12}"
        )
    return num / den


def _variance_surface(w1, w2, p1, p2, p12, sigma1, sigma2, rho):
    # Raw array-safe surface; requires p1 > p12 and p2 > p12 elementwise.
    return (
        (w1 * w1 / p12 + (1.0 - w1) ** 2 / (p1 - p12)) * sigma1 * sigma1
        + (w2 * w2 / p12 + (1.0 - w2) ** 2 / (p2 - p12)) * sigma2 * sigma2
        - 2.0 * w1 * w2 * rho * sigma1 * sigma2 / p12
    )


def asymptotic_variance(
    params: MomentParams,
    w1: float,
    w2: float,
    regime: MissingPattern | None = None,
) -> float:
    """Asymptotic variance of sqrt(n) * D(w1, w2).

    In a one-sided-missing regime the weight of the fully observed group is
    fixed by the regime, so the supplied value for it is ignored; the
    regime's rate substitutions (p2 = 1, p12 = p1, or symmetrically) are
    checked against ``params``.
    """
    if not (0.0 <= w1 <= 1.0 and 0.0 <= w2 <= 1.0):
        raise InvalidParams(f"weights must lie in [0, 1], got ({w1}, {w2})")
    if regime is None:
        regime = params.infer_regime()
    p1, p2, p12 = params.p1, params.p2, params.p12
    if regime is MissingPattern.NONE_MISSING:
        if not (p1 == 1.0 and p2 == 1.0 and p12 == 1.0):
            raise InvalidParams("none-missing regime requires p1 = p2 = p12 = 1")
        w1, w2 = 1.0, 1.0
    elif regime is MissingPattern.MISSING_IN_GROUP1:
        if not (p2 == 1.0 and p12 == p1):
            raise InvalidParams("missing-in-group1 regime requires p2 = 1, p12 = p1")
        w1 = 1.0
    elif regime is MissingPattern.MISSING_IN_GROUP2:
        if not (p1 == 1.0 and p12 == p2):
            raise InvalidParams("missing-in-group2 regime requires p1 = 1, p12 = p2")
        w2 = 1.0
    else:
        if not (p12 < p1 and p12 < p2):
            raise InvalidParams(
                "missing-in-both regime requires p12 < p1 and p12 < p2"
            )

    s1, s2, rho = params.sigma1, params.sigma2, params.rho
    var = (
        (w1 * w1 / p12 + _edge_term(w1, p1, p12)) * s1 * s1
        + (w2 * w2 / p12 + _edge_term(w2, p2, p12)) * s2 * s2
        - 2.0 * w1 * w2 * rho * s1 * s2 / p12
    )
    return float(var)


def analytic_power(
    params: MomentParams,
    mu1: float,
    mu2: float,
    w1: float,
    w2: float,
    n: int,
    alpha: float,
    regime: MissingPattern | None = None,
) -> float:
    """Asymptotic power of the two-sided level-alpha test at the given weights.

    Uses the sqrt(n)-scaled noncentrality sqrt(n)*(mu1-mu2)/sigma_D; returns
    exactly ``alpha`` when mu1 == mu2.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParams("alpha must lie strictly between 0 and 1")
    if n < 1:
        raise InvalidParams("sample size must be at least 1")
    if mu1 == mu2:
        return float(alpha)
    sigma_d = math.sqrt(asymptotic_variance(params, w1, w2, regime))
    shift = math.sqrt(n) * (mu1 - mu2) / sigma_d
    z = normal_quantile(1.0 - alpha / 2.0)
    return float(normal_sf(z - shift) + normal_cdf(-z - shift))
