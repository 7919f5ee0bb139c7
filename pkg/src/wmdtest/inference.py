"""Hypothesis tests built on the weighted mean-difference estimator.

The statistic is estimate / standard-error, referred to the standard normal.
The standard error is either the plug-in sqrt(sigma_D^2/n) or a bootstrap
estimate.  Bootstrap resampling happens at the subject level: a complete pair
resamples as a pair, one-sided subjects keep their block identity, so the
pairing and the missingness pattern are respected jointly.  Weights are
re-estimated inside every replicate for the data-driven strategies, so the
standard error reflects weight-estimation variability.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    MomentParams,
    asymptotic_variance,
    two_sided_p,
    weighted_mean_difference,
)
from .errors import BootstrapFailure, InvalidParams, WeightBlockMismatch
from .sample import MissingPattern, PartiallyPairedSample, summarize, validate
from .weights import (
    WeightPair,
    WeightStrategy,
    _optimal_weight_arrays,
    bhoj_weights,
    complete_only_weights,
    optimal_weight_pair,
    simple_weights,
)

# Largest number of index-matrix cells drawn per batch; bounds peak memory.
_BATCH_CELLS = 4_000_000


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sided test, plus enough metadata to reproduce it.

    ``statistic`` equals estimate / std_error for the mean-difference tests
    (0/0 is taken as 0, so exactly identical groups give p-value 1).  For the
    rank-based baselines the statistic is the standardized rank sum and the
    estimate is a location descriptor.  ``se_method`` is "plugin",
    "bootstrap", "student-t" or "normal-approx".
    """

    method: str
    estimate: float
    std_error: float
    statistic: float
    p_value: float
    weights: WeightPair | None
    se_method: str
    bootstrap_b: int | None
    seed: int | None
    n0: int
    n1: int
    n2: int

    def as_dict(self) -> dict:
        out = asdict(self)
        if self.weights is not None:
            out["weights"] = {
                "w1": self.weights.w1,
                "w2": self.weights.w2,
                "strategy": self.weights.strategy.value,
            }
        return out


def _statistic_and_p(estimate: float, std_error: float) -> tuple[float, float]:
    if std_error > 0.0:
        t = estimate / std_error
    elif estimate == 0.0:
        t = 0.0
    else:
        t = math.copysign(math.inf, estimate)
    return t, two_sided_p(t)


def resolve_weights(
    sample: PartiallyPairedSample,
    strategy: WeightStrategy,
    regime: MissingPattern | None = None,
    *,
    fixed: tuple[float, float] | None = None,
    bhoj_lambda: float | None = None,
) -> WeightPair:
    """Produce the weight pair a strategy assigns to this sample."""
    if strategy is WeightStrategy.SIMPLE:
        return simple_weights(sample)
    if strategy is WeightStrategy.COMPLETE_ONLY:
        return complete_only_weights()
    if strategy is WeightStrategy.BHOJ:
        return bhoj_weights(sample, bhoj_lambda)
    if strategy is WeightStrategy.USER_FIXED:
        if fixed is None:
            raise InvalidParams("user-fixed strategy needs a (w1, w2) pair")
        return WeightPair(float(fixed[0]), float(fixed[1]), WeightStrategy.USER_FIXED)
    if strategy is WeightStrategy.OPTIMAL:
        if regime is None:
            regime = validate(sample)
        return optimal_weight_pair(summarize(sample), regime)
    raise InvalidParams(f"unknown strategy {strategy!r}")


def run_test(
    sample: PartiallyPairedSample,
    strategy: WeightStrategy = WeightStrategy.OPTIMAL,
    *,
    se_method: str = "plugin",
    bootstrap_b: int = 1500,
    seed: int | None = None,
    fixed: tuple[float, float] | None = None,
    bhoj_lambda: float | None = None,
) -> TestResult:
    """Run the weighted mean-difference test.

    ``se_method`` is "plugin" (asymptotic sigma_D / sqrt(n)) or "bootstrap";
    the bootstrap needs an explicit seed so results are reproducible.
    """
    regime = validate(sample)
    stats = summarize(sample)
    weights = resolve_weights(
        sample, strategy, regime, fixed=fixed, bhoj_lambda=bhoj_lambda
    )
    estimate = weighted_mean_difference(sample, weights.w1, weights.w2)

    if se_method == "plugin":
        var = asymptotic_variance(
            MomentParams.from_summary(stats), weights.w1, weights.w2, regime
        )
        std_error = math.sqrt(var / sample.n)
        b_used, seed_used = None, None
    elif se_method == "bootstrap":
        if seed is None:
            raise InvalidParams("bootstrap standard errors need an explicit seed")
        std_error = bootstrap_se(
            sample,
            strategy,
            b=bootstrap_b,
            seed=seed,
            fixed=fixed,
            bhoj_lambda=bhoj_lambda,
        )
        b_used, seed_used = bootstrap_b, seed
    else:
        raise InvalidParams(f"unknown se_method {se_method!r}")

    statistic, p_value = _statistic_and_p(estimate, std_error)
    name = {
        WeightStrategy.OPTIMAL: "wmd-optimal",
        WeightStrategy.SIMPLE: "wmd-simple",
        WeightStrategy.COMPLETE_ONLY: "wmd-complete",
        WeightStrategy.USER_FIXED: "wmd-fixed",
        WeightStrategy.BHOJ: "bhoj",
    }[strategy]
    return TestResult(
        method=name,
        estimate=estimate,
        std_error=std_error,
        statistic=statistic,
        p_value=p_value,
        weights=weights,
        se_method=se_method,
        bootstrap_b=b_used,
        seed=seed_used,
        n0=sample.n0,
        n1=sample.n1,
        n2=sample.n2,
    )


def bootstrap_se(
    sample: PartiallyPairedSample,
    strategy: WeightStrategy,
    b: int = 1500,
    seed: int | None = None,
    *,
    fixed: tuple[float, float] | None = None,
    bhoj_lambda: float | None = None,
) -> float:
    """Bootstrap standard error of the weighted mean difference.

    Resamples n subjects with replacement, recomputes the weights via the
    given strategy and the estimate in each replicate, and returns the sample
    standard deviation of the b replicate estimates.  Replicates that cannot
    support the strategy (too few complete pairs, an empty block the weights
    touch, zero spread) are redrawn; raises BootstrapFailure when the total
    draw budget of 10*b is exhausted or more than 10% of b replicates came up
    degenerate.
    """
    if b < 2:
        raise InvalidParams("bootstrap needs at least 2 replicates")
    if seed is None:
        raise InvalidParams("bootstrap needs an explicit seed")
    # Surface structural problems of the original sample as the usual errors.
    regime = validate(sample)
    summarize(sample)
    resolve_weights(sample, strategy, regime, fixed=fixed, bhoj_lambda=bhoj_lambda)

    n = sample.n
    rng = np.random.default_rng(seed)
    estimates = np.empty(b)
    filled = 0
    attempts = 0
    degenerate = 0
    budget = 10 * b
    max_rows = max(16, _BATCH_CELLS // max(n, 1))
    while filled < b:
        k = min(b - filled, budget - attempts, max_rows)
        if k <= 0:
            raise BootstrapFailure(
                f"draw budget exhausted after {attempts} attempts "
                f"({degenerate} degenerate) for {b} replicates"
            )
        idx = rng.integers(0, n, size=(k, n))
        attempts += k
        est = _replicate_estimates(sample, idx, strategy, fixed, bhoj_lambda)
        good = est[np.isfinite(est)]
        degenerate += k - good.size
        take = min(good.size, b - filled)
        estimates[filled : filled + take] = good[:take]
        filled += take
    if degenerate > 0.1 * b:
        raise BootstrapFailure(
            f"{degenerate} of {attempts} bootstrap draws were degenerate "
            f"(more than 10% of b={b})"
        )
    return float(np.std(estimates, ddof=1))


def _replicate_estimates(
    sample: PartiallyPairedSample,
    idx: np.ndarray,
    strategy: WeightStrategy,
    fixed: tuple[float, float] | None,
    bhoj_lambda: float | None,
) -> np.ndarray:
    """Replicate estimates for an index matrix; NaN marks degenerate rows.

    Subjects are numbered 0..n-1 with the complete pairs first, then the
    group-1-only block, then the group-2-only block.
    """
    n0, n1, n2 = sample.n0, sample.n1, sample.n2
    n = n0 + n1 + n2
    # Center values to keep the moment arithmetic well conditioned.
    c1 = float(sample.y1_observed().mean()) if n0 + n1 else 0.0
    c2 = float(sample.y2_observed().mean()) if n0 + n2 else 0.0
    y1s = np.concatenate([sample.y1_complete - c1, sample.y1_only - c1, np.zeros(n2)])
    y2s = np.concatenate([sample.y2_complete - c2, np.zeros(n1), sample.y2_only - c2])

    mc = idx < n0
    m1 = (idx >= n0) & (idx < n0 + n1)
    m2 = idx >= n0 + n1
    v1 = y1s[idx]
    v2 = y2s[idx]

    n0b = mc.sum(axis=1).astype(float)
    n1b = m1.sum(axis=1).astype(float)
    n2b = m2.sum(axis=1).astype(float)

    s1c = (v1 * mc).sum(axis=1)
    s1o = (v1 * m1).sum(axis=1)
    s2c = (v2 * mc).sum(axis=1)
    s2o = (v2 * m2).sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        mean1c = s1c / n0b
        mean1o = s1o / n1b
        mean2c = s2c / n0b
        mean2o = s2o / n2b

    # Validity shared by every strategy: the complete block must survive.
    ok = n0b >= 1.0

    if strategy in (WeightStrategy.OPTIMAL, WeightStrategy.BHOJ):
        q1c = (v1 * v1 * mc).sum(axis=1)
        q1o = (v1 * v1 * m1).sum(axis=1)
        q2c = (v2 * v2 * mc).sum(axis=1)
        q2o = (v2 * v2 * m2).sum(axis=1)
        x12 = (v1 * v2 * mc).sum(axis=1)
        cnt1 = n0b + n1b
        cnt2 = n0b + n2b
        with np.errstate(divide="ignore", invalid="ignore"):
            var1 = (q1c + q1o - (s1c + s1o) ** 2 / cnt1) / (cnt1 - 1.0)
            var2 = (q2c + q2o - (s2c + s2o) ** 2 / cnt2) / (cnt2 - 1.0)
            var1c = (q1c - s1c**2 / n0b) / (n0b - 1.0)
            var2c = (q2c - s2c**2 / n0b) / (n0b - 1.0)
            cov_c = (x12 - s1c * s2c / n0b) / (n0b - 1.0)
            rho = np.clip(cov_c / np.sqrt(var1c * var2c), -1.0, 1.0)

    if strategy is WeightStrategy.OPTIMAL:
        ok &= (n0b >= 2.0) & (var1 > 0.0) & (var2 > 0.0)
        ok &= (var1c > 0.0) & (var2c > 0.0)
        p1 = (n0b + n1b) / n
        p2 = (n0b + n2b) / n
        p12 = n0b / n
        w1, w2 = _optimal_weight_arrays(
            np.where(ok, p1, 0.5),
            np.where(ok, p2, 0.5),
            np.where(ok, p12, 0.25),
            np.where(ok, np.sqrt(np.abs(var1)), 1.0),
            np.where(ok, np.sqrt(np.abs(var2)), 1.0),
            np.where(ok, rho, 0.0),
            n1b > 0,
            n2b > 0,
        )
    elif strategy is WeightStrategy.SIMPLE:
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = n0b / (n0b + n1b)
            w2 = n0b / (n0b + n2b)
    elif strategy is WeightStrategy.COMPLETE_ONLY:
        w1 = np.ones(n0b.shape)
        w2 = np.ones(n0b.shape)
    elif strategy is WeightStrategy.USER_FIXED:
        if fixed is None:
            raise InvalidParams("user-fixed strategy needs a (w1, w2) pair")
        w1 = np.full(n0b.shape, float(fixed[0]))
        w2 = np.full(n0b.shape, float(fixed[1]))
    elif strategy is WeightStrategy.BHOJ:
        lam = bhoj_lambda if bhoj_lambda is not None else n0 / n
        dsum = s1c - s2c
        dsq = ((v1 - v2) ** 2 * mc).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_paired = np.sqrt((dsq - dsum**2 / n0b) / (n0b - 1.0))
            ss_unpaired = (q1o - s1o**2 / n1b) + (q2o - s2o**2 / n2b)
            s_unpaired = np.sqrt(ss_unpaired / (n1b + n2b - 2.0))
            paired = lam / (s_paired / np.sqrt(n0b))
            unpaired = (1.0 - lam) / (s_unpaired / np.sqrt(1.0 / n1b + 1.0 / n2b))
            w1 = paired / (paired + unpaired)
        w2 = w1
        ok &= (n0b >= 2.0) & (n1b >= 1.0) & (n2b >= 1.0) & (n1b + n2b >= 3.0)
        ok &= (s_paired > 0.0) & (s_unpaired > 0.0)
    else:
        raise InvalidParams(f"unknown strategy {strategy!r}")

    # A weight below 1 needs the incomplete block; above 0 needs the complete.
    ok &= np.isfinite(w1) & np.isfinite(w2)
    ok &= ~((w1 < 1.0) & (n1b == 0.0))
    ok &= ~((w2 < 1.0) & (n2b == 0.0))
    ok &= ~((w1 > 0.0) & (n0b == 0.0))
    ok &= ~((w2 > 0.0) & (n0b == 0.0))

    side1 = np.where(w1 == 1.0, mean1c, w1 * mean1c + (1.0 - w1) * mean1o)
    side1 = np.where(w1 == 0.0, mean1o, side1)
    side2 = np.where(w2 == 1.0, mean2c, w2 * mean2c + (1.0 - w2) * mean2o)
    side2 = np.where(w2 == 0.0, mean2o, side2)
    est = (side1 + c1) - (side2 + c2)
    return np.where(ok, est, np.nan)
