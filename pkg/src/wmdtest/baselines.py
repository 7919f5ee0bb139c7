"""Baseline tests: paired t and Wilcoxon signed-rank, with imputed variants.

The complete-pairs variants ignore the one-sided blocks entirely.  The
imputed variants first replace every missing cell with the median of that
group's observed values and then run the same test cores on the resulting
fully paired sample of all n subjects.  Median imputation shrinks the
apparent variance, which is exactly why the imputed variants are kept: they
demonstrate the resulting type-I-error inflation in simulations.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.stats import t as t_dist

from .core import two_sided_p
from .errors import (
    AllZeroDifferences,
    EmptyGroup,
    InvalidParams,
    TooFewPairs,
    ZeroVariance,
)
from .inference import TestResult
from .sample import PartiallyPairedSample


class BaselineMethod(Enum):
    T_PAIRED_COMPLETE = "t-cp"
    T_PAIRED_IMPUTED = "t-im"
    WILCOXON_COMPLETE = "w-cp"
    WILCOXON_IMPUTED = "w-im"


def paired_t(y1, y2, *, method: str = "t-cp", counts=None) -> TestResult:
    """Classical paired t-test on index-aligned arrays.

    statistic = mean(d) / (sd(d)/sqrt(m)) with d = y1 - y2, referred to
    Student's t with m-1 degrees of freedom.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape:
        raise InvalidParams("paired arrays must have equal length")
    m = y1.size
    if m < 2:
        raise TooFewPairs(f"paired t-test needs at least 2 pairs, got {m}")
    d = y1 - y2
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ZeroVariance("within-pair differences have zero spread")
    estimate = float(d.mean())
    std_error = sd / np.sqrt(m)
    statistic = estimate / std_error
    p_value = float(2.0 * t_dist.sf(abs(statistic), m - 1))
    n0, n1, n2 = counts if counts is not None else (m, 0, 0)
    return TestResult(
        method=method,
        estimate=estimate,
        std_error=float(std_error),
        statistic=float(statistic),
        p_value=p_value,
        weights=None,
        se_method="student-t",
        bootstrap_b=None,
        seed=None,
        n0=int(n0),
        n1=int(n1),
        n2=int(n2),
    )


def _midranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size)
    sorted_a = a[order]
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(y1, y2, *, method: str = "w-cp", counts=None) -> TestResult:
    """Wilcoxon signed-rank test on index-aligned arrays.

    Zero differences are dropped; tied absolute differences get midranks.
    The p-value uses the normal approximation with the tie-corrected variance
    m(m+1)(2m+1)/24 - sum(t^3 - t)/48 and a 0.5 continuity correction.  The
    reported estimate is the median difference (a location descriptor, not
    the numerator of the statistic).
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape:
        raise InvalidParams("paired arrays must have equal length")
    d_all = y1 - y2
    d = d_all[d_all != 0.0]
    m = d.size
    if m == 0:
        raise AllZeroDifferences("all within-pair differences are zero")
    absd = np.abs(d)
    ranks = _midranks(absd)
    w_plus = float(ranks[d > 0.0].sum())
    mean_null = m * (m + 1) / 4.0
    _, tie_counts = np.unique(absd, return_counts=True)
    tie_term = float((tie_counts.astype(float) ** 3 - tie_counts).sum()) / 48.0
    var_null = m * (m + 1) * (2 * m + 1) / 24.0 - tie_term
    if var_null <= 0.0:
        raise ZeroVariance("degenerate signed-rank variance (all ranks tied)")
    dev = w_plus - mean_null
    statistic = (dev - 0.5 * np.sign(dev)) / np.sqrt(var_null)
    p_value = two_sided_p(float(statistic))
    n0, n1, n2 = counts if counts is not None else (y1.size, 0, 0)
    return TestResult(
        method=method,
        estimate=float(np.median(d_all)),
        std_error=float(np.sqrt(var_null)),
        statistic=float(statistic),
        p_value=p_value,
        weights=None,
        se_method="normal-approx",
        bootstrap_b=None,
        seed=None,
        n0=int(n0),
        n1=int(n1),
        n2=int(n2),
    )


def impute_median(sample: PartiallyPairedSample) -> PartiallyPairedSample:
    """Fill each missing cell with the median of that group's observed values.

    Returns a fully paired sample of all n subjects (complete pairs first,
    then the former group-1-only subjects, then group-2-only).  Subjects that
    had neither value never enter a sample, so nothing is resurrected here.
    """
    y1_obs = sample.y1_observed()
    y2_obs = sample.y2_observed()
    if y1_obs.size == 0 or y2_obs.size == 0:
        raise EmptyGroup("cannot impute a group with no observed values")
    med1 = float(np.median(y1_obs))
    med2 = float(np.median(y2_obs))
    y1_full = np.concatenate(
        [sample.y1_complete, sample.y1_only, np.full(sample.n2, med1)]
    )
    y2_full = np.concatenate(
        [sample.y2_complete, np.full(sample.n1, med2), sample.y2_only]
    )
    return PartiallyPairedSample(y1_full, y2_full)


def run_baseline(sample: PartiallyPairedSample, method: BaselineMethod) -> TestResult:
    """Run one of the four baseline tests on a partially paired sample."""
    counts = (sample.n0, sample.n1, sample.n2)
    if method is BaselineMethod.T_PAIRED_COMPLETE:
        return paired_t(
            sample.y1_complete, sample.y2_complete, method="t-cp", counts=counts
        )
    if method is BaselineMethod.WILCOXON_COMPLETE:
        return wilcoxon_signed_rank(
            sample.y1_complete, sample.y2_complete, method="w-cp", counts=counts
        )
    imputed = impute_median(sample)
    if method is BaselineMethod.T_PAIRED_IMPUTED:
        return paired_t(
            imputed.y1_complete, imputed.y2_complete, method="t-im", counts=counts
        )
    if method is BaselineMethod.WILCOXON_IMPUTED:
        return wilcoxon_signed_rank(
            imputed.y1_complete, imputed.y2_complete, method="w-im", counts=counts
        )
    raise InvalidParams(f"unknown baseline {method!r}")
