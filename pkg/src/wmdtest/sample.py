"""Data model for partially paired two-group samples.

A partially paired sample holds four blocks: the complete pairs (both groups
observed, index-aligned), and the two one-sided blocks where only one group
was observed.  Missingness is structural: a subject whose group-2 value is
unobserved contributes to ``y1_only``, never a sentinel value.  Subjects with
neither value observed carry no information and must be dropped (and counted)
by the ingestion layer before a sample is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateSample, EmptySample, ZeroVariance


class MissingPattern(Enum):
    """Which groups contain missing values, named for where values are absent.

    Subjects missing their group-1 value appear in ``y2_only``, so missing
    values "in group 1" corresponds to ``n2 > 0`` (and ``n1 == 0``), and
    symmetrically for group 2.
    """

    NONE_MISSING = "none-missing"
    MISSING_IN_GROUP1 = "missing-in-group1"
    MISSING_IN_GROUP2 = "missing-in-group2"
    MISSING_IN_BOTH = "missing-in-both"


def _block(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PartiallyPairedSample:
    """The four observed blocks of a partially paired sample.

    ``y1_complete`` and ``y2_complete`` are index-aligned (subject i of the
    complete block has the pair ``(y1_complete[i], y2_complete[i])``).
    Instances are immutable and safe to share across threads.
    """

    y1_complete: np.ndarray
    y2_complete: np.ndarray
    y1_only: np.ndarray
    y2_only: np.ndarray

    def __init__(self, y1_complete, y2_complete, y1_only=(), y2_only=()):
        object.__setattr__(self, "y1_complete", _block(y1_complete, "y1_complete"))
        object.__setattr__(self, "y2_complete", _block(y2_complete, "y2_complete"))
        object.__setattr__(self, "y1_only", _block(y1_only, "y1_only"))
        object.__setattr__(self, "y2_only", _block(y2_only, "y2_only"))
        if self.y1_complete.size != self.y2_complete.size:
            raise ValueError("complete-pair blocks must have equal length")

    @property
    def n0(self) -> int:
        return int(self.y1_complete.size)

    @property
    def n1(self) -> int:
        return int(self.y1_only.size)

    @property
    def n2(self) -> int:
        return int(self.y2_only.size)

    @property
    def n(self) -> int:
        return self.n0 + self.n1 + self.n2

    def y1_observed(self) -> np.ndarray:
        """All observed group-1 values (complete block first)."""
        return np.concatenate([self.y1_complete, self.y1_only])

    def y2_observed(self) -> np.ndarray:
        return np.concatenate([self.y2_complete, self.y2_only])


@dataclass(frozen=True)
class SummaryStats:
    """Plug-in quantities shared by every downstream test.

    Incomplete-block means are ``None`` when that block is empty.  The
    observation proportions satisfy ``p12_hat <= min(p1_hat, p2_hat)`` and
    ``p1_hat + p2_hat - p12_hat == 1`` (both-missing subjects never enter a
    sample).  ``rho_hat`` is the Pearson correlation over complete pairs,
    clamped to [-1, 1] against floating-point rounding; the standard
    deviations pool each group's complete and incomplete blocks (ddof=1).
    """

    mean_y1_complete: float
    mean_y1_incomplete: float | None
    mean_y2_complete: float
    mean_y2_incomplete: float | None
    p1_hat: float
    p2_hat: float
    p12_hat: float
    sigma1_hat: float
    sigma2_hat: float
    rho_hat: float
    n0: int
    n1: int
    n2: int
    n: int


def classify(n0: int, n1: int, n2: int) -> MissingPattern:
    """Missingness regime implied by the block counts."""
    if n1 > 0 and n2 > 0:
        return MissingPattern.MISSING_IN_BOTH
    if n2 > 0:
        return MissingPattern.MISSING_IN_GROUP1
    if n1 > 0:
        return MissingPattern.MISSING_IN_GROUP2
    return MissingPattern.NONE_MISSING


def validate(sample: PartiallyPairedSample) -> MissingPattern:
    """Classify the missingness regime, rejecting unusable samples.

    Raises EmptySample when there are no subjects at all, and
    DegenerateSample when missing values occur in both groups but fewer than
    two complete pairs exist (the pairwise correlation is then inestimable).
    """
    if sample.n == 0:
        raise EmptySample("sample contains no subjects")
    pattern = classify(sample.n0, sample.n1, sample.n2)
    if pattern is MissingPattern.MISSING_IN_BOTH and sample.n0 < 2:
        raise DegenerateSample(
            f"only {sample.n0} complete pair(s) with missing values in both "
            "groups; pairwise correlation is inestimable"
        )
    return pattern


def summarize(sample: PartiallyPairedSample) -> SummaryStats:
    """Compute every plug-in quantity of the sample.

    Requires at least two complete pairs and at least two observed values per
    group; raises DegenerateSample otherwise, and ZeroVariance when all
    observed values of a group are identical (no test statistic exists).
    """
    validate(sample)
    n0, n1, n2, n = sample.n0, sample.n1, sample.n2, sample.n
    if n0 < 2:
        raise DegenerateSample(
            "fewer than two complete pairs; pairwise correlation is inestimable"
        )
    y1_obs = sample.y1_observed()
    y2_obs = sample.y2_observed()
    if y1_obs.size < 2 or y2_obs.size < 2:
        raise DegenerateSample("each group needs at least two observed values")

    sigma1 = float(np.std(y1_obs, ddof=1))
    sigma2 = float(np.std(y2_obs, ddof=1))
    if sigma1 == 0.0 or sigma2 == 0.0:
        raise ZeroVariance("all observed values of a group are identical")

    a = sample.y1_complete - sample.y1_complete.mean()
    b = sample.y2_complete - sample.y2_complete.mean()
    denom = float(np.sqrt((a * a).sum() * (b * b).sum()))
    if denom == 0.0:
        raise DegenerateSample(
            "a complete-pair block is constant; pairwise correlation is inestimable"
        )
    rho = float(np.clip((a * b).sum() / denom, -1.0, 1.0))

    return SummaryStats(
        mean_y1_complete=float(sample.y1_complete.mean()),
        mean_y1_incomplete=float(sample.y1_only.mean()) if n1 else None,
        mean_y2_complete=float(sample.y2_complete.mean()),
        mean_y2_incomplete=float(sample.y2_only.mean()) if n2 else None,
        p1_hat=(n0 + n1) / n,
        p2_hat=(n0 + n2) / n,
        p12_hat=n0 / n,
        sigma1_hat=sigma1,
        sigma2_hat=sigma2,
        rho_hat=rho,
        n0=n0,
        n1=n1,
        n2=n2,
        n=n,
    )
