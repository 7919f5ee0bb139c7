"""Weight-selection strategies for the weighted mean-difference estimator.

Strategies:

* ``simple``        -- (n0/(n0+n1), n0/(n0+n2)); the estimate collapses to the
                       difference of pooled group means.
* ``complete-only`` -- (1, 1); complete pairs only.
* ``optimal``       -- the variance-minimizing weights on [0, 1]^2: the
                       stationary point of sigma_D^2 when it is feasible,
                       otherwise the best of the four per-edge minimizers.
* ``bhoj``          -- equal weights mixing the paired and unpaired scales
                       through a tuning coefficient lambda.
* ``user-fixed``    -- caller-supplied constants.

The optimal-weight algebra is written to accept numpy arrays so the bootstrap
re-estimates weights in every replicate through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import MomentParams, _variance_surface, asymptotic_variance
from .errors import DegenerateBhoj, DegenerateSample, InvalidParams, SingularSystem
from .sample import MissingPattern, PartiallyPairedSample, SummaryStats

_GRID_FALLBACK = 201


class WeightStrategy(Enum):
    SIMPLE = "simple"
    COMPLETE_ONLY = "complete-only"
    OPTIMAL = "optimal"
    BHOJ = "bhoj"
    USER_FIXED = "user-fixed"


@dataclass(frozen=True)
class WeightPair:
    """A pair of block weights in [0, 1]^2 plus the strategy that produced it."""

    w1: float
    w2: float
    strategy: WeightStrategy

    def __post_init__(self):
        if not (0.0 <= self.w1 <= 1.0 and 0.0 <= self.w2 <= 1.0):
            raise InvalidParams(
                f"weights must lie in [0, 1], got ({self.w1}, {self.w2})"
            )


@dataclass(frozen=True)
class OptimalWeightSolution:
    """Result of the variance minimization.

    ``location`` is "interior" when the unconstrained stationary point (or,
    in a one-sided regime, the unclamped edge minimizer) was feasible, else
    "boundary".  ``boundary_index`` identifies which of the four edge
    candidates won (0..3, in the fixed order used by ``boundary_candidates``);
    it is None for one-sided regimes and for the dense-scan fallback.
    ``interior_root`` is the stationary point before the feasibility check.
    """

    weights: WeightPair
    location: str
    boundary_index: int | None
    objective: float
    interior_root: tuple[float, float] | None


def clamp_unit(z: float) -> float:
    """Clamp to [0, 1]: 0 below, identity inside, 1 above."""
    return 0.0 if z < 0.0 else (1.0 if z > 1.0 else float(z))


def interior_root(params: MomentParams) -> tuple[float, float]:
    """Stationary point of sigma_D^2 over (w1, w2), before any clamping.

    Solves the two first-order conditions in closed form; raises
    SingularSystem when the shared denominator p1*p2 - rho^2*(p1-p12)*(p2-p12)
    vanishes (the sigma_g^2 factors cancel).
    """
    root, den = _interior_root_den(params)
    if den == 0.0:
        raise SingularSystem("stationary-point denominator is zero")
    return root


def _interior_root_den(params: MomentParams) -> tuple[tuple[float, float], float]:
    p1, p2, p12 = params.p1, params.p2, params.p12
    s1, s2, rho = params.sigma1, params.sigma2, params.rho
    d1, d2 = p1 - p12, p2 - p12
    den = p1 * p2 - rho * rho * d1 * d2
    if den == 0.0:
        return (np.nan, np.nan), 0.0
    w1 = p12 * (p2 + rho * (s2 / s1) * d1) / den
    w2 = p12 * (p1 + rho * (s1 / s2) * d2) / den
    return (float(w1), float(w2)), float(den)


def boundary_candidates(params: MomentParams) -> tuple[tuple[float, float], ...]:
    """Minimizers of sigma_D^2 restricted to each edge of [0, 1]^2.

    Fixed order: w1=0 edge, w1=1 edge, w2=0 edge, w2=1 edge.  The free
    coordinate of the two w=1 edges is clamped to [0, 1]; the other two are
    in range by construction (p12 <= p_g).
    """
    p1, p2, p12 = params.p1, params.p2, params.p12
    s1, s2, rho = params.sigma1, params.sigma2, params.rho
    d1, d2 = p1 - p12, p2 - p12
    return (
        (0.0, clamp_unit(p12 / p2)),
        (1.0, clamp_unit((p12 * s2 + rho * s1 * d2) / (p2 * s2))),
        (clamp_unit(p12 / p1), 0.0),
        (clamp_unit((p12 * s1 + rho * s2 * d1) / (p1 * s1)), 1.0),
    )


def _dense_scan(params: MomentParams) -> tuple[float, float, float]:
    # Fallback when the stationary system is singular: best of the edge
    # candidates and a coarse interior grid.
    grid = np.linspace(0.0, 1.0, _GRID_FALLBACK)
    w1g, w2g = np.meshgrid(grid, grid, indexing="ij")
    obj = _variance_surface(
        w1g, w2g, params.p1, params.p2, params.p12,
        params.sigma1, params.sigma2, params.rho,
    )
    k = int(np.argmin(obj))
    best = (float(w1g.flat[k]), float(w2g.flat[k]), float(obj.flat[k]))
    for cand in boundary_candidates(params):
        val = asymptotic_variance(params, *cand, MissingPattern.MISSING_IN_BOTH)
        if val < best[2]:
            best = (cand[0], cand[1], val)
    return best


def optimal_weights(
    params: MomentParams, regime: MissingPattern | None = None
) -> OptimalWeightSolution:
    """Variance-minimizing weights for the given regime.

    In the both-groups regime the stationary point is used when it lies in
    [0, 1]^2 and the surface is convex there (positive denominator);
    otherwise the minimizing edge candidate wins, ties broken by the lowest
    candidate index.  One-sided regimes pin the fully observed group's weight
    to 1 and clamp the closed-form free weight.
    """
    if regime is None:
        regime = params.infer_regime()

    if regime is MissingPattern.NONE_MISSING:
        weights = WeightPair(1.0, 1.0, WeightStrategy.OPTIMAL)
        obj = asymptotic_variance(params, 1.0, 1.0, regime)
        return OptimalWeightSolution(weights, "interior", None, obj, (1.0, 1.0))

    if regime is MissingPattern.MISSING_IN_GROUP1:
        # p12 == p1 here; free weight splits group 2 between its blocks.
        raw = params.p12 + params.rho * (params.sigma1 / params.sigma2) * (1.0 - params.p12)
        free = clamp_unit(raw)
        weights = WeightPair(1.0, free, WeightStrategy.OPTIMAL)
        obj = asymptotic_variance(params, 1.0, free, regime)
        loc = "interior" if raw == free else "boundary"
        return OptimalWeightSolution(weights, loc, None, obj, (1.0, float(raw)))

    if regime is MissingPattern.MISSING_IN_GROUP2:
        raw = params.p12 + params.rho * (params.sigma2 / params.sigma1) * (1.0 - params.p12)
        free = clamp_unit(raw)
        weights = WeightPair(free, 1.0, WeightStrategy.OPTIMAL)
        obj = asymptotic_variance(params, free, 1.0, regime)
        loc = "interior" if raw == free else "boundary"
        return OptimalWeightSolution(weights, loc, None, obj, (float(raw), 1.0))

    root, den = _interior_root_den(params)
    if den == 0.0:
        w1, w2, obj = _dense_scan(params)
        weights = WeightPair(w1, w2, WeightStrategy.OPTIMAL)
        return OptimalWeightSolution(weights, "boundary", None, obj, None)
    # A negative denominator means the stationary point is not a minimum of
    # the constrained surface; treat it as infeasible and search the edges.
    feasible = den > 0.0 and 0.0 <= root[0] <= 1.0 and 0.0 <= root[1] <= 1.0
    if feasible:
        weights = WeightPair(root[0], root[1], WeightStrategy.OPTIMAL)
        obj = asymptotic_variance(params, root[0], root[1], regime)
        return OptimalWeightSolution(weights, "interior", None, obj, root)
    cands = boundary_candidates(params)
    objs = [asymptotic_variance(params, c[0], c[1], regime) for c in cands]
    k = int(np.argmin(objs))
    weights = WeightPair(cands[k][0], cands[k][1], WeightStrategy.OPTIMAL)
    return OptimalWeightSolution(weights, "boundary", k, objs[k], root)


def optimal_weight_pair(stats: SummaryStats, regime: MissingPattern) -> WeightPair:
    """Plug-in optimal weights from sample summary statistics."""
    return optimal_weights(MomentParams.from_summary(stats), regime).weights


def simple_weights(sample: PartiallyPairedSample) -> WeightPair:
    """(n0/(n0+n1), n0/(n0+n2)); equal weight per observation within a group."""
    n0, n1, n2 = sample.n0, sample.n1, sample.n2
    if n0 + n1 == 0 or n0 + n2 == 0:
        raise DegenerateSample("a group has no observed values")
    return WeightPair(n0 / (n0 + n1), n0 / (n0 + n2), WeightStrategy.SIMPLE)


def complete_only_weights() -> WeightPair:
    return WeightPair(1.0, 1.0, WeightStrategy.COMPLETE_ONLY)


def bhoj_weights(sample: PartiallyPairedSample, lam: float | None = None) -> WeightPair:
    """Equal weights mixing paired and unpaired precision.

    w = [lam/(s/sqrt(n0))] / [lam/(s/sqrt(n0)) + (1-lam)/(s1/sqrt(1/n1+1/n2))],
    with s the standard deviation of the within-pair differences and s1 the
    pooled standard deviation of the two unpaired blocks.  ``lam`` defaults
    to the pairing fraction n0/n.
    """
    n0, n1, n2 = sample.n0, sample.n1, sample.n2
    if lam is None:
        lam = n0 / sample.n if sample.n else 0.0
    if not 0.0 <= lam <= 1.0:
        raise InvalidParams(f"lambda must lie in [0, 1], got {lam}")
    if n0 < 2 or n1 < 1 or n2 < 1:
        raise DegenerateBhoj(
            "needs at least two complete pairs and one observation in each "
            f"unpaired block, got n0={n0}, n1={n1}, n2={n2}"
        )
    if n1 + n2 < 3:
        raise DegenerateBhoj("pooled unpaired spread needs n1 + n2 >= 3")
    d = sample.y1_complete - sample.y2_complete
    s = float(np.std(d, ddof=1))
    ss1 = float(((sample.y1_only - sample.y1_only.mean()) ** 2).sum())
    ss2 = float(((sample.y2_only - sample.y2_only.mean()) ** 2).sum())
    s1 = float(np.sqrt((ss1 + ss2) / (n1 + n2 - 2)))
    if s == 0.0 or s1 == 0.0:
        raise DegenerateBhoj("zero paired or unpaired spread")
    paired = lam / (s / np.sqrt(n0))
    unpaired = (1.0 - lam) / (s1 / np.sqrt(1.0 / n1 + 1.0 / n2))
    w = float(paired / (paired + unpaired))
    return WeightPair(w, w, WeightStrategy.BHOJ)


def _optimal_weight_arrays(p1, p2, p12, s1, s2, rho, has_inc1, has_inc2):
    """Vectorized optimal weights; one regime decision per element (1-D inputs).

    ``has_inc1``/``has_inc2`` flag nonempty incomplete blocks (n1 > 0 /
    n2 > 0).  Inputs may contain garbage where a replicate is already known
    to be degenerate; callers mask those elements out afterwards.  Elements
    whose stationary system is singular fall back to the scalar search.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    p12 = np.asarray(p12, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    rho = np.asarray(rho, dtype=float)
    w1 = np.ones(p1.shape)
    w2 = np.ones(p1.shape)

    one_sided_1 = ~has_inc1 & has_inc2  # missing in group 1 only
    one_sided_2 = has_inc1 & ~has_inc2
    both = has_inc1 & has_inc2

    with np.errstate(divide="ignore", invalid="ignore"):
        free2 = np.clip(p12 + rho * (s1 / s2) * (1.0 - p12), 0.0, 1.0)
        free1 = np.clip(p12 + rho * (s2 / s1) * (1.0 - p12), 0.0, 1.0)
    w2 = np.where(one_sided_1, free2, w2)
    w1 = np.where(one_sided_2, free1, w1)

    if np.any(both):
        d1 = p1 - p12
        d2 = p2 - p12
        with np.errstate(divide="ignore", invalid="ignore"):
            den = p1 * p2 - rho * rho * d1 * d2
            r1 = p12 * (p2 + rho * (s2 / s1) * d1) / den
            r2 = p12 * (p1 + rho * (s1 / s2) * d2) / den
            interior_ok = (
                both
                & (den > 0.0)
                & (r1 >= 0.0)
                & (r1 <= 1.0)
                & (r2 >= 0.0)
                & (r2 <= 1.0)
            )
            # Edge candidates, same fixed order as boundary_candidates.
            c1_w1 = np.zeros_like(p1)
            c1_w2 = np.clip(p12 / p2, 0.0, 1.0)
            c2_w1 = np.ones_like(p1)
            c2_w2 = np.clip((p12 * s2 + rho * s1 * d2) / (p2 * s2), 0.0, 1.0)
            c3_w1 = np.clip(p12 / p1, 0.0, 1.0)
            c3_w2 = np.zeros_like(p1)
            c4_w1 = np.clip((p12 * s1 + rho * s2 * d1) / (p1 * s1), 0.0, 1.0)
            c4_w2 = np.ones_like(p1)
            cw1 = np.stack([c1_w1, c2_w1, c3_w1, c4_w1])
            cw2 = np.stack([c1_w2, c2_w2, c3_w2, c4_w2])
            cobj = _variance_surface(cw1, cw2, p1, p2, p12, s1, s2, rho)
        cobj = np.where(np.isfinite(cobj), cobj, np.inf)
        kbest = np.argmin(cobj, axis=0)
        cols = np.arange(kbest.size)
        bw1 = cw1[kbest, cols]
        bw2 = cw2[kbest, cols]
        w1 = np.where(both, np.where(interior_ok, r1, bw1), w1)
        w2 = np.where(both, np.where(interior_ok, r2, bw2), w2)

        singular = both & (den == 0.0)
        if np.any(singular):
            flat = np.flatnonzero(singular)
            for k in flat:
                prm = MomentParams(
                    p1=float(p1.flat[k]),
                    p2=float(p2.flat[k]),
                    p12=float(p12.flat[k]),
                    sigma1=float(s1.flat[k]),
                    sigma2=float(s2.flat[k]),
                    rho=float(rho.flat[k]),
                )
                sol = optimal_weights(prm, MissingPattern.MISSING_IN_BOTH)
                w1.flat[k] = sol.weights.w1
                w2.flat[k] = sol.weights.w2
    return w1, w2
