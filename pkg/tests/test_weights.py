"""Weight strategies, with grid-search oracles for the optimal weights."""

import numpy as np
import pytest
from scipy.optimize import minimize

from wmdtest import (
    MissingPattern,
    MomentParams,
    PartiallyPairedSample,
    asymptotic_variance,
    bhoj_weights,
    boundary_candidates,
    clamp_unit,
    complete_only_weights,
    interior_root,
    optimal_weights,
    simple_weights,
    weighted_mean_difference,
)
from wmdtest.errors import DegenerateBhoj, InvalidParams
from wmdtest.weights import WeightPair, WeightStrategy

from test_core import random_moments, random_sample


def objective(m: MomentParams):
    """Straight-line variance surface, independent of the library evaluator."""

    def f(w1, w2):
        return (
            (w1 * w1 / m.p12 + (1 - w1) ** 2 / (m.p1 - m.p12)) * m.sigma1**2
            + (w2 * w2 / m.p12 + (1 - w2) ** 2 / (m.p2 - m.p12)) * m.sigma2**2
            - 2 * w1 * w2 * m.rho * m.sigma1 * m.sigma2 / m.p12
        )

    return f


def grid_minimum(m: MomentParams, k=401, refine=True):
    """Global minimum by dense grid plus local refinement."""
    g = np.linspace(0.0, 1.0, k)
    a = m.sigma1**2 / m.p12
    b = m.sigma1**2 / (m.p1 - m.p12)
    c = m.sigma2**2 / m.p12
    d = m.sigma2**2 / (m.p2 - m.p12)
    e = 2.0 * m.rho * m.sigma1 * m.sigma2 / m.p12
    f1 = a * g * g + b * (1 - g) ** 2
    f2 = c * g * g + d * (1 - g) ** 2
    surface = f1[:, None] + f2[None, :] - e * np.outer(g, g)
    i, j = np.unravel_index(np.argmin(surface), surface.shape)
    w0 = np.array([g[i], g[j]])
    if not refine:
        return float(surface[i, j]), (float(g[i]), float(g[j]))
    f = objective(m)
    res = minimize(
        lambda w: f(w[0], w[1]),
        w0,
        method="L-BFGS-B",
        bounds=[(0.0, 1.0), (0.0, 1.0)],
        options={"ftol": 1e-15, "gtol": 1e-12},
    )
    best = min(float(res.fun), float(surface[i, j]))
    w = res.x if res.fun <= surface[i, j] else w0
    return best, (float(w[0]), float(w[1]))


class TestClamp:
    @pytest.mark.parametrize(
        "z,expected", [(-0.3, 0.0), (0.42, 0.42), (1.7, 1.0), (0.0, 0.0), (1.0, 1.0)]
    )
    def test_values(self, z, expected):
        assert clamp_unit(z) == expected


class TestInteriorRoot:
    def test_zero_correlation_decouples(self):
        m = MomentParams(0.8, 0.7, 0.5, 1.0, 2.0, 0.0)
        w1, w2 = interior_root(m)
        assert w1 == pytest.approx(0.5 / 0.8, abs=1e-14)
        assert w2 == pytest.approx(0.5 / 0.7, abs=1e-14)

    def test_full_observation(self):
        m = MomentParams(1.0, 1.0, 1.0, 1.0, 2.0, 0.5)
        assert interior_root(m) == pytest.approx((1.0, 1.0), abs=1e-14)

    def test_against_grid_refinement_oracle(self):
        m = MomentParams(0.8, 0.7, 0.5, 1.0, 2.0, 0.6)
        root = interior_root(m)
        _, argmin = grid_minimum(m, k=2001)
        assert root[0] == pytest.approx(argmin[0], abs=1e-6)
        assert root[1] == pytest.approx(argmin[1], abs=1e-6)

    def test_is_stationary_by_finite_differences(self):
        m = random_moments(7)
        w1, w2 = interior_root(m)
        f = objective(m)
        h = 1e-6
        g1 = (f(w1 + h, w2) - f(w1 - h, w2)) / (2 * h)
        g2 = (f(w1, w2 + h) - f(w1, w2 - h)) / (2 * h)
        assert abs(g1) < 1e-6
        assert abs(g2) < 1e-6


class TestBoundaryCandidates:
    def test_zero_correlation_structure(self):
        m = MomentParams(0.8, 0.7, 0.5, 1.3, 0.9, 0.0)
        cands = boundary_candidates(m)
        assert cands[0] == pytest.approx((0.0, 0.5 / 0.7), abs=1e-14)
        assert cands[1] == pytest.approx((1.0, 0.5 / 0.7), abs=1e-14)
        assert cands[2] == pytest.approx((0.5 / 0.8, 0.0), abs=1e-14)
        assert cands[3] == pytest.approx((0.5 / 0.8, 1.0), abs=1e-14)

    def test_symmetric_parameters_give_symmetric_set(self):
        m = MomentParams(0.75, 0.75, 0.5, 1.4, 1.4, 0.55)
        cands = {(round(a, 12), round(b, 12)) for a, b in boundary_candidates(m)}
        swapped = {(b, a) for a, b in cands}
        assert cands == swapped

    @pytest.mark.parametrize("seed", range(30))
    def test_each_candidate_minimizes_its_edge(self, seed):
        m = random_moments(seed)
        f = objective(m)
        cands = boundary_candidates(m)
        grid = np.linspace(0.0, 1.0, 10_001)
        edges = [
            lambda t: f(0.0, t),
            lambda t: f(1.0, t),
            lambda t: f(t, 0.0),
            lambda t: f(t, 1.0),
        ]
        frees = [cands[0][1], cands[1][1], cands[2][0], cands[3][0]]
        for edge, free in zip(edges, frees):
            vals = edge(grid)
            assert edge(free) <= vals.min() + 1e-10

    def test_all_coordinates_in_unit_square(self):
        for seed in range(50):
            m = random_moments(seed)
            for w1, w2 in boundary_candidates(m):
                assert 0.0 <= w1 <= 1.0
                assert 0.0 <= w2 <= 1.0


class TestOptimalWeights:
    def test_one_sided_uncorrelated_half_missing(self):
        # missing in group 1 only, rho=0, half observed: free weight is 1/2
        m = MomentParams(0.5, 1.0, 0.5, 1.0, 1.0, 0.0)
        sol = optimal_weights(m, MissingPattern.MISSING_IN_GROUP1)
        assert sol.weights.w1 == 1.0
        assert sol.weights.w2 == pytest.approx(0.5, abs=1e-14)
        assert sol.location == "interior"

    def test_one_sided_clamped_to_one(self):
        # strong correlation and sigma ratio push the raw weight past 1
        m = MomentParams(0.9, 1.0, 0.9, 2.0, 1.0, 0.9)
        sol = optimal_weights(m, MissingPattern.MISSING_IN_GROUP1)
        assert sol.weights.w2 == 1.0
        assert sol.location == "boundary"
        assert sol.interior_root[1] > 1.0

    def test_one_sided_matches_grid(self):
        m = MomentParams(0.6, 1.0, 0.6, 1.0, 2.0, -0.4)
        sol = optimal_weights(m, MissingPattern.MISSING_IN_GROUP1)
        vals = [
            asymptotic_variance(m, 1.0, float(t), MissingPattern.MISSING_IN_GROUP1)
            for t in np.linspace(0, 1, 2001)
        ]
        assert sol.objective <= min(vals) + 1e-12

    def test_none_missing(self):
        m = MomentParams(1.0, 1.0, 1.0, 1.0, 1.0, 0.3)
        sol = optimal_weights(m, MissingPattern.NONE_MISSING)
        assert (sol.weights.w1, sol.weights.w2) == (1.0, 1.0)

    @pytest.mark.parametrize("seed", range(200))
    def test_global_optimality_against_grid_oracle(self, seed):
        m = random_moments(seed)
        sol = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
        best, _ = grid_minimum(m, k=401)
        assert sol.objective <= best + 1e-9
        assert abs(sol.objective - best) <= 1e-6 * max(1.0, best)

    def test_interior_solution_reports_root(self):
        m = MomentParams(0.8, 0.7, 0.5, 1.0, 2.0, 0.6)
        sol = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
        assert sol.location == "interior"
        assert (sol.weights.w1, sol.weights.w2) == sol.interior_root

    def test_boundary_tie_break_is_deterministic(self):
        # symmetric surface: candidates tie pairwise, lowest index wins
        m = MomentParams(0.6, 0.6, 0.2, 1.0, 1.0, -0.95)
        a = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
        b = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
        assert (a.weights.w1, a.weights.w2) == (b.weights.w1, b.weights.w2)
        if a.location == "boundary":
            assert a.boundary_index is not None

    def test_weights_exactly_inside_unit_square(self):
        for seed in range(100):
            m = random_moments(seed)
            sol = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
            assert 0.0 <= sol.weights.w1 <= 1.0
            assert 0.0 <= sol.weights.w2 <= 1.0

    def test_rho_to_zero_limit_recovers_simple_rates(self):
        base = dict(p1=0.8, p2=0.7, p12=0.5, sigma1=1.0, sigma2=2.0)
        sol = optimal_weights(
            MomentParams(rho=1e-9, **base), MissingPattern.MISSING_IN_BOTH
        )
        assert sol.weights.w1 == pytest.approx(0.5 / 0.8, abs=1e-8)
        assert sol.weights.w2 == pytest.approx(0.5 / 0.7, abs=1e-8)

    def test_scale_invariance_in_sigma(self):
        m = random_moments(11)
        scaled = MomentParams(
            m.p1, m.p2, m.p12, 3.0 * m.sigma1, 3.0 * m.sigma2, m.rho
        )
        a = optimal_weights(m, MissingPattern.MISSING_IN_BOTH)
        b = optimal_weights(scaled, MissingPattern.MISSING_IN_BOTH)
        assert a.weights.w1 == pytest.approx(b.weights.w1, abs=1e-12)
        assert a.weights.w2 == pytest.approx(b.weights.w2, abs=1e-12)

    def test_objective_continuity_under_small_perturbations(self):
        m = MomentParams(0.7, 0.65, 0.4, 1.2, 0.8, 0.5)
        base = optimal_weights(m, MissingPattern.MISSING_IN_BOTH).objective
        eps = 1e-6
        for field, value in (
            ("p1", m.p1 + eps),
            ("p2", m.p2 + eps),
            ("p12", m.p12 + eps),
            ("sigma1", m.sigma1 + eps),
            ("sigma2", m.sigma2 + eps),
            ("rho", m.rho + eps),
        ):
            kwargs = dict(
                p1=m.p1, p2=m.p2, p12=m.p12,
                sigma1=m.sigma1, sigma2=m.sigma2, rho=m.rho,
            )
            kwargs[field] = value
            perturbed = optimal_weights(
                MomentParams(**kwargs), MissingPattern.MISSING_IN_BOTH
            ).objective
            assert abs(perturbed - base) < 1e-4


class TestSimpleAndFixedWeights:
    def test_simple_weight_values(self):
        s = random_sample(3, n0=10, n1=10, n2=0)
        w = simple_weights(s)
        assert (w.w1, w.w2) == (0.5, 1.0)

    def test_fully_paired_simple_equals_complete_only(self):
        s = random_sample(4, n0=7, n1=0, n2=0)
        assert (simple_weights(s).w1, simple_weights(s).w2) == (1.0, 1.0)
        assert (complete_only_weights().w1, complete_only_weights().w2) == (1.0, 1.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_simple_weight_estimate_is_pooled_difference(self, seed):
        s = random_sample(seed)
        w = simple_weights(s)
        got = weighted_mean_difference(s, w.w1, w.w2)
        expected = s.y1_observed().mean() - s.y2_observed().mean()
        assert got == pytest.approx(expected, abs=1e-12)

    def test_weight_pair_validates_range(self):
        with pytest.raises(InvalidParams):
            WeightPair(1.5, 0.5, WeightStrategy.USER_FIXED)


class TestBhojWeights:
    def test_lambda_one_keeps_complete_pairs_only(self):
        s = random_sample(6, n0=8, n1=4, n2=5)
        w = bhoj_weights(s, 1.0)
        assert (w.w1, w.w2) == (1.0, 1.0)

    def test_lambda_zero_drops_complete_pairs(self):
        s = random_sample(6, n0=8, n1=4, n2=5)
        w = bhoj_weights(s, 0.0)
        assert (w.w1, w.w2) == (0.0, 0.0)

    def test_half_lambda_against_straight_line_transcription(self):
        s = random_sample(42, n0=9, n1=5, n2=6)
        w = bhoj_weights(s, 0.5)
        d = s.y1_complete - s.y2_complete
        sd_paired = np.std(d, ddof=1)
        pooled_ss = ((s.y1_only - s.y1_only.mean()) ** 2).sum() + (
            (s.y2_only - s.y2_only.mean()) ** 2
        ).sum()
        s1 = np.sqrt(pooled_ss / (s.n1 + s.n2 - 2))
        lam = 0.5
        a = lam / (sd_paired / np.sqrt(s.n0))
        b = (1 - lam) / (s1 / np.sqrt(1 / s.n1 + 1 / s.n2))
        assert w.w1 == pytest.approx(a / (a + b), rel=1e-13)
        assert w.w1 == w.w2

    def test_default_lambda_is_pairing_fraction(self):
        s = random_sample(8, n0=10, n1=5, n2=5)
        defaulted = bhoj_weights(s)
        explicit = bhoj_weights(s, s.n0 / s.n)
        assert defaulted.w1 == pytest.approx(explicit.w1, abs=1e-15)

    def test_requires_unpaired_blocks(self):
        s = random_sample(9, n0=10, n1=0, n2=5)
        with pytest.raises(DegenerateBhoj):
            bhoj_weights(s, 0.5)

    def test_zero_paired_spread(self):
        s = PartiallyPairedSample([1.0, 2.0], [0.0, 1.0], [1.0, 2.0], [3.0, 4.0])
        with pytest.raises(DegenerateBhoj):
            bhoj_weights(s, 0.5)
