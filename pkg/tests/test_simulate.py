"""Generators, scenario files, and the Monte-Carlo replicate loop."""

import json

import numpy as np
import pytest
from scipy.stats import spearmanr

from wmdtest import (
    MissingnessSpec,
    PopulationParams,
    ScenarioSpec,
    calibrate_latent_rho,
    generate,
    load_scenarios,
    normal_cdf,
    run_scenario,
    summarize,
)
from wmdtest.errors import InvalidParams, SchemaError


def continuous(mu1=0.0, mu2=0.0, s1=1.0, s2=1.0, rho=0.6):
    return PopulationParams(mu1=mu1, mu2=mu2, sigma1=s1, sigma2=s2, rho=rho)


class TestGenerate:
    def test_block_sizes_sum_to_n(self):
        rng = np.random.default_rng(0)
        s = generate(continuous(), MissingnessSpec(0.3, 0.4), 500, rng)
        assert s.n == 500

    def test_near_degenerate_correlation(self):
        rng = np.random.default_rng(1)
        s = generate(continuous(rho=0.999), MissingnessSpec(0.0, 0.0), 1000, rng)
        assert summarize(s).rho_hat > 0.95

    def test_one_sided_masking_rate(self):
        rng = np.random.default_rng(2)
        n = 10_000
        s = generate(continuous(), MissingnessSpec(0.0, 0.5), n, rng)
        assert s.n1 + s.n0 == n  # group 1 fully observed
        se = np.sqrt(0.25 / n)
        assert abs(s.n1 / n - 0.5) < 3 * se

    def test_conditional_pattern_rates_with_redraws(self):
        # both-missing rows are redrawn, so p12 renormalizes to 1/3 at (.5,.5)
        rng = np.random.default_rng(3)
        n = 30_000
        s = generate(continuous(), MissingnessSpec(0.5, 0.5), n, rng)
        p1, p2, p12 = MissingnessSpec(0.5, 0.5).pattern_rates()
        assert p12 == pytest.approx(1 / 3)
        assert abs(s.n0 / n - p12) < 3 * np.sqrt(p12 * (1 - p12) / n)
        assert abs((s.n0 + s.n1) / n - p1) < 3 * np.sqrt(p1 * (1 - p1) / n)

    def test_pattern_rates_sum_to_one(self):
        for q1, q2 in ((0.0, 0.5), (0.5, 0.5), (0.2, 0.7)):
            p1, p2, p12 = MissingnessSpec(q1, q2).pattern_rates()
            assert p1 + p2 - p12 == pytest.approx(1.0, abs=1e-15)
            assert p12 <= min(p1, p2)

    def test_discrete_quartile_cutpoints(self):
        q = [normal_cdf(c) for c in (-0.6744897501960817, 0.0, 0.6744897501960817)]
        assert np.allclose(q, [0.25, 0.5, 0.75], atol=1e-10)
        params = PopulationParams(
            mu1=0.0,
            mu2=0.0,
            sigma1=1.0,
            sigma2=1.0,
            rho=0.4,
            flavor="discrete",
            cutpoints=(-0.6744897501960817, 0.0, 0.6744897501960817),
        )
        rng = np.random.default_rng(4)
        n = 100_000
        s = generate(params, MissingnessSpec(0.0, 0.0), n, rng)
        values = s.y1_complete
        assert set(np.unique(values)) <= {0.0, 1.0, 2.0, 3.0}
        freq = np.bincount(values.astype(int), minlength=4) / n
        assert np.allclose(freq, 0.25, atol=3 * np.sqrt(0.25 * 0.75 / n))

    def test_determinism(self):
        a = generate(continuous(), MissingnessSpec(0.4, 0.2), 200, np.random.default_rng(9))
        b = generate(continuous(), MissingnessSpec(0.4, 0.2), 200, np.random.default_rng(9))
        assert np.array_equal(a.y1_complete, b.y1_complete)
        assert np.array_equal(a.y2_only, b.y2_only)

    def test_invalid_specs(self):
        with pytest.raises(InvalidParams):
            MissingnessSpec(1.0, 0.2)
        with pytest.raises(InvalidParams):
            PopulationParams(0, 0, 1.0, 1.0, 1.0)
        with pytest.raises(InvalidParams):
            PopulationParams(0, 0, 1.0, 1.0, 0.5, flavor="discrete", cutpoints=(1.0, 0.0, 2.0))


class TestCalibration:
    def test_discrete_spearman_target(self):
        params = PopulationParams(
            mu1=0.0,
            mu2=0.0,
            sigma1=1.0,
            sigma2=1.0,
            rho=0.5,
            flavor="discrete",
            cutpoints=(-0.6744897501960817, 0.0, 0.6744897501960817),
        )
        rho = calibrate_latent_rho(0.49, params, n_probe=60_000, seed=5, tol=0.01)
        check = generate(
            PopulationParams(
                mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0, rho=rho,
                flavor="discrete", cutpoints=params.cutpoints,
            ),
            MissingnessSpec(0.0, 0.0),
            60_000,
            np.random.default_rng(6),
        )
        realized = spearmanr(check.y1_complete, check.y2_complete).statistic
        assert abs(realized - 0.49) < 0.02
        # discretization attenuates: the latent rho must exceed the target
        assert rho > 0.49


def tiny_spec(**overrides):
    kwargs = dict(
        name="tiny",
        params=continuous(),
        missing=MissingnessSpec(0.0, 0.5),
        n=40,
        replicates=25,
        alpha=0.05,
        methods=("wmd-simple", "t-cp", "w-cp"),
        seed=42,
        se_mode="plugin",
        bootstrap_b=50,
    )
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


class TestRunScenario:
    def test_deterministic_reports(self):
        a = run_scenario(tiny_spec())
        b = run_scenario(tiny_spec())
        assert json.dumps([r for r in a.records()]) == json.dumps(
            [r for r in b.records()]
        )
        assert a.table() == b.table()

    def test_seed_changes_rates_not_schema(self):
        a = run_scenario(tiny_spec(replicates=60))
        b = run_scenario(tiny_spec(replicates=60, seed=43))
        ra, rb = a.records(), b.records()
        assert [set(r) for r in ra] == [set(r) for r in rb]
        assert any(
            x["rejection_rate"] != y["rejection_rate"] for x, y in zip(ra, rb)
        )

    def test_failures_counted_not_dropped(self):
        # heavy missingness at tiny n: some replicates lack two complete pairs
        spec = tiny_spec(
            missing=MissingnessSpec(0.55, 0.55),
            n=6,
            replicates=80,
            methods=("wmd-simple", "t-cp"),
        )
        report = run_scenario(spec)
        by_method = {oc.method: oc for oc in report.outcomes}
        assert by_method["wmd-simple"].failures > 0
        assert (
            by_method["wmd-simple"].evaluated
            + by_method["wmd-simple"].failures
            == 80
        )

    def test_bootstrap_mode_runs(self):
        spec = tiny_spec(
            se_mode="bootstrap", bootstrap_b=60, replicates=10, methods=("wmd-optimal",)
        )
        report = run_scenario(spec)
        assert report.outcomes[0].evaluated == 10

    def test_realized_averages_present(self):
        report = run_scenario(tiny_spec())
        assert set(report.realized) == {"p1", "p2", "p12", "rho"}
        assert report.realized["p1"] == pytest.approx(1.0)

    def test_mc_se_formula(self):
        report = run_scenario(tiny_spec(replicates=50))
        oc = report.outcomes[0]
        r = oc.rate
        assert oc.mc_se == pytest.approx(np.sqrt(r * (1 - r) / oc.evaluated))

    def test_rejects_bad_method_tag(self):
        with pytest.raises(Exception):
            tiny_spec(methods=("no-such-test",))

    def test_power_monotone_in_n_and_dominates_complete_pairs_t(self):
        # fixed effect, growing n: optimal-weight power must not decrease
        # (within 2 MC standard errors) and must not fall below the
        # complete-pairs t-test by more than 2 MC standard errors
        rates, ses, tcp = [], [], []
        for n in (20, 30, 50, 100):
            spec = ScenarioSpec(
                name=f"mono-{n}",
                params=PopulationParams(0.55, 0.0, 1.0, 1.0, 0.6),
                missing=MissingnessSpec(0.5, 0.5),
                n=n,
                replicates=500,
                alpha=0.05,
                methods=("wmd-optimal", "t-cp"),
                seed=81_000 + n,
                se_mode="bootstrap",
                bootstrap_b=300,
            )
            rep = run_scenario(spec)
            by = {oc.method: oc for oc in rep.outcomes}
            rates.append(by["wmd-optimal"].rate)
            ses.append(by["wmd-optimal"].mc_se)
            tcp.append(by["t-cp"])
        for i in range(1, len(rates)):
            slack = 2 * np.sqrt(ses[i] ** 2 + ses[i - 1] ** 2)
            assert rates[i] >= rates[i - 1] - slack
        for rate, se, base in zip(rates, ses, tcp):
            slack = 2 * np.sqrt(se**2 + base.mc_se**2)
            assert rate >= base.rate - slack


class TestScenarioFiles:
    def test_load_and_expand_n_grid(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text(
            "[null-case]\n"
            "rho = 0.6\n"
            "q1 = 0.5\n"
            "q2 = 0.5\n"
            "n = 20 30\n"
            "replicates = 10\n"
            "methods = wmd-optimal, wmd-simple\n"
            "seed = 7\n"
        )
        specs = load_scenarios(str(path))
        assert [s.name for s in specs] == ["null-case-n20", "null-case-n30"]
        assert specs[0].alpha == 0.05
        assert specs[0].se_mode == "bootstrap"
        assert specs[0].bootstrap_b == 1500
        assert specs[0].methods == ("wmd-optimal", "wmd-simple")

    def test_missing_key_reports_section(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text("[broken]\nrho = 0.5\n")
        with pytest.raises(SchemaError) as err:
            load_scenarios(str(path))
        assert "broken" in str(err.value)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text(
            "[x]\nrho=0.1\nq1=0\nq2=0.5\nn=20\nreplicates=5\n"
            "methods=t-cp\nseed=1\nbogus=3\n"
        )
        with pytest.raises(SchemaError) as err:
            load_scenarios(str(path))
        assert "bogus" in str(err.value)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text(
            "[x]\nrho=2.0\nq1=0\nq2=0.5\nn=20\nreplicates=5\nmethods=t-cp\nseed=1\n"
        )
        with pytest.raises(SchemaError):
            load_scenarios(str(path))

    def test_discrete_scenario(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text(
            "[disc]\nflavor=discrete\ncutpoints=-0.67 0.0 0.67\nrho=0.5\n"
            "q1=0.0\nq2=0.5\nn=30\nreplicates=5\nmethods=w-cp,w-im\nseed=2\n"
        )
        specs = load_scenarios(str(path))
        assert specs[0].params.flavor == "discrete"
        report = run_scenario(specs[0])
        assert len(report.outcomes) == 2

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "s.conf"
        path.write_text("\n")
        with pytest.raises(SchemaError):
            load_scenarios(str(path))
