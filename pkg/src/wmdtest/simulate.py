"""Monte-Carlo harness: synthetic generators, scenarios, rejection-rate tables.

Data generation draws correlated pairs from a bivariate normal via the
standard factorization y2 = mu2 + sigma2*(rho*z1 + sqrt(1-rho^2)*z2), with an
optional discrete-interval flavor that thresholds each marginal at three
cutpoints into scores {0, 1, 2, 3}.  Each coordinate is then masked
independently (completely at random); rows losing both values are redrawn so
every retained subject is informative, which conditions the pattern
probabilities on at-least-one-observed.

Scenario files are INI-style key/value blocks, one scenario per section; see
``load_scenarios`` for the schema.  Everything is driven by explicit seeds:
replicate r of a scenario uses the r-th spawned child of the scenario seed,
so reports are byte-identical across runs regardless of evaluation order.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .core import MomentParams
from .errors import InvalidParams, SchemaError, StatError
from .methods import parse_method, run_method
from .sample import PartiallyPairedSample, summarize

_FLAVORS = ("continuous", "discrete")


@dataclass(frozen=True)
class PopulationParams:
    """Latent bivariate-normal population, optionally discretized.

    For the discrete flavor the moments describe the latent normal scale;
    generated values are the counts of cutpoints below the latent draw, hence
    scores in {0, 1, 2, 3}.
    """

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    rho: float
    flavor: str = "continuous"
    cutpoints: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not (self.sigma1 > 0.0 and self.sigma2 > 0.0):
            raise InvalidParams("standard deviations must be positive")
        if not -1.0 < self.rho < 1.0:
            raise InvalidParams("rho must lie strictly inside (-1, 1)")
        if self.flavor not in _FLAVORS:
            raise InvalidParams(f"flavor must be one of {_FLAVORS}")
        if self.flavor == "discrete":
            if self.cutpoints is None or len(self.cutpoints) != 3:
                raise InvalidParams("discrete flavor needs exactly 3 cutpoints")
            if not (self.cutpoints[0] < self.cutpoints[1] < self.cutpoints[2]):
                raise InvalidParams("cutpoints must be strictly increasing")
        elif self.cutpoints is not None:
            raise InvalidParams("cutpoints only apply to the discrete flavor")


@dataclass(frozen=True)
class MissingnessSpec:
    """Independent per-group masking: q_g is the chance group g is missing."""

    q1: float
    q2: float
    mechanism: str = "independent-per-group"

    def __post_init__(self):
        if not (0.0 <= self.q1 < 1.0 and 0.0 <= self.q2 < 1.0):
            raise InvalidParams("missingness probabilities must lie in [0, 1)")

    def pattern_rates(self) -> tuple[float, float, float]:
        """(p1, p2, p12) conditioned on at least one value observed.

        Redrawing both-missing rows renormalizes the raw rates by
        1 - q1*q2, which keeps p1 + p2 - p12 = 1 exactly.
        """
        keep = 1.0 - self.q1 * self.q2
        return (
            (1.0 - self.q1) / keep,
            (1.0 - self.q2) / keep,
            (1.0 - self.q1) * (1.0 - self.q2) / keep,
        )


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell: population, masking, size, methods, seed."""

    name: str
    params: PopulationParams
    missing: MissingnessSpec
    n: int
    replicates: int
    alpha: float
    methods: tuple[str, ...]
    seed: int
    se_mode: str = "bootstrap"
    bootstrap_b: int = 1500

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidParams("replicates must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParams("alpha must lie strictly between 0 and 1")
        if self.n < 2:
            raise InvalidParams("n must be at least 2")
        if self.se_mode not in ("plugin", "bootstrap"):
            raise InvalidParams("se mode must be 'plugin' or 'bootstrap'")
        for tag in self.methods:
            parse_method(tag)

    def moments(self) -> MomentParams:
        """Population inputs to the variance formula (continuous flavor)."""
        p1, p2, p12 = self.missing.pattern_rates()
        return MomentParams(
            p1=p1,
            p2=p2,
            p12=p12,
            sigma1=self.params.sigma1,
            sigma2=self.params.sigma2,
            rho=self.params.rho,
        )


@dataclass(frozen=True)
class MethodOutcome:
    method: str
    rejections: int
    evaluated: int
    failures: int

    @property
    def rate(self) -> float:
        return self.rejections / self.evaluated if self.evaluated else math.nan

    @property
    def mc_se(self) -> float:
        if not self.evaluated:
            return math.nan
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.evaluated)


@dataclass(frozen=True)
class SimulationReport:
    """Rejection rates with Monte-Carlo standard errors for one scenario."""

    spec: ScenarioSpec
    outcomes: tuple[MethodOutcome, ...]
    realized: dict = field(default_factory=dict)

    def records(self) -> list[dict]:
        """One flat machine-readable record per method."""
        base = {
            "scenario": self.spec.name,
            "flavor": self.spec.params.flavor,
            "mu1": self.spec.params.mu1,
            "mu2": self.spec.params.mu2,
            "sigma1": self.spec.params.sigma1,
            "sigma2": self.spec.params.sigma2,
            "rho": self.spec.params.rho,
            "cutpoints": list(self.spec.params.cutpoints)
            if self.spec.params.cutpoints
            else None,
            "q1": self.spec.missing.q1,
            "q2": self.spec.missing.q2,
            "n": self.spec.n,
            "replicates": self.spec.replicates,
            "alpha": self.spec.alpha,
            "se": self.spec.se_mode,
            "bootstrap_b": self.spec.bootstrap_b,
            "seed": self.spec.seed,
        }
        out = []
        for oc in self.outcomes:
            rec = dict(base)
            rec.update(
                method=oc.method,
                rejections=oc.rejections,
                evaluated=oc.evaluated,
                failures=oc.failures,
                rejection_rate=oc.rate,
                mc_se=oc.mc_se,
            )
            rec.update({f"realized_{k}": v for k, v in self.realized.items()})
            out.append(rec)
        return out

    def table(self) -> str:
        """Human-readable aligned table for this scenario."""
        s = self.spec
        head = (
            f"scenario: {s.name}\n"
            f"  flavor={s.params.flavor} mu1={s.params.mu1:g} mu2={s.params.mu2:g} "
            f"sigma1={s.params.sigma1:g} sigma2={s.params.sigma2:g} rho={s.params.rho:g}\n"
            f"  q1={s.missing.q1:g} q2={s.missing.q2:g} n={s.n} "
            f"replicates={s.replicates} alpha={s.alpha:g} se={s.se_mode} "
            f"B={s.bootstrap_b} seed={s.seed}\n"
        )
        lines = [head, f"  {'method':<16}{'rate':>8}{'mc-se':>9}{'fail':>6}"]
        for oc in self.outcomes:
            lines.append(
                f"  {oc.method:<16}{oc.rate:>8.4f}{oc.mc_se:>9.4f}{oc.failures:>6d}"
            )
        if self.realized:
            r = self.realized
            lines.append(
                "  realized averages: "
                f"p1={r['p1']:.4f} p2={r['p2']:.4f} p12={r['p12']:.4f} "
                f"rho={r['rho']:.4f}"
            )
        return "\n".join(lines) + "\n"


def generate(
    params: PopulationParams,
    missing: MissingnessSpec,
    n: int,
    rng: np.random.Generator,
) -> PartiallyPairedSample:
    """Draw one partially paired sample of exactly n informative subjects."""
    y1 = np.empty(n)
    y2 = np.empty(n)
    r1 = np.empty(n, dtype=bool)
    r2 = np.empty(n, dtype=bool)
    cross = math.sqrt(1.0 - params.rho * params.rho)
    todo = np.arange(n)
    while todo.size:
        k = todo.size
        z1 = rng.standard_normal(k)
        z2 = rng.standard_normal(k)
        y1[todo] = params.mu1 + params.sigma1 * z1
        y2[todo] = params.mu2 + params.sigma2 * (params.rho * z1 + cross * z2)
        r1[todo] = rng.random(k) >= missing.q1
        r2[todo] = rng.random(k) >= missing.q2
        todo = todo[~(r1[todo] | r2[todo])]
    if params.flavor == "discrete":
        cuts = np.asarray(params.cutpoints)
        y1 = np.searchsorted(cuts, y1, side="right").astype(float)
        y2 = np.searchsorted(cuts, y2, side="right").astype(float)
    both = r1 & r2
    return PartiallyPairedSample(
        y1_complete=y1[both],
        y2_complete=y2[both],
        y1_only=y1[r1 & ~r2],
        y2_only=y2[~r1 & r2],
    )


def run_scenario(spec: ScenarioSpec) -> SimulationReport:
    """Run every requested method over fresh replicates and tally rejections.

    Per-replicate method failures (statistical degeneracy) are counted and
    excluded from that method's denominator.  Replicate r draws from the r-th
    spawned child of the scenario seed, so the report is deterministic.
    """
    parsed = [parse_method(tag) for tag in spec.methods]
    rejections = [0] * len(parsed)
    evaluated = [0] * len(parsed)
    failures = [0] * len(parsed)
    realized_sums = np.zeros(4)
    realized_n = 0

    children = np.random.SeedSequence(spec.seed).spawn(spec.replicates)
    for child in children:
        rng = np.random.default_rng(child)
        sample = generate(spec.params, spec.missing, spec.n, rng)
        try:
            stats = summarize(sample)
            realized_sums += (
                stats.p1_hat,
                stats.p2_hat,
                stats.p12_hat,
                stats.rho_hat,
            )
            realized_n += 1
        except StatError:
            pass
        # One seed per requested method, drawn in listed order.
        seeds = [int(rng.integers(2**63)) for _ in parsed]
        for i, method in enumerate(parsed):
            try:
                result = run_method(
                    method,
                    sample,
                    se_mode=spec.se_mode,
                    bootstrap_b=spec.bootstrap_b,
                    seed=seeds[i],
                )
            except StatError:
                failures[i] += 1
                continue
            evaluated[i] += 1
            if result.p_value < spec.alpha:
                rejections[i] += 1

    outcomes = tuple(
        MethodOutcome(spec.methods[i], rejections[i], evaluated[i], failures[i])
        for i in range(len(parsed))
    )
    realized = {}
    if realized_n:
        avg = realized_sums / realized_n
        realized = {
            "p1": float(avg[0]),
            "p2": float(avg[1]),
            "p12": float(avg[2]),
            "rho": float(avg[3]),
        }
    return SimulationReport(spec=spec, outcomes=outcomes, realized=realized)


def realized_spearman(
    params: PopulationParams, n: int, rng: np.random.Generator
) -> float:
    """Spearman correlation of one large fully observed draw."""
    from scipy.stats import spearmanr

    nothing_missing = MissingnessSpec(0.0, 0.0)
    sample = generate(params, nothing_missing, n, rng)
    return float(spearmanr(sample.y1_complete, sample.y2_complete).statistic)


def calibrate_latent_rho(
    target: float,
    params: PopulationParams,
    *,
    n_probe: int = 200_000,
    seed: int = 0,
    tol: float = 0.005,
    max_iter: int = 40,
) -> float:
    """Latent-normal rho whose generated data hit a target Spearman correlation.

    Bisection on rho against the realized Spearman correlation of a large
    probe draw; mainly useful for the discrete flavor, where discretization
    attenuates the latent correlation.
    """
    if not -0.99 < target < 0.99:
        raise InvalidParams("target Spearman correlation out of range")

    def probe(rho: float) -> float:
        trial = PopulationParams(
            mu1=params.mu1,
            mu2=params.mu2,
            sigma1=params.sigma1,
            sigma2=params.sigma2,
            rho=rho,
            flavor=params.flavor,
            cutpoints=params.cutpoints,
        )
        return realized_spearman(trial, n_probe, np.random.default_rng(seed))

    lo, hi = -0.999, 0.999
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        got = probe(mid)
        if abs(got - target) <= tol:
            return mid
        if got < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_REQUIRED_KEYS = {"rho", "q1", "q2", "n", "replicates", "methods", "seed"}
_KNOWN_KEYS = _REQUIRED_KEYS | {
    "flavor",
    "mu1",
    "mu2",
    "sigma1",
    "sigma2",
    "cutpoints",
    "alpha",
    "se",
    "bootstrap_b",
    "target_spearman",
}


def _split(value: str) -> list[str]:
    return value.replace(",", " ").split()


def load_scenarios(path: str) -> list[ScenarioSpec]:
    """Parse an INI-style scenario file into one spec per section and n.

    Section schema (defaults in brackets):

        flavor      continuous | discrete           [continuous]
        mu1 mu2     population means                 [0.0]
        sigma1 sigma2  population standard deviations [1.0]
        rho         latent correlation               (required)
        cutpoints   3 ascending reals, discrete only
        target_spearman  optional; discrete only -- recalibrates rho
        q1 q2       per-group missingness in [0, 1)  (required)
        n           one or more sample sizes         (required)
        replicates  Monte-Carlo replicates           (required)
        alpha       significance level               [0.05]
        methods     method tags, space/comma set     (required)
        se          plugin | bootstrap               [bootstrap]
        bootstrap_b bootstrap replicates             [1500]
        seed        integer                          (required)
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read scenario file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise SchemaError(f"malformed scenario file {path}: {exc}") from exc
    if not parser.sections():
        raise SchemaError(f"scenario file {path} declares no scenarios")

    specs: list[ScenarioSpec] = []
    for section in parser.sections():
        raw = dict(parser.items(section))
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise SchemaError(f"[{section}]: unknown keys {sorted(unknown)}")
        missing_keys = _REQUIRED_KEYS - set(raw)
        if missing_keys:
            raise SchemaError(f"[{section}]: missing keys {sorted(missing_keys)}")

        def grab(key, conv, default=None, sec=section, values=raw):
            if key not in values:
                return default
            try:
                return conv(values[key])
            except (ValueError, InvalidParams) as exc:
                raise SchemaError(f"[{sec}] {key}: {exc}") from exc

        flavor = grab("flavor", str, "continuous")
        cutpoints = None
        if "cutpoints" in raw:
            vals = [float(v) for v in _split(raw["cutpoints"])]
            cutpoints = tuple(vals)
        try:
            params = PopulationParams(
                mu1=grab("mu1", float, 0.0),
                mu2=grab("mu2", float, 0.0),
                sigma1=grab("sigma1", float, 1.0),
                sigma2=grab("sigma2", float, 1.0),
                rho=grab("rho", float),
                flavor=flavor,
                cutpoints=cutpoints,
            )
            if "target_spearman" in raw:
                if flavor != "discrete":
                    raise SchemaError(
                        f"[{section}]: target_spearman applies to the discrete flavor"
                    )
                rho = calibrate_latent_rho(
                    grab("target_spearman", float),
                    params,
                    seed=grab("seed", int),
                )
                params = PopulationParams(
                    mu1=params.mu1,
                    mu2=params.mu2,
                    sigma1=params.sigma1,
                    sigma2=params.sigma2,
                    rho=rho,
                    flavor=flavor,
                    cutpoints=cutpoints,
                )
            missing = MissingnessSpec(q1=grab("q1", float), q2=grab("q2", float))
            n_grid = [int(v) for v in _split(raw["n"])]
            methods = tuple(_split(raw["methods"]))
            for i, n in enumerate(n_grid):
                specs.append(
                    ScenarioSpec(
                        name=section if len(n_grid) == 1 else f"{section}-n{n}",
                        params=params,
                        missing=missing,
                        n=n,
                        replicates=grab("replicates", int),
                        alpha=grab("alpha", float, 0.05),
                        methods=methods,
                        seed=grab("seed", int),
                        se_mode=grab("se", str, "bootstrap"),
                        bootstrap_b=grab("bootstrap_b", int, 1500),
                    )
                )
        except InvalidParams as exc:
            raise SchemaError(f"[{section}]: {exc}") from exc
    return specs


def summary_table(reports: list[SimulationReport]) -> str:
    """Cross-scenario overview: corr | missing | n | one column per method."""
    methods: list[str] = []
    for rep in reports:
        for oc in rep.outcomes:
            if oc.method not in methods:
                methods.append(oc.method)
    width = max([12] + [len(m) + 2 for m in methods])
    header = f"{'corr':>6}  {'missing':>12}  {'n':>5}  " + "".join(
        f"{m:>{width}}" for m in methods
    )
    lines = [header]
    for rep in reports:
        s = rep.spec
        miss = f"({s.missing.q1 * 100:.0f}%,{s.missing.q2 * 100:.0f}%)"
        by_method = {oc.method: oc for oc in rep.outcomes}
        cells = "".join(
            f"{by_method[m].rate:>{width}.3f}" if m in by_method else " " * width
            for m in methods
        )
        lines.append(f"{s.params.rho:>6.2f}  {miss:>12}  {s.n:>5d}  {cells}")
    return "\n".join(lines) + "\n"
