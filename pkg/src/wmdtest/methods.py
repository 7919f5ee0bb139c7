"""Method tags shared by the command line and the simulation harness.

Tags: wmd-optimal | wmd-simple | wmd-complete | wmd-fixed(w1,w2) |
bhoj | bhoj(lambda) | t-cp | t-im | w-cp | w-im.  Parenthesized arguments are
part of the tag string, e.g. ``wmd-fixed(0.3,0.7)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .baselines import BaselineMethod, run_baseline
from .errors import InputError
from .inference import TestResult, run_test
from .sample import PartiallyPairedSample
from .weights import WeightStrategy

_TAG_RE = re.compile(r"^([a-z-]+)(?:\(([^)]*)\))?$")

_WMD_STRATEGIES = {
    "wmd-optimal": WeightStrategy.OPTIMAL,
    "wmd-simple": WeightStrategy.SIMPLE,
    "wmd-complete": WeightStrategy.COMPLETE_ONLY,
    "wmd-fixed": WeightStrategy.USER_FIXED,
    "bhoj": WeightStrategy.BHOJ,
}
_BASELINES = {m.value: m for m in BaselineMethod}


@dataclass(frozen=True)
class MethodSpec:
    tag: str
    kind: str  # "wmd" or "baseline"
    strategy: WeightStrategy | None = None
    baseline: BaselineMethod | None = None
    fixed: tuple[float, float] | None = None
    bhoj_lambda: float | None = None


def parse_method(tag: str) -> MethodSpec:
    """Parse a method tag, validating any parenthesized arguments."""
    m = _TAG_RE.match(tag.strip())
    if not m:
        raise InputError(f"malformed method tag {tag!r}")
    name, args = m.group(1), m.group(2)
    if name in _BASELINES:
        if args is not None:
            raise InputError(f"method {name!r} takes no arguments")
        return MethodSpec(tag=name, kind="baseline", baseline=_BASELINES[name])
    if name not in _WMD_STRATEGIES:
        raise InputError(f"unknown method {name!r}")
    strategy = _WMD_STRATEGIES[name]
    fixed = None
    lam = None
    if name == "wmd-fixed":
        if args is None:
            raise InputError("wmd-fixed needs weights, e.g. wmd-fixed(0.3,0.7)")
        parts = [p for p in re.split(r"[,\s]+", args.strip()) if p]
        if len(parts) != 2:
            raise InputError("wmd-fixed takes exactly two weights")
        try:
            w1, w2 = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise InputError(f"wmd-fixed weights must be numbers: {exc}") from exc
        if not (0.0 <= w1 <= 1.0 and 0.0 <= w2 <= 1.0):
            raise InputError("wmd-fixed weights must lie in [0, 1]")
        fixed = (w1, w2)
    elif name == "bhoj":
        if args is not None:
            try:
                lam = float(args.strip())
            except ValueError as exc:
                raise InputError(f"bhoj lambda must be a number: {exc}") from exc
            if not 0.0 <= lam <= 1.0:
                raise InputError("bhoj lambda must lie in [0, 1]")
    elif args is not None:
        raise InputError(f"method {name!r} takes no arguments")
    return MethodSpec(
        tag=tag.strip(), kind="wmd", strategy=strategy, fixed=fixed, bhoj_lambda=lam
    )


def run_method(
    spec: MethodSpec,
    sample: PartiallyPairedSample,
    *,
    se_mode: str = "bootstrap",
    bootstrap_b: int = 1500,
    seed: int | None = None,
) -> TestResult:
    """Run a parsed method; baselines ignore the standard-error settings."""
    if spec.kind == "baseline":
        return run_baseline(sample, spec.baseline)
    return run_test(
        sample,
        spec.strategy,
        se_method=se_mode,
        bootstrap_b=bootstrap_b,
        seed=seed,
        fixed=spec.fixed,
        bhoj_lambda=spec.bhoj_lambda,
    )
