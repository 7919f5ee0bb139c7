"""Command-line front end.

Subcommands:

* ``test``      -- run one test on a two-column CSV of partially paired data.
* ``simulate``  -- run every scenario in a scenario file and write reports.

CSV format: a required header row, then two data columns (group 1 first,
group 2 second; column names are free).  An empty cell or the literal token
``NA`` marks a missing value; rows with both cells missing are dropped and
counted.  Decimal parsing always uses a dot.

Exit codes: 0 success, 2 input error, 3 statistical degeneracy, 4 internal
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

from .errors import EmptyFile, InputError, ParseError, StatError, WmdError
from .methods import parse_method, run_method
from .sample import PartiallyPairedSample, summarize, validate
from .simulate import load_scenarios, run_scenario, summary_table

_MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class CsvIngest:
    sample: PartiallyPairedSample
    dropped_both_missing: int
    rows_read: int


def _parse_cell(cell: str, line: int) -> float | None:
    cell = cell.strip()
    if cell in _MISSING_TOKENS:
        return None
    try:
        value = float(cell)
    except ValueError as exc:
        raise ParseError(f"cannot parse {cell!r} as a number", line=line) from exc
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {cell!r}", line=line)
    return value


def parse_csv(path: str) -> CsvIngest:
    """Read a two-column partially paired CSV into a sample."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    y1c, y2c, y1o, y2o = [], [], [], []
    dropped = 0
    rows = 0
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        if len(header) != 2:
            raise ParseError(
                f"expected 2 columns, found {len(header)}", line=1
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 cells, found {len(row)}", line=line)
            v1 = _parse_cell(row[0], line)
            v2 = _parse_cell(row[1], line)
            rows += 1
            if v1 is None and v2 is None:
                dropped += 1
            elif v2 is None:
                y1o.append(v1)
            elif v1 is None:
                y2o.append(v2)
            else:
                y1c.append(v1)
                y2c.append(v2)
    if rows == 0:
        raise EmptyFile(f"{path} has no data rows")
    sample = PartiallyPairedSample(y1c, y2c, y1o, y2o)
    return CsvIngest(sample=sample, dropped_both_missing=dropped, rows_read=rows)


def export_sample(sample: PartiallyPairedSample, path: str) -> None:
    """Write a sample back out in the same CSV format (round-trips exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group1", "group2"])
        for a, b in zip(sample.y1_complete, sample.y2_complete):
            writer.writerow([repr(float(a)), repr(float(b))])
        for a in sample.y1_only:
            writer.writerow([repr(float(a)), "NA"])
        for b in sample.y2_only:
            writer.writerow(["NA", repr(float(b))])


def _cmd_test(args) -> int:
    method = parse_method(args.method)
    ingest = parse_csv(args.input)
    sample = ingest.sample
    if args.export_sample:
        export_sample(sample, args.export_sample)
    regime = validate(sample)
    result = run_method(
        method,
        sample,
        se_mode=args.se,
        bootstrap_b=args.bootstrap,
        seed=args.seed,
    )
    reject = result.p_value < args.alpha
    stats = summarize(sample)

    if args.format == "jsonl":
        record = result.as_dict()
        record.update(
            regime=regime.value,
            alpha=args.alpha,
            reject=reject,
            dropped_both_missing=ingest.dropped_both_missing,
            p1_hat=stats.p1_hat,
            p2_hat=stats.p2_hat,
            p12_hat=stats.p12_hat,
            sigma1_hat=stats.sigma1_hat,
            sigma2_hat=stats.sigma2_hat,
            rho_hat=stats.rho_hat,
            mean_y1_complete=stats.mean_y1_complete,
            mean_y1_incomplete=stats.mean_y1_incomplete,
            mean_y2_complete=stats.mean_y2_complete,
            mean_y2_incomplete=stats.mean_y2_incomplete,
        )
        print(json.dumps(record))
        return 0

    w = result.weights
    se_desc = result.se_method
    if result.se_method == "bootstrap":
        se_desc = f"bootstrap (B={result.bootstrap_b}, seed={result.seed})"
    print(f"method: {result.method}    se: {se_desc}")
    print(
        f"subjects: {sample.n} (complete pairs {sample.n0}, "
        f"group-1 only {sample.n1}, group-2 only {sample.n2}, "
        f"dropped both-missing {ingest.dropped_both_missing})"
    )
    print(f"regime: {regime.value}")
    if w is not None:
        print(f"weights: w1={w.w1:.6g} w2={w.w2:.6g} ({w.strategy.value})")
    print(f"estimate:  {result.estimate:.6g}")
    print(f"std-error: {result.std_error:.6g}")
    print(f"statistic: {result.statistic:.6g}")
    print(f"p-value:   {result.p_value:.6g}")
    print(f"alpha: {args.alpha:g} -> {'reject' if reject else 'do not reject'} H0")
    print(
        f"summary: p1={stats.p1_hat:.6g} p2={stats.p2_hat:.6g} "
        f"p12={stats.p12_hat:.6g} sigma1={stats.sigma1_hat:.6g} "
        f"sigma2={stats.sigma2_hat:.6g} rho={stats.rho_hat:.6g}"
    )
    return 0


def _cmd_simulate(args) -> int:
    specs = load_scenarios(args.scenarios)
    os.makedirs(args.out, exist_ok=True)
    reports = []
    failed = None
    for spec in specs:
        try:
            report = run_scenario(spec)
        except WmdError as exc:
            failed = (spec.name, exc)
            break
        reports.append(report)
        base = os.path.join(args.out, spec.name)
        with open(base + ".txt", "w", encoding="utf-8") as fh:
            fh.write(report.table())
        with open(base + ".jsonl", "w", encoding="utf-8") as fh:
            for record in report.records():
                fh.write(json.dumps(record) + "\n")
    if args.format == "jsonl":
        for report in reports:
            for record in report.records():
                print(json.dumps(record))
    elif reports:
        print(summary_table(reports), end="")
    if failed is not None:
        name, exc = failed
        print(
            f"error[{exc.code}]: scenario {name!r} failed: {exc}", file=sys.stderr
        )
        return exc.exit_status
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wmdtest",
        description="Weighted mean-difference tests for partially paired data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run one test on a two-column CSV")
    t.add_argument("input", help="CSV with a header and two data columns")
    t.add_argument(
        "--method",
        default="wmd-optimal",
        help="wmd-optimal | wmd-simple | wmd-complete | wmd-fixed(w1,w2) | "
        "bhoj | bhoj(lambda) | t-cp | t-im | w-cp | w-im",
    )
    t.add_argument(
        "--se",
        choices=("bootstrap", "plugin"),
        default="bootstrap",
        help="standard-error method for the wmd tests (default bootstrap)",
    )
    t.add_argument(
        "--bootstrap",
        type=int,
        default=1500,
        metavar="B",
        help="bootstrap replicates (default 1500)",
    )
    t.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    t.add_argument("--alpha", type=float, default=0.05, help="level (default 0.05)")
    t.add_argument("--format", choices=("table", "jsonl"), default="table")
    t.add_argument(
        "--export-sample",
        metavar="PATH",
        help="write the parsed sample back out as CSV (debug round-trip)",
    )
    t.set_defaults(func=_cmd_test)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("scenarios", help="INI-style scenario file")
    s.add_argument(
        "--out",
        default="reports",
        help="directory for per-scenario .txt/.jsonl reports (default reports/)",
    )
    s.add_argument("--format", choices=("table", "jsonl"), default="table")
    s.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WmdError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error[internal-error]: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
