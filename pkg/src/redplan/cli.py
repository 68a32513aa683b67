"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 domain error (guard violation,
infeasible B, malformed plan or trace).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, optimizer
from .assignment import BatchingPlan, balanced_plan, covering_probability, cyclic_plan, random_plan
from .distributions import Empirical, Exp, Pareto, ServiceDistribution, SExp
from .errors import DomainError, InfiniteMomentError
from .simulation import SimConfig, fmt, simulate
from .traces import durations_by_job, empirical_ccdf_points, load_trace, resample_experiment

_DIST_PARAMS = {
    "exp": (Exp, ("mu",)),
    "sexp": (SExp, ("delta", "mu")),
    "pareto": (Pareto, ("sigma", "alpha")),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_dist(spec: str) -> ServiceDistribution:
    """Parse ``family:key=value,...``, e.g. ``sexp:delta=0.05,mu=1``."""
    family, _, rest = spec.partition(":")
    family = family.strip().lower()
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"bad distribution parameter {item!r} (expected key=value)")
        params[key.strip()] = value.strip()
    if family == "empirical":
        if set(params) != {"file"}:
            raise UsageError("empirical distribution needs exactly file=PATH")
        return Empirical(_read_numbers(params["file"]))
    if family not in _DIST_PARAMS:
        raise UsageError(f"unknown distribution family {family!r}")
    cls, names = _DIST_PARAMS[family]
    if set(params) != set(names):
        raise UsageError(f"{family} needs parameters {', '.join(names)}")
    try:
        return cls(*(float(params[n]) for n in names))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise UsageError(f"non-numeric parameter in {spec!r}") from None


def _read_numbers(path: str) -> list[float]:
    values = []
    for line in Path(path).read_text().splitlines():
        field = line.split(",")[0].strip()
        if not field:
            continue
        try:
            values.append(float(field))
        except ValueError:
            if values:
                raise DomainError(f"{path}: non-numeric value {field!r}") from None
            # header line
    return values


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> SimConfig:
    return SimConfig(replications=args.reps, seed=args.seed, threads=args.threads)


def cmd_analyze(args) -> None:
    dist = parse_dist(args.dist)
    mean = analytics.mean_T(args.n, args.b, dist)
    try:
        cov, note = analytics.cov_T(args.n, args.b, dist), None
    except InfiniteMomentError as exc:
        cov, note = None, str(exc)
    record = {"n": args.n, "b": args.b, "mean": fmt(mean), "cov": fmt(cov)}
    if args.format == "json":
        _emit(args, json.dumps(record, indent=2) + "\n")
    elif args.format == "csv":
        _emit(args, _table_csv(record.keys(), [record.values()]))
    else:
        lines = [f"mean {_num(record['mean'])}", f"cov {_num(record['cov']) if cov is not None else 'undefined (' + note + ')'}"]
        _emit(args, "\n".join(lines) + "\n")


def _load_plan(args) -> BatchingPlan:
    if args.plan:
        return BatchingPlan.from_json(Path(args.plan).read_text())
    if args.n is None or args.b is None:
        raise UsageError("simulate needs --plan FILE or --scheme with --n and --b")
    if args.scheme == "balanced":
        return balanced_plan(args.n, args.b)
    if args.scheme == "cyclic":
        return cyclic_plan(args.n, args.b)
    plan = random_plan(args.n, args.b, np.random.default_rng(args.seed))
    if not plan.is_covering:
        raise DomainError("random plan leaves a batch without workers; try another --seed")
    return plan


def cmd_simulate(args) -> None:
    dist = parse_dist(args.dist)
    plan = _load_plan(args)
    config = SimConfig(args.reps, args.seed, bool(args.samples_csv), args.threads)
    res = simulate(plan, dist, config)
    if args.samples_csv:
        Path(args.samples_csv).write_text(res.samples_csv())
    _emit(args, res.to_csv() if args.format == "csv" else res.to_json() + "\n")


def _sweep(args, metric=None):
    dist = parse_dist(args.dist)
    return optimizer.sweep(args.n, dist, metric or args.metric, args.method, _config(args))


def cmd_sweep(args) -> None:
    s = _sweep(args)
    _emit(args, s.to_json() + "\n" if args.format == "json" else s.to_csv())


def cmd_optimize(args) -> None:
    dist = parse_dist(args.dist)
    report = None
    if args.method == "analytic":
        if isinstance(dist, (SExp, Exp)):
            delta = dist.delta if isinstance(dist, SExp) else 0.0
            fn = optimizer.sexp_regime_mean if args.metric == "mean" else optimizer.sexp_regime_cov
            report = fn(args.n, delta, dist.mu)
        elif isinstance(dist, Pareto):
            fn = optimizer.pareto_regime_mean if args.metric == "mean" else optimizer.pareto_regime_cov
            report = fn(args.n, dist.sigma, dist.alpha)
    s = report.sweep if report else optimizer.sweep(args.n, dist, args.metric, args.method, _config(args))
    out = {"n": args.n, "metric": args.metric, "best_b": s.best_b, "redundancy": args.n // s.best_b,
           "value": fmt(s.best_value), "regime": s.regime}
    if report:
        out["rule"] = report.to_dict()
    if args.format == "json":
        _emit(args, json.dumps(out, indent=2) + "\n")
    elif args.format == "csv":
        keys = ["n", "metric", "best_b", "redundancy", "value", "regime"]
        extra = [] if not report else ["rule_label", "agrees"]
        vals = [out[k] for k in keys] + ([] if not report else [report.label, int(report.agrees)])
        _emit(args, _table_csv(keys + extra, [vals]))
    else:
        lines = [f"best B {s.best_b} (redundancy {args.n // s.best_b}), {args.metric} {_num(out['value'])}",
                 f"regime {s.regime}"]
        if report:
            th = ", ".join(f"{k}={_num(fmt(v))}" for k, v in report.thresholds.items())
            lines.append(f"rule says {report.label} ({th}); agrees with sweep: {report.agrees}")
            lines.extend(f"note: {n}" for n in report.notes)
        _emit(args, "\n".join(lines) + "\n")


def cmd_covering(args) -> None:
    p = covering_probability(args.n, args.b)
    rec = {"n": args.n, "b": args.b, "fraction": f"{p.numerator}/{p.denominator}", "probability": fmt(float(p))}
    if args.format == "json":
        _emit(args, json.dumps(rec, indent=2) + "\n")
    elif args.format == "csv":
        _emit(args, _table_csv(rec.keys(), [rec.values()]))
    else:
        _emit(args, f"{rec['fraction']} ({_num(rec['probability'])})\n")


def _trace_jobs(args):
    records, dropped = load_trace(args.file)
    if dropped:
        print(f"dropped {dropped} rows with finish_time < schedule_time", file=sys.stderr)
    jobs = durations_by_job(records)
    if not jobs:
        raise DomainError(f"{args.file}: no usable records")
    return jobs


def _pick_job(args, jobs):
    if args.job is not None:
        if args.job not in jobs:
            raise DomainError(f"job {args.job!r} not in trace")
        return jobs[args.job]
    return max(sorted(jobs.values(), key=lambda j: j.job_id), key=len)


def cmd_trace_ccdf(args) -> None:
    jobs = _trace_jobs(args)
    selected = [_pick_job(args, jobs)] if args.job is not None else [jobs[k] for k in sorted(jobs)]
    rows = [(j.job_id, fmt(x), fmt(p)) for j in selected for x, p in empirical_ccdf_points(j.durations)]
    if args.format == "json":
        doc = [{"job_id": a, "x": x, "ccdf": p} for a, x, p in rows]
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        _emit(args, _table_csv(["job_id", "x", "ccdf"], rows))


def cmd_trace_experiment(args) -> None:
    job = _pick_job(args, _trace_jobs(args))
    table = resample_experiment(job.durations, args.n, _config(args))
    _emit(args, table.to_json() + "\n" if args.format == "json" else table.to_csv())


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--reps", type=int, default=100_000)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="redplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="closed-form mean and CoV")
    p.add_argument("dist")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo job time for a plan")
    p.add_argument("dist")
    p.add_argument("--plan", help="plan JSON file")
    p.add_argument("--scheme", choices=("balanced", "cyclic", "random"), default="balanced")
    p.add_argument("--n", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--samples-csv", help="also write raw job times here")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_ in (
        ("sweep", cmd_sweep, "metric at every feasible B"),
        ("optimize", cmd_optimize, "best B plus regime report"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("dist")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--metric", choices=("mean", "cov"), default="mean")
        p.add_argument("--method", choices=("analytic", "simulate"), default="analytic")
        p.set_defaults(func=func)

    p = sub.add_parser("covering", parents=[common], help="probability random assignment covers all batches")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.set_defaults(func=cmd_covering)

    p = sub.add_parser("trace-ccdf", parents=[common], help="empirical CCDF per job")
    p.add_argument("--file", required=True)
    p.add_argument("--job")
    p.set_defaults(func=cmd_trace_ccdf)

    p = sub.add_parser("trace-experiment", parents=[common], help="bootstrap normalized mean vs B")
    p.add_argument("--file", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--job", help="job id (default: the job with most tasks)")
    p.set_defaults(func=cmd_trace_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"redplan: error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"redplan: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"redplan: {exc}", file=sys.stderr)
        return 2
    return 0
