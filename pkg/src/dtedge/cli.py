"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 invalid or infeasible configuration,
3 an oracle check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import config as cfgmod
from . import oracles, plotting
from .model import InfeasibleError
from .simulator import (
    SWEEP_AXES,
    Policy,
    SweepRow,
    aggregate,
    run_episode,
    sweep,
    write_trace,
)

log = logging.getLogger("dtedge")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3

CSV_HEADER = (
    "sweep_value",
    "policy",
    "beta",
    "avg_aoi",
    "aoi_ci",
    "avg_energy_j",
    "energy_ci",
    "avg_cost",
    "cost_ci",
    "realizations",
    "base_seed",
)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _num(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def result_rows(rows: list[SweepRow], base_seed: int) -> list[list[str]]:
    out = []
    for r in rows:
        m = r.metrics
        out.append([
            _num(r.value), r.policy.kind, _num(r.policy.effective_beta),
            _num(m.avg_aoi), _num(m.aoi_ci), _num(m.avg_energy), _num(m.energy_ci),
            _num(m.avg_cost), _num(m.cost_ci), str(m.realizations), str(base_seed),
        ])
    return out


def write_results(rows: list[SweepRow], base_seed: int, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(result_rows(rows, base_seed))


def _load_config(path: str) -> cfgmod.RunConfig:
    try:
        conf = cfgmod.load(path)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    except cfgmod.ConfigError as exc:
        raise CliError(f"bad config {path}: {exc}", EXIT_CONFIG) from exc
    try:
        conf.validate()
    except (cfgmod.ConfigError, InfeasibleError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    return conf


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"bad --values list {text!r}", EXIT_CONFIG) from exc


def cmd_simulate(args) -> int:
    conf = _load_config(args.config)
    beta = conf.betas[0] if args.beta is None else args.beta
    policy = Policy("static_optimal", 0.0) if args.static_optimal else Policy.from_beta(beta)
    seed = conf.base_seed if args.seed is None else args.seed
    params = conf.params(policy.effective_beta)
    try:
        trace = run_episode(params, conf.arena(), policy, seed, conf.ranges(), conf.static_channel)
    except (InfeasibleError, ValueError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    out = args.trace or conf.output
    try:
        write_trace(trace, out)
    except OSError as exc:
        raise CliError(f"cannot write trace {out}: {exc}", EXIT_IO) from exc
    m = aggregate([trace], params)
    print(f"policy={policy.kind} beta={_num(policy.effective_beta)} seed={seed} slots={len(trace)}")
    print(f"avg_aoi={m.avg_aoi:.6g} avg_energy_j={m.avg_energy:.6g} avg_cost={m.avg_cost:.6g}")
    print(f"trace written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    conf = _load_config(args.config)
    values = _parse_values(args.values)
    if not values:
        raise CliError("empty --values list", EXIT_CONFIG)
    realizations = args.realizations or conf.realizations
    out = Path(args.out or conf.output)
    try:
        rows = sweep(
            conf.params(),
            args.axis,
            values,
            realizations,
            conf.base_seed,
            policies=conf.policies(),
            arena=conf.arena(),
            ranges=conf.ranges(),
            static_channel=conf.static_channel,
            workers=args.workers,
        )
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    try:
        write_results(rows, conf.base_seed, out)
        figures = plotting.plot_sweep(out, args.axis) if args.figures else []
    except OSError as exc:
        raise CliError(f"cannot write results {out}: {exc}", EXIT_IO) from exc
    print(f"{len(rows)} rows written to {out}")
    for fig in figures:
        print(f"figure written to {fig}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if not 1 <= args.size_limit <= 7:
        raise CliError("--size-limit must lie in [1, 7]", EXIT_CONFIG)
    results = oracles.run_all(args.size_limit, args.seed)
    report = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = "".join(f" {k}={v:.3g}" for k, v in r.details.items())
        print(f"{status} {r.name:32s} instances={r.instances:5d} max_error={r.max_error:.3g}{extra}")
        entry = {"name": r.name, "passed": r.passed, "instances": r.instances, "max_error": r.max_error}
        if r.failure is not None:
            entry["failing_instance"] = r.failure
            print(f"  replay: {json.dumps(r.failure)}")
        report.append(entry)
    if args.report:
        try:
            Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write report {args.report}: {exc}", EXIT_IO) from exc
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def cmd_plot(args) -> int:
    try:
        for fig in plotting.plot_sweep(args.csv, args.axis, args.out_dir):
            print(f"figure written to {fig}")
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    return EXIT_OK


def cmd_config(args) -> int:
    sys.stdout.write(cfgmod.dumps(cfgmod.RunConfig()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dtedge", description="Digital-twin edge network AoI/energy simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode and write its per-slot trace")
    p.add_argument("--config", required=True)
    p.add_argument("--trace", help="trace output path (default: config 'output')")
    p.add_argument("--beta", type=float, help="threshold weight (default: first of config 'betas')")
    p.add_argument("--static-optimal", action="store_true", help="replay the static-channel optimum")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter, written as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated values, e.g. 10,20,30")
    p.add_argument("--out", help="CSV path (default: config 'output')")
    p.add_argument("--realizations", type=int, help="override config 'realizations'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--figures", action="store_true", help="also render energy/cost PNGs next to the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check solvers and closed forms against brute-force oracles")
    p.add_argument("--size-limit", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render figures from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--axis", choices=SWEEP_AXES, default="servers")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("config", help="print the default configuration")
    p.set_defaults(func=cmd_config)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
