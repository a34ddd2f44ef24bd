"""Command-line interface.

Subcommands:
  dnorm eval | dnorm validate    evaluate or stress-test a tail norm
  sample                         draw copula observations to CSV
  check smirnov | check von-mises  marginal tail-condition tables
  cov                            closed-form limit covariance
  chi2rep                        correlated order-statistic ratios to CSV
  experiment                     run a configured Monte Carlo experiment

Experiment exit codes: 0 all gated criteria pass, 1 criterion failure,
2 invalid configuration, 3 refusal because the square-root correlation
matrix is not positive semidefinite.  MVOS_SEED overrides the configured
seed and is flagged in the report.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .chi2rep import NotPositiveSemidefiniteError, correlated_ratio_sample
from .copula import copula_sample, model_from_json
from .dnorm import dnorm_validate, dnorm_eval, spec_from_json
from .margins import margin_from_name, smirnov_check, von_mises_check
from .orderstats import KRatioMatrix, theoretical_sigma, theoretical_sigma_equal_k
from .experiment import (
    InvalidConfigError,
    config_from_json,
    emit_report,
    report_json_bytes,
    report_text,
    run_experiment,
)

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_CONFIG = 2
EXIT_PSD = 3


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _write_csv_matrix(path: str, header: list[str], rows: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _cmd_dnorm(args) -> int:
    spec = spec_from_json(json.loads(args.spec))
    if args.action == "eval":
        if not args.x:
            print("dnorm eval requires --x", file=sys.stderr)
            return EXIT_CONFIG
        value = dnorm_eval(spec, _floats(args.x), seed=args.seed)
        print(f"{value:.12g}")
        return EXIT_OK
    report = dnorm_validate(spec, trials=args.trials, seed=args.seed or 0)
    print(report)
    return EXIT_OK if report.passed else EXIT_CRITERION


def _cmd_sample(args) -> int:
    model = model_from_json({"kind": args.copula, "d": args.d, "p": args.p})
    batch = copula_sample(model, args.n, args.seed)
    header = [f"u{i + 1}" for i in range(batch.d)]
    _write_csv_matrix(args.out, header, batch.rows)
    print(f"wrote {batch.n} rows of {model.label()} to {args.out}")
    return EXIT_OK


def _print_table(header: list[str], rows: list[tuple]) -> None:
    widths = [max(len(h), 12) for h in header]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        cells = [f"{v:.6g}" if isinstance(v, float) else str(v) for v in row]
        print("  ".join(c.rjust(w) for c, w in zip(cells, widths)))


def _cmd_check(args) -> int:
    margin = margin_from_name(args.margin, alpha=args.alpha)
    if args.action == "smirnov":
        n_grid = [int(float(tok)) for tok in args.n_grid.split(",")]
        rows = smirnov_check(margin, _floats(args.x), n_grid, args.k_rule)
        table = [(r.n, r.k, r.x, r.quotient, r.clipped) for r in rows]
        _print_table(["n", "k", "x", "quotient", "clipped"], table)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write("n,k,x,quotient,clipped\n")
                for r in rows:
                    fh.write(f"{r.n},{r.k},{r.x:.17g},{r.quotient:.17g},{int(r.clipped)}\n")
    else:
        grid = _floats(args.x_grid) if args.x_grid else _default_vm_grid(margin)
        result = von_mises_check(margin, grid)
        print(f"condition ({result.condition}), declared limit {result.limit:g}")
        _print_table(["x", "quotient"], result.rows)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write("x,quotient\n")
                for x, q in result.rows:
                    fh.write(f"{x:.17g},{q:.17g}\n")
    return EXIT_OK


def _default_vm_grid(margin) -> list[float]:
    if np.isfinite(margin.upper_endpoint):
        return [margin.upper_endpoint - 10.0 ** (-j) for j in range(1, 7)]
    return [1.0, 2.0, 4.0, 6.0, 8.0]


def _cmd_cov(args) -> int:
    spec = spec_from_json(json.loads(args.dnorm))
    if args.equal_k:
        sigma = theoretical_sigma_equal_k(spec, d=args.d)
    else:
        if not args.kratios:
            print("either --kratios or --equal-k is required", file=sys.stderr)
            return EXIT_CONFIG
        obj = json.loads(args.kratios)
        ratios = KRatioMatrix(np.asarray(obj["k"], dtype=float))
        sigma = theoretical_sigma(spec, ratios)
    print(json.dumps({"sigma": [[float(v) for v in row] for row in sigma]}, sort_keys=True))
    for row in sigma:
        print("  ".join(f"{v:12.6f}" for v in row))
    return EXIT_OK


def _cmd_chi2rep(args) -> int:
    obj = json.loads(getattr(args, "lambda"))
    lam = np.asarray(obj["matrix"] if isinstance(obj, dict) else obj, dtype=float)
    try:
        sample = correlated_ratio_sample(lam, args.n, args.k, args.R, args.seed)
    except NotPositiveSemidefiniteError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_PSD
    header = [f"r{i + 1}" for i in range(sample.d)]
    _write_csv_matrix(args.out, header, sample.ratios)
    print(f"wrote {sample.replications} ratio vectors to {args.out}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    try:
        with open(args.config) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    env_seed = os.environ.get("MVOS_SEED")
    try:
        config = config_from_json(obj, seed_override=int(env_seed) if env_seed else None)
    except InvalidConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(config, threads=args.threads)
    except NotPositiveSemidefiniteError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_PSD
    if args.out:
        emit_report(report, "json", args.out)
    else:
        sys.stdout.write(report_json_bytes(report).decode())
    if args.csv:
        emit_report(report, "csv", args.csv)
    sys.stderr.write(report_text(report))
    sys.stderr.write(f"runtime: {report.runtime_seconds:.1f}s\n")
    return EXIT_OK if report.passed else EXIT_CRITERION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvos", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"mvos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dnorm", help="evaluate or validate a tail norm")
    p.add_argument("action", choices=["eval", "validate"])
    p.add_argument("--spec", required=True, help='norm JSON, e.g. {"kind":"logistic","p":2}')
    p.add_argument("--x", help="comma-separated vector (eval)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_dnorm)

    p = sub.add_parser("sample", help="draw copula observations to CSV")
    p.add_argument("--copula", required=True, choices=["independence", "comonotone", "gumbel"])
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("-d", type=int, default=2)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("check", help="marginal tail-condition tables")
    p.add_argument("action", choices=["smirnov", "von-mises"])
    p.add_argument("--margin", required=True, choices=["normal", "exponential", "pareto", "triangular"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--n-grid", default="1e4,1e6,1e8")
    p.add_argument("--k-rule", default="sqrt")
    p.add_argument("--x", default="-2,-1,0,1,2")
    p.add_argument("--x-grid", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("cov", help="closed-form limit covariance")
    p.add_argument("--dnorm", required=True)
    p.add_argument("--kratios", default=None, help='{"d":2,"k":[[1,2],[0.5,1]]}')
    p.add_argument("--equal-k", action="store_true")
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(func=_cmd_cov)

    p = sub.add_parser("chi2rep", help="correlated order-statistic ratios to CSV")
    p.add_argument("--lambda", required=True, help="correlation matrix JSON")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-R", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_chi2rep)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="report JSON path (default: stdout)")
    p.add_argument("--csv", default=None, help="flat CSV dump path")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
