"""Command-line interface.

Subcommands:

* ``fit``      — fit the median-aggregated estimator to a CSV design/response
* ``simulate`` — run the replication harness from a JSON spec
* ``qut``      — calibrate the null-quantile threshold for a design
* ``identify`` — certify identifiability of a sign pattern

Design CSVs carry a header row of column names; missing entries are the
literal token ``NA``. Exit codes: 0 success, 2 input error, 3 solver
failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .analysis import check_identifiability
from .calibration import QutSpec, qut_threshold
from .errors import BudgetExceededError, InputError, SolverFailure
from .estimators import RlzConfig
from .experiments import SimulationSpec, metrics_to_csv, raw_to_csv, \
    run_experiment
from .missing import IncompleteMatrix, rlz_with_missing


def _parse_cell(token: str, path: str, row: int, col: str) -> float:
    token = token.strip()
    if token == "NA":
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise InputError(f"{path}: row {row}, column {col!r}: "
                         f"cannot parse {token!r}") from None


def read_design_csv(path: str):
    """Read a design matrix CSV; returns (matrix with NaN for NA, names)."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        names = [c.strip() for c in names]
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(names):
                raise InputError(f"{path}: row {i} has {len(rec)} fields, "
                                 f"expected {len(names)}")
            rows.append([_parse_cell(tok, path, i, names[j])
                         for j, tok in enumerate(rec)])
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float), names


def read_vector_csv(path: str, allow_header: bool = True) -> np.ndarray:
    """One value per line; a single non-numeric first line is skipped."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from None
    with fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty file")
    start = 0
    if allow_header:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            start = 1
    vals = []
    for i, ln in enumerate(lines[start:], start=start + 1):
        tok = ln.split(",")[0].strip()
        try:
            vals.append(float(tok))
        except ValueError:
            raise InputError(f"{path}: line {i}: cannot parse {tok!r}") from None
    return np.array(vals)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_fit(args) -> int:
    x_raw, _ = read_design_csv(args.x)
    y = read_vector_csv(args.y)
    if y.size != x_raw.shape[0]:
        raise InputError(f"y has {y.size} entries, X has {x_raw.shape[0]} rows")
    tau = "qut" if args.tau == "qut" else float(args.tau)
    cfg = RlzConfig(lam=args.lam, tau=tau, n_dictionaries=args.dictionaries,
                    master_seed=args.seed)
    qut_spec = QutSpec(alpha=args.alpha, lam=args.lam,
                       n_dictionaries=args.dictionaries,
                       master_seed=args.seed) if tau == "qut" else None
    inc = IncompleteMatrix.from_values(x_raw)
    fit = rlz_with_missing(y, inc, cfg, qut_spec=qut_spec,
                           restrict_corruption=args.restrict_corruption_rows)
    n = x_raw.shape[0]
    omega_full = fit.omega_full(n)
    _write_json(args.out, {
        "beta_hat": fit.beta_hat.tolist(),
        "beta_med": fit.beta_med.tolist(),
        "omega_med": None if omega_full is None else omega_full.tolist(),
        "tau_used": fit.tau_used,
        "lambda": args.lam,
        "M": args.dictionaries,
        "seed": args.seed,
        "per_dictionary_status": fit.per_dictionary_status,
    })
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open {args.config}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{args.config}: top level must be an object")
    known = {f.name for f in dataclasses.fields(SimulationSpec)}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    try:
        spec = SimulationSpec(**raw)
    except TypeError as exc:
        raise InputError(str(exc)) from None
    records, raw_rows = run_experiment(spec, workers=args.workers)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(metrics_to_csv(records))
    if args.raw:
        with open(args.raw, "w", encoding="utf-8", newline="") as fh:
            fh.write(raw_to_csv(raw_rows))
    return 0


def _cmd_qut(args) -> int:
    x_raw, _ = read_design_csv(args.x)
    if np.isnan(x_raw).any():
        raise InputError("design for qut must be complete (no NA entries)")
    spec = QutSpec(alpha=args.alpha, n_mc=args.mc, lam=args.lam,
                   n_dictionaries=args.dictionaries, master_seed=args.seed)
    result = qut_threshold(x_raw, spec)
    _write_json(args.out, {
        "pivot_quantile": result.pivot_quantile,
        "alpha": args.alpha,
        "mc_draws": int(result.mc_statistics.size),
        "lambda": args.lam,
        "M": args.dictionaries,
        "seed": args.seed,
    })
    return 0


def _cmd_identify(args) -> int:
    x_raw, _ = read_design_csv(args.x)
    if np.isnan(x_raw).any():
        raise InputError("design for identify must be complete (no NA entries)")
    theta = read_vector_csv(args.theta)
    theta_tilde = read_vector_csv(args.theta_tilde)
    verdict = check_identifiability(x_raw, theta, theta_tilde, lam=args.lam)
    payload = {
        "identifiable": verdict.identifiable,
        "inconclusive": verdict.inconclusive,
        "margin": verdict.margin,
        "method": verdict.method,
        "witness": None,
    }
    if verdict.witness is not None:
        payload["witness"] = {"beta": verdict.witness[0].tolist(),
                              "omega": verdict.witness[1].tolist()}
    _write_json(args.out, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlz",
        description="Sparse regression under sparse corruptions and "
                    "missing covariates")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the median-aggregated estimator")
    fit.add_argument("--x", required=True, help="design CSV (header, NA for missing)")
    fit.add_argument("--y", required=True, help="response CSV, one value per line")
    fit.add_argument("--lambda", dest="lam", type=float, default=1.0)
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--dictionaries", type=int, default=20, metavar="M")
    fit.add_argument("--tau", default="qut",
                     help="numeric threshold, or 'qut' for automatic calibration")
    fit.add_argument("--restrict-corruption-rows", action="store_true",
                     help="model corruption only on rows with missing entries")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=_cmd_fit)

    sim = sub.add_parser("simulate", help="run the replication harness")
    sim.add_argument("--config", required=True, help="JSON simulation spec")
    sim.add_argument("--out", required=True, help="aggregate metrics CSV")
    sim.add_argument("--raw", help="optional per-replication CSV")
    sim.add_argument("--workers", type=int, default=1)
    sim.set_defaults(func=_cmd_simulate)

    qut = sub.add_parser("qut", help="calibrate the null-quantile threshold")
    qut.add_argument("--x", required=True)
    qut.add_argument("--alpha", type=float, default=0.05)
    qut.add_argument("--mc", type=int, default=500)
    qut.add_argument("--lambda", dest="lam", type=float, default=1.0)
    qut.add_argument("--dictionaries", type=int, default=20, metavar="M")
    qut.add_argument("--seed", type=int, default=0)
    qut.add_argument("--out", required=True)
    qut.set_defaults(func=_cmd_qut)

    ident = sub.add_parser("identify",
                           help="certify identifiability of a sign pattern")
    ident.add_argument("--x", required=True)
    ident.add_argument("--theta", required=True,
                       help="coefficient sign vector CSV (entries in -1/0/1)")
    ident.add_argument("--theta-tilde", required=True,
                       help="corruption sign vector CSV")
    ident.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ident.add_argument("--out", required=True)
    ident.set_defaults(func=_cmd_identify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
