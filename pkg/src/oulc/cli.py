"""Command-line interface: ``oulc detect | ci | simulate | bench``.

Exit codes: 0 success, 2 usage error, 3 invalid input data, 4 numerical
failure. Machine-readable output goes to stdout (or ``--out``); diagnostics
go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .bench import ScenarioSpec, metrics_csv, raw_csv, run_scenario
from .bootstrap import BootstrapConfig, bootstrap_ci
from .csvio import load, write_series
from .data import SegmentParams
from .density import DEFAULT_POLICY, TruncationPolicy
from .errors import (AllTauFailed, BootstrapExhausted, DegenerateSegment, InvalidBar,
                     InvariantViolation, NoConvergence, ParseError, SeriesTooShort)
from .estimate import AIC_N_PARAMS, DEFAULT_NR, OC, OULC, NRConfig, detect
from .simulate import SimSpec, simulate_series

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
NUMERIC_ERRORS = (NoConvergence, AllTauFailed, DegenerateSegment, BootstrapExhausted)
DATA_ERRORS = (ParseError, InvariantViolation, InvalidBar, SeriesTooShort, OSError,
               json.JSONDecodeError, KeyError, ValueError)


class UsageError(Exception):
    pass


def _models(arg: str) -> list[str]:
    return [OULC, OC] if arg == "both" else [arg.upper()]


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--output", choices=("json", "csv"), default=None,
                   help="default: csv for simulate, json otherwise")
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--model", choices=("oulc", "oc", "both"), default=None,
                   help="detector(s) to run (default: oulc for ci, both otherwise)")
    g = p.add_argument_group("optimizer")
    g.add_argument("--eps", type=float, default=DEFAULT_NR.eps)
    g.add_argument("--max-iter", type=int, default=DEFAULT_NR.max_iter)
    g.add_argument("--step-clamp", type=float, default=DEFAULT_NR.step_clamp)
    g.add_argument("--init-multipliers", type=_floats, default=DEFAULT_NR.init_multipliers)
    g.add_argument("--fd-step", type=float, default=DEFAULT_NR.fd_step)
    g = p.add_argument_group("series truncation")
    g.add_argument("--rel-tol", type=float, default=DEFAULT_POLICY.rel_tol)
    g.add_argument("--k-min", type=int, default=DEFAULT_POLICY.k_min)
    g.add_argument("--k-max", type=int, default=DEFAULT_POLICY.k_max)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    ap = argparse.ArgumentParser(prog="oulc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("file", type=Path, help="CSV with date,open,high,low,close")
        p.add_argument("--no-log", action="store_true",
                       help="values are already log prices")
        p.add_argument("--n-params", type=int, default=AIC_N_PARAMS,
                       help="parameter count used in AIC (default 5)")

    p = sub.add_parser("detect", parents=[common], help="estimate the change point")
    data_args(p)

    p = sub.add_parser("ci", parents=[common], help="detect plus bootstrap intervals")
    data_args(p)
    p.add_argument("--B", type=int, default=1000, dest="B")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--substeps", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--mu0", type=float, required=True)
    p.add_argument("--mu1", type=float, required=True)
    p.add_argument("--sigma2-0", type=float, required=True)
    p.add_argument("--sigma2-1", type=float, required=True)
    p.add_argument("--o1", type=float, default=0.0, help="first open, log scale")
    p.add_argument("--substeps", type=int, default=1000)
    p.add_argument("--prices", action="store_true",
                   help="write exp(values) so the file ingests with the default log transform")

    p = sub.add_parser("bench", parents=[common], help="run simulation scenarios")
    p.add_argument("config", type=Path, help='JSON file: {"scenarios": [...]}')
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--raw", type=Path, help="also write per-replicate estimates as CSV")
    return ap


def _configs(args):
    try:
        nr = NRConfig(eps=args.eps, max_iter=args.max_iter, step_clamp=args.step_clamp,
                      init_multipliers=tuple(args.init_multipliers), fd_step=args.fd_step)
        pol = TruncationPolicy(rel_tol=args.rel_tol, k_min=args.k_min, k_max=args.k_max)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return nr, pol


def fit_record(fit, dates) -> dict:
    d = fit.diagnostics
    rec = {
        "model": fit.model,
        "tau_hat": fit.tau_hat,
        "tau_date": dates[fit.tau_hat - 1].isoformat() if dates else None,
        "params0": {"mu": fit.params0.mu, "sigma2": fit.params0.sigma2},
        "params1": {"mu": fit.params1.mu, "sigma2": fit.params1.sigma2},
        "loglik": fit.loglik,
        "aic": fit.aic,
        "n_params": fit.n_params,
        "n": fit.n,
        "diagnostics": {"failed_taus": sorted(d.get("failed_taus", {}))},
    }
    if fit.model == OULC:
        rec["diagnostics"].update(n_clamped=d["n_clamped"], clamp_warning=d["clamp_warning"],
                                  segments=d["segments"])
    return rec


def ci_record(res) -> dict:
    return {"B": res.B, "alpha": res.alpha, "attempts": res.attempts,
            "ci_mu0": list(res.ci_mu0), "ci_mu1": list(res.ci_mu1),
            "ci_sigma2_0": list(res.ci_sigma2_0), "ci_sigma2_1": list(res.ci_sigma2_1),
            "tau_set": list(res.tau_set), "tau_set_mass": res.tau_set_mass}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


FIT_FIELDS = ("model", "tau_hat", "tau_date", "mu0", "mu1", "sigma2_0", "sigma2_1",
              "loglik", "aic", "n_params", "n")


def _fit_row(rec) -> dict:
    return {"model": rec["model"], "tau_hat": rec["tau_hat"], "tau_date": rec["tau_date"],
            "mu0": rec["params0"]["mu"], "mu1": rec["params1"]["mu"],
            "sigma2_0": rec["params0"]["sigma2"], "sigma2_1": rec["params1"]["sigma2"],
            "loglik": rec["loglik"], "aic": rec["aic"], "n_params": rec["n_params"],
            "n": rec["n"]}


def cmd_detect(args) -> str:
    nr, pol = _configs(args)
    series, dates = load(args.file, log_transform=not args.no_log)
    recs = [fit_record(detect(series, m, nr, pol, n_params=args.n_params), dates)
            for m in _models(args.model or "both")]
    if args.output == "csv":
        return _csv([_fit_row(r) for r in recs], FIT_FIELDS)
    return _dump_json({"schema_version": SCHEMA_VERSION, "command": "detect",
                       "input": args.file.name, "fits": recs})


def cmd_ci(args) -> str:
    nr, pol = _configs(args)
    try:
        bcfg = BootstrapConfig(B=args.B, alpha=args.alpha, seed=args.seed,
                               substeps=args.substeps, workers=args.workers)
    except ValueError as e:
        raise UsageError(str(e)) from None
    series, dates = load(args.file, log_transform=not args.no_log)
    out = []
    for m in _models(args.model or "oulc"):
        fit = detect(series, m, nr, pol, n_params=args.n_params)
        res = bootstrap_ci(series, fit, bcfg, nr, pol)
        rec = fit_record(fit, dates)
        rec["bootstrap"] = ci_record(res)
        rec["bootstrap"]["tau_set_dates"] = [dates[t - 1].isoformat() for t in res.tau_set]
        out.append(rec)
    if args.output == "csv":
        rows = []
        for rec in out:
            b = rec["bootstrap"]
            for name, est in (("mu0", rec["params0"]["mu"]), ("mu1", rec["params1"]["mu"]),
                              ("sigma2_0", rec["params0"]["sigma2"]),
                              ("sigma2_1", rec["params1"]["sigma2"])):
                lo, hi = b[f"ci_{name}"]
                rows.append({"model": rec["model"], "parameter": name, "estimate": est,
                             "lower": lo, "upper": hi})
            rows.append({"model": rec["model"], "parameter": "tau", "estimate": rec["tau_hat"],
                         "lower": min(b["tau_set"]), "upper": max(b["tau_set"])})
        return _csv(rows, ("model", "parameter", "estimate", "lower", "upper"))
    return _dump_json({"schema_version": SCHEMA_VERSION, "command": "ci",
                       "input": args.file.name, "seed": args.seed, "fits": out})


def cmd_simulate(args) -> str:
    try:
        spec = SimSpec(n=args.n, tau=args.tau, params0=SegmentParams(args.mu0, args.sigma2_0),
                       params1=SegmentParams(args.mu1, args.sigma2_1), o1=args.o1,
                       substeps=args.substeps, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    series = simulate_series(spec)
    if args.output == "json":
        cols = {k: [float(x) for x in getattr(series, k)] for k in ("o", "u", "l", "c")}
        return _dump_json({"schema_version": SCHEMA_VERSION, "command": "simulate",
                           "spec": {"n": spec.n, "tau": spec.tau, "mu0": args.mu0,
                                    "mu1": args.mu1, "sigma2_0": args.sigma2_0,
                                    "sigma2_1": args.sigma2_1, "o1": spec.o1,
                                    "substeps": spec.substeps, "seed": spec.seed},
                           "series": cols})
    buf = io.StringIO()
    write_series(series, buf, exponentiate=args.prices)
    return buf.getvalue()


def cmd_bench(args) -> str:
    nr, pol = _configs(args)
    cfg = json.loads(args.config.read_text(encoding="utf-8"))
    scenarios = []
    for i, d in enumerate(cfg["scenarios"]):
        d = dict(d)
        d.setdefault("seed", args.seed)
        d.setdefault("name", f"scenario{i + 1}")
        if args.model:
            d["models"] = _models(args.model)
        scenarios.append(ScenarioSpec.from_dict(d))
    results = [run_scenario(s, nr, pol, workers=args.workers) for s in scenarios]
    if args.raw:
        args.raw.write_text(raw_csv(results), encoding="utf-8")
    if args.output == "csv":
        return metrics_csv(results)
    return _dump_json({"schema_version": SCHEMA_VERSION, "command": "bench",
                       "scenarios": [r.to_dict() for r in results]})


COMMANDS = {"detect": cmd_detect, "ci": cmd_ci, "simulate": cmd_simulate, "bench": cmd_bench}


def _fail(code, exc, **extra) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), **extra}
    sys.stderr.write(_dump_json(payload))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.output is None:
        args.output = "csv" if args.command == "simulate" else "json"
    try:
        text = COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, e)
    except AllTauFailed as e:
        return _fail(EXIT_NUMERIC, e, failures={str(k): v for k, v in e.failures.items()})
    except NoConvergence as e:
        return _fail(EXIT_NUMERIC, e, best=e.best, segment=e.segment)
    except NUMERIC_ERRORS as e:
        return _fail(EXIT_NUMERIC, e)
    except DATA_ERRORS as e:
        return _fail(EXIT_DATA, e)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
