"""Command-line entry point: ``qinfocrit <subcommand> ...``."""
import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

from .fit import FitResult
from .harness.config import ConfigError, ExperimentConfig, load_config
from .harness.experiment import (TRIAL_COLUMNS, _write_csv, evaluate_criteria, report_rows,
                                 run_experiment, run_trial, selections)
from .harness.validation import validate_bias, validate_consistency, validate_normality
from .povm import read_outcomes_csv, write_outcomes_csv


def _overrides(args):
    return {"master_seed": getattr(args, "seed", None), "trials": getattr(args, "trials", None),
            "n_shots": getattr(args, "shots", None), "output_dir": getattr(args, "out", None),
            "workers": getattr(args, "workers", None)}


def _config(args):
    return load_config(args.config, **_overrides(args))


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_experiment(args):
    cfg = _config(args)

    def progress(rec):
        if not args.quiet:
            status = "FAILED " + rec.error if rec.failed else " ".join(
                f"{k}={v}" for k, v in sorted(rec.selections.items()) if not k.endswith("_1st"))
            print(f"trial {rec.trial_index:3d}: {status}", file=sys.stderr)

    summary, _ = run_experiment(cfg, progress=progress)
    print(json.dumps({"output_dir": cfg.output_dir, "counts": summary["counts"],
                      "bias_correction_benefit": summary["bias_correction_benefit"],
                      "runtime_seconds": round(summary["runtime_seconds"], 1)}, indent=2))
    return 0


def cmd_trial(args):
    cfg = _config(args)
    rec = run_trial(cfg, args.index, keep_outcomes=True)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    stem = os.path.join(out, f"trial_{args.index}")
    with open(stem + ".json", "w") as fh:
        fh.write(rec.to_json() + "\n")
    write_outcomes_csv(stem + "_outcomes.csv", [(args.index, rec.outcomes)])
    _dump({"config": cfg.to_dict(), "trial": args.index,
           "fits": rec.to_dict()["fits"]}, stem + "_fits.json")
    _write_csv(stem + "_criteria.csv", TRIAL_COLUMNS, report_rows(rec))
    print(rec.to_json())
    return 1 if rec.failed else 0


def cmd_criteria(args):
    """Recompute criteria from a persisted fits file and its shot record."""
    with open(args.fit) as fh:
        saved = json.load(fh)
    cfg = ExperimentConfig.from_dict(saved["config"])
    if args.criteria:
        cfg = dataclasses.replace(cfg, criteria=list(args.criteria))
    trial = saved.get("trial", 0)
    outcomes = read_outcomes_csv(args.outcomes)
    if trial not in outcomes:
        raise ConfigError(f"outcomes: no rows for trial {trial} in {args.outcomes}")
    outcomes = outcomes[trial]
    models = cfg.models()
    by_key = {(f["model"], f["estimator_kind"]): FitResult.from_dict(f) for f in saved["fits"]}
    rho = cfg.true_state()
    reports = {}
    for m in models:
        tq, tc = by_key.get((m.name, "shadow")), by_key.get((m.name, "ll"))
        for kind, r in evaluate_criteria(m, cfg.criteria, outcomes, rho,
                                         None if tq is None else tq.theta_hat,
                                         None if tc is None else tc.theta_hat, cfg.rcond).items():
            reports[(m.name, kind)] = r
    rows = [(trial, r.model_name, r.criterion_kind, r.value, r.first_term, r.penalty_term,
             r.normalized_value, r.pinv_rank) for r in reports.values()]
    if args.out:
        _write_csv(args.out, TRIAL_COLUMNS, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        w.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    print(json.dumps(selections(reports, models, cfg.criteria), sort_keys=True), file=sys.stderr)
    return 0


def cmd_validate_bias(args):
    cfg = _config(args)
    rep = validate_bias(cfg, n=args.n, replications=args.replications)
    _dump(rep, args.report)
    return 0


def cmd_validate_normality(args):
    cfg = _config(args)
    rep = validate_normality(cfg, n=args.n, replications=args.replications)
    _dump(rep, args.report)
    return 0


def cmd_validate_consistency(args):
    cfg = _config(args)
    rep = validate_consistency(cfg, n_values=args.n_values, seeds=args.seeds)
    _dump(rep, args.report)
    return 0


def cmd_selfcheck(args):
    from .selfcheck import run_checks
    failures = 0
    for name, ok, detail in run_checks():
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return 1 if failures else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="qinfocrit", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log fitting diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p, seed=True):
        p.add_argument("config", help="experiment config (JSON)")
        if seed:
            p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--shots", type=int, help="override n_shots")
        p.add_argument("--out", help="override output_dir")
        return p

    p = with_config(sub.add_parser("experiment", help="run every trial and write summary files"))
    p.add_argument("--trials", type=int, help="override trials")
    p.add_argument("--workers", type=int, help="parallel trial workers")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = with_config(sub.add_parser("trial", help="run a single trial and persist its fits"))
    p.add_argument("--index", type=int, required=True)
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("criteria", help="recompute criteria from persisted fits")
    p.add_argument("--fit", required=True, help="trial_<k>_fits.json written by 'trial'")
    p.add_argument("--outcomes", required=True, help="outcomes CSV for the same trial")
    p.add_argument("--criteria", nargs="+", help="subset of criterion kinds")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_criteria)

    validators = (
        ("validate-bias", cmd_validate_bias, "Monte-Carlo check of the shadow bias formula"),
        ("validate-normality", cmd_validate_normality, "compare estimator variance with the sandwich formula"),
    )
    for name, func, text in validators:
        p = with_config(sub.add_parser(name, help=text))
        p.add_argument("--n", type=int, help="shots per replication (default: validation.n)")
        p.add_argument("--replications", type=int, help="default: validation.replications")
        p.add_argument("--report", help="JSON path (default: stdout)")
        p.set_defaults(func=func)

    p = with_config(sub.add_parser("validate-consistency",
                                   help="median relative entropy of the fit as n grows"))
    p.add_argument("--n-values", type=int, nargs="+", default=[100, 1000, 10000])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--report", help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_validate_consistency)

    sub.add_parser("selfcheck", help="run the built-in invariant checks").set_defaults(func=cmd_selfcheck)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
