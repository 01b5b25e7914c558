"""One trial of the selection experiment, and the loop over trials.

A trial draws one shot record from the true state, fits every candidate on
it (shadow estimator, plus maximum likelihood when a likelihood criterion
is requested), evaluates the criteria and records which model each one
picks.  Everything is a pure function of ``(config, trial_index)``.
"""
import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import criteria as crit
from ..fit import FitError, SupportError, fit_ll, fit_shadow
from ..kernels import BACKEND
from ..linalg import NotHermitianError, NotPositiveError
from ..povm import sample_outcomes
from ..seeding import RNG_ALGORITHM, STREAM_FIT, STREAM_SHOTS, derive_rng, derive_seed
from ..shadow import mean_snapshot

log = logging.getLogger(__name__)

LL_KINDS = frozenset({"AIC", "TIC", "QAIC_LL", "CE_TRUE"})
SHADOW_KINDS = frozenset({"QTIC_shadow", "QAIC_shadow", "QCE_TRUE"})
# criteria with a penalty; each also gets a "<kind>_1st" selection on the first term alone
PENALIZED = ("AIC", "TIC", "QAIC_LL", "QTIC_shadow", "QAIC_shadow")
ESTIMATORS = ("shadow", "ll")
TRIAL_COLUMNS = ("trial", "model", "kind", "value", "first_term", "penalty_term",
                 "normalized_value", "pinv_rank")
HIST_COLUMNS = ("trial", "model", "qtic_err", "first_term_err")
FIT_COLUMNS = ("trial", "model", "estimator_kind", "theta_hat", "loss", "grad_norm",
               "iterations", "converged", "at_bound")
_TRIAL_ERRORS = (FitError, SupportError, NotHermitianError, NotPositiveError,
                 FloatingPointError, np.linalg.LinAlgError, OverflowError)


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    outcomes_digest: str
    fits: dict = field(default_factory=dict)  # (model, estimator) -> FitResult
    reports: dict = field(default_factory=dict)  # (model, kind) -> CriterionReport
    selections: dict = field(default_factory=dict)  # key -> model name
    failed: bool = False
    error: str = ""

    def to_dict(self):
        return {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "outcomes_digest": self.outcomes_digest,
            "failed": self.failed,
            "error": self.error,
            "fits": [{"model": m, "estimator_kind": e, **f.to_dict()}
                     for (m, e), f in self.fits.items()],
            "reports": [{"trial": self.trial_index, **r.to_dict()} for r in self.reports.values()],
            "selections": dict(self.selections),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def needed_estimators(kinds):
    kinds = set(kinds)
    return [e for e, need in (("shadow", kinds & SHADOW_KINDS), ("ll", kinds & LL_KINDS)) if need]


def evaluate_criteria(model, kinds, outcomes, rho, theta_q=None, theta_c=None, rcond=crit.DEFAULT_RCOND):
    """``{kind: CriterionReport}`` for one fitted model on one shot record."""
    out = {}
    for kind in kinds:
        if kind == "AIC":
            r = crit.aic_for(model, theta_c, outcomes)
        elif kind == "TIC":
            r = crit.tic_for(model, theta_c, outcomes, rcond)
        elif kind == "QAIC_LL":
            r = crit.qaic_ll(model, theta_c, outcomes, rcond)
        elif kind == "QTIC_shadow":
            r = crit.qtic_shadow(model, theta_q, outcomes, rcond)
        elif kind == "QAIC_shadow":
            r = crit.qaic_shadow(model, theta_q, outcomes, rcond)
        elif kind == "QCE_TRUE":
            r = crit.qce_true(rho, model, theta_q)
        else:
            r = crit.ce_true(rho, model, theta_c)
        out[kind] = r
    return out


def selections(reports, models, kinds):
    """Per-criterion winners, plus first-term-only winners for penalized kinds."""
    names = [m.name for m in models]
    picks = {}
    if len(names) < 2:
        return picks
    for kind in kinds:
        rows = [reports[(name, kind)] for name in names]
        picks[kind] = crit.select_model(rows, "value")
        if kind in PENALIZED:
            picks[f"{kind}_1st"] = crit.select_model(rows, "first_term")
    return picks


def run_trial(config, trial_index, models=None, rho=None, keep_outcomes=False):
    """Steps 1-4 for trial ``trial_index``; failures are recorded, not raised."""
    models = config.models() if models is None else models
    rho = config.true_state() if rho is None else rho
    kinds = list(config.criteria)
    seed = derive_seed(config.master_seed, STREAM_SHOTS, trial_index)
    outcomes = sample_outcomes(rho, config.n_shots, derive_rng(config.master_seed, STREAM_SHOTS, trial_index))
    rec = TrialRecord(trial_index, seed, outcomes.digest())
    if keep_outcomes:
        rec.outcomes = outcomes
    fit_kw = dict(restarts=config.restarts, gtol=config.gtol, max_iter=config.max_iter,
                  bound=config.ebm_bound)
    try:
        rho_bar = mean_snapshot(outcomes) if "shadow" in needed_estimators(kinds) else None
        for mi, model in enumerate(models):
            for est in needed_estimators(kinds):
                rng = derive_rng(config.master_seed, STREAM_FIT, trial_index, mi, ESTIMATORS.index(est))
                if est == "shadow":
                    res = fit_shadow(model, rho_bar, seed=rng, **fit_kw)
                else:
                    res = fit_ll(model, outcomes, seed=rng, **fit_kw)
                rec.fits[(model.name, est)] = res
            tq = rec.fits.get((model.name, "shadow"))
            tc = rec.fits.get((model.name, "ll"))
            reps = evaluate_criteria(model, kinds, outcomes, rho,
                                     None if tq is None else tq.theta_hat,
                                     None if tc is None else tc.theta_hat, config.rcond)
            for kind, r in reps.items():
                rec.reports[(model.name, kind)] = r
        rec.selections = selections(rec.reports, models, kinds)
    except _TRIAL_ERRORS as exc:
        log.warning("trial %d failed: %s", trial_index, exc)
        rec.failed, rec.error = True, f"{type(exc).__name__}: {exc}"
        rec.selections = {}
    return rec


def histogram_rows(rec, models):
    """``(trial, model, qtic_err, first_term_err)`` for one successful trial."""
    rows = []
    if rec.failed:
        return rows
    for m in models:
        q = rec.reports.get((m.name, "QTIC_shadow"))
        ref = rec.reports.get((m.name, "QCE_TRUE"))
        if q is None or ref is None:
            continue
        truth = ref.value
        rows.append((rec.trial_index, m.name, abs(q.normalized_value - truth),
                     abs(q.first_term / (2 * q.n) - truth)))
    return rows


def tally(records, models, keys):
    names = [m.name for m in models]
    counts = {k: {**{n: 0 for n in names}, "failed": 0} for k in keys}
    for rec in records:
        for k in keys:
            if rec.failed:
                counts[k]["failed"] += 1
            else:
                counts[k][rec.selections[k]] += 1
    for k, c in counts.items():
        if sum(c.values()) != len(records):
            raise AssertionError(f"tally for {k} does not add up to {len(records)}")
    return counts


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def report_rows(rec):
    return [(rec.trial_index, r.model_name, r.criterion_kind, r.value, r.first_term, r.penalty_term,
             r.normalized_value, r.pinv_rank) for r in rec.reports.values()]


def fit_rows(rec):
    return [(rec.trial_index, m, e, " ".join(repr(float(t)) for t in f.theta_hat), f.loss, f.grad_norm,
             f.iterations, int(f.converged), int(f.at_bound)) for (m, e), f in rec.fits.items()]


def _trial_worker(args):
    config, k = args
    return run_trial(config, k)


def run_experiment(config, workers=None, write=True, progress=None):
    """Run all trials and, if ``write``, persist summary, trials, fits and histogram files."""
    start = time.perf_counter()
    models = config.models()
    rho = config.true_state()
    workers = config.workers if workers is None else workers
    idx = range(config.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves trial order whatever the completion order
            records = list(pool.map(_trial_worker, [(config, k) for k in idx]))
    else:
        records = []
        for k in idx:
            records.append(run_trial(config, k, models, rho))
            if progress:
                progress(records[-1])
    keys = [k for c in config.criteria for k in ([c, f"{c}_1st"] if c in PENALIZED else [c])]
    counts = tally(records, models, keys) if len(models) > 1 else {}
    hist = [row for rec in records for row in histogram_rows(rec, models)]
    benefit = {}
    for m in models:
        errs = [(q, f) for _, name, q, f in hist if name == m.name]
        if errs:
            benefit[m.name] = sum(q < f for q, f in errs) / len(errs)
    summary = {
        "config": config.to_dict(),
        "true_model": config.true_family().name,
        "true_theta": [float(t) for t in config.true_theta()],
        "rng_algorithm": RNG_ALGORITHM,
        "kernel_backend": BACKEND,
        "trials": config.trials,
        "failed_trials": [{"trial": r.trial_index, "error": r.error} for r in records if r.failed],
        "counts": counts,
        "bias_correction_benefit": benefit,
        "fits_at_bound": sum(f.at_bound for r in records for f in r.fits.values()),
        "runtime_seconds": time.perf_counter() - start,
    }
    if write:
        out = config.output_dir
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_csv(os.path.join(out, "trials.csv"), TRIAL_COLUMNS,
                   [row for rec in records for row in report_rows(rec)])
        _write_csv(os.path.join(out, "fits.csv"), FIT_COLUMNS,
                   [row for rec in records for row in fit_rows(rec)])
        _write_csv(os.path.join(out, "histogram.csv"), HIST_COLUMNS, hist)
    return summary, records
