"""Monte-Carlo checks of the asymptotic claims behind the criteria.

All three run on a realizable target ``rho = sigma(theta0)``.  The bias and
normality checks use a copy of the true family with every parameter except
``validation.free`` pinned at ``theta0``, which keeps each replication to a
one- or two-dimensional fit.
"""
import numpy as np

from .. import fisher
from ..criteria import pinv
from ..fit import fit_ll, fit_shadow, loss_shadow
from ..linalg import relative_entropy, trace_product
from ..povm import sample_outcomes
from ..qhbm import FrozenModel
from ..seeding import STREAM_VALIDATION, derive_rng
from ..shadow import mean_snapshot

# third spawn key separating the validation studies
_BIAS, _NORMALITY, _CONSISTENCY = 0, 1, 2


def frozen_model(config, free=None):
    base = config.true_family()
    theta0 = config.true_theta()
    free = tuple(config.validation.free if free is None else free)
    return FrozenModel(base, tuple(float(t) for t in theta0), free), theta0[list(free)]


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(len(x)))


def _fit_kw(config, rng, start):
    return dict(restarts=config.validation.restarts, seed=rng, starts=[start], gtol=config.gtol,
                max_iter=config.max_iter, bound=config.ebm_bound)


def bias_formula(model, theta0):
    """``Tr(I_Q J_Q^-1)`` at the true parameter."""
    i_q = fisher.shadow_I_model(model, theta0).entries
    j_inv, _ = pinv(fisher.bkm_J(model, theta0))
    return float(np.trace(i_q @ j_inv))


def _bias_run(config, model, theta0, rho, n, reps):
    log_rho_term = model.evaluate(theta0).log_state
    raw, centred, at_bound = [], [], 0
    for r in range(reps):
        rng = derive_rng(config.master_seed, STREAM_VALIDATION, _BIAS, n, r)
        rho_bar = mean_snapshot(sample_outcomes(rho, n, rng))
        fit = fit_shadow(model, rho_bar, **_fit_kw(config, rng, theta0))
        at_bound += fit.at_bound
        log_hat = model.evaluate(fit.theta_hat).log_state
        b = -n * fit.loss - n * trace_product(rho, log_hat)
        # same quantity at theta0: exactly mean zero, strongly correlated with b
        d2 = -n * loss_shadow(model, theta0, rho_bar)[0] - n * trace_product(rho, log_rho_term)
        raw.append(b)
        centred.append(b - d2)
    m, se = _mean_se(raw)
    mc, sec = _mean_se(centred)
    return {"n": n, "replications": reps, "bias": m, "bias_se": se,
            "bias_control_variate": mc, "bias_control_variate_se": sec, "fits_at_bound": at_bound}


def validate_bias(config, n=None, replications=None, n_values=None):
    """Monte-Carlo bias of the shadow log-likelihood against ``Tr(I_Q J_Q^-1)``.

    Two estimates are reported at each sample size: the plain mean of
    ``l_shadow(theta_hat) - n Tr(rho log sigma(theta_hat))`` and the same
    mean after subtracting its value at ``theta0``, which has expectation
    zero and removes most of the shot noise.
    """
    v = config.validation
    n = v.n if n is None else n
    reps = v.replications if replications is None else replications
    n_values = list(v.n_values if n_values is None else n_values)
    model, theta0 = frozen_model(config)
    rho = model.evaluate(theta0).state
    formula = bias_formula(model, theta0)
    main = _bias_run(config, model, theta0, rho, n, reps)
    sweep = [main if m == n else _bias_run(config, model, theta0, rho, m, reps) for m in n_values]
    for row in [main, *sweep]:
        row["z_raw"] = (row["bias"] - formula) / row["bias_se"]
        row["z_control_variate"] = (row["bias_control_variate"] - formula) / row["bias_control_variate_se"]
    return {"model": model.name, "free": list(model.free), "theta0": [float(t) for t in theta0],
            "formula": formula, "main": main, "sweep": sweep}


def validate_normality(config, n=None, replications=None):
    """Spread of ``sqrt(n) (theta_hat - theta0)`` against the sandwich covariance, for both estimators."""
    v = config.validation
    n = v.n if n is None else n
    reps = v.replications if replications is None else replications
    model, theta0 = frozen_model(config)
    rho = model.evaluate(theta0).state
    j_q = fisher.bkm_J(model, theta0).entries
    i_q = fisher.shadow_I_model(model, theta0).entries
    jq_inv, _ = pinv(j_q)
    ic_inv, _ = pinv(fisher.classical_I_model(model, theta0))
    targets = {"shadow": jq_inv @ i_q @ jq_inv, "ll": ic_inv}
    draws = {"shadow": [], "ll": []}
    for r in range(reps):
        rng = derive_rng(config.master_seed, STREAM_VALIDATION, _NORMALITY, n, r)
        outcomes = sample_outcomes(rho, n, rng)
        fq = fit_shadow(model, mean_snapshot(outcomes), **_fit_kw(config, rng, theta0))
        fc = fit_ll(model, outcomes, **_fit_kw(config, rng, theta0))
        draws["shadow"].append(np.sqrt(n) * (fq.theta_hat - theta0))
        draws["ll"].append(np.sqrt(n) * (fc.theta_hat - theta0))
    out = {"model": model.name, "free": list(model.free), "n": n, "replications": reps}
    for est, z in draws.items():
        z = np.asarray(z)
        emp = np.atleast_2d(np.cov(z, rowvar=False))
        mean = z.mean(axis=0)
        se = z.std(axis=0, ddof=1) / np.sqrt(reps)
        out[est] = {"empirical_cov": emp.tolist(), "asymptotic_cov": targets[est].tolist(),
                    "ratio": (emp / targets[est]).tolist(), "mean": mean.tolist(),
                    "mean_se": se.tolist()}
    return out


def validate_consistency(config, n_values=(100, 1000, 10000), seeds=10):
    """Median ``D(rho || sigma(theta_hat))`` per sample size for both estimators on the full true family."""
    model = config.true_family()
    theta0 = config.true_theta()
    rho = model.evaluate(theta0).state
    out = {"model": model.name, "n_values": list(n_values), "shadow": [], "ll": []}
    for n in n_values:
        div = {"shadow": [], "ll": []}
        for s in range(seeds):
            rng = derive_rng(config.master_seed, STREAM_VALIDATION, _CONSISTENCY, n, s)
            outcomes = sample_outcomes(rho, n, rng)
            kw = dict(restarts=config.restarts, seed=rng, gtol=config.gtol, max_iter=config.max_iter,
                      bound=config.ebm_bound)
            fq = fit_shadow(model, mean_snapshot(outcomes), **kw)
            fc = fit_ll(model, outcomes, **kw)
            for est, f in (("shadow", fq), ("ll", fc)):
                div[est].append(relative_entropy(rho, model.evaluate(f.theta_hat).log_state))
        for est in div:
            out[est].append(float(np.median(div[est])))
    return out
