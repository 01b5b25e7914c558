"""Losses and the quasi-Newton fitter for QHBM parameters.

Two estimators share one optimizer:

* likelihood: minimize ``-(1/n) sum_a log Tr(Pi_{x_a} sigma(theta))``
* shadow: minimize ``-Tr(rho_bar log sigma(theta))`` with ``rho_bar`` the
  mean snapshot, which equals ``-(1/n) sum_a Tr(rho_hat_a log sigma)``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .povm import OutcomeSet, outcome_expectations
from .seeding import as_generator

logger = logging.getLogger(__name__)

GTOL = 1e-8
MAX_ITER = 500
DEFAULT_RESTARTS = 5
INIT_RANGE = 1.0
MIN_PROB = 1e-300
# Boltzmann-machine parameters live in [-EBM_BOUND, EBM_BOUND]; the shadow loss is
# unbounded below along escaping EBM directions whenever rho_bar is not PSD
EBM_BOUND = float(np.pi)


class FitError(RuntimeError):
    pass


class SupportError(ValueError):
    """An observed outcome has (numerically) zero model probability."""


@dataclass
class FitResult:
    theta_hat: np.ndarray
    loss: float
    grad_norm: float
    iterations: int
    restarts_used: int
    converged: bool
    restart_losses: list = field(default_factory=list)
    at_bound: bool = False

    def to_dict(self):
        return {
            "theta_hat": [float(v) for v in self.theta_hat],
            "loss": float(self.loss),
            "grad_norm": float(self.grad_norm),
            "iterations": int(self.iterations),
            "restarts_used": int(self.restarts_used),
            "converged": bool(self.converged),
            "at_bound": bool(self.at_bound),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["theta_hat"], dtype=float), float(d["loss"]), float(d["grad_norm"]),
                   int(d["iterations"]), int(d["restarts_used"]), bool(d["converged"]),
                   at_bound=bool(d.get("at_bound", False)))


def _counts(outcomes):
    if isinstance(outcomes, OutcomeSet):
        counts = outcomes.counts()
    else:
        counts = np.asarray(outcomes)
    n = counts.sum()
    if n < 1:
        raise ValueError("no outcomes given")
    return counts, n


def loss_ll(model, theta, outcomes):
    """Average negative log-likelihood and its gradient.

    ``outcomes`` is an :class:`OutcomeSet` or a vector of per-outcome counts
    in canonical order.
    """
    counts, n = _counts(outcomes)
    return _ll_from_counts(model, theta, counts, n)


def _ll_from_counts(model, theta, counts, n):
    pt = model.evaluate(theta)
    obs = np.flatnonzero(counts)
    vals = outcome_expectations(np.concatenate([pt.state[None], pt.grad_state]))[:, obs]
    h, dh = vals[0], vals[1:]
    if np.any(h < MIN_PROB):
        raise SupportError("model assigns zero probability to an observed outcome")
    w = counts[obs] / n
    loss = -float(w @ np.log(h))
    grad = -(dh / h) @ w
    return loss, grad


def loss_shadow(model, theta, rho_bar):
    """``-Tr(rho_bar log sigma(theta))`` and its gradient."""
    pt = model.evaluate(theta)
    rho_t = np.asarray(rho_bar).T
    loss = -float(np.real(np.sum(rho_t * pt.log_state)))
    grad = -np.real(np.einsum("ij,kij->k", rho_t, pt.grad_log))
    return loss, grad


def ll_objective(model, outcomes):
    counts, n = _counts(outcomes)
    return lambda theta: _ll_from_counts(model, theta, counts, n)


def shadow_objective(model, rho_bar):
    rho_bar = np.asarray(rho_bar, dtype=complex)
    return lambda theta: loss_shadow(model, theta, rho_bar)


def bfgs(fun, x0, gtol=GTOL, max_iter=MAX_ITER, max_step=2.0, c1=1e-4):
    """BFGS with backtracking Armijo line search.

    Returns ``(x, f, g, iterations, converged)``.  The inverse-Hessian update
    is skipped whenever the curvature condition fails.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite loss at the initial point")
    p = len(x)
    hinv = np.eye(p)
    first = True
    for it in range(max_iter):
        if np.max(np.abs(g)) < gtol:
            return x, f, g, it, True
        d = -hinv @ g
        gd = float(g @ d)
        if gd >= 0:
            hinv = np.eye(p)
            d, gd = -g, -float(g @ g)
        step = min(1.0, max_step / max(np.linalg.norm(d), 1e-300))
        fnew = np.inf
        for _ in range(60):
            xn = x + step * d
            try:
                fnew, gnew = fun(xn)
            except (FloatingPointError, ValueError):
                fnew = np.inf
            if np.isfinite(fnew) and fnew <= f + c1 * step * gd:
                break
            # rounding-limited regime: accept a non-increasing step that shrinks the gradient
            if (np.isfinite(fnew) and fnew <= f + 8 * np.finfo(float).eps * abs(f)
                    and np.max(np.abs(gnew)) < np.max(np.abs(g))):
                break
            step *= 0.5
        else:
            return x, f, g, it, False
        s = xn - x
        y = gnew - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if first:
                hinv = np.eye(p) * (sy / float(y @ y))
                first = False
            rho = 1.0 / sy
            v = np.eye(p) - rho * np.outer(s, y)
            hinv = v @ hinv @ v.T + rho * np.outer(s, s)
        x, f, g = xn, fnew, gnew
    return x, f, g, max_iter, bool(np.max(np.abs(g)) < gtol)


class _Boxed:
    """Map bounded coordinates through ``bound * tanh`` so BFGS stays unconstrained."""

    def __init__(self, fun, p, box, bound):
        self.fun = fun
        self.idx = np.array(sorted(box), dtype=int)
        self.bound = bound

    def to_theta(self, phi):
        th = np.array(phi, dtype=float)
        th[self.idx] = self.bound * np.tanh(phi[self.idx])
        return th

    def to_phi(self, theta):
        phi = np.array(theta, dtype=float)
        ratio = np.clip(theta[self.idx] / self.bound, -1 + 1e-12, 1 - 1e-12)
        phi[self.idx] = np.arctanh(ratio)
        return phi

    def __call__(self, phi):
        f, g = self.fun(self.to_theta(phi))
        g = np.array(g, dtype=float)
        t = np.tanh(phi[self.idx])
        g[self.idx] *= self.bound * (1.0 - t * t)
        return f, g


def optimize(loss_fn, p, restarts=DEFAULT_RESTARTS, seed=0, starts=(), gtol=GTOL,
             max_iter=MAX_ITER, box=(), bound=EBM_BOUND):
    """Multi-start BFGS; the best restart (by loss, then index) wins.

    Random starts are drawn uniformly from ``[-1, 1]**p``; ``starts`` adds
    explicit initial points ahead of the random ones.  Parameters listed in
    ``box`` are confined to ``[-bound, bound]`` by a tanh reparametrization;
    ``grad_norm`` is measured in the optimizer's coordinates.
    """
    if p < 1:
        raise ValueError("need at least one parameter")
    rng = as_generator(seed)
    inits = [np.asarray(s, dtype=float) for s in starts]
    inits += [rng.uniform(-INIT_RANGE, INIT_RANGE, size=p) for _ in range(restarts)]
    boxed = _Boxed(loss_fn, p, box, bound)
    best, losses, failures = None, [], []
    for k, x0 in enumerate(inits):
        try:
            x, f, g, it, ok = bfgs(boxed, boxed.to_phi(x0), gtol=gtol, max_iter=max_iter)
        except (FloatingPointError, ValueError) as exc:
            failures.append(f"restart {k}: {exc}")
            losses.append(float("nan"))
            continue
        losses.append(float(f))
        if best is None or f < best[1]:
            best = (x, f, g, it, ok)
    if best is None:
        raise FitError("all restarts failed: " + "; ".join(failures))
    phi, f, g, it, ok = best
    theta = boxed.to_theta(phi)
    at_bound = bool(len(boxed.idx)) and bool(np.any(np.abs(theta[boxed.idx]) > bound * (1 - 1e-3)))
    return FitResult(theta, float(f), float(np.max(np.abs(g))), it, len(inits), ok, losses,
                     at_bound)


def fit_ll(model, outcomes, restarts=DEFAULT_RESTARTS, seed=0, **kw):
    kw.setdefault("box", model.ebm_indices)
    return optimize(ll_objective(model, outcomes), model.p, restarts, seed, **kw)


def fit_shadow(model, rho_bar, restarts=DEFAULT_RESTARTS, seed=0, **kw):
    kw.setdefault("box", model.ebm_indices)
    return optimize(shadow_objective(model, rho_bar), model.p, restarts, seed, **kw)
