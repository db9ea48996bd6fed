"""Deterministic multi-restart maximization over box domains.

Objectives return (value, gradient) pairs. Restart points come from a
seeded Halton sequence, so identical configs reproduce identical optima
bit for bit. Two ascent rules are available: L-BFGS-B (via scipy) and a
projected fixed-step ascent with backtracking; the latter also powers a
vectorized variant that solves many independent problems in lockstep.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc


class OptimizerFailure(RuntimeError):
    """Every restart was discarded (non-finite objective throughout)."""

    def __init__(self, message, best_seen=None):
        super().__init__(message)
        self.best_seen = best_seen


class StepRule(Enum):
    QUASI_NEWTON = "quasi-newton"
    FIXED_STEP_BACKTRACKING = "fixed-step-backtracking"


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 10
    max_iters: int = 100
    grad_tolerance: float = 1e-6
    step_rule: StepRule = StepRule.QUASI_NEWTON
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be >= 1")
        if not self.grad_tolerance > 0:
            raise ValueError("grad_tolerance must be positive")

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("lower must be strictly below upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, dim: int) -> "BoxDomain":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def halton_points(n: int, dim: int, seed: int) -> np.ndarray:
    """n seeded low-discrepancy points in the unit box, shape (n, dim)."""
    if n == 0:
        return np.empty((0, dim))
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(n)


def _projected_grad(x, g, dom):
    """Gradient with components pointing out of the box zeroed."""
    pg = g.copy()
    pg[(x <= dom.lower) & (g < 0)] = 0.0
    pg[(x >= dom.upper) & (g > 0)] = 0.0
    return pg


class _NonFinite(Exception):
    pass


def _ascend_lbfgs(f, x0, dom, cfg):
    def neg(x):
        v, g = f(x)
        if not np.isfinite(v):
            raise _NonFinite
        return -v, -np.asarray(g, dtype=float)

    res = minimize(
        neg,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(dom.lower, dom.upper)),
        options={
            "maxiter": cfg.max_iters,
            "maxfun": 10 * cfg.max_iters + 20,
            "ftol": 1e-12,
            "gtol": cfg.grad_tolerance,
        },
    )
    x = dom.clip(np.asarray(res.x, dtype=float))
    return x, float(-res.fun)


def _ascend_fixed(f, x0, dom, cfg):
    x = x0.copy()
    v, g = f(x)
    if not np.isfinite(v):
        raise _NonFinite
    step = 0.25
    for _ in range(cfg.max_iters):
        g = np.asarray(g, dtype=float)
        if np.linalg.norm(_projected_grad(x, g, dom)) <= cfg.grad_tolerance:
            break
        moved = False
        for _ in range(40):
            cand = dom.clip(x + step * g)
            delta = cand - x
            cv, cg = f(cand)
            if np.isfinite(cv) and cv >= v + 1e-4 * float(g @ delta):
                x, v, g = cand, cv, cg
                step = min(step * 1.3, 2.0)
                moved = True
                break
            step *= 0.5
            if step < 1e-14:
                break
        if not moved:
            break
    return x, float(v)


def maximize(f, dom: BoxDomain, cfg: OptimizerConfig, init=None, full_output=False):
    """Multi-restart ascent of ``f`` over ``dom``.

    ``init`` may be a single start point or a stack of start points that
    take precedence over the Halton restarts; the total number of starts is
    always ``cfg.restarts``. Returns (x*, f*), or the per-restart list of
    (x, f) pairs when ``full_output`` is set. Restarts whose objective goes
    non-finite are discarded; if none survive, OptimizerFailure is raised.
    """
    starts = []
    if init is not None:
        arr = np.atleast_2d(np.asarray(init, dtype=float))
        starts.extend(dom.clip(row) for row in arr[: cfg.restarts])
    n_fill = cfg.restarts - len(starts)
    if n_fill > 0:
        fill = halton_points(n_fill, dom.dim, cfg.seed)
        starts.extend(dom.lower + fill * (dom.upper - dom.lower))

    ascend = _ascend_lbfgs if cfg.step_rule is StepRule.QUASI_NEWTON else _ascend_fixed
    results = []
    best_seen = None
    for x0 in starts:
        try:
            v0, _ = f(x0)
            if np.isfinite(v0) and (best_seen is None or v0 > best_seen[1]):
                best_seen = (x0.copy(), float(v0))
            x, v = ascend(f, x0, dom, cfg)
            if not np.isfinite(v):
                raise _NonFinite
            if np.isfinite(v0) and v0 > v:
                x, v = x0.copy(), float(v0)
            results.append((x, v))
        except _NonFinite:
            continue
    if not results:
        raise OptimizerFailure("all restarts discarded", best_seen=best_seen)
    if full_output:
        return results
    best = max(range(len(results)), key=lambda i: results[i][1])
    return results[best]


def maximize_batch(f_batch, dom: BoxDomain, cfg: OptimizerConfig, n_problems: int,
                   init=None, include_base=True):
    """Solve ``n_problems`` independent maximizations in lockstep.

    ``f_batch`` maps positions of shape (P, S, D) to (values (P, S),
    gradients (P, S, D)), where axis 0 selects the problem. All problems
    share the same ``cfg.restarts`` Halton starts; ``init`` of shape (P, D)
    or (P, k, D) prepends per-problem warm starts, and ``include_base=False``
    drops the shared Halton starts entirely (warm restarts only). Uses the
    projected fixed-step rule. Returns (argmaxes (P, D), values (P,)).
    """
    P, D = n_problems, dom.dim
    parts = []
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.ndim == 2:
            init = init[:, None, :]
        parts.append(dom.clip(init))
    if include_base or not parts:
        base = dom.lower + halton_points(cfg.restarts, D, cfg.seed) * (dom.upper - dom.lower)
        parts.append(np.broadcast_to(base, (P, cfg.restarts, D)).copy())
    X = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0].copy()
    S = X.shape[1]

    vals, grads = f_batch(X)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    step = np.full((P, S), 0.25)
    done = np.zeros((P, S), dtype=bool)
    for _ in range(cfg.max_iters):
        lo_hit = (X <= dom.lower) & (grads < 0)
        hi_hit = (X >= dom.upper) & (grads > 0)
        pg = np.where(lo_hit | hi_hit, 0.0, grads)
        active = ~done \
            & (np.einsum("psd,psd->ps", pg, pg) > cfg.grad_tolerance**2) \
            & (step > 1e-14)
        if not np.any(active):
            break
        cand = np.clip(X + step[:, :, None] * grads, dom.lower, dom.upper)
        delta = cand - X
        cvals, cgrads = f_batch(cand)
        armijo = vals + 1e-4 * np.einsum("psd,psd->ps", grads, delta)
        ok = active & np.isfinite(cvals) & (cvals >= armijo) & (cvals > vals)
        # Accepted steps that barely move the value have converged for all
        # practical purposes; retire them instead of polishing final digits.
        done |= ok & (cvals - vals < 1e-11 * (1.0 + np.abs(vals)))
        X = np.where(ok[:, :, None], cand, X)
        vals = np.where(ok, cvals, vals)
        grads = np.where(ok[:, :, None], cgrads, grads)
        step = np.where(ok, np.minimum(step * 1.3, 2.0),
                        np.where(active, step * 0.5, step))
        vals = np.where(np.isfinite(vals), vals, -np.inf)
    best = np.argmax(vals, axis=1)
    rows = np.arange(P)
    return X[rows, best], vals[rows, best]


def maximize_joint(f, dom: BoxDomain, d: int, cfg: OptimizerConfig, init=None):
    """Jointly maximize ``f(x_new, X_d)`` over the (1 + d)-fold product box.

    The tuple is flattened into one vector and handed to ``maximize``;
    ``init`` may be a single (x_new, X_d) tuple or a sequence of them used
    as the leading restart starts. Returns (x_new*, X_d*, f*).
    """
    D = dom.dim
    flat_dom = BoxDomain(np.tile(dom.lower, 1 + d), np.tile(dom.upper, 1 + d))

    def split(v):
        return v[:D], v[D:].reshape(d, D)

    def flat_f(v):
        x_new, pts = split(v)
        val, g_x, g_pts = f(x_new, pts)
        return val, np.concatenate([np.asarray(g_x, dtype=float).ravel(),
                                    np.asarray(g_pts, dtype=float).ravel()])

    flat_init = None
    if init is not None:
        tuples = init if isinstance(init, list) else [init]
        flat_init = np.stack(
            [np.concatenate([np.asarray(x, dtype=float).ravel(),
                             np.asarray(p, dtype=float).ravel()]) for x, p in tuples]
        )

    if d == 0:
        x, v = maximize(lambda u: f(u, np.empty((0, D)))[:2], dom, cfg,
                        init=None if flat_init is None else flat_init)
        return x, np.empty((0, D)), v

    x, v = maximize(flat_f, flat_dom, cfg, init=flat_init)
    x_new, pts = split(x)
    return x_new, pts, v
