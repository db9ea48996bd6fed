"""Sequential Bayesian optimization driver.

One run: evaluate a Latin hypercube initial design, then alternate exact GP
refits with acquisition optimization until the evaluation budget is spent,
and recommend the posterior-mean argmax. Every iteration logs the sampled
point, the opportunity cost of the current recommendation and wall times.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .acquisition import AcquisitionSpec, Variant, find_incumbent, next_point
from .gp import Dataset, KernelConfig, NonPSDError, PosteriorGP, fit_posterior
from .optimizer import OptimizerConfig
from .testbed import TestFunction, latin_hypercube


class GPFitError(RuntimeError):
    """GP refit failed mid-run; carries the iteration and jitter diagnostics."""

    def __init__(self, iteration, cause: NonPSDError):
        self.iteration = iteration
        self.attempted_jitters = cause.attempted_jitters
        super().__init__(
            f"GP fit failed at iteration {iteration}; attempted jitters "
            f"{cause.attempted_jitters}"
        )


@dataclass(frozen=True)
class RunRecord:
    """One evaluation of the black box and the bookkeeping around it."""

    iteration: int
    point: np.ndarray
    observed: float
    oc: float
    acq_wall_time_s: float
    acq_eval_time_s: float
    iter_wall_time_s: float
    cold_start: bool


@dataclass(frozen=True)
class BOHistory:
    method: str
    dim: int
    seed: int
    n_init: int
    budget: int
    records: tuple
    recommendation: np.ndarray
    predicted_value: float
    true_value: float
    final_oc: float


def _iteration_seed(run_seed: int, iteration: int, stream: int = 0) -> int:
    return int(np.random.SeedSequence(
        (abs(int(run_seed)), iteration, stream)).generate_state(1)[0])


def recommend(gp: PosteriorGP, cfg: OptimizerConfig) -> np.ndarray:
    """Best predicted point: multi-restart argmax of the posterior mean."""
    return find_incumbent(gp, cfg)[0]


def run_bo(fn: TestFunction, spec: AcquisitionSpec, kernel: KernelConfig,
           budget: int, n_init: int, seed: int) -> BOHistory:
    """Run one Bayesian-optimization loop against a known test function.

    ``budget`` counts all black-box evaluations including the ``n_init``
    initial-design points; ``budget == n_init`` degenerates to a pure
    space-filling run. Deterministic given (fn, spec, seed) apart from the
    wall-time fields.
    """
    if n_init < 1 or n_init > budget:
        raise ValueError("need 1 <= n_init <= budget")
    true_pt, true_val = fn.true_max

    X = list(latin_hypercube(n_init, fn.dim, seed).points)
    Y = [fn(x) for x in X]

    def refit(iteration):
        try:
            return fit_posterior(Dataset(np.asarray(X), np.asarray(Y)), kernel)
        except NonPSDError as err:
            raise GPFitError(iteration, err) from err

    def locate_incumbent(gp, k, prev_pt):
        # warm-started with the best observed input (and the previous
        # incumbent), with fresh restart locations every iteration
        starts = [X[int(np.argmax(Y))]]
        if prev_pt is not None:
            starts.append(prev_pt)
        cfg = spec.inner.with_seed(_iteration_seed(seed, k, stream=1))
        return find_incumbent(gp, cfg, init=np.vstack(starts))

    gp = refit(n_init - 1)
    inc_pt, inc_val = locate_incumbent(gp, n_init - 1, None)
    oc = true_val - fn(inc_pt)

    records = [
        RunRecord(iteration=i, point=np.asarray(X[i]), observed=Y[i], oc=oc,
                  acq_wall_time_s=0.0, acq_eval_time_s=0.0,
                  iter_wall_time_s=0.0, cold_start=False)
        for i in range(n_init)
    ]

    for k in range(n_init, budget):
        t0 = time.perf_counter()
        result = next_point(gp, spec, _iteration_seed(seed, k),
                            incumbent=(inc_pt, inc_val))
        y = fn(result.point)
        X.append(result.point)
        Y.append(y)
        gp = refit(k)
        inc_pt, inc_val = locate_incumbent(gp, k, inc_pt)
        oc = true_val - fn(inc_pt)
        records.append(RunRecord(
            iteration=k, point=result.point, observed=y, oc=oc,
            acq_wall_time_s=result.wall_time_s,
            acq_eval_time_s=result.eval_time_s,
            iter_wall_time_s=time.perf_counter() - t0,
            cold_start=(k == n_init),
        ))

    rec_true = fn(inc_pt)
    return BOHistory(
        method=spec.label, dim=fn.dim, seed=seed, n_init=n_init, budget=budget,
        records=tuple(records), recommendation=inc_pt,
        predicted_value=float(inc_val), true_value=float(rec_true),
        final_oc=float(true_val - rec_true),
    )
