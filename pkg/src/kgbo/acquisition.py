"""Knowledge-gradient acquisition values in five flavours.

All variants score a candidate point by the expected lift of the posterior
mean maximum after one more observation. They differ in how the inner
maximization is approximated: a fixed discretization (exact envelope
expectation), Monte-Carlo fantasy maximization, a hybrid of the two, or
one-shot joint optimization of the candidate and the discretization.
Every evaluator is a pure function of (gp, spec, seed) and returns
bit-identical values on identical inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .epigraph import epigraph_expectation
from .gp import DegenerateAnchorError, PosteriorGP
from .optimizer import (
    BoxDomain,
    OptimizerConfig,
    OptimizerFailure,
    halton_points,
    maximize,
    maximize_batch,
    maximize_joint,
)

DEFAULT_INNER_CFG = OptimizerConfig(restarts=10, max_iters=100)
DEFAULT_ACQ_CFG = OptimizerConfig(restarts=20, max_iters=100)

# Batched inner maximizations are processed in problem chunks to bound the
# peak memory of the (problems x starts x data) kernel tensors.
_INNER_CHUNK = 4096


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(abs(int(seed))).generate_state(n)]


class Variant(Enum):
    DISC = "disc"
    MC = "mc"
    HYBRID = "hybrid"
    ONESHOT = "oneshot"
    ONESHOT_HYBRID = "oneshot_hybrid"
    RANDOM = "random"


@dataclass(frozen=True)
class Discretization:
    """Finite inner-maximization support inside the unit box."""

    points: np.ndarray
    include_incumbent: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        if pts.shape[0] < 1:
            raise ValueError("discretization needs at least one point")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise ValueError("discretization points must lie in the unit box")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ZSet:
    """Frozen z-scores: Gaussian quantiles or seeded quasi-random draws."""

    values: np.ndarray
    source: str
    seed: int | None = None

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def quantile(cls, n_z: int) -> "ZSet":
        """Midpoint Gaussian quantiles ndtri((2i-1)/(2 n_z)), i = 1..n_z."""
        if n_z < 1:
            raise ValueError("n_z must be >= 1")
        probs = (2.0 * np.arange(1, n_z + 1) - 1.0) / (2.0 * n_z)
        vals = ndtri(probs)
        vals = 0.5 * (vals - vals[::-1])  # enforce exact symmetry about zero
        return cls(values=vals, source="quantile")

    @classmethod
    def monte_carlo(cls, n_z: int, seed: int) -> "ZSet":
        """Quasi-random standard Gaussian draws, reproducible from the seed."""
        if n_z < 1:
            raise ValueError("n_z must be >= 1")
        u = halton_points(n_z, 1, seed)[:, 0]
        return cls(values=ndtri(u), source="monte-carlo", seed=seed)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which KG variant to run, its size parameter and optimizer budgets."""

    variant: Variant
    size: int = 1
    optimizer: OptimizerConfig = DEFAULT_ACQ_CFG
    inner: OptimizerConfig = DEFAULT_INNER_CFG

    def __post_init__(self):
        if self.variant is not Variant.RANDOM and self.size < 1:
            raise ValueError("size parameter must be >= 1")

    @property
    def label(self) -> str:
        if self.variant is Variant.RANDOM:
            return "random"
        return f"{self.variant.value}:{self.size}"

    @classmethod
    def parse(cls, text: str, optimizer=DEFAULT_ACQ_CFG, inner=DEFAULT_INNER_CFG) -> "AcquisitionSpec":
        """Parse labels like ``disc:1000``, ``oneshot_hybrid:10`` or ``random``."""
        name, _, size = text.strip().partition(":")
        variant = Variant(name.lower())
        if variant is Variant.RANDOM:
            return cls(variant=variant, size=0 if not size else int(size),
                       optimizer=optimizer, inner=inner)
        if not size:
            raise ValueError(f"method {text!r} needs a size parameter, e.g. {name}:10")
        return cls(variant=variant, size=int(size), optimizer=optimizer, inner=inner)


@dataclass(frozen=True)
class NextPointResult:
    point: np.ndarray
    acq_value: float
    wall_time_s: float
    eval_time_s: float


def find_incumbent(gp: PosteriorGP, cfg: OptimizerConfig = DEFAULT_INNER_CFG,
                   init=None):
    """Argmax of the posterior mean by multi-restart ascent.

    ``init`` rows take precedence over the Halton restarts (e.g. the best
    observed input, or the incumbent of the previous iteration). Exact value
    ties across restarts are broken toward the lexicographically smallest
    point so the incumbent is a canonical function of the posterior.
    """
    box = BoxDomain.unit(gp.dim)

    def objective(x):
        return gp.mean(x), gp.mean_grad(x)

    results = maximize(objective, box, cfg, init=init, full_output=True)
    best_val = max(v for _, v in results)
    point = min((x for x, v in results if v == best_val), key=lambda p: tuple(p))
    return point, best_val


# -- discrete KG -----------------------------------------------------------


def _assemble_points(gp, disc, incumbent):
    pts = disc.points
    if disc.include_incumbent:
        if incumbent is None:
            incumbent = find_incumbent(gp)[0]
        pts = np.vstack([pts, np.asarray(incumbent, dtype=float)])
    return pts


def kg_discrete(gp: PosteriorGP, x_new, disc: Discretization, incumbent=None) -> float:
    """Envelope expectation of the fantasy means over a fixed discretization."""
    pts = _assemble_points(gp, disc, incumbent)
    la = gp.lookahead(x_new)
    return epigraph_expectation(gp.mean(pts), la.sigma(pts)).value


def kg_discrete_with_grad(gp: PosteriorGP, x_new, disc: Discretization, incumbent=None):
    """Value plus gradients w.r.t. the candidate and each free discretization point.

    Gradients hold the surviving envelope index set fixed, which is exact
    wherever that index set is locally stable.
    """
    pts = _assemble_points(gp, disc, incumbent)
    n_free = len(disc)
    la = gp.lookahead(x_new)
    mu = gp.mean(pts)
    sig = la.sigma(pts)
    env = epigraph_expectation(mu, sig)

    kept = env.kept_indices
    g_xnew = -env.pdf_weights @ la.sigma_grad_anchor(pts[kept])

    g_pts = np.zeros((n_free, gp.dim))
    on_env = kept < n_free
    if np.any(on_env):
        rows = kept[on_env]
        g_pts[rows] += env.cdf_weights[on_env, None] * gp.mean_grad(pts[rows])
        g_pts[rows] -= env.pdf_weights[on_env, None] * la.sigma_grad_x(pts[rows])
    top = int(np.argmax(mu))
    if top < n_free:
        g_pts[top] -= gp.mean_grad(pts[top])
    return env.value, g_xnew, g_pts


def kg_oneshot_hybrid(gp: PosteriorGP, x_new, disc: Discretization, incumbent=None) -> float:
    """Discrete KG with the incumbent pinned into the discretization.

    Identical to ``kg_discrete`` on the augmented point set; it exists as a
    named variant because its optimization mode is a joint ascent over the
    candidate and the discretization.
    """
    augmented = Discretization(points=disc.points, include_incumbent=True)
    return kg_discrete(gp, x_new, augmented, incumbent=incumbent)


# -- Monte-Carlo and hybrid KG ----------------------------------------------


def _fantasy_argmaxes(gp, la, z_values, cfg, init_point=None, warm=None):
    """Batched inner maximization of every fantasy mean in ``z_values``.

    Returns (argmaxes (n_z, D), maxima (n_z,)). One shared set of Halton
    restarts is used for all fantasies; ``init_point`` adds a warm start to
    every problem. ``warm`` (n_z, D) supplies per-problem warm starts from a
    nearby candidate, in which case the cold Halton restarts are skipped --
    the warm points already sit in the right basins. The anchor itself is
    always seeded as a start: for z-scores away from zero the fantasy
    surface peaks near the anchor, a basin Halton restarts easily miss.
    """
    box = BoxDomain.unit(gp.dim)
    z_values = np.asarray(z_values, dtype=float)
    n_z = z_values.shape[0]
    arg = np.empty((n_z, gp.dim))
    val = np.empty(n_z)
    for lo in range(0, n_z, _INNER_CHUNK):
        hi = min(lo + _INNER_CHUNK, n_z)
        z = z_values[lo:hi]
        P = hi - lo

        def f_batch(X):
            p, s, d = X.shape
            mu, dmu, sg, dsg = la.fantasy_parts(X.reshape(-1, d))
            zz = np.repeat(z, s)
            vals = (mu + sg * zz).reshape(p, s)
            grads = (dmu + zz[:, None] * dsg).reshape(p, s, d)
            return vals, grads

        slots = [np.broadcast_to(la.anchor, (P, 1, gp.dim))]
        if warm is not None:
            slots.append(np.asarray(warm, dtype=float)[lo:hi, None, :])
        elif init_point is not None:
            slots.append(np.broadcast_to(
                np.asarray(init_point, dtype=float), (P, 1, gp.dim)))
        arg[lo:hi], val[lo:hi] = maximize_batch(
            f_batch, box, cfg, P, init=np.concatenate(slots, axis=1),
            include_base=(warm is None))
    return arg, val


@dataclass(frozen=True)
class MCValue:
    """Monte-Carlo KG estimate with the per-fantasy inner solutions."""

    value: float
    argmaxes: np.ndarray
    maxima: np.ndarray


def kg_mc(gp: PosteriorGP, x_new, zs: ZSet, cfg: OptimizerConfig = DEFAULT_INNER_CFG,
          incumbent=None) -> MCValue:
    """Average of inner fantasy maxima over a frozen z-sample, less the
    maximized current posterior mean."""
    if incumbent is None:
        incumbent = find_incumbent(gp, cfg)
    la = gp.lookahead(x_new)
    argmaxes, maxima = _fantasy_argmaxes(gp, la, zs.values, cfg, init_point=incumbent[0])
    return MCValue(value=float(np.mean(maxima) - incumbent[1]),
                   argmaxes=argmaxes, maxima=maxima)


def _hybrid_eval(gp, x_new, n_z, cfg, incumbent, warm=None):
    """Hybrid KG pieces: value, collected discretization, candidate gradient."""
    zs = ZSet.quantile(n_z)
    la = gp.lookahead(x_new)
    argmaxes, _ = _fantasy_argmaxes(gp, la, zs.values, cfg,
                                    init_point=incumbent[0], warm=warm)
    pts = np.vstack([argmaxes, incumbent[0]])
    disc = Discretization(points=pts)
    value, g_xnew, _ = kg_discrete_with_grad(gp, x_new, disc)
    return value, disc, g_xnew


def kg_hybrid(gp: PosteriorGP, x_new, n_z: int, cfg: OptimizerConfig = DEFAULT_INNER_CFG,
              incumbent=None):
    """Discrete KG over the argmaxes of quantile fantasies plus the incumbent.

    Returns (value, discretization actually used).
    """
    if incumbent is None:
        incumbent = find_incumbent(gp, cfg)
    value, disc, _ = _hybrid_eval(gp, x_new, n_z, cfg, incumbent)
    return value, disc


# -- one-shot KG -------------------------------------------------------------


def kg_oneshot(gp: PosteriorGP, x_new, disc: Discretization, zs: ZSet,
               incumbent_value: float | None = None) -> float:
    """Pairwise fantasy evaluation: mean_j of mu^{n+1}_j at its paired point.

    A pure evaluation with no inner optimization; with random pairings the
    value may be negative, and it never exceeds the Monte-Carlo KG for the
    same z-sample.
    """
    value, _, _ = kg_oneshot_with_grad(gp, x_new, disc, zs, incumbent_value)
    return value


def kg_oneshot_with_grad(gp: PosteriorGP, x_new, disc: Discretization, zs: ZSet,
                         incumbent_value: float | None = None):
    if len(disc) != len(zs):
        raise ValueError(
            f"discretization size {len(disc)} must match z-sample size {len(zs)}"
        )
    if incumbent_value is None:
        incumbent_value = find_incumbent(gp)[1]
    la = gp.lookahead(x_new)
    pts = disc.points
    z = zs.values
    n_z = z.shape[0]
    vals = gp.mean(pts) + la.sigma(pts) * z
    value = float(np.mean(vals) - incumbent_value)
    g_pts = (gp.mean_grad(pts) + z[:, None] * la.sigma_grad_x(pts)) / n_z
    g_xnew = (z[:, None] * la.sigma_grad_anchor(pts)).mean(axis=0)
    return value, g_xnew, g_pts


# -- acquisition optimization -------------------------------------------------


def _joint_inits(incumbent_point, n_free, restarts, dim, seed_x, seed_pts):
    """Per-restart (x_new, points) starts: incumbent-led space-filling blocks."""
    x_starts = np.vstack([incumbent_point,
                          halton_points(max(restarts - 1, 0), dim, seed_x)])
    blocks = halton_points(max(n_free - 1, 0) * restarts, dim, seed_pts)
    inits = []
    for r in range(restarts):
        blk = blocks[r * (n_free - 1):(r + 1) * (n_free - 1)] if n_free > 1 else np.empty((0, dim))
        inits.append((x_starts[r], np.vstack([incumbent_point[None, :], blk])))
    return inits


def next_point(gp: PosteriorGP, spec: AcquisitionSpec, seed: int,
               incumbent=None) -> NextPointResult:
    """Optimize the acquisition surface and return the chosen sample point.

    Nested variants (disc/mc/hybrid) run a multi-restart ascent over the
    candidate only; one-shot variants ascend jointly over the candidate and
    the discretization with frozen z-samples. Optimizer failures fall back
    to the best evaluated candidate so a BO run never aborts here. The wall
    time covers the acquisition optimization only; ``eval_time_s`` times a
    single acquisition evaluation at a seeded probe point.
    """
    dim = gp.dim
    box = BoxDomain.unit(dim)
    s_sample, s_probe, s_xinit, s_ptsinit, s_restarts = _child_seeds(seed, 5)

    if spec.variant is Variant.RANDOM:
        t0 = time.perf_counter()
        point = np.random.default_rng(seed).random(dim)
        wall = time.perf_counter() - t0
        return NextPointResult(point=point, acq_value=float("nan"),
                               wall_time_s=wall, eval_time_s=0.0)

    if incumbent is None:
        incumbent = find_incumbent(gp, spec.inner)
    inc_pt, inc_val = np.asarray(incumbent[0], dtype=float), float(incumbent[1])

    zeros = np.zeros(dim)

    if spec.variant is Variant.DISC:
        disc = Discretization(points=halton_points(spec.size, dim, s_sample))

        def objective(u):
            try:
                value, g, _ = kg_discrete_with_grad(gp, u, disc)
            except DegenerateAnchorError:
                return 0.0, zeros
            return value, g

    elif spec.variant is Variant.MC:
        zs = ZSet.monte_carlo(spec.size, s_sample)
        warm_cache = {"pts": None}

        def objective(u):
            try:
                la = gp.lookahead(u)
            except DegenerateAnchorError:
                return 0.0, zeros
            argmaxes, maxima = _fantasy_argmaxes(gp, la, zs.values, spec.inner,
                                                 init_point=inc_pt,
                                                 warm=warm_cache["pts"])
            warm_cache["pts"] = argmaxes
            value = float(np.mean(maxima) - inc_val)
            g = (zs.values[:, None] * la.sigma_grad_anchor(argmaxes)).mean(axis=0)
            return value, g

    elif spec.variant is Variant.HYBRID:
        warm_cache = {"pts": None}

        def objective(u):
            try:
                value, disc, g = _hybrid_eval(gp, u, spec.size, spec.inner,
                                              (inc_pt, inc_val),
                                              warm=warm_cache["pts"])
            except DegenerateAnchorError:
                return 0.0, zeros
            warm_cache["pts"] = disc.points[:-1]
            return value, g

    if spec.variant in (Variant.DISC, Variant.MC, Variant.HYBRID):
        probe = np.random.default_rng(s_probe).random(dim)
        t0 = time.perf_counter()
        objective(probe)
        eval_time = time.perf_counter() - t0
        t1 = time.perf_counter()
        try:
            # fresh per-call restart locations so stalled regions of the
            # acquisition surface cannot trap every BO iteration the same way
            point, value = maximize(objective, box,
                                    spec.optimizer.with_seed(s_restarts),
                                    init=inc_pt)
        except OptimizerFailure as err:
            point, value = err.best_seen if err.best_seen else (inc_pt, 0.0)
        wall = time.perf_counter() - t1
        return NextPointResult(point=point, acq_value=float(value),
                               wall_time_s=wall, eval_time_s=eval_time)

    # One-shot variants: joint ascent over (candidate, discretization).
    if spec.variant is Variant.ONESHOT:
        zs = ZSet.monte_carlo(spec.size, s_sample)

        def joint_objective(u, pts):
            try:
                return kg_oneshot_with_grad(gp, u, Discretization(points=pts),
                                            zs, incumbent_value=inc_val)
            except DegenerateAnchorError:
                return 0.0, zeros, np.zeros_like(pts)

    else:  # ONESHOT_HYBRID: incumbent pinned into the evaluated point set

        def joint_objective(u, pts):
            try:
                disc = Discretization(points=pts, include_incumbent=True)
                return kg_discrete_with_grad(gp, u, disc, incumbent=inc_pt)
            except DegenerateAnchorError:
                return 0.0, zeros, np.zeros_like(pts)

    inits = _joint_inits(inc_pt, spec.size, spec.optimizer.restarts, dim,
                         s_xinit, s_ptsinit)
    probe = np.random.default_rng(s_probe).random(dim)
    t0 = time.perf_counter()
    joint_objective(probe, inits[0][1])
    eval_time = time.perf_counter() - t0
    t1 = time.perf_counter()
    try:
        point, _, value = maximize_joint(joint_objective, box, spec.size,
                                         spec.optimizer, init=inits)
    except OptimizerFailure as err:
        if err.best_seen is not None:
            flat, value = err.best_seen
            point = flat[:dim]
        else:
            point, value = inc_pt, 0.0
    wall = time.perf_counter() - t1
    return NextPointResult(point=point, acq_value=float(value),
                           wall_time_s=wall, eval_time_s=eval_time)
