"""Benchmark harness: method grids over GP-sampled test functions.

Runs every (method, dimension, replication) cell through the BO loop,
serializes one row per evaluation to ``results.csv``, aggregates final
opportunity costs and acquisition times into ``summary.csv`` and records
the fully resolved configuration in ``meta.json``. Reruns of the same
config reproduce ``results.csv`` byte for byte outside the timing columns.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .acquisition import AcquisitionSpec
from .bo import run_bo
from .gp import KernelConfig
from .optimizer import OptimizerConfig
from .testbed import sample_gp_function

FLOAT_FMT = "{:.17g}"


@dataclass(frozen=True)
class ExperimentConfig:
    dims: tuple = (2, 6)
    budget: int = 100
    replications: int = 100
    methods: tuple = (
        "disc:3", "disc:10", "disc:1000",
        "mc:3", "mc:10",
        "hybrid:3", "hybrid:10",
        "oneshot:3", "oneshot:10", "oneshot:128", "oneshot:500",
        "oneshot_hybrid:3", "oneshot_hybrid:10",
        "random",
    )
    n_init: int | None = None  # default 2 * (dim + 1), resolved per dimension
    lengthscale: float = 0.1
    signal_variance: float = 1.0
    noise_variance: float = 0.0
    n_features: int = 1024
    acq_restarts: int = 20
    acq_max_iters: int = 100
    inner_restarts: int = 10
    inner_max_iters: int = 100
    grad_tolerance: float = 1e-6
    seed_offset: int = 1_000_000
    replication_ids: tuple | None = None
    out_dir: str = "results"
    jobs: int = 1
    timing_pinned: bool = False

    def __post_init__(self):
        if self.replications < 1 or self.budget < 1:
            raise ValueError("replications and budget must be >= 1")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replication_ids is not None:
            object.__setattr__(self, "replication_ids",
                               tuple(int(r) for r in self.replication_ids))

    @property
    def effective_jobs(self) -> int:
        return 1 if self.timing_pinned else max(1, self.jobs)

    def replication_list(self) -> tuple:
        if self.replication_ids is not None:
            return self.replication_ids
        return tuple(range(self.replications))

    def resolve_n_init(self, dim: int) -> int:
        return self.n_init if self.n_init is not None else 2 * (dim + 1)

    def kernel(self, dim: int) -> KernelConfig:
        return KernelConfig(
            lengthscales=np.full(dim, self.lengthscale),
            signal_variance=self.signal_variance,
            noise_variance=self.noise_variance,
        )

    def acquisition_spec(self, method: str) -> AcquisitionSpec:
        acq = OptimizerConfig(restarts=self.acq_restarts,
                              max_iters=self.acq_max_iters,
                              grad_tolerance=self.grad_tolerance)
        inner = OptimizerConfig(restarts=self.inner_restarts,
                                max_iters=self.inner_max_iters,
                                grad_tolerance=self.grad_tolerance)
        return AcquisitionSpec.parse(method, optimizer=acq, inner=inner)


def _nested_config_dict(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": {
            "dims": list(cfg.dims),
            "budget": cfg.budget,
            "replications": cfg.replications,
            "methods": list(cfg.methods),
            "n_init": cfg.n_init,
            "out": cfg.out_dir,
            "jobs": cfg.jobs,
            "timing_pinned": cfg.timing_pinned,
        },
        "kernel": {
            "lengthscale": cfg.lengthscale,
            "signal_variance": cfg.signal_variance,
            "noise_variance": cfg.noise_variance,
        },
        "testbed": {"n_features": cfg.n_features},
        "optimizer": {
            "acq_restarts": cfg.acq_restarts,
            "acq_max_iters": cfg.acq_max_iters,
            "inner_restarts": cfg.inner_restarts,
            "inner_max_iters": cfg.inner_max_iters,
            "grad_tolerance": cfg.grad_tolerance,
        },
        "seeds": {
            "offset": cfg.seed_offset,
            "replication_ids": None if cfg.replication_ids is None
            else list(cfg.replication_ids),
        },
    }


def config_from_dict(raw: dict) -> ExperimentConfig:
    exp = raw.get("experiment", {})
    kern = raw.get("kernel", {})
    tb = raw.get("testbed", {})
    opt = raw.get("optimizer", {})
    seeds = raw.get("seeds", {})
    kwargs = {}
    for key, src, name in [
        ("dims", exp, "dims"), ("budget", exp, "budget"),
        ("replications", exp, "replications"), ("methods", exp, "methods"),
        ("n_init", exp, "n_init"), ("out_dir", exp, "out"),
        ("jobs", exp, "jobs"), ("timing_pinned", exp, "timing_pinned"),
        ("lengthscale", kern, "lengthscale"),
        ("signal_variance", kern, "signal_variance"),
        ("noise_variance", kern, "noise_variance"),
        ("n_features", tb, "n_features"),
        ("acq_restarts", opt, "acq_restarts"),
        ("acq_max_iters", opt, "acq_max_iters"),
        ("inner_restarts", opt, "inner_restarts"),
        ("inner_max_iters", opt, "inner_max_iters"),
        ("grad_tolerance", opt, "grad_tolerance"),
        ("seed_offset", seeds, "offset"),
        ("replication_ids", seeds, "replication_ids"),
    ]:
        if name in src and src[name] is not None:
            kwargs[key] = src[name]
    if "n_init" in exp:
        kwargs["n_init"] = exp["n_init"]
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh) or {})


def load_preset(name: str) -> ExperimentConfig:
    ref = resources.files("kgbo").joinpath(f"configs/{name}.yaml")
    return config_from_dict(yaml.safe_load(ref.read_text(encoding="utf-8")))


# -- cell execution ----------------------------------------------------------


def _run_cell(cfg: ExperimentConfig, method: str, dim: int, rep: int) -> list[dict]:
    fn = sample_gp_function(dim, lengthscale=cfg.lengthscale,
                            variance=cfg.signal_variance,
                            n_features=cfg.n_features, seed=rep)
    spec = cfg.acquisition_spec(method)
    history = run_bo(fn, spec, cfg.kernel(dim), budget=cfg.budget,
                     n_init=cfg.resolve_n_init(dim), seed=cfg.seed_offset + rep)
    size = spec.size if spec.label != "random" else 0
    rows = []
    for rec in history.records:
        row = {
            "method": spec.variant.value,
            "size_param": size,
            "dim": dim,
            "seed": rep,
            "iteration": rec.iteration,
            "phase": "init" if rec.iteration < history.n_init else "acq",
            "observed": rec.observed,
            "oc": rec.oc,
            "acq_wall_time_s": rec.acq_wall_time_s,
            "acq_eval_time_s": rec.acq_eval_time_s,
            "iter_wall_time_s": rec.iter_wall_time_s,
            "cold_start": rec.cold_start,
        }
        for j, v in enumerate(rec.point):
            row[f"x{j}"] = float(v)
        rows.append(row)
    return rows


def _cell_worker(args):
    cfg_dict, method, dim, rep = args
    cfg = ExperimentConfig(**cfg_dict)
    try:
        return _run_cell(cfg, method, dim, rep), None
    except Exception as err:  # noqa: BLE001 - cell isolation by design
        return [], {"method": method, "dim": dim, "seed": rep, "error": repr(err)}


TIMING_COLUMNS = ("acq_wall_time_s", "acq_eval_time_s", "iter_wall_time_s")


def row_columns(cfg: ExperimentConfig) -> list[str]:
    max_dim = max(cfg.dims)
    return (["method", "size_param", "dim", "seed", "iteration", "phase"]
            + [f"x{j}" for j in range(max_dim)]
            + ["observed", "oc", "acq_wall_time_s", "acq_eval_time_s",
               "iter_wall_time_s", "cold_start"])


def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FLOAT_FMT.format(value)
    return str(value)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def run_experiment(cfg: ExperimentConfig):
    """Execute the full method grid; returns (rows, summary_rows, failures)."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(method, dim, rep)
             for method in cfg.methods
             for dim in cfg.dims
             for rep in cfg.replication_list()]

    rows: list[dict] = []
    failures: list[dict] = []
    if cfg.effective_jobs > 1:
        cfg_dict = asdict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.effective_jobs) as pool:
            for cell_rows, failure in pool.map(
                    _cell_worker, [(cfg_dict, m, d, r) for m, d, r in cells]):
                rows.extend(cell_rows)
                if failure:
                    failures.append(failure)
    else:
        for method, dim, rep in cells:
            cell_rows, failure = _cell_worker((asdict(cfg), method, dim, rep))
            rows.extend(cell_rows)
            if failure:
                failures.append(failure)

    rows.sort(key=lambda r: (r["method"], r["size_param"], r["dim"],
                             r["seed"], r["iteration"]))
    summary_rows = summarize(rows)

    write_csv(out / "results.csv", row_columns(cfg), rows)
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary_rows)
    meta = {
        "config": _nested_config_dict(cfg),
        "seed_rule": "replication r: test-function seed r, run seed offset + r",
        "quasi_random_generator": "scrambled Halton",
        "ci_method": "normal approximation, mean +/- 1.96 * se",
        "versions": {
            "kgbo": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "failures": failures,
    }
    with open(out / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows, summary_rows, failures


# -- aggregation ---------------------------------------------------------------

SUMMARY_COLUMNS = [
    "method", "size_param", "dim", "n_seeds", "mean_final_oc", "se_final_oc",
    "ci95_lo", "ci95_hi", "log10_mean_final_oc", "median_acq_wall_time_s",
    "median_acq_eval_time_s",
]

LOG_OC_FLOOR = 1e-12


def summarize(rows: list[dict]) -> list[dict]:
    """Aggregate per (method, size, dim): final-OC stats and timing medians."""
    if not rows:
        raise ValueError("no rows to summarize")
    groups: dict = {}
    for row in rows:
        key = (str(row["method"]), int(row["size_param"]), int(row["dim"]))
        groups.setdefault(key, []).append(row)

    out = []
    for key in sorted(groups):
        grp = groups[key]
        finals = {}
        for row in grp:
            seed = int(row["seed"])
            it = int(row["iteration"])
            if seed not in finals or it > finals[seed][0]:
                finals[seed] = (it, float(row["oc"]))
        ocs = np.asarray([oc for _, oc in finals.values()], dtype=float)
        if ocs.size == 0:
            continue
        mean = float(np.mean(ocs))
        if ocs.size > 1:
            se = float(np.std(ocs, ddof=1) / math.sqrt(ocs.size))
            ci_lo, ci_hi = mean - 1.96 * se, mean + 1.96 * se
        else:
            se, ci_lo, ci_hi = None, mean, mean
        acq_rows = [r for r in grp if str(r["phase"]) == "acq"]
        med_wall = (float(np.median([float(r["acq_wall_time_s"]) for r in acq_rows]))
                    if acq_rows else None)
        med_eval = (float(np.median([float(r["acq_eval_time_s"]) for r in acq_rows]))
                    if acq_rows else None)
        out.append({
            "method": key[0], "size_param": key[1], "dim": key[2],
            "n_seeds": ocs.size,
            "mean_final_oc": mean,
            "se_final_oc": se,
            "ci95_lo": ci_lo,
            "ci95_hi": ci_hi,
            "log10_mean_final_oc": math.log10(max(mean, LOG_OC_FLOOR)),
            "median_acq_wall_time_s": med_wall,
            "median_acq_eval_time_s": med_eval,
        })
    return out


def read_results_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
