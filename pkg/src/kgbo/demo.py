"""Emit figure-ready CSVs illustrating the KG approximations on a 1D fixture.

Writes the posterior mean/variance on a dense grid, fantasy-mean curves at
the quantile z-scores, the discrete-KG line system with its envelope
breakpoints, and the hybrid inner argmax points. Enough to replot the
acquisition-demo figure with any external tool.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .acquisition import DEFAULT_INNER_CFG, ZSet, find_incumbent, kg_hybrid
from .bench import write_csv
from .epigraph import epigraph_expectation
from .gp import Dataset, KernelConfig, PosteriorGP, fit_posterior


def demo_fixture() -> PosteriorGP:
    """Small 1D posterior with a couple of competing maxima."""
    X = np.array([[0.05], [0.25], [0.4], [0.55], [0.85]])
    Y = np.array([0.1, 0.85, -0.2, 0.6, -0.7])
    cfg = KernelConfig(lengthscales=np.array([0.12]), signal_variance=1.0,
                       noise_variance=1e-6)
    return fit_posterior(Dataset(X, Y), cfg)


def demo_emit(out_dir, gp: PosteriorGP | None = None, x_new: float = 0.7,
              n_grid: int = 401, n_z: int = 5, n_lines: int = 41) -> dict:
    """Write the demo CSV files; returns the emitted file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if gp is None:
        gp = demo_fixture()
    if gp.dim != 1:
        raise ValueError("the demo is a 1D illustration")
    anchor = np.array([float(x_new)])

    grid = np.linspace(0.0, 1.0, n_grid)[:, None]
    mean = gp.mean(grid)
    var = gp.var(grid)
    la = gp.lookahead(anchor)
    sig_grid = la.sigma(grid)

    posterior_path = out / "demo_posterior.csv"
    write_csv(posterior_path, ["x", "mean", "variance"],
              [{"x": float(x), "mean": float(m), "variance": float(v)}
               for x, m, v in zip(grid[:, 0], mean, var)])

    zs = ZSet.quantile(n_z)
    fantasy_rows = []
    for z in zs.values:
        values = mean + sig_grid * z
        fantasy_rows.extend(
            {"z": float(z), "x": float(x), "value": float(v)}
            for x, v in zip(grid[:, 0], values)
        )
    fantasies_path = out / "demo_fantasies.csv"
    write_csv(fantasies_path, ["z", "x", "value"], fantasy_rows)

    # Discrete-KG line system over a coarse uniform grid.
    lines_x = np.linspace(0.0, 1.0, n_lines)[:, None]
    mu = gp.mean(lines_x)
    sig = la.sigma(lines_x)
    env = epigraph_expectation(mu, sig)
    kept = set(int(i) for i in env.kept_indices)
    lines_path = out / "demo_lines.csv"
    write_csv(lines_path, ["line", "x", "mu", "sigma", "kept"],
              [{"line": i, "x": float(lines_x[i, 0]), "mu": float(mu[i]),
                "sigma": float(sig[i]), "kept": i in kept}
               for i in range(n_lines)])
    breakpoints_path = out / "demo_breakpoints.csv"
    write_csv(breakpoints_path, ["z"],
              [{"z": float(z)} for z in env.intersections])

    incumbent = find_incumbent(gp, DEFAULT_INNER_CFG)
    _, disc = kg_hybrid(gp, anchor, n_z, DEFAULT_INNER_CFG, incumbent=incumbent)
    hybrid_rows = []
    for j, z in enumerate(zs.values):
        pt = disc.points[j]
        fantasy_val = float(gp.mean(pt) + la.sigma(pt) * z)
        hybrid_rows.append({"z": float(z), "x_star": float(pt[0]),
                            "fantasy_value": fantasy_val})
    hybrid_path = out / "demo_hybrid.csv"
    write_csv(hybrid_path, ["z", "x_star", "fantasy_value"], hybrid_rows)

    return {
        "posterior": posterior_path,
        "fantasies": fantasies_path,
        "lines": lines_path,
        "breakpoints": breakpoints_path,
        "hybrid": hybrid_path,
    }
