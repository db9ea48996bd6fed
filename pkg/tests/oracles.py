"""Independent brute-force oracles used to freeze expected test values.

Everything here deliberately avoids the library's closed-form code paths:
expectations come from Monte-Carlo sampling or dense grids, gradients from
central differences. Values frozen into test data were produced by these
functions; ``tools/regen_oracle_data.py`` regenerates the data files.
"""

from __future__ import annotations

import numpy as np


def mc_envelope_expectation(mu, sigma, n_samples=10_000_000, seed=0,
                            chunk=1_000_000) -> float:
    """Monte-Carlo estimate of E_Z[max_i(mu_i + sigma_i Z)] - max_i mu_i."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    rng = np.random.default_rng(seed)
    total = 0.0
    remaining = n_samples
    while remaining > 0:
        m = min(chunk, remaining)
        z = rng.standard_normal(m)
        total += np.max(mu[:, None] + sigma[:, None] * z[None, :], axis=0).sum()
        remaining -= m
    return total / n_samples - float(np.max(mu))


def random_line_system(seed: int, max_lines: int = 50):
    """Seeded random (mu, sigma) system with occasional slope ties."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_lines + 1))
    mu = rng.normal(0.0, 2.0, size=n)
    sigma = rng.normal(0.0, 1.5, size=n)
    if n >= 4 and rng.random() < 0.3:
        sigma[1] = sigma[0]  # exact slope tie
    if n >= 6 and rng.random() < 0.2:
        sigma[3] = 0.0
        sigma[4] = 0.0
    return mu, sigma


def grid_kg_oracle(gp, x_new, grid_points, n_samples=1_000_000, seed=0,
                   chunk=200_000) -> float:
    """Monte-Carlo KG over a fixed grid: E_Z[max(mu + sigma_tilde Z)] - max mu."""
    mu = gp.mean(grid_points)
    sig = gp.lookahead(np.asarray(x_new, dtype=float)).sigma(grid_points)
    rng = np.random.default_rng(seed)
    total = 0.0
    remaining = n_samples
    while remaining > 0:
        m = min(chunk, remaining)
        z = rng.standard_normal(m)
        total += np.max(mu[:, None] + sig[:, None] * z[None, :], axis=0).sum()
        remaining -= m
    return total / n_samples - float(np.max(mu))


def central_difference(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g
