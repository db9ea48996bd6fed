"""Exact Gaussian process regression and one-step look-ahead machinery.

A fitted posterior is an immutable snapshot (data, kernel, Cholesky factor,
weight vector); acquisition code evaluates means, covariances and the
look-ahead scaling function -- all with analytic gradients -- without ever
mutating it, so instances are safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

# Escalation ladder for the diagonal stabilizer when the noisy Gram matrix
# fails to factorize at the configured jitter.
JITTER_LADDER = (1e-10, 1e-8, 1e-6)

# Posterior variances above -VARIANCE_CLAMP are treated as float noise and
# clamped to zero; an anchor whose variance sits below this with zero
# observation noise carries no new information and is rejected.
VARIANCE_CLAMP = 1e-8

_SQRT5 = math.sqrt(5.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NonPSDError(np.linalg.LinAlgError):
    """Gram matrix could not be factorized at any attempted jitter level."""

    def __init__(self, attempted_jitters):
        self.attempted_jitters = tuple(attempted_jitters)
        super().__init__(
            f"Gram matrix not positive definite; attempted jitters "
            f"{self.attempted_jitters}"
        )


class DegenerateAnchorError(ValueError):
    """Anchor point has (numerically) zero predictive variance and no noise."""


class KernelKind(Enum):
    SQUARED_EXPONENTIAL = "rbf"
    MATERN52 = "matern52"


@dataclass(frozen=True)
class KernelConfig:
    """Stationary kernel plus the observation-noise and jitter levels.

    ``signal_variance`` is the kernel value at zero distance, so
    k(x, x) == signal_variance for both kernel families.
    """

    lengthscales: np.ndarray
    signal_variance: float = 1.0
    kind: KernelKind = KernelKind.SQUARED_EXPONENTIAL
    noise_variance: float = 0.0
    jitter: float = 1e-10

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        if ls.ndim != 1 or not np.all(ls > 0):
            raise ValueError("lengthscales must be a vector of positive reals")
        ls.flags.writeable = False
        object.__setattr__(self, "lengthscales", ls)
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Observed inputs in the unit box with their scalar outputs."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float)).copy()
        Y = np.atleast_1d(np.asarray(self.Y, dtype=float)).copy()
        if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise ValueError("inputs and outputs must have equal length >= 1")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValueError("all input coordinates must lie in [0, 1]")
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _check_dim(cfg: KernelConfig, *points):
    for p in points:
        if p.shape[-1] != cfg.dim:
            raise ValueError(
                f"point dimension {p.shape[-1]} does not match kernel "
                f"dimension {cfg.dim}"
            )


def kernel_matrix(cfg: KernelConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix k(A, B) of shape (len(A), len(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    _check_dim(cfg, A, B)
    diff = (A[:, None, :] - B[None, :, :]) / cfg.lengthscales
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    if cfg.kind is KernelKind.SQUARED_EXPONENTIAL:
        return cfg.signal_variance * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return (
        cfg.signal_variance
        * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2)
        * np.exp(-_SQRT5 * r)
    )


def kernel_grad(cfg: KernelConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """d k(a_i, b_j) / d a_i, shape (len(A), len(B), D).

    Both families reduce to a smooth radial prefactor times the scaled
    difference, so there is no singularity at coincident points.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    _check_dim(cfg, A, B)
    ls2 = cfg.lengthscales**2
    diff = A[:, None, :] - B[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff / cfg.lengthscales, diff / cfg.lengthscales)
    if cfg.kind is KernelKind.SQUARED_EXPONENTIAL:
        pref = -cfg.signal_variance * np.exp(-0.5 * r2)
    else:
        r = np.sqrt(r2)
        pref = -(5.0 / 3.0) * cfg.signal_variance * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
    return pref[:, :, None] * (diff / ls2)


def kernel_matrix_and_grad(cfg: KernelConfig, A: np.ndarray, B: np.ndarray):
    """Kernel matrix and its gradient w.r.t. A from one difference tensor."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    _check_dim(cfg, A, B)
    diff = A[:, None, :] - B[None, :, :]
    scaled = diff / cfg.lengthscales
    r2 = np.einsum("ijk,ijk->ij", scaled, scaled)
    if cfg.kind is KernelKind.SQUARED_EXPONENTIAL:
        K = cfg.signal_variance * np.exp(-0.5 * r2)
        pref = -K
    else:
        r = np.sqrt(r2)
        decay = np.exp(-_SQRT5 * r)
        K = cfg.signal_variance * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * decay
        pref = -(5.0 / 3.0) * cfg.signal_variance * (1.0 + _SQRT5 * r) * decay
    G = pref[:, :, None] * (diff / cfg.lengthscales**2)
    return K, G


def kernel_eval(cfg: KernelConfig, x: np.ndarray, x2: np.ndarray) -> float:
    """Scalar kernel value k(x, x2)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise ValueError("points must share one dimension")
    return float(kernel_matrix(cfg, x[None, :], x2[None, :])[0, 0])


def _as_points(x, dim: int):
    """Coerce a (D,) or (m, D) array to (m, D); report whether it was 1-D."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"expected point of dimension {dim}, got {arr.shape[0]}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of shape (m, {dim}), got {arr.shape}")
    return arr, False


@dataclass(frozen=True)
class PosteriorGP:
    """Fitted Gaussian process posterior with cached factorization.

    ``weights`` is the inverse noisy Gram applied to the centered outputs,
    so the posterior mean is mu0 + k(x, X) @ weights.
    """

    data: Dataset
    kernel: KernelConfig
    mu0: float
    chol: np.ndarray
    weights: np.ndarray
    jitter_used: float

    @property
    def dim(self) -> int:
        return self.data.dim

    @property
    def n(self) -> int:
        return self.data.n

    # -- posterior moments -------------------------------------------------

    def mean(self, x):
        """Posterior mean at one point (scalar) or a stack of points."""
        pts, single = _as_points(x, self.dim)
        out = self.mu0 + kernel_matrix(self.kernel, pts, self.data.X) @ self.weights
        return float(out[0]) if single else out

    def mean_grad(self, x):
        """Gradient of the posterior mean, shape matching the input points."""
        pts, single = _as_points(x, self.dim)
        g = np.einsum(
            "ijk,j->ik", kernel_grad(self.kernel, pts, self.data.X), self.weights
        )
        return g[0] if single else g

    def cov(self, x, x2):
        """Posterior covariance between two points or two stacks of points."""
        a, single_a = _as_points(x, self.dim)
        b, single_b = _as_points(x2, self.dim)
        kab = kernel_matrix(self.kernel, a, b)
        va = solve_triangular(self.chol, kernel_matrix(self.kernel, self.data.X, a), lower=True)
        vb = solve_triangular(self.chol, kernel_matrix(self.kernel, self.data.X, b), lower=True)
        out = kab - va.T @ vb
        if single_a and single_b:
            return float(out[0, 0])
        return out

    def var(self, x):
        """Posterior variance, clamped at zero against float noise."""
        pts, single = _as_points(x, self.dim)
        v = solve_triangular(self.chol, kernel_matrix(self.kernel, self.data.X, pts), lower=True)
        raw = self.kernel.signal_variance - np.einsum("ij,ij->j", v, v)
        out = np.maximum(raw, 0.0)
        return float(out[0]) if single else out

    def var_grad(self, x):
        """Gradient of the (unclamped) posterior variance."""
        pts, single = _as_points(x, self.dim)
        kxd = kernel_matrix(self.kernel, pts, self.data.X)
        w = cho_solve((self.chol, True), kxd.T)  # (n, m)
        g = -2.0 * np.einsum("ijk,ji->ik", kernel_grad(self.kernel, pts, self.data.X), w)
        return g[0] if single else g

    # -- one-step look-ahead -----------------------------------------------

    def lookahead(self, x_new) -> "Lookahead":
        """Cache the anchor-dependent pieces of the look-ahead scaling."""
        anchor = np.atleast_1d(np.asarray(x_new, dtype=float))
        if anchor.shape != (self.dim,):
            raise ValueError(f"anchor must be a single point of dimension {self.dim}")
        kxd = kernel_matrix(self.kernel, anchor[None, :], self.data.X)[0]
        w = cho_solve((self.chol, True), kxd)
        raw_var = self.kernel.signal_variance - kxd @ w
        anchor_var = max(raw_var, 0.0)
        noise = self.kernel.noise_variance
        if noise == 0.0 and anchor_var < VARIANCE_CLAMP:
            raise DegenerateAnchorError(
                "anchor has zero predictive variance and zero observation noise"
            )
        # jitter_used enters the effective noise of the fitted Gram, so it
        # belongs in the predictive standard deviation as well; this keeps
        # the look-ahead factorization exactly consistent with a refit.
        s = math.sqrt(anchor_var + noise + self.jitter_used)
        return Lookahead(gp=self, anchor=anchor, w=w, s=s, anchor_var=anchor_var)

    def sigma_tilde(self, x, x_new):
        """Look-ahead scaling: cov(x, x_new) / std of the observation at x_new."""
        return self.lookahead(x_new).sigma(x)

    def fantasy(self, x_new, z: float) -> "FantasySample":
        """One-step-ahead posterior mean realisation indexed by a z-score."""
        return FantasySample(lookahead=self.lookahead(x_new), z=float(z))


@dataclass(frozen=True)
class Lookahead:
    """sigma-tilde(. ; x_new) with gradients, for a fixed anchor x_new."""

    gp: PosteriorGP
    anchor: np.ndarray
    w: np.ndarray  # inverse noisy Gram applied to k(X, anchor)
    s: float  # predictive standard deviation of the observation at anchor
    anchor_var: float

    def sigma(self, x):
        gp = self.gp
        pts, single = _as_points(x, gp.dim)
        kxa = kernel_matrix(gp.kernel, pts, self.anchor[None, :])[:, 0]
        kxd = kernel_matrix(gp.kernel, pts, gp.data.X)
        out = (kxa - kxd @ self.w) / self.s
        return float(out[0]) if single else out

    def sigma_grad_x(self, x):
        """d sigma_tilde(x; anchor) / d x."""
        gp = self.gp
        pts, single = _as_points(x, gp.dim)
        g_anchor = kernel_grad(gp.kernel, pts, self.anchor[None, :])[:, 0, :]
        g_data = np.einsum("ijk,j->ik", kernel_grad(gp.kernel, pts, gp.data.X), self.w)
        out = (g_anchor - g_data) / self.s
        return out[0] if single else out

    def fantasy_parts(self, x):
        """Fused (mean, mean_grad, sigma, sigma_grad_x) at a stack of points.

        One kernel evaluation per operand pair; this is the hot path of the
        batched inner fantasy maximizations.
        """
        gp = self.gp
        pts, _ = _as_points(x, gp.dim)
        kxd, gxd = kernel_matrix_and_grad(gp.kernel, pts, gp.data.X)
        kxa, gxa = kernel_matrix_and_grad(gp.kernel, pts, self.anchor[None, :])
        mean = gp.mu0 + kxd @ gp.weights
        mean_grad = np.einsum("ijk,j->ik", gxd, gp.weights)
        sigma = (kxa[:, 0] - kxd @ self.w) / self.s
        sigma_grad = (gxa[:, 0, :] - np.einsum("ijk,j->ik", gxd, self.w)) / self.s
        return mean, mean_grad, sigma, sigma_grad

    def sigma_grad_anchor(self, x):
        """d sigma_tilde(x; anchor) / d anchor, shape matching the input points."""
        gp = self.gp
        pts, single = _as_points(x, gp.dim)
        # d k(x, u)/du for stationary kernels equals d k(u, x)/du.
        g_xa = kernel_grad(gp.kernel, self.anchor[None, :], pts)[0]  # (m, D)
        g_da = kernel_grad(gp.kernel, self.anchor[None, :], gp.data.X)[0]  # (n, D)
        kxd = kernel_matrix(gp.kernel, pts, gp.data.X)
        wx = cho_solve((self.chol_view, True), kxd.T)  # (n, m)
        d_num = g_xa - wx.T @ g_da
        sig = self.sigma(pts)
        # d s/du = -(g_da^T w)/s, from the variance gradient at the anchor.
        ds = -(g_da.T @ self.w) / self.s
        out = d_num / self.s - sig[:, None] * ds[None, :] / self.s
        return out[0] if single else out

    @property
    def chol_view(self):
        return self.gp.chol


@dataclass(frozen=True)
class FantasySample:
    """Realisation of the one-step-ahead posterior mean for a fixed z-score."""

    lookahead: Lookahead
    z: float

    @property
    def anchor(self) -> np.ndarray:
        return self.lookahead.anchor

    @property
    def base(self) -> PosteriorGP:
        return self.lookahead.gp

    def value(self, x):
        return self.base.mean(x) + self.lookahead.sigma(x) * self.z

    def grad(self, x):
        return self.base.mean_grad(x) + self.z * self.lookahead.sigma_grad_x(x)


def fit_posterior(data: Dataset, cfg: KernelConfig, mu0: float | None = None) -> PosteriorGP:
    """Fit the exact GP posterior, escalating jitter until the Gram factorizes.

    ``mu0`` defaults to the mean of the observed outputs.
    """
    if data.dim != cfg.dim:
        raise ValueError(
            f"dataset dimension {data.dim} does not match kernel dimension {cfg.dim}"
        )
    if mu0 is None:
        mu0 = float(np.mean(data.Y))
    K = kernel_matrix(cfg, data.X, data.X)
    eye = np.eye(data.n)
    ladder = [cfg.jitter] + [j for j in JITTER_LADDER if j > cfg.jitter]
    attempted = []
    for j in ladder:
        attempted.append(j)
        try:
            L = cholesky(K + (cfg.noise_variance + j) * eye, lower=True)
        except np.linalg.LinAlgError:
            continue
        weights = cho_solve((L, True), data.Y - mu0)
        L.flags.writeable = False
        weights.flags.writeable = False
        return PosteriorGP(
            data=data, kernel=cfg, mu0=mu0, chol=L, weights=weights, jitter_used=j
        )
    raise NonPSDError(attempted)
