"""Exact expectation of the upper envelope of lines under a Gaussian input.

Given lines z -> mu_i + sigma_i * z, computes E_Z[max_i(mu_i + sigma_i Z)]
minus max_i mu_i for Z ~ N(0, 1) by locating the breakpoints of the
piecewise-linear envelope. No sampling is involved; the result is exact up
to float arithmetic and is always nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

# Lines whose slopes differ by no more than this are treated as parallel;
# only the one with the larger intercept can ever be on the envelope.
SLOPE_TIE_TOL = 1e-12

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(z: np.ndarray) -> np.ndarray:
    """Standard normal pdf; maps +-inf to 0."""
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


@dataclass(frozen=True)
class EnvelopeResult:
    """Envelope breakpoints and the Gaussian expectation they induce.

    ``kept_indices`` refer to the original input lines, ordered by
    increasing slope; ``intersections`` carries -inf/+inf sentinels, so its
    length is one more than the number of surviving lines.  ``pdf_weights``
    and ``cdf_weights`` are the per-segment differences of the standard
    normal pdf/cdf used in the expectation.
    """

    kept_indices: np.ndarray
    intersections: np.ndarray
    pdf_weights: np.ndarray
    cdf_weights: np.ndarray
    value: float


def epigraph_expectation(mu, sigma) -> EnvelopeResult:
    """Expected envelope maximum over Z ~ N(0,1), less the best intercept."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if mu.shape != sigma.shape or mu.ndim != 1 or mu.size < 1:
        raise ValueError("mu and sigma must be equal-length nonempty vectors")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
        raise ValueError("mu and sigma must be finite")

    order = np.argsort(sigma, kind="stable")
    mu_s = mu[order]
    sig_s = sigma[order]

    # Collapse slope ties: within a tied group only the largest intercept
    # can touch the envelope, and distinct slopes are needed below to avoid
    # zero divisions in the breakpoint formula.
    keep = []
    start = 0
    for i in range(1, mu_s.size + 1):
        if i == mu_s.size or sig_s[i] - sig_s[i - 1] > SLOPE_TIE_TOL:
            group = slice(start, i)
            keep.append(start + int(np.argmax(mu_s[group])))
            start = i
    keep = np.asarray(keep, dtype=int)
    mu_k = mu_s[keep]
    sig_k = sig_s[keep]

    # Sweep lines by increasing slope, popping any line that is overtaken
    # before its segment begins.
    idx = [0]
    zs = [-math.inf]
    for i in range(1, mu_k.size):
        while True:
            j = idx[-1]
            z = (mu_k[i] - mu_k[j]) / (sig_k[j] - sig_k[i])
            if z <= zs[-1]:
                idx.pop()
                zs.pop()
            else:
                break
        idx.append(i)
        zs.append(z)
    zs.append(math.inf)

    idx = np.asarray(idx, dtype=int)
    breakpoints = np.asarray(zs, dtype=float)
    pdf_w = _phi(breakpoints[1:]) - _phi(breakpoints[:-1])
    cdf_w = ndtr(breakpoints[1:]) - ndtr(breakpoints[:-1])
    raw = cdf_w @ mu_k[idx] - pdf_w @ sig_k[idx] - float(np.max(mu))
    return EnvelopeResult(
        kept_indices=order[keep[idx]],
        intersections=breakpoints,
        pdf_weights=pdf_w,
        cdf_weights=cdf_w,
        value=raw if raw > 0.0 else 0.0,
    )
