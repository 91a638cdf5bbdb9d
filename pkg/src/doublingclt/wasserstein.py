"""Empirical Wasserstein-1 distances.

The distance of a sample to the standard normal uses the one-dimensional
dual form: the integral of |F_emp - Phi|.  Between consecutive order
statistics the empirical CDF is constant, so each piece reduces to the
antiderivative Psi(x) = x*Phi(x) + pdf(x) of Phi evaluated at the piece
endpoints and at the (clipped) crossing point Phi^{-1}(k/N); the two
tails use the same antiderivative.  No quadrature and no truncation
parameter anywhere.

Phi is evaluated through the complementary error function.  The quantile
is the standard rational approximation (scipy's ndtri) refined by one
Newton step on Phi; against 40-digit references the relative error at
the probe points stays below 1e-14, negligible next to every tolerance
used by the certification runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

BOOTSTRAP_RESAMPLES = 20
_BOOTSTRAP_TAG = 0x1D5B00  # fixed stream tag for resample seeds


def normal_cdf(x):
    """Standard normal CDF, elementwise."""
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) * _INV_SQRT2)


def normal_sf(x):
    """Standard normal upper tail, elementwise."""
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) * _INV_SQRT2)


def normal_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return _INV_SQRT2PI * np.exp(-0.5 * x * x)


def normal_quantile(p):
    """Inverse standard normal CDF with a Newton polish step."""
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    x = ndtri(p)
    pdf = normal_pdf(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        step = np.where(pdf > 0.0, (normal_cdf(x) - p) / np.where(pdf > 0.0, pdf, 1.0), 0.0)
    return x - step


@dataclass(frozen=True)
class W1Report:
    """Wasserstein-1 estimate plus the sample size and estimator used."""

    distance: float
    N: int
    method: str


def _checked(samples) -> np.ndarray:
    a = np.asarray(samples, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("samples must be a nonempty 1-d array")
    if not np.all(np.isfinite(a)):
        raise ValueError("samples must be finite")
    return a


def w1_to_normal(samples) -> W1Report:
    """Closed-form integral of |F_emp - Phi| over the whole line.

    Exact up to binary64 rounding and the documented accuracy of the
    CDF/quantile implementations; invariant under permutations of the
    input.
    """
    xs = np.sort(_checked(samples))
    n = xs.size

    def psi(x):
        # integral of Phi from -inf to x
        return x * normal_cdf(x) + normal_pdf(x)

    left = float(psi(xs[0]))
    # integral of (1 - Phi) from the top sample upward, cancellation-safe form
    right = float(normal_pdf(xs[-1]) - xs[-1] * normal_sf(xs[-1]))
    if n == 1:
        return W1Report(max(0.0, left + right), 1, "to_normal_cdf")

    a, b = xs[:-1], xs[1:]
    levels = np.arange(1, n, dtype=np.float64) / n
    crossing = np.clip(normal_quantile(levels), a, b)
    interior = (
        levels * (2.0 * crossing - a - b)
        + psi(a)
        + psi(b)
        - 2.0 * psi(crossing)
    )
    total = left + right + float(np.sum(interior))
    return W1Report(max(0.0, total), n, "to_normal_cdf")


def w1_paired(x, y) -> W1Report:
    """Exact W1 between two equal-size empirical measures (sorted pairing)."""
    xa, ya = _checked(x), _checked(y)
    if xa.size != ya.size:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    d = float(np.mean(np.abs(np.sort(xa) - np.sort(ya))))
    return W1Report(d, xa.size, "paired_sorted")


def l2_paired(x, y) -> float:
    """Root mean square difference of replicate-paired samples (not sorted)."""
    xa, ya = _checked(x), _checked(y)
    if xa.size != ya.size:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    diff = xa - ya
    return float(np.sqrt(np.mean(diff * diff)))


def w1_normal_bootstrap_se(
    samples, master_seed: int, resamples: int = BOOTSTRAP_RESAMPLES
) -> float:
    """Bootstrap standard error of w1_to_normal.

    Resample b draws its indices from a generator seeded with
    SeedSequence([master_seed, tag, b]); fixed, so the estimate is
    reproducible for a given master seed.
    """
    xs = _checked(samples)
    if resamples < 2:
        raise ValueError("need at least 2 resamples")
    estimates = np.empty(resamples)
    for b in range(resamples):
        rng = np.random.default_rng(
            np.random.SeedSequence([master_seed, _BOOTSTRAP_TAG, b])
        )
        idx = rng.integers(0, xs.size, size=xs.size)
        estimates[b] = w1_to_normal(xs[idx]).distance
    return float(np.std(estimates, ddof=1))
