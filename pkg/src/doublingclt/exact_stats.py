"""Exact moments, correlations and the normal-approximation bound.

Everything here is computed by closed form or by exact enumeration over
equally likely digit patterns; no sampling.  Inputs are centered step
functions: the observable at offset k reads digits k+1..k+r, so two
offsets are independent as soon as they are r or more apart, and the
lag-k covariance is an average of value products over all 2^(r+k)
joint digit patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .functions import FourierFunction, StepFunction, exact_mean

# enumeration over 2^(r+k) patterns; beyond this the table no longer fits
# desk-scale memory/time
MAX_ENUM_BITS = 26

_ENUM_CHUNK = 1 << 20

_STEIN_C = math.sqrt(28.0) / math.sqrt(math.pi)


class ZeroVarianceError(ValueError):
    """The step function is flat, violating the positive-variance assumption."""


def require_centered(phi: StepFunction, tol: float = 1e-9) -> None:
    scale = max(1.0, float(np.max(np.abs(phi.values))))
    if abs(exact_mean(phi)) > tol * scale:
        raise ValueError("step function must be centered (mean zero)")


def abs_moment(phi: StepFunction, p: int) -> float:
    """E|X|^p for the digit-window observable of a centered phi, p in 1..4."""
    if p not in (1, 2, 3, 4):
        raise ValueError("moment order p must be one of 1, 2, 3, 4")
    return math.fsum((np.abs(phi.values) ** p).tolist()) / phi.values.size


def covariance(phi: StepFunction, k: int) -> float:
    """Cov of the observables at offsets 0 and k, for centered phi.

    Zero for k >= level (disjoint digit windows).  Otherwise the exact
    average over all 2^(level+k) joint patterns of
    phi(bits 1..r) * phi(bits k+1..k+r), enumerated in fixed chunk order
    with compensated accumulation of the chunk partials.
    """
    if k < 1:
        raise ValueError("lag k must be >= 1")
    r = phi.level
    if k >= r:
        return 0.0
    nbits = r + k
    if nbits > MAX_ENUM_BITS:
        raise ValueError(
            f"enumeration over {nbits} bits exceeds the cap of {MAX_ENUM_BITS}"
        )
    total = 1 << nbits
    mask = np.uint64(2**r - 1)
    vals = phi.values
    partials = []
    for start in range(0, total, _ENUM_CHUNK):
        p = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.uint64)
        i0 = (p >> np.uint64(k)).astype(np.intp)
        i1 = (p & mask).astype(np.intp)
        partials.append(float(np.sum(vals[i0] * vals[i1])))
    return math.fsum(partials) / total


def correlations(phi: StepFunction) -> Tuple[float, ...]:
    """rho(1)..rho(r-1): lag covariances normalized by the variance."""
    v0 = abs_moment(phi, 2)
    if v0 <= 0.0:
        raise ZeroVarianceError("flat step function has no correlations")
    return tuple(covariance(phi, k) / v0 for k in range(1, phi.level))


def sum_variance(phi: StepFunction, n: int) -> float:
    """Variance of the length-n sum of the shifted observables, exactly.

    n*Var + 2*sum_{k=1}^{min(r-1, n-1)} (n-k)*Cov(k); covariances vanish
    past lag r-1, so the sum is finite-range.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    v0 = abs_moment(phi, 2)
    terms = [n * v0]
    for k in range(1, min(phi.level - 1, n - 1) + 1):
        terms.append(2.0 * (n - k) * covariance(phi, k))
    return math.fsum(terms)


def dependency_bound(phi: StepFunction) -> int:
    """Largest dependency-neighborhood size: 2r - 1 for a level-r function."""
    return 2 * phi.level - 1


def stein_bound(phi: StepFunction, n: int) -> float:
    """Wasserstein-1 upper bound for the normalized sum vs standard normal.

    D^2 * n * m3 / sigma_n^3 + sqrt(28/pi) * D^1.5 / sigma_n^2 * sqrt(n * m4),
    with D = 2r - 1, m3/m4 the absolute moments and sigma_n^2 the exact
    variance of the n-term sum.  The normalized sum is (S_n - n*mu)/sigma_n,
    so its variance is exactly 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    var_n = sum_variance(phi, n)
    if var_n <= 0.0:
        raise ZeroVarianceError(
            "zero variance: the flat step function violates the positive-variance assumption"
        )
    d = float(dependency_bound(phi))
    m3 = abs_moment(phi, 3)
    m4 = abs_moment(phi, 4)
    sigma_n = math.sqrt(var_n)
    return d * d * n * m3 / sigma_n**3 + _STEIN_C * d**1.5 / var_n * math.sqrt(n * m4)


def fourier_sum_variance(f: FourierFunction, n: int) -> float:
    """Exact variance of the length-n sum for a truncated cosine series.

    Doubling the argument k times multiplies every frequency by 2^k, so by
    orthogonality the lag-j covariance is gamma(j) = 0.5 * sum_m a_m * a_{m*2^j}
    (empty once 2^j exceeds the truncation order).  The result is
    n * 0.5*sum a_m^2 + 2 * sum_{j>=1} (n-j) * gamma(j).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = f.coefficients
    mmax = a.size
    terms = [n * f.l2_norm_sq()]
    j = 1
    while (1 << j) <= mmax and j <= n - 1:
        step = 1 << j
        # pairs (m, m * 2^j) with both indices stored
        gamma_j = 0.5 * math.fsum(
            (a[: (mmax // step)] * a[step - 1 :: step]).tolist()
        )
        terms.append(2.0 * (n - j) * gamma_j)
        j += 1
    return math.fsum(terms)


@dataclass(frozen=True)
class ExactStats:
    """All exact statistics of a centered step function in one record."""

    level: int
    var0: float
    abs_moment3: float
    abs_moment4: float
    rho: Tuple[float, ...]
    C3: float
    sigma_sq_limit: float
    D: int

    def csv_header(self) -> list:
        rho_cols = [f"rho_{k}" for k in range(1, self.level)]
        return ["r", "var0", "m3", "m4", *rho_cols, "C3", "sigma_sq_limit", "D"]

    def csv_row(self) -> list:
        return [
            self.level,
            self.var0,
            self.abs_moment3,
            self.abs_moment4,
            *self.rho,
            self.C3,
            self.sigma_sq_limit,
            self.D,
        ]


def compute_exact_stats(phi: StepFunction) -> ExactStats:
    """Full ExactStats record for a centered step function."""
    require_centered(phi)
    var0 = abs_moment(phi, 2)
    if var0 <= 0.0:
        raise ZeroVarianceError(
            "zero variance: the flat step function violates the positive-variance assumption"
        )
    rho = correlations(phi)
    c3 = 2.0 * math.fsum(rho)
    return ExactStats(
        level=phi.level,
        var0=var0,
        abs_moment3=abs_moment(phi, 3),
        abs_moment4=abs_moment(phi, 4),
        rho=rho,
        C3=c3,
        sigma_sq_limit=(1.0 + c3) * var0,
        D=dependency_bound(phi),
    )
