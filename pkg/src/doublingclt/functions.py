"""Dyadic step functions and truncated cosine series on [0, 1).

A step function of level r is constant on each interval [i/2^r, (i+1)/2^r)
and therefore depends only on the first r binary digits of its argument;
evaluating it on a digit window is a pure table lookup.  Cosine-series
functions carry a declared coefficient decay envelope (M, beta) which is
validated at construction and otherwise treated as metadata.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import zeta

from .bitstream import DyadicWindow

# below this variance of the level values the function is flat for all
# practical purposes and violates the positive-variance assumption
DEGENERACY_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StepFunction:
    """Level-r dyadic step function: values[i] on [i/2^r, (i+1)/2^r)."""

    level: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("level must be >= 1")
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 1 or self.values.size != 2**self.level:
            raise ValueError(
                f"level {self.level} needs {2**self.level} values, got {self.values.size}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("step values must be finite")

    def __call__(self, t: float) -> float:
        if not 0.0 <= t < 1.0:
            raise ValueError("t must lie in [0, 1)")
        return float(self.values[int(t * 2**self.level)])


@dataclass(frozen=True)
class FourierFunction:
    """Mean-zero truncated cosine series sum_m coeffs[m-1] * cos(2 pi m t).

    The envelope |a_m| < decay_M / m**decay_beta is checked for every
    stored coefficient.  There is no constant term, so the mean is zero
    by construction.
    """

    coefficients: np.ndarray
    decay_M: float
    decay_beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", _readonly(self.coefficients))
        a = self.coefficients
        if a.ndim != 1 or a.size == 0:
            raise ValueError("need at least one cosine coefficient")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        if self.decay_M <= 0:
            raise ValueError("decay envelope constant M must be positive")
        if self.decay_beta <= 0.5:
            raise ValueError("decay exponent beta must exceed 1/2")
        m = np.arange(1, a.size + 1, dtype=np.float64)
        bound = self.decay_M / m**self.decay_beta
        if np.any(np.abs(a) >= bound):
            bad = int(np.argmax(np.abs(a) >= bound)) + 1
            raise ValueError(
                f"|a_{bad}| = {abs(a[bad - 1])} violates envelope M/m^beta = {bound[bad - 1]}"
            )

    @property
    def max_terms(self) -> int:
        return int(self.coefficients.size)

    def __call__(self, t: float) -> float:
        return eval_fourier(self, t)

    def eval_array(self, t: np.ndarray) -> np.ndarray:
        """Series evaluated elementwise via the cosine multiple-angle recurrence."""
        theta = 2.0 * math.pi * np.asarray(t, dtype=np.float64)
        a = self.coefficients
        c1 = np.cos(theta)
        out = a[0] * c1
        if a.size == 1:
            return out
        c_prev = np.ones_like(c1)
        c_cur = c1
        two_c1 = 2.0 * c1
        for m in range(2, a.size + 1):
            c_prev, c_cur = c_cur, two_c1 * c_cur - c_prev
            if a[m - 1] != 0.0:
                out += a[m - 1] * c_cur
        return out

    def l2_norm_sq(self) -> float:
        """Integral of the square over [0,1]: half the sum of squared coefficients."""
        return 0.5 * math.fsum(float(c) * float(c) for c in self.coefficients)

    def l2_tail_bound(self) -> float:
        """Upper bound on the L2 mass dropped by truncation at max_terms.

        Half the envelope tail sum_{m > max_terms} (M / m^beta)^2, via the
        Hurwitz zeta function.
        """
        return 0.5 * self.decay_M**2 * float(zeta(2.0 * self.decay_beta, self.max_terms + 1))


AnyFunction = Union[StepFunction, FourierFunction]


def exact_mean(func: AnyFunction) -> float:
    """Integral over [0,1]: compensated average of step values, 0 for cosine series."""
    if isinstance(func, FourierFunction):
        return 0.0
    return math.fsum(func.values.tolist()) / func.values.size


@dataclass(frozen=True)
class FunctionSpec:
    """A function together with its exact mean, as consumed by the samplers."""

    function: AnyFunction
    mu: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", exact_mean(self.function))

    @property
    def is_step(self) -> bool:
        return isinstance(self.function, StepFunction)

    def digest(self) -> str:
        """Short stable identifier of the function contents."""
        f = self.function
        if isinstance(f, StepFunction):
            canon = f"step:{f.level}:" + ",".join(repr(v) for v in f.values.tolist())
        else:
            canon = (
                "fourier:" + ",".join(repr(v) for v in f.coefficients.tolist())
                + f":{f.decay_M!r}:{f.decay_beta!r}"
            )
        return hashlib.blake2b(canon.encode(), digest_size=6).hexdigest()


def mean(spec: FunctionSpec) -> float:
    """Exact mean of the wrapped function."""
    return spec.mu


def eval_step(phi: StepFunction, w: DyadicWindow) -> float:
    """Value of phi on the cell addressed by the first `level` window bits."""
    if w.width < phi.level:
        raise ValueError(
            f"insufficient digits: window width {w.width} < level {phi.level}"
        )
    # w.value = u * 2**-width with u < 2**53, so the scaling is exact
    return float(phi.values[int(w.value * 2**phi.level)])


def eval_fourier(f: FourierFunction, t: float) -> float:
    """Truncated cosine series at a point of [0, 1)."""
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    return math.fsum(
        float(a) * math.cos(2.0 * math.pi * m * t)
        for m, a in enumerate(f.coefficients.tolist(), start=1)
        if a != 0.0
    )


def center(phi: StepFunction) -> StepFunction:
    """Shift so the exact mean becomes zero (up to one rounding)."""
    return StepFunction(phi.level, phi.values - exact_mean(phi))


def is_degenerate(phi: StepFunction, tol: float = DEGENERACY_TOL) -> bool:
    """True when the values are flat: Var over cells <= tol."""
    return float(np.var(phi.values)) <= tol


def project_to_step(func: AnyFunction, level: int) -> StepFunction:
    """L2 projection onto level-`level` step functions.

    Cell averages are computed in closed form: the sine antiderivative for
    cosine series (then centered, removing the rounding residue of the
    exact-zero mean), exact block averaging or refinement for step inputs.
    The projection of a cosine series can be flat (all cells equal); callers
    that need positive variance must check `is_degenerate` and raise the
    level.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    size = 2**level
    if isinstance(func, StepFunction):
        if level >= func.level:
            reps = size // func.values.size
            return StepFunction(level, np.repeat(func.values, reps))
        block = func.values.size // size
        return StepFunction(level, func.values.reshape(size, block).mean(axis=1))

    a = func.coefficients
    m = np.arange(1, a.size + 1, dtype=np.float64)
    endpoints = np.arange(size + 1, dtype=np.float64) / size
    # antiderivative sum_m a_m sin(2 pi m t) / (2 pi m) at the cell endpoints
    anti = np.sin(2.0 * math.pi * np.outer(endpoints, m)) @ (a / (2.0 * math.pi * m))
    cells = size * np.diff(anti)
    residue = math.fsum(cells.tolist()) / size
    return StepFunction(level, cells - residue)


def projection_l2_error(f: FourierFunction, level: int) -> float:
    """L2 distance between the series and its level projection.

    err^2 = integral of f^2 minus the projection's second moment (Pythagoras
    for conditional expectations).
    """
    phi = project_to_step(f, level)
    proj_sq = math.fsum((phi.values**2).tolist()) / phi.values.size
    return math.sqrt(max(0.0, f.l2_norm_sq() - proj_sq))


def from_config_dict(d: dict) -> AnyFunction:
    """Function described by {"step": {...}} or {"fourier": {...}}."""
    if not isinstance(d, dict) or len(d) != 1:
        raise ValueError("function config must have exactly one of 'step'/'fourier'")
    kind, body = next(iter(d.items()))
    if kind == "step":
        try:
            return StepFunction(int(body["level"]), np.asarray(body["values"], dtype=np.float64))
        except KeyError as e:
            raise ValueError(f"step config missing key {e}") from None
    if kind == "fourier":
        try:
            return FourierFunction(
                np.asarray(body["coeffs"], dtype=np.float64),
                float(body["M"]),
                float(body["beta"]),
            )
        except KeyError as e:
            raise ValueError(f"fourier config missing key {e}") from None
    raise ValueError(f"unknown function kind {kind!r}")
