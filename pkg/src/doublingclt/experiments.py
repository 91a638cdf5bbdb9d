"""Experiment runner: convergence studies, bound certification, projection studies.

Every run is a pure function of (config, master seed); CSV outputs carry
no timestamps or machine identifiers and use shortest round-trip decimal
formatting, so reruns are byte-identical regardless of worker count.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO

import numpy as np

from . import exact_stats as es
from . import functions as fn
from . import montecarlo as mc
from . import wasserstein as ws

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1

MODES = ("convergence", "certify", "approximate", "exact-stats", "simulate")

# modes whose statistics are meaningless below this replicate count
MIN_REPLICATES = 100

DEFAULT_N_GRID = [2**k for k in range(4, 13)]
DEFAULT_LEVELS = [2, 4, 6, 8]
DEFAULT_REPLICATES = 100_000
DEFAULT_SEED = 20260810

BOUND_SLACK_SES = 3.0  # violations are flagged beyond bound + 3 * bootstrap SE


class ConfigError(ValueError):
    """Bad experiment configuration (usage error, exit code 1)."""


class BoundViolation(AssertionError):
    """A certified inequality failed beyond Monte Carlo slack (exit code 2)."""


@dataclass
class ExperimentConfig:
    function: fn.AnyFunction
    mode: str = "convergence"
    n_grid: List[int] = field(default_factory=lambda: list(DEFAULT_N_GRID))
    replicates: int = DEFAULT_REPLICATES
    master_seed: int = DEFAULT_SEED
    out_path: Optional[str] = None
    levels: List[int] = field(default_factory=lambda: list(DEFAULT_LEVELS))
    dump_samples: Optional[str] = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; pick one of {MODES}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be nonempty with all entries >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if not 0 <= self.master_seed <= mc.bitstream.MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.mode in ("convergence", "certify", "approximate"):
            if self.replicates < MIN_REPLICATES:
                raise ConfigError(
                    f"{self.mode} needs at least {MIN_REPLICATES} replicates"
                )
        elif self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.mode == "approximate":
            if not self.levels or any(r < 1 for r in self.levels):
                raise ConfigError("levels must be nonempty with all entries >= 1")
            if not isinstance(self.function, fn.FourierFunction):
                raise ConfigError("approximate mode requires a fourier function")
        if self.dump_samples is not None and len(self.n_grid) != 1:
            raise ConfigError("--dump-samples requires a single-entry n grid")


def load_config(path: str) -> dict:
    """Raw TOML config as a dict."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def config_from_dict(raw: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Experiment config from a parsed TOML dict; overrides win over file values."""
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    if "function" not in merged:
        raise ConfigError("config must declare a [function.step] or [function.fourier] table")
    try:
        function = fn.from_config_dict(merged["function"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cfg = ExperimentConfig(
        function=function,
        mode=str(merged.get("mode", "convergence")),
        n_grid=[int(n) for n in merged.get("n_grid", DEFAULT_N_GRID)],
        replicates=int(merged.get("replicates", DEFAULT_REPLICATES)),
        master_seed=int(merged.get("seed", DEFAULT_SEED)),
        out_path=merged.get("out"),
        levels=[int(r) for r in merged.get("levels", DEFAULT_LEVELS)],
        dump_samples=merged.get("dump_samples"),
    )
    cfg.validate()
    return cfg


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [f"# schema_version={CSV_SCHEMA_VERSION}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def emit_csv(text: str, out_path: Optional[str], stream: TextIO) -> None:
    if out_path:
        with open(out_path, "w", newline="") as handle:
            handle.write(text)
    else:
        stream.write(text)


def loglog_slope(ns: Sequence[int], values: Sequence[float]) -> tuple:
    """OLS slope of log2(value) vs log2(n), with the RMS fit residual."""
    x = np.log2(np.asarray(ns, dtype=np.float64))
    y = np.log2(np.asarray(values, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), resid


def _prepared_step(function: fn.AnyFunction) -> fn.StepFunction:
    if not isinstance(function, fn.StepFunction):
        raise ConfigError("this mode requires a step function")
    phi = fn.center(function)
    if fn.is_degenerate(phi):
        raise ConfigError("degenerate step function: values are constant")
    return phi


@dataclass
class RunResult:
    header: List[str]
    rows: List[list]
    summary: List[str]
    violations: int = 0

    def csv_text(self) -> str:
        return render_csv(self.header, self.rows)


def run_simulate(cfg: ExperimentConfig) -> RunResult:
    """Plain sampling summaries over the n grid (no assertions)."""
    spec = fn.FunctionSpec(cfg.function)
    if isinstance(cfg.function, fn.StepFunction) and fn.is_degenerate(
        fn.center(cfg.function)
    ):
        raise ConfigError("degenerate step function: values are constant")
    header = ["n", "N", "seed", "sigma_n", "sample_mean", "sample_var", "w1_to_normal"]
    rows, summary = [], []
    for n in cfg.n_grid:
        ss = mc.sample_normalized_sums(spec, n, cfg.replicates, cfg.master_seed)
        w1 = ws.w1_to_normal(ss.values).distance
        rows.append(
            [n, ss.num_replicates, ss.master_seed, ss.sigma_n,
             ss.sample_mean(), ss.sample_var(), w1]
        )
        summary.append(
            f"n={n} sigma_n={ss.sigma_n:.6g} mean={ss.sample_mean():+.4g} "
            f"var={ss.sample_var():.4g} w1={w1:.6g}"
        )
        if cfg.dump_samples:
            with open(cfg.dump_samples, "w", newline="") as handle:
                handle.writelines(repr(v) + "\n" for v in ss.values.tolist())
            summary.append(f"dumped {ss.num_replicates} samples to {cfg.dump_samples}")
    return RunResult(header, rows, summary)


def run_exact_stats(cfg: ExperimentConfig) -> RunResult:
    """Closed-form statistics of the (centered) step function as one CSV row."""
    phi = _prepared_step(cfg.function)
    stats = es.compute_exact_stats(phi)
    summary = [
        f"r={stats.level} var0={stats.var0:.12g} m3={stats.abs_moment3:.12g} "
        f"m4={stats.abs_moment4:.12g} C3={stats.C3:.12g} "
        f"sigma_sq_limit={stats.sigma_sq_limit:.12g} D={stats.D}"
    ]
    return RunResult(stats.csv_header(), [stats.csv_row()], summary)


def run_convergence(cfg: ExperimentConfig) -> RunResult:
    """Empirical W1 to normal across the n grid, plus the log-log rate fit.

    Step functions also get the dependency-neighborhood bound per row.
    """
    is_step = isinstance(cfg.function, fn.StepFunction)
    phi = _prepared_step(cfg.function) if is_step else None
    spec = fn.FunctionSpec(cfg.function)
    header = ["n", "sigma_n", "w1_empirical", "stein_bound", "sample_mean", "sample_var"]
    rows, summary, w1s = [], [], []
    for n in cfg.n_grid:
        ss = mc.sample_normalized_sums(spec, n, cfg.replicates, cfg.master_seed)
        w1 = ws.w1_to_normal(ss.values).distance
        bound = es.stein_bound(phi, n) if is_step else None
        rows.append([n, ss.sigma_n, w1, bound, ss.sample_mean(), ss.sample_var()])
        w1s.append(w1)
        btxt = f" bound={bound:.6g}" if bound is not None else ""
        summary.append(f"n={n} sigma_n={ss.sigma_n:.6g} w1={w1:.6g}{btxt}")
    slope, resid = loglog_slope(cfg.n_grid, w1s)
    summary.append(f"slope log2(w1) vs log2(n) = {slope:.4f} (rms residual {resid:.4f})")
    return RunResult(header, rows, summary)


def run_certify(cfg: ExperimentConfig) -> RunResult:
    """Check the empirical W1 against the bound on every grid point.

    A row violates certification when w1 exceeds bound + 3 bootstrap
    standard errors of the W1 estimate.
    """
    phi = _prepared_step(cfg.function)
    spec = fn.FunctionSpec(phi)
    header = ["n", "sigma_n", "stein_bound", "w1_empirical", "ratio", "bootstrap_se", "within_bound"]
    rows, summary = [], []
    violations = 0
    for n in cfg.n_grid:
        ss = mc.sample_normalized_sums(spec, n, cfg.replicates, cfg.master_seed)
        bound = es.stein_bound(phi, n)
        w1 = ws.w1_to_normal(ss.values).distance
        se = ws.w1_normal_bootstrap_se(ss.values, cfg.master_seed)
        ok = w1 <= bound + BOUND_SLACK_SES * se
        violations += 0 if ok else 1
        rows.append([n, ss.sigma_n, bound, w1, w1 / bound, se, int(ok)])
        summary.append(
            f"n={n} bound={bound:.6g} w1={w1:.6g} ratio={w1 / bound:.4g} "
            f"se={se:.3g} {'ok' if ok else 'VIOLATION'}"
        )
    summary.append(
        "certification passed" if violations == 0
        else f"certification FAILED on {violations} row(s)"
    )
    return RunResult(header, rows, summary, violations)


def run_approximate(cfg: ExperimentConfig) -> RunResult:
    """Step-projection study for a cosine series at each requested level.

    Emits the coupled L2 gap, the paired W1, both W1-to-normal values and
    the triangle check w1(f) <= w1_paired + w1(step) + 3 SE; levels whose
    projection is flat are skipped with a warning.
    """
    f = cfg.function
    if not isinstance(f, fn.FourierFunction):
        raise ConfigError("approximate mode requires a fourier function")
    n = cfg.n_grid[-1] if len(cfg.n_grid) == 1 else None
    if n is None:
        raise ConfigError("approximate mode uses a single horizon; pass one n")
    header = [
        "level", "n", "paired_l2", "w1_paired", "w1_fourier", "w1_step",
        "bootstrap_se", "triangle_ok",
    ]
    rows, summary = [], []
    violations = 0
    wf = mc.sample_normalized_sums(f, n, cfg.replicates, cfg.master_seed)
    w1f = ws.w1_to_normal(wf.values).distance
    se = ws.w1_normal_bootstrap_se(wf.values, cfg.master_seed)
    skipped = 0
    for r in cfg.levels:
        phi = fn.project_to_step(f, r)
        if fn.is_degenerate(phi):
            skipped += 1
            summary.append(f"level {r}: projection is flat, skipped")
            log.warning("projection at level %d is degenerate; skipping", r)
            continue
        wp = mc.sample_normalized_sums(phi, n, cfg.replicates, cfg.master_seed)
        l2 = ws.l2_paired(wf.values, wp.values)
        w1p = ws.w1_paired(wf.values, wp.values).distance
        w1s = ws.w1_to_normal(wp.values).distance
        ok = w1f <= w1p + w1s + BOUND_SLACK_SES * se
        violations += 0 if ok else 1
        rows.append([r, n, l2, w1p, w1f, w1s, se, int(ok)])
        summary.append(
            f"level {r}: paired_l2={l2:.6g} w1_paired={w1p:.6g} "
            f"w1_fourier={w1f:.6g} w1_step={w1s:.6g} {'ok' if ok else 'VIOLATION'}"
        )
    if skipped == len(cfg.levels):
        raise ConfigError("all requested projection levels are degenerate")
    summary.append(
        "triangle checks passed" if violations == 0
        else f"triangle check FAILED on {violations} row(s)"
    )
    return RunResult(header, rows, summary, violations)


_RUNNERS = {
    "simulate": run_simulate,
    "exact-stats": run_exact_stats,
    "convergence": run_convergence,
    "certify": run_certify,
    "approximate": run_approximate,
}


def run(cfg: ExperimentConfig, stream: Optional[TextIO] = None) -> int:
    """Execute a config: summary to `stream`, CSV to the out path (or stream).

    Returns the process exit code: 0 ok, 2 when a certified inequality
    failed.
    """
    if stream is None:
        stream = sys.stdout
    cfg.validate()
    result = _RUNNERS[cfg.mode](cfg)
    for line in result.summary:
        stream.write(line + "\n")
    text = result.csv_text()
    emit_csv(text, cfg.out_path, stream)
    if cfg.out_path:
        stream.write(f"wrote {cfg.out_path}\n")
    return 2 if result.violations else 0
