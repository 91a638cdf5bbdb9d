"""Command-line interface.

Subcommands mirror the experiment modes; `run` executes whatever mode the
config file declares.  Exit codes: 0 success, 1 usage or configuration
error, 2 certified-inequality violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import experiments as ex
from . import functions as fn
from .exact_stats import ZeroVarianceError

_USAGE_EXIT = 1


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage errors; 2 is reserved for
    # bound violations here
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(_USAGE_EXIT)


def _int_list(text: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment config (declares the function)")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--n-grid", type=_int_list, metavar="N1,N2,...",
                   help="strictly increasing horizons")
    p.add_argument("--replicates", type=int, help="Monte Carlo replicates per horizon")
    p.add_argument("--levels", type=_int_list, metavar="R1,R2,...",
                   help="projection levels (approximate mode)")
    p.add_argument("--dump-samples", help="write raw sample values, one per line")


def build_parser() -> _Parser:
    parser = _Parser(prog="doublingclt",
                     description="CLT certification for doubling-map Birkhoff averages")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, blurb in [
        ("simulate", "sample normalized sums and summarize them"),
        ("exact-stats", "closed-form statistics of a step function"),
        ("convergence", "empirical W1 across a horizon grid with rate fit"),
        ("certify", "check empirical W1 against the moment bound"),
        ("approximate", "cosine series vs step projections at several levels"),
    ]:
        p = sub.add_parser(name, help=blurb)
        _add_common(p)

    p = sub.add_parser("run", help="execute the mode declared in the config file")
    _add_common(p)
    p.add_argument("--mode", choices=ex.MODES, help="override the config file mode")

    p = sub.add_parser("project", help="project a function onto a step level")
    p.add_argument("--config", required=True, help="TOML config declaring the function")
    p.add_argument("--level", type=int, required=True, help="target step level r >= 1")
    p.add_argument("--out", help="write the step-function JSON here instead of stdout")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "seed": args.seed,
        "out": args.out,
        "n_grid": args.n_grid,
        "replicates": args.replicates,
        "levels": args.levels,
        "dump_samples": args.dump_samples,
    }


def _load_raw(path: Optional[str]) -> dict:
    if path is None:
        raise ex.ConfigError("--config is required (the config declares the function)")
    try:
        return ex.load_config(path)
    except OSError as e:
        raise ex.ConfigError(f"cannot read config: {e}") from None


def _cmd_project(args: argparse.Namespace) -> int:
    raw = _load_raw(args.config)
    if "function" not in raw:
        raise ex.ConfigError("config must declare a [function.*] table")
    func = fn.from_config_dict(raw["function"])
    if args.level < 1:
        raise ex.ConfigError("--level must be >= 1")
    phi = fn.project_to_step(func, args.level)
    if fn.is_degenerate(phi):
        sys.stderr.write(
            f"warning: projection at level {args.level} is flat "
            "(unusable for convergence studies; raise the level)\n"
        )
    payload = {"step": {"level": phi.level, "values": phi.values.tolist()}}
    text = json.dumps(payload) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "project":
            return _cmd_project(args)
        raw = _load_raw(args.config)
        overrides = _overrides(args)
        if args.command == "run":
            if args.mode:
                overrides["mode"] = args.mode
        else:
            overrides["mode"] = args.command
        cfg = ex.config_from_dict(raw, overrides)
        return ex.run(cfg)
    except (ex.ConfigError, ZeroVarianceError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return _USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
