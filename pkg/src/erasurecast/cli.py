"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 infeasible, 4 slot cap exceeded.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import yaml

from . import harness
from .bounds import DemandPair, bounds_report
from .channel import ChannelParams, validate_params
from .errors import Infeasible, RuntimeExceeded, ValidationError
from .seeding import make_rng

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 2, 3, 4


def _channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps1", type=float, required=True)
    p.add_argument("--eps2", type=float, required=True)
    p.add_argument("--eps12", type=float, default=None,
                   help="simultaneous erasure rate (default eps1*eps2)")


def _demand_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d1", type=float, required=True)
    p.add_argument("--d2", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="erasurecast", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="closed-form latencies and scheme parameters as JSON")
    _channel_args(p)
    _demand_args(p)

    p = sub.add_parser("simulate", help="Monte Carlo trials of one scheme")
    p.add_argument("--scheme", choices=harness.SCHEMES, required=True)
    _channel_args(p)
    _demand_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("race", help="Monte Carlo check of the repetition race probability")
    _channel_args(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("sweep", help="run a grid of experiments from a YAML/JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trace", help="per-slot transcript of one run")
    p.add_argument("--scheme", choices=harness.SCHEMES, required=True)
    _channel_args(p)
    _demand_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)
    return ap


def _params(args) -> ChannelParams:
    p = ChannelParams(args.eps1, args.eps2, args.eps12)
    validate_params(p)
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_bounds(args) -> int:
    rep = bounds_report(_params(args), DemandPair(args.d1, args.d2))
    print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    cfg = harness.ExperimentConfig(
        scheme=args.scheme,
        params=_params(args),
        demands=DemandPair(args.d1, args.d2),
        n=args.n,
        trials=args.trials,
        base_seed=args.seed,
        output_format=args.format,
    )
    res = harness.run_trials(cfg, workers=args.workers)
    _emit(harness.render(res, args.format), args.out)
    return EXIT_OK


def cmd_race(args) -> int:
    out = harness.verify_race(_params(args), args.runs, make_rng(args.seed))
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    grid = yaml.safe_load(args.config.read_text())
    if not isinstance(grid, dict):
        raise ValidationError("sweep config must be a mapping")
    rows = harness.sweep(grid, workers=args.workers)
    text = _table(rows, harness.SWEEP_COLUMNS)
    _emit(text, args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    params = _params(args)
    _, trace = harness.run_scheme(
        args.scheme, params, DemandPair(args.d1, args.d2), args.n, args.seed, record=True
    )
    if args.scheme == "universal":
        cols = ("slot", "phase", "kind", "idx1", "idx2", "x", "z1", "z2", "recovered1", "recovered2")
    else:
        cols = ("slot", "phase", "kind", "target", "coeff_slot", "x", "z1", "z2")
    _emit(_table([r._asdict() for r in trace], cols), args.out)
    return EXIT_OK


def _table(rows, columns) -> str:
    buf = io.StringIO()
    harness.write_csv(rows, buf, columns)
    return buf.getvalue()


COMMANDS = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "race": cmd_race,
    "sweep": cmd_sweep,
    "trace": cmd_trace,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RuntimeExceeded as exc:
        print(f"runtime cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
