"""Command-line entry point: ``dugks {run,sweep,convergence,resume}``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import config as cfgmod
from .checkpoint import CheckpointError
from .grid import CFLViolationError
from .harness import (
    ConfigError,
    OutputError,
    SolverDivergenceError,
    run_case,
    run_convergence,
    run_sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--scheme", choices=("dugks", "clr", "lw"))
    common.add_argument("--eps", type=float, help="relaxation parameter epsilon")
    common.add_argument("--mesh", type=int, help="cells per axis")
    common.add_argument("--eta", type=float, help="CFL number")

    parser = argparse.ArgumentParser(prog="dugks", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run a single case")
    sweep = sub.add_parser(
        "sweep", parents=[common],
        help="run every case in the config; --scheme/--eps/--mesh select a subset",
    )
    sweep.add_argument("--workers", type=int, help="parallel case processes")
    conv = sub.add_parser(
        "convergence", parents=[common],
        help="observed order over doubling meshes; --mesh N gives levels N, 2N, 4N",
    )
    conv.add_argument("--workers", type=int, help="parallel case processes")
    sub.add_parser("resume", parents=[common], help="continue a run case from its checkpoint")
    return parser


def _print_report(r):
    print(
        f"{r.case_id}: l2_error={r.l2_error:.6g} nu_fit={r.nu_fit:.6g} "
        f"nu_expected={r.nu_expected:.6g} steps={r.steps} wall={r.wall_time:.1f}s"
    )


def _write_convergence(path: Path, result):
    try:
        with open(path, "w", newline="") as fh:
            fh.write("# dugks-convergence v1\n")
            order = "none (non-monotone)" if result.order is None else repr(result.order)
            fh.write(f"# observed_order={order}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "dx", "l2_error"])
            for n, dx, e in zip(result.n, result.dx, result.errors):
                w.writerow([n, repr(dx), repr(e)])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _dispatch(args) -> int:
    data = cfgmod.load_config(args.config)
    if args.command in ("run", "resume"):
        data = cfgmod.apply_overrides(data, args.scheme, args.eps, args.mesh, args.eta, args.out)
        report = run_case(cfgmod.run_config(data), resume=args.command == "resume")
        _print_report(report)
        return EXIT_OK

    data = cfgmod.apply_overrides(data, eta=args.eta, out=args.out)
    workers = args.workers if args.workers is not None else cfgmod.workers(data)
    if workers < 1:
        raise ConfigError(f"--workers must be positive, got {workers}")

    if args.command == "sweep":
        configs = cfgmod.sweep_configs(data, args.scheme, args.eps, args.mesh)
        reports, summary = run_sweep(configs, workers=workers)
        for r in reports:
            if r.ok:
                _print_report(r)
            else:
                print(f"{r.case_id}: FAILED {r.status}")
        print(f"summary written to {summary}")
        return EXIT_OK if all(r.ok for r in reports) else EXIT_DIVERGED

    data = cfgmod.apply_overrides(data, scheme=args.scheme, eps=args.eps)
    base = cfgmod.run_config({**data, "n": 4, "beta": None})
    levels = cfgmod.convergence_levels(data, args.mesh)
    result = run_convergence(base, levels, workers=workers)
    out = Path(base.out)
    _write_convergence(out / "convergence.csv", result)
    for n, e in zip(result.n, result.errors):
        print(f"n={n}: l2_error={e:.6g}")
    if result.order is None:
        print(f"warning: {result.message}", file=sys.stderr)
    else:
        print(result.message)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, CFLViolationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverDivergenceError, FloatingPointError) as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OutputError, CheckpointError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
