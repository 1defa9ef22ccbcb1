"""Command-line front end.

    quasiherm run FILE... [--out PATH] [--format csv|json] [--jobs N]
    quasiherm check FILE
    quasiherm solve-metric FILE
    quasiherm spectrum FILE

Exit codes: 0 success, 2 parse error, 3 model/metric error, 4 integration error.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import QuasiHermitianError, ScenarioError, StageError
from .metric import solve_intertwining
from .report import build_operators, build_scenario, emit, run_scenario
from .scenario import read_scenario
from .spectral import biorthogonal_decompose

EXIT_OK, EXIT_PARSE, EXIT_MODEL, EXIT_INTEGRATION = 0, 2, 3, 4


def _exit_code(exc):
    if isinstance(exc, ScenarioError):
        return EXIT_PARSE
    if isinstance(exc, StageError) and exc.stage == "evolution":
        return EXIT_INTEGRATION
    return EXIT_MODEL


def _report_error(path, exc):
    print(f"{path}: error: {exc}", file=sys.stderr)
    return _exit_code(exc)


def _load(path):
    try:
        return read_scenario(path)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}") from exc


def _destination(path, sc, args, many):
    fmt = args.format or sc.output.format
    if args.out:
        out = Path(args.out)
        if many:
            return out / f"{Path(path).stem}.{fmt}", fmt
        return out, fmt
    if sc.output.path:
        target = Path(sc.output.path)
        if not target.is_absolute():
            target = Path(path).parent / target
        return target, fmt
    if many:
        return Path(path).with_suffix(f".{fmt}"), fmt
    return None, fmt


def _run_one(path, args, many):
    try:
        sc = _load(path)
        table = run_scenario(sc)
        target, fmt = _destination(path, sc, args, many)
        data = emit(table, fmt)
    except QuasiHermitianError as exc:
        return path, _exit_code(exc), str(exc), None
    return path, EXIT_OK, target, data


def cmd_run(args):
    many = len(args.files) > 1
    if many and args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    jobs = max(1, args.jobs)
    if jobs > 1 and many:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda p: _run_one(p, args, many), args.files))
    else:
        results = [_run_one(p, args, many) for p in args.files]
    worst = EXIT_OK
    for path, code, target, data in results:
        if code != EXIT_OK:
            print(f"{path}: error: {target}", file=sys.stderr)
            worst = max(worst, code)
            continue
        if target is None:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            Path(target).write_bytes(data)
            print(f"{path}: wrote {target}", file=sys.stderr)
    return worst


def cmd_check(args):
    try:
        sc = _load(args.file)
        scenario = build_scenario(sc)
    except QuasiHermitianError as exc:
        return _report_error(args.file, exc)
    print(
        f"ok: dim={scenario.dim} t=[{scenario.t0:g}, {scenario.t1:g}] steps={scenario.steps} "
        f"metric={sc.metric.mode}"
    )
    return EXIT_OK


def _h_at_t0(path):
    sc = _load(path)
    try:
        hamiltonian, _, _ = build_operators(sc)
        return sc, hamiltonian.at(sc.evolution.t0)
    except QuasiHermitianError as exc:
        raise StageError("model", exc) from exc


def _format_matrix(m):
    return "\n".join(
        "  [" + ", ".join(f"{z.real:+.12e}{z.imag:+.12e}j" for z in row) + "]" for row in m
    )


def cmd_solve_metric(args):
    try:
        sc, h = _h_at_t0(args.file)
        family = solve_intertwining(h, sc.tolerances["nullspace"])
    except QuasiHermitianError as exc:
        return _report_error(args.file, exc)
    print(f"metric family at t0: dimension {family.size}")
    for k, b in enumerate(family.basis):
        print(f"basis[{k}] =")
        print(_format_matrix(b))
    return EXIT_OK


def cmd_spectrum(args):
    try:
        sc, h = _h_at_t0(args.file)
        system = biorthogonal_decompose(h, sc.tolerances["reality"])
    except QuasiHermitianError as exc:
        if not isinstance(exc, (ScenarioError, StageError)):
            exc = StageError("model", exc)
        return _report_error(args.file, exc)
    print("energies: " + ", ".join(f"{e:.15g}" for e in system.energies))
    print(f"biorthogonality residual: {system.biorthogonality_residual():.3e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quasiherm",
        description="Metric operators and time evolution for quasi-Hermitian models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate scenario(s) and write a result table")
    run.add_argument("files", nargs="+")
    run.add_argument("--out", help="output file (or directory when several files are given)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--jobs", type=int, default=1, help="run independent scenarios concurrently")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="parse and validate a scenario without integrating")
    check.add_argument("file")
    check.set_defaults(func=cmd_check)

    solve = sub.add_parser("solve-metric", help="print the metric family of H(t0)")
    solve.add_argument("file")
    solve.set_defaults(func=cmd_solve_metric)

    spectrum = sub.add_parser("spectrum", help="print energies and the biorthogonality residual of H(t0)")
    spectrum.add_argument("file")
    spectrum.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.set_printoptions(precision=12)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
