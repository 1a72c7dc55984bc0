"""Command-line interface.

Subcommands: `solve` runs a fixed-point map on a model file, `bench`
reproduces the random-grid comparison protocol, `restore` and `stereo`
run the two imaging experiments, and `verify` executes the invariant
self-checks.  Exit codes: 0 success, 1 usage or parse error, 2 instance
too large for an exact oracle, 3 numerical failure or non-convergence,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from . import baselines, maps, oracles, problems
from .errors import (
    CapacityError,
    InvalidInputError,
    ModelParseError,
    NumericalFailureError,
)
from .model import energy, normalize_nonnegative
from .modelio import read_model
from .verify import run_verification

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAPACITY = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

BENCH_ALGORITHMS = ("dp", "icm", "s", "s+icm", "t", "t+icm", "bp", "bp+icm")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors on exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="pairlabel", description=__doc__.split("\n\n")[0])
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap worker threads (results do not depend on it)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="run a fixed-point map on a model file")
    solve.add_argument("model", help="model file (see README for the format)")
    solve.add_argument("--map", choices=("T", "S"), default="T")
    solve.add_argument("--p", type=float, default=0.1, help="damping in (0,1)")
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--max-iter", type=int, default=100_000)
    solve.add_argument("--labels-out", help="write the decoded labeling (0-based)")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="random-grid algorithm comparison")
    bench.add_argument("--size", type=int, default=10, help="grid side length")
    bench.add_argument("--coupling", type=float, default=10.0)
    bench.add_argument("--seeds", type=int, default=20, help="number of instances")
    bench.add_argument("--first-seed", type=int, default=0)
    bench.add_argument("--iterations", type=int, default=1000)
    bench.add_argument("--p", type=float, default=0.01)
    bench.add_argument(
        "--algorithms",
        default=",".join(BENCH_ALGORITHMS),
        help="comma-separated subset of " + ",".join(BENCH_ALGORITHMS),
    )
    bench.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    bench.set_defaults(func=cmd_bench)

    restore = sub.add_parser("restore", help="piecewise-smooth image restoration")
    restore.add_argument("input", help="noisy image (binary PGM)")
    restore.add_argument("output", help="restored image (binary PGM)")
    restore.add_argument("--clean", help="clean reference image for the error report")
    restore.add_argument("--smoothing", type=float, default=0.05)
    restore.add_argument("--cap", type=float, default=100.0)
    restore.add_argument("--p", type=float, default=0.001)
    restore.add_argument("--iterations", type=int, default=100)
    restore.add_argument("--map", choices=("T", "S"), default="T")
    restore.set_defaults(func=cmd_restore)

    stereo = sub.add_parser("stereo", help="stereo disparity estimation")
    stereo.add_argument("left", help="left image (binary PPM)")
    stereo.add_argument("right", help="right image (binary PPM)")
    stereo.add_argument("output", help="disparity image (binary PGM, scaled)")
    stereo.add_argument("--labels-out", help="write raw disparities as text")
    stereo.add_argument("--max-disparity", type=int, default=15)
    stereo.add_argument("--step-cost", type=float, default=500.0)
    stereo.add_argument("--jump-cost", type=float, default=1000.0)
    stereo.add_argument("--color-cap", type=float, default=20.0)
    stereo.add_argument("--p", type=float, default=0.0001)
    stereo.add_argument("--iterations", type=int, default=1000)
    stereo.set_defaults(func=cmd_stereo)

    verify = sub.add_parser("verify", help="run the invariant self-checks")
    verify.add_argument("--scale", choices=("quick", "full"), default="quick")
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(func=cmd_verify)
    return parser


def _write_labels(path, labels, per_line=None):
    labels = np.asarray(labels).reshape(-1)
    if per_line is None:
        per_line = labels.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        for start in range(0, labels.shape[0], per_line):
            fh.write(" ".join(str(int(v)) for v in labels[start:start + per_line]))
            fh.write("\n")


def cmd_solve(args):
    model = read_model(args.model)
    normalized, offset = normalize_nonnegative(model)
    report = maps.solve(
        normalized,
        maps.MapKind(args.map),
        maps.SolveParams(p=args.p, tol=args.tol, max_iter=args.max_iter),
    )
    x = maps.decode(report.field)
    print(f"map {args.map}")
    print(f"p {args.p!r}")
    print(f"iterations {report.iterations}")
    print(f"residual {report.residual!r}")
    print(f"certified_distance {report.certified_distance!r}")
    print(f"converged {str(report.converged).lower()}")
    print("labeling " + " ".join(str(int(v) + 1) for v in x))
    print(f"energy {energy(normalized, x) + offset!r}")
    if report.kind is maps.MapKind.T and report.converged:
        lower, upper, _ = maps.bracket(normalized, report)
        print(f"lower {lower + offset!r}")
        print(f"upper {upper + offset!r}")
    if args.labels_out:
        _write_labels(args.labels_out, x)
    if not report.converged:
        print(
            f"did not converge within {args.max_iter} iterations "
            f"(residual {report.residual!r})",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    return EXIT_OK


def _bench_labelings(model, algorithms, x_star, iterations, p):
    """Labelings and wall-clock seconds per requested algorithm."""
    params = lambda: maps.SolveParams(p=p, tol=1e-12, max_iter=iterations)
    out = {}
    elapsed = {}
    cache = {}
    for algo in algorithms:
        base = algo.split("+")[0]
        if base not in cache:
            start = time.perf_counter()
            if base == "dp":
                result = x_star
            elif base == "icm":
                result = baselines.icm(
                    model, np.argmin(model.unary, axis=1), max_sweeps=iterations
                )
            elif base == "s":
                result = maps.decode(maps.solve(model, maps.MapKind.S, params()).field)
            elif base == "t":
                result = maps.decode(maps.solve(model, maps.MapKind.T, params()).field)
            elif base == "bp":
                result = maps.decode(
                    baselines.min_sum_bp(model, damping=0.5, iterations=iterations)
                )
            else:
                raise InvalidInputError(f"unknown algorithm {algo!r}")
            cache[base] = (result, time.perf_counter() - start)
        labeling, seconds = cache[base]
        if algo.endswith("+icm"):
            start = time.perf_counter()
            labeling = baselines.icm(model, labeling, max_sweeps=iterations)
            seconds += time.perf_counter() - start
        out[algo] = labeling
        elapsed[algo] = seconds
    return out, elapsed


def cmd_bench(args):
    algorithms = [a.strip().lower() for a in args.algorithms.split(",") if a.strip()]
    for algo in algorithms:
        if algo not in BENCH_ALGORITHMS:
            raise InvalidInputError(f"unknown algorithm {algo!r}")
    size = args.size
    rows = []
    stats = {algo: ([], []) for algo in algorithms}
    wall = {algo: 0.0 for algo in algorithms}
    for index in range(args.seeds):
        seed = args.first_seed + index
        model, alpha, beta = problems.random_grid(
            problems.GridSpec(size, args.coupling, seed)
        )
        x_star, _ = oracles.column_dp_min(model, (size, size))
        labelings, elapsed = _bench_labelings(
            model, algorithms, x_star, args.iterations, args.p
        )
        for algo in algorithms:
            x = labelings[algo]
            e = problems.ising_energy(alpha, beta, (size, size), x)
            d = problems.hamming(x, x_star)
            rows.append((algo, str(seed), repr(e), str(d)))
            stats[algo][0].append(e)
            stats[algo][1].append(d)
            wall[algo] += elapsed[algo]
    for algo in algorithms:
        energies, distances = stats[algo]
        rows.append(
            (algo, "mean", repr(float(np.mean(energies))), repr(float(np.mean(distances))))
        )
        rows.append(
            (algo, "sigma", repr(float(np.std(energies))), repr(float(np.std(distances))))
        )
    # wall-clock report on stderr: per-iteration work differs across
    # algorithms (the maps update one belief per vertex, message passing
    # two messages per edge), so both totals and rates are shown
    for algo in algorithms:
        per_iter = wall[algo] / max(args.iterations * args.seeds, 1)
        print(
            f"timing {algo} total {wall[algo]:.3f}s"
            f" per_iteration {per_iter:.6f}s",
            file=sys.stderr,
        )
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(("algorithm", "seed", "energy", "hamming"))
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_restore(args):
    noisy = problems.read_pgm(args.input)
    model = problems.restoration_model(noisy, args.smoothing, args.cap)
    report = maps.solve(
        model,
        maps.MapKind(args.map),
        maps.SolveParams(p=args.p, tol=1e-12, max_iter=args.iterations),
    )
    x = maps.decode(report.field)
    restored = x.reshape(noisy.shape).astype(np.uint8)
    problems.write_pgm(args.output, restored)
    print(f"iterations {report.iterations}")
    print(f"residual {report.residual!r}")
    print(f"energy {energy(model, x)!r}")
    if args.clean:
        clean = problems.read_pgm(args.clean)
        print(f"rmse {problems.rmse(restored, clean)!r}")
    return EXIT_OK


def cmd_stereo(args):
    left = problems.read_ppm(args.left)
    right = problems.read_ppm(args.right)
    model = problems.stereo_model(
        left,
        right,
        args.max_disparity,
        args.step_cost,
        args.jump_cost,
        args.color_cap,
    )
    report = maps.solve(
        model,
        maps.MapKind.S,
        maps.SolveParams(p=args.p, tol=1e-12, max_iter=args.iterations),
    )
    x = maps.decode(report.field)
    shape = left.shape[:2]
    scale = 255 // args.max_disparity if args.max_disparity > 0 else 0
    display = (x.reshape(shape) * scale).astype(np.uint8)
    problems.write_pgm(args.output, display)
    if args.labels_out:
        _write_labels(args.labels_out, x, per_line=shape[1])
    print(f"iterations {report.iterations}")
    print(f"residual {report.residual!r}")
    print(f"energy {energy(model, x)!r}")
    return EXIT_OK


def cmd_verify(args):
    ok = run_verification(scale=args.scale, seed=args.seed)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        _cap_threads(args.threads)
    try:
        return args.func(args)
    except ModelParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericalFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _cap_threads(threads):
    if threads < 1:
        raise InvalidInputError("--threads must be >= 1")
    import warnings

    import numba

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # threading-layer probe chatter
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


if __name__ == "__main__":
    sys.exit(main())
