"""Command-line interface.

    graphdenoise synth    --n 500 --noise 0.1 --seed 42
    graphdenoise denoise  --filter bf-cg --iters 20 --guidance clean.csv noisy.csv
    graphdenoise compare  --scenario 1d-500 --seed 42
    graphdenoise spectrum --graph path --n 3

Options may also come from a ``key=value`` file given with ``--config``;
explicit flags win.  Output files land in ``--outdir`` or, if unset, in
``$GRAPHDENOISE_OUTDIR`` or the current directory.

Exit codes: 0 success, 2 usage, 3 I/O or file format, 4 capacity.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .experiments import (ACCELERATED, FILTERS, DenoiseSettings, denoise,
                          resolve_scenario, run_experiment, SCENARIOS)
from .filters import IterationMode
from .graph import BfParams, GfParams, bf_graph, gf_weight_matrix, laplacian, path_graph
from .signal import (NoiseSpec, Signal, add_gaussian_noise, make_piecewise_linear,
                     make_test_image, psnr, rmse)
from .spectral import MAX_DENSE_SIZE, CapacityError, eig_sym, gft

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CAPACITY = 0, 2, 3, 4
OUTDIR_ENV = "GRAPHDENOISE_OUTDIR"


class UsageError(Exception):
    pass


def _outdir(args) -> Path:
    return Path(args.outdir or os.environ.get(OUTDIR_ENV) or ".")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _non_negative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _metric_lines(reference: Signal, noisy: Signal, out: Signal):
    lines = [f"rmse_input={rmse(reference, noisy):.6f}",
             f"rmse_output={rmse(reference, out):.6f}",
             f"psnr_input={psnr(reference, noisy):.4f}",
             f"psnr_output={psnr(reference, out):.4f}"]
    return lines


def cmd_synth(args) -> int:
    outdir = _outdir(args)
    spec = NoiseSpec(args.noise, args.seed)
    if args.image:
        clean = make_test_image(args.rows, args.cols)
        ext = "pgm"
    else:
        clean = make_piecewise_linear(args.n)
        ext = "csv"
    noisy = add_gaussian_noise(clean, spec)
    io.write_signal(outdir / f"clean.{ext}", clean)
    io.write_signal(outdir / f"noisy.{ext}", noisy)
    print(f"rmse_noisy={rmse(clean, noisy):.6f}")
    print(f"psnr_noisy={psnr(clean, noisy):.4f}")
    return EXIT_OK


def _bf_params(args, image: bool) -> BfParams:
    stencil = args.stencil or ("5-point" if image else "window")
    return BfParams(sigma_r=args.sigma_r, half_width=args.half_width,
                    sigma_s=args.sigma_s, stencil=stencil)


def cmd_denoise(args) -> int:
    x = io.read_signal(args.input)
    guidance = io.read_signal(args.guidance) if args.guidance else None
    reference = io.read_signal(args.reference) if args.reference else None
    if reference is not None and reference.shape != x.shape:
        raise UsageError("reference shape differs from input")
    settings = DenoiseSettings(
        filter=args.filter, iterations=args.iters,
        bf=_bf_params(args, x.ndim == 2), gf=GfParams(args.rho, args.eps),
        mode=IterationMode(args.mode), constraint=args.constraint,
        beta_rule=args.beta_rule)

    trace = []

    # LOBPCG iterates are unit D-norm, so only CG iterates are compared
    with_rmse = reference is not None and settings.filter == "bf-cg"

    def record(k, xk):
        trace.append([k, rmse(reference, x.with_values(xk))] if with_rmse else [k])

    out, info = denoise(x, settings, guidance=guidance,
                        callback=record if args.trace else None, return_info=True)

    outdir = _outdir(args)
    target = Path(args.out) if args.out else outdir / (
        "denoised." + ("pgm" if x.ndim == 2 else "csv"))
    io.write_signal(target, out)
    if args.dump_graph:
        g = guidance if guidance is not None else x
        io.write_edges_csv(args.dump_graph, bf_graph(g, settings.bf))
    if args.trace:
        if info is None:
            raise UsageError("--trace is only available for bf-cg and lobpcg")
        history = (info.residual_norms[1:] if settings.filter == "bf-cg"
                   else info.rayleigh_quotients[1:])
        header = ["k", "residual_norm" if settings.filter == "bf-cg" else "lambda"]
        cols = [[row[0] for row in trace], history]
        if with_rmse:
            header.append("rmse")
            cols.append([row[1] for row in trace])
        io.write_csv_columns(args.trace, header, cols)

    print(f"filter={settings.filter}")
    print(f"output={target}")
    if info is not None:
        print(f"iterations={info.iterations}")
        print(f"status={info.status}")
    if reference is not None:
        for line in _metric_lines(reference, x, out):
            print(line)
    return EXIT_OK


def _format_table(metrics: dict) -> str:
    lines = [f"{'signal':<10} {'rmse':>10} {'psnr':>9}"]
    for name, m in metrics.items():
        lines.append(f"{name:<10} {m['rmse']:>10.6f} {m['psnr']:>9.4f}")
    return "\n".join(lines)


def cmd_compare(args) -> int:
    spec = resolve_scenario(args.scenario, seed=args.seed, noise_std=args.noise)
    result = run_experiment(spec)
    outdir = _outdir(args)
    names = list(result.outputs)
    clean, noisy = result.clean.values, result.noisy.values
    header = ["index", "clean", "noisy"] + names + ["err_noisy"] + [f"err_{n}" for n in names]
    cols = [list(range(clean.size)), clean, noisy]
    cols += [result.outputs[n].values for n in names]
    cols += [noisy - clean] + [result.outputs[n].values - clean for n in names]
    stem = f"compare_{spec.scenario}"
    io.write_csv_columns(outdir / f"{stem}.csv", header, cols)

    metrics = result.metrics()
    io.write_csv_columns(outdir / f"{stem}_metrics.csv", ["signal", "rmse", "psnr"],
                         [list(metrics), [m["rmse"] for m in metrics.values()],
                          [m["psnr"] for m in metrics.values()]])
    if result.clean.ndim == 1:
        series = {"clean": clean, "noisy": noisy}
        series.update({n: result.outputs[n].values for n in names})
        svg = io.svg_polylines(series, title=f"{spec.scenario}, seed {spec.seed}")
        io.atomic_write(outdir / f"{stem}.svg", svg.encode("ascii"))
    else:
        io.write_pgm(outdir / f"{stem}_clean.pgm", result.clean)
        io.write_pgm(outdir / f"{stem}_noisy.pgm", result.noisy)
        for n in names:
            io.write_pgm(outdir / f"{stem}_{n}.pgm", result.outputs[n])

    print(_format_table(metrics))
    base = metrics["noisy"]
    if result.clean.ndim == 1:
        errs = [metrics[n]["rmse"] for n in names]
        print(f"all_below_half_noisy={all(e < 0.5 * base['rmse'] for e in errs)}")
        print(f"spread_ratio={max(errs) / min(errs):.4f}")
    else:
        gains = {n: metrics[n]["psnr"] - base["psnr"] for n in names if n in ACCELERATED}
        print("psnr_gain " + " ".join(f"{n}={g:.4f}" for n, g in gains.items()))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    x = io.read_signal(args.input) if args.input else None
    if args.graph == "path":
        n = x.size if x is not None else args.n
        if n is None:
            raise UsageError("spectrum --graph path needs --n or an input signal")
        if n > MAX_DENSE_SIZE:
            raise CapacityError(f"n={n} exceeds the dense cap {MAX_DENSE_SIZE}")
        graph = path_graph(n)
    else:
        if x is None:
            raise UsageError(f"spectrum --graph {args.graph} needs an input signal")
        if x.size > MAX_DENSE_SIZE:
            raise CapacityError(f"n={x.size} exceeds the dense cap {MAX_DENSE_SIZE}")
        if args.graph == "bf":
            graph = bf_graph(x, _bf_params(args, x.ndim == 2))
        else:
            graph = gf_weight_matrix(x, GfParams(args.rho, args.eps))
    decomp = eig_sym(laplacian(graph, normalized=args.normalized).to_dense())

    outdir = _outdir(args)
    n = decomp.n
    io.write_csv_columns(outdir / "eigenvalues.csv", ["index", "eigenvalue"],
                         [list(range(n)), decomp.eigenvalues])
    if x is not None:
        coeffs = gft(decomp, x)
        io.write_csv_columns(outdir / "gft.csv", ["index", "eigenvalue", "magnitude"],
                             [list(range(n)), decomp.eigenvalues, np.abs(coeffs)])
    print(f"n={n}")
    print(f"lambda_min={decomp.eigenvalues[0]:.6g}")
    print(f"lambda_max={decomp.eigenvalues[-1]:.6g}")
    return EXIT_OK


def _add_filter_options(p):
    p.add_argument("--half-width", type=_positive_int, default=1)
    p.add_argument("--sigma-s", type=float, default=None,
                   help="spatial sigma (default: half-width)")
    p.add_argument("--sigma-r", type=float, default=0.1)
    p.add_argument("--stencil", choices=["window", "5-point"], default=None,
                   help="2D neighborhood (default: 5-point for images)")
    p.add_argument("--rho", type=_positive_int, default=5)
    p.add_argument("--eps", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphdenoise",
                                     description="Graph-Laplacian signal and image denoising")
    parser.add_argument("--config", help="key=value file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--outdir", default=None, help=f"output directory (env {OUTDIR_ENV})")
        return p

    p = add("synth", cmd_synth, "write clean and noisy test signals")
    p.add_argument("--n", type=_positive_int, default=500)
    p.add_argument("--noise", type=_non_negative, default=0.1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--image", action="store_true", help="2D test image instead of 1D signal")
    p.add_argument("--rows", type=_positive_int, default=128)
    p.add_argument("--cols", type=_positive_int, default=128)

    p = add("denoise", cmd_denoise, "filter a signal or image")
    p.add_argument("input")
    p.add_argument("--filter", choices=FILTERS, default="bf")
    p.add_argument("--iters", type=_positive_int, default=20)
    p.add_argument("--mode", choices=[m.value for m in IterationMode], default="reguided")
    p.add_argument("--guidance", help="guidance signal file (default: the input)")
    p.add_argument("--reference", help="clean signal for rmse/psnr output")
    p.add_argument("--constraint", action="store_true",
                   help="LOBPCG: keep iterates orthogonal to the constant vector")
    p.add_argument("--beta-rule", choices=["printed", "standard"], default="printed")
    p.add_argument("--out", help="output file")
    p.add_argument("--trace", help="per-iteration CSV for the Krylov filters")
    p.add_argument("--dump-graph", help="write the bilateral graph edges as CSV")
    _add_filter_options(p)

    p = add("compare", cmd_compare, "run a reference experiment")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="1d-500")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", type=_non_negative, default=None)

    p = add("spectrum", cmd_spectrum, "dump the Laplacian spectrum")
    p.add_argument("input", nargs="?")
    p.add_argument("--graph", choices=["bf", "gf", "path"], default="bf")
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--normalized", action="store_true")
    _add_filter_options(p)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    for action in parser._subparsers._group_actions[0].choices.values():
        dests = {a.dest: a for a in action._actions}
        defaults = {}
        for key, raw in values.items():
            a = dests.get(key)
            if a is None:
                continue
            if a.const is True or a.const is False:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = a.type(raw) if a.type else raw
        action.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, UsageError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (io.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
