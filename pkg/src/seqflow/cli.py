"""Command-line entry point.

Subcommands reproduce the headline experiments (`compare`, `table`,
`eigtrace`, `kernel2d`) and run the tabular spectrum analyzer
(`spectrum`).  Exit codes: 0 success, 2 configuration error, 3 numerical
abort (divergence or conservation drift).
"""

from __future__ import annotations

import argparse
import sys

from .flows import NumericalAbort
from .harness import (
    ConfigError,
    parse_config_file,
    run_compare,
    run_eigtrace,
    run_kernel2d,
    run_table,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(sub):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--seed", type=int, help="master seed override")
    sub.add_argument("--out", help="output directory override")
    sub.add_argument("--threads", type=int, help="worker thread override")
    sub.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="seqflow",
        description="Sequence-model gradient-flow experiments",
    )
    subs = ap.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("compare", "vanilla vs over-parameterized risk rates"),
        ("table", "convergence-rate table over (p, q, gamma) cells"),
        ("eigtrace", "trainable eigenvalue traces over a component window"),
        ("kernel2d", "fixed vs adaptive kernel regression on the torus"),
    ]:
        _add_common(subs.add_parser(name, help=helptext))
    sp = subs.add_parser("spectrum", help="Fourier spectrum of a tabular dataset")
    sp.add_argument("--input", required=True, help="input CSV path")
    sp.add_argument("--target", required=True, help="target column name")
    sp.add_argument("--r", type=float, default=2.0, help="eigenvalue smoothness")
    sp.add_argument(
        "--max-basis", type=int, default=20000, help="basis size ceiling"
    )
    sp.add_argument("--out", required=True, help="output CSV path")
    return ap


def _run_spectrum(args) -> int:
    from .spectrum import empirical_coefficients, ingest_csv, normalize_to_torus
    from .spectrum import IngestError, export_spectrum_csv
    from .torus import make_fourier_design

    try:
        data = normalize_to_torus(ingest_csv(args.input, args.target))
    except IngestError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.r <= data.d / 2:
        print(
            f"error (bad-smoothness): r={args.r} must exceed d/2={data.d / 2}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    basis = make_fourier_design(data.d, args.r, cap=args.max_basis)
    spec = empirical_coefficients(data, basis)
    export_spectrum_csv(args.out, spec)
    print(
        f"wrote {args.out}: {basis.M} basis functions over {data.d} features, "
        f"n={data.n} rows ({data.dropped_rows} dropped), "
        f"top-10 energy fraction {spec.top_k_energy_fraction(10):.3f}, "
        f"noise floor {spec.noise_floor:.3g}"
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "spectrum":
        return _run_spectrum(args)
    direct = {}
    if args.seed is not None:
        direct["seed"] = args.seed
    if args.out is not None:
        direct["output_dir"] = args.out
    if args.threads is not None:
        direct["threads"] = args.threads
    try:
        cfg = parse_config_file(args.config, args.set, **direct)
    except (ConfigError, OSError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    runner = {
        "compare": run_compare,
        "table": run_table,
        "eigtrace": run_eigtrace,
        "kernel2d": run_kernel2d,
    }[args.command]
    try:
        result = runner(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "compare":
        for est, e in result["exponents"].items():
            print(f"{est}: fitted rate exponent {e:.4f}")
    elif args.command == "table":
        for cell in result["cells"]:
            print(
                f"p={cell['p']} q={cell['q']} gamma={cell['gamma']}: "
                f"exponent {cell['exponent']:.4f}"
            )
    elif args.command == "eigtrace":
        print(f"traced {len(result['indices'])} components to t={result['t_stop']:.4g}")
    elif args.command == "kernel2d":
        print(
            f"adaptive oracle risk beat fixed in {result['adaptive_wins']}"
            f"/{result['total']} runs (basis size {result['basis_size']})"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
