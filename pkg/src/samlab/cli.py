"""Command-line entry point.

Subcommands map one-to-one to harness experiments::

    samlab quadratic       fixed point and invariant sets on a quadratic
    samlab toy4d           minimizer selection on the 4D toy (--algorithm)
    samlab flow-compare    discrete run vs the projected curvature flow
    samlab sharpness-scan  sharpness over rho against curvature limits
    samlab explicit-bias   multistart minimization of loss + penalty (--type)
    samlab selftest        the property suite

Common flags: --config (key = value file), --out, --seed, --eta, --rho,
--steps, --algorithm, --type, --print-config.  Flags override config-file
values, which override built-in defaults.  Exit status is 0 iff every
asserted claim passed.
"""

import argparse
import sys

from . import kernels
from .errors import SamlabError
from .harness import (
    ExperimentConfig,
    emit,
    prepare_out,
    run_explicit_bias,
    run_flow_compare,
    run_quadratic,
    run_selftest,
    run_sharpness_scan,
    run_toy4d,
)

_EXPERIMENTS = (
    "quadratic",
    "toy4d",
    "flow-compare",
    "sharpness-scan",
    "explicit-bias",
    "selftest",
)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="samlab",
        description="sharpness-aware minimization laboratory",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (default runs/<experiment>)")
        p.add_argument("--seed", type=int)
        p.add_argument("--eta", type=float)
        p.add_argument("--rho", type=float)
        p.add_argument("--steps", type=int, dest="n_steps")
        p.add_argument("--algorithm", choices=("sam", "one_sam", "asc_gd", "gd"))
        p.add_argument("--type", choices=("max", "asc", "avg"), dest="bias_type")
        p.add_argument("--loss", help="loss specification file")
        p.add_argument(
            "--print-config", action="store_true",
            help="print the effective configuration and exit",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        k: getattr(args, k)
        for k in ("seed", "eta", "rho", "n_steps", "algorithm", "bias_type", "loss")
        if getattr(args, k, None) is not None
    }
    out_dir = args.out or f"runs/{args.experiment}"
    try:
        cfg = ExperimentConfig.build(
            args.experiment, file_path=args.config, overrides=overrides, out_dir=out_dir
        )
    except (ValueError, OSError, SamlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.print_config:
        sys.stdout.write(f"experiment = {args.experiment}\n")
        sys.stdout.write(f"backend = {kernels.backend()}\n")
        sys.stdout.write(f"out = {out_dir}\n")
        sys.stdout.write(cfg.format_kv())
        return 0

    try:
        prepare_out(out_dir)
        trajectory = None
        tables = None
        if args.experiment == "quadratic":
            summary, trajectory = run_quadratic(cfg)
        elif args.experiment == "toy4d":
            summary, trajectory = run_toy4d(cfg)
        elif args.experiment == "flow-compare":
            summary, trajectory, sol = run_flow_compare(cfg)
            if sol is not None:
                header = ["tau"] + [f"x{i+1}" for i in range(sol.xs.shape[1])]
                rows = [[sol.taus[i]] + list(sol.xs[i]) for i in range(len(sol.taus))]
                tables = {"flow": (header, rows)}
        elif args.experiment == "sharpness-scan":
            summary, (header, rows) = run_sharpness_scan(cfg)
            tables = {"scan": (header, rows)}
        elif args.experiment == "explicit-bias":
            summary = run_explicit_bias(cfg)
        else:
            summary = run_selftest(cfg)
    except (ValueError, SamlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    paths = emit(summary, trajectory, tables, out_dir=out_dir)
    for claim in summary.claims:
        status = {True: "PASS", False: "FAIL", None: "info"}[claim.passed]
        print(f"[{status}] {claim.name}: measured={claim.measured} target={claim.target}")
    print(f"wrote {', '.join(str(p) for p in paths)}")
    print(f"overall: {'PASS' if summary.passed else 'FAIL'}")
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
