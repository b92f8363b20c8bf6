"""Command-line interface.

Subcommands
-----------
optimize   best-of-restarts ascent on the configured scene; writes trace.csv,
           optimize.json, phi.npy and trace.png.
sweep      one row per (axis value, scheme); writes sweep.csv and sweep.png.
converge   per-iteration trace with baseline reference lines; writes
           trace.csv and trace.png.
verify     bundled oracle suite; writes verify.json; exits 3 on any failing
           check.

Exit codes: 0 success; 2 configuration or I/O problems (argparse uses the
same code for bad flags); 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BdrisError
from .experiments import (
    AXES,
    SCHEMES,
    ExperimentConfig,
    default_config,
    execute_convergence,
    execute_optimize,
    execute_sweep,
    execute_verify,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdris",
        description=(
            "Evaluate and minimize the Cramer-Rao bound on angle-of-arrival "
            "estimation through a reconfigurable surface with a unitary "
            "(beyond-diagonal) scattering matrix."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, plot: bool) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--seed", type=int, metavar="INT", help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: results)")
        p.add_argument(
            "--schemes",
            metavar="LIST",
            help=f"comma-separated subset of {{{','.join(SCHEMES)}}}",
        )
        p.add_argument(
            "--restarts", type=int, metavar="INT", help="override restart count"
        )
        if plot:
            p.add_argument(
                "--no-plot", action="store_true", help="skip figure rendering"
            )
        p.add_argument(
            "--timing",
            action="store_true",
            help="include wall-clock columns (breaks byte-identical reruns)",
        )

    p_opt = sub.add_parser("optimize", help="optimize the configured scene")
    common(p_opt, plot=True)

    p_sweep = sub.add_parser("sweep", help="sweep one axis and compare schemes")
    common(p_sweep, plot=True)
    p_sweep.add_argument(
        "--axis", choices=AXES, help="override the swept axis"
    )

    p_conv = sub.add_parser("converge", help="emit a per-iteration trace")
    common(p_conv, plot=True)

    p_ver = sub.add_parser("verify", help="run the verification suite")
    common(p_ver, plot=False)
    p_ver.add_argument(
        "--corrupt-gradient",
        action="store_true",
        help="negative control: corrupt the analytic gradient so the finite-difference check must fail",
    )
    return parser


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.schemes is not None:
        overrides["schemes"] = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if getattr(args, "axis", None) is not None:
        overrides["axis"] = args.axis
        overrides["values"] = None
    if args.timing:
        overrides["timing"] = True
    if args.config is not None:
        return ExperimentConfig.from_file(args.config, overrides)
    doc = default_config()
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)


def entrypoint(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        out_dir = args.out or config.out or "results"
        plot = not getattr(args, "no_plot", False)
        if args.command == "sweep":
            target = execute_sweep(config, out_dir, plot=plot)
            print(f"wrote {target}")
        elif args.command == "converge":
            target = execute_convergence(config, out_dir, plot=plot)
            print(f"wrote {target}")
        elif args.command == "optimize":
            target = execute_optimize(config, out_dir, plot=plot)
            print(f"wrote {target}")
        elif args.command == "verify":
            target, all_pass = execute_verify(
                config, out_dir, corrupt_gradient=args.corrupt_gradient
            )
            print(f"wrote {target}")
            status = "pass" if all_pass else "FAIL"
            print(f"verification: {status}")
            if not all_pass:
                return EXIT_VERIFY
    except BdrisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(entrypoint())


if __name__ == "__main__":
    main()
