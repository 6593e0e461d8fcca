"""
Command-line entry point. Every subcommand runs one experiment; flags
override the values read from ``--config``.
"""
import argparse
import sys

from pydantic import ValidationError

from pinsim import __version__
from pinsim.config import commands, load_config
from pinsim.utils import mylog

# subcommand -> (flag, config key, type, nargs)
section_flags = {
    "validate-walk": [("--n-max", "walk.n_max", int, None),
                      ("--n-min", "walk.n_min", int, None)],
    "kernels": [("--n-max", "kernels.n_max", int, None),
                ("--stride", "kernels.stride", int, None)],
    "beta": [("--n", "beta.N", int, "+"),
             ("--vartheta", "beta.vartheta", float, None)],
    "partition": [("--n", "partition.N", int, None),
                  ("--n-fields", "partition.n_fields", int, None),
                  ("--brute-n", "partition.brute_N", int, None),
                  ("--compare-n", "partition.compare_N", int, None),
                  ("--vartheta", "partition.vartheta", float, None)],
    "moments": [("--n", "moments.N", int, "+"),
                ("--mc-n", "moments.mc_N", int, None),
                ("--samples", "moments.samples", int, None),
                ("--vartheta", "moments.vartheta", float, None)],
    "dickman": [("--s", "dickman.s_values", float, "+"),
                ("--renewal-n", "dickman.renewal_N", int, None),
                ("--samples", "dickman.samples", int, None),
                ("--ks-threshold", "dickman.ks_threshold", float, None)],
    "gtheta": [("--vartheta", "gtheta.vartheta", float, None),
               ("--t-max", "gtheta.t_max", float, None),
               ("--ubar-n", "gtheta.ubar_N", int, "+")],
    "cg": [("--eps", "cg.eps", float, "+"),
           ("--keps", "cg.K", int, None),
           ("--r-max", "cg.r_max", int, None),
           ("--n", "cg.N", int, "+"),
           ("--samples", "cg.samples", int, None),
           ("--repetitions", "cg.repetitions", int, None),
           ("--vartheta", "cg.vartheta", float, None)],
    "she": [("--delta2", "she.delta2", float, "+"),
            ("--theta", "she.theta", float, None),
            ("--mollifier", "she.mollifier", str, None),
            ("--dt", "she.dt", float, None),
            ("--n-paths", "she.n_paths", int, None),
            ("--mc-delta2", "she.mc_delta2", float, None),
            ("--n-noise", "she.n_noise", int, None)],
    "report": [("--directory", "report.directory", str, None)],
}

global_flags = [("--seed", "seed", int),
                ("--workers", "workers", int),
                ("--output-dir", "output_dir", str),
                ("--name", "name", str),
                ("--step-law", "step_law", str)]


def _dest(key):
    return "o_" + key.replace(".", "__")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pinsim",
        description="Numerical experiments on disordered pinning and "
                    "directed polymer models in the critical window.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in commands:
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--disorder", default=None, help="disorder law name")
        for flag, key, kind in global_flags:
            p.add_argument(flag, dest=_dest(key), type=kind, default=None)
        for flag, key, kind, nargs in section_flags.get(command, []):
            p.add_argument(flag, dest=_dest(key), type=kind, nargs=nargs,
                           default=None)
    return parser


def overrides_from_args(args):
    """The dotted config keys set on the command line."""
    out = {"command": args.command}
    for name, value in vars(args).items():
        if name.startswith("o_") and value is not None:
            out[name[2:].replace("__", ".")] = value
    if args.disorder is not None:
        out["disorder"] = {"name": args.disorder}
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, overrides_from_args(args))
    except ValidationError as err:
        print(err, file=sys.stderr)
        return 2
    from pinsim.experiments import run
    try:
        manifest = run(config)
    except (ValueError, RuntimeError, MemoryError) as err:
        mylog.error(f"'{config.command}' aborted: {err}")
        return 1
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
