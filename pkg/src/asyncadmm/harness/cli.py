"""Command-line entry point: ``asyncadmm {run,reproduce,check-condition,selftest}``."""

import argparse
import sys

from .. import analysis
from ..errors import ConfigError, NoFeasibleBeta
from .config import load_config
from .experiment import run_experiment
from .reproduce import FIGURES, SCALES, reproduce
from .selftest import selftest


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    res = run_experiment(cfg, output_dir=args.output)
    print("\n".join(res.summary))
    print(f"wrote {res.output_dir}/run.csv and summary.txt")
    return res.status


def _cmd_reproduce(args):
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    lines, curves = reproduce(args.figure, args.scale, args.output, seeds=seeds, beta=args.beta,
                              workers=args.workers, iterations=args.iterations)
    print("\n".join(lines))
    for label, paths in curves.items():
        print(f"{label}: {len(paths)} csv file(s)")
    return 0


def _cmd_check(args):
    if (args.gamma is None) == (args.beta is None):
        print("give exactly one of --gamma or --beta", file=sys.stderr)
        return 2
    if args.C is None:
        if args.fraction is None:
            print("give --C or --fraction", file=sys.stderr)
            return 2
        C = args.fraction * args.p
    else:
        C = args.C
    if args.beta is not None:
        rep = analysis.check_beta_condition(args.beta, args.L, args.ell, args.p, C, d=args.d,
                                            num_active=args.num_active)
    else:
        rep = analysis.check_gamma_condition(args.gamma, args.L, args.ell, args.p, C)
    print("\n".join(rep.lines()))
    if args.minimal_beta:
        try:
            print(f"minimal beta in [max(L, 1e-6), 1e6] = "
                  f"{analysis.minimal_feasible_beta(args.L, args.ell, C / args.p)!r}")
        except NoFeasibleBeta as exc:
            print(str(exc))
    return 0 if rep.feasible else 1


def build_parser():
    p = argparse.ArgumentParser(prog="asyncadmm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("config")
    r.add_argument("--output", help="output directory (overrides the config)")
    r.set_defaults(func=_cmd_run)

    rp = sub.add_parser("reproduce", help="emit the CSV bundle for one figure")
    rp.add_argument("figure", choices=FIGURES)
    rp.add_argument("--scale", choices=SCALES, default="desk")
    rp.add_argument("--output")
    rp.add_argument("--seeds", help="comma-separated seed list")
    rp.add_argument("--beta", type=float)
    rp.add_argument("--iterations", type=int)
    rp.add_argument("--workers", type=int, default=1)
    rp.set_defaults(func=_cmd_reproduce)

    c = sub.add_parser("check-condition", help="evaluate the step-size condition")
    c.add_argument("--gamma", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--L", type=float, required=True)
    c.add_argument("--ell", type=float, required=True)
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--C", type=float, help="updated coordinates per step")
    c.add_argument("--fraction", type=float, help="|C|/p, alternative to --C")
    c.add_argument("--d", type=int)
    c.add_argument("--num-active", type=int)
    c.add_argument("--minimal-beta", action="store_true")
    c.set_defaults(func=_cmd_check)

    s = sub.add_parser("selftest", help="run the built-in property checks")
    s.add_argument("--corrupt-layout", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=lambda a: selftest(corrupt_layout=a.corrupt_layout))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
