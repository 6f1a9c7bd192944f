import argparse
import json
import math
import os
import sys
import warnings

warnings.filterwarnings("ignore", category=FutureWarning)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"ERROR: {message}")
        self.print_help()
        sys.exit(EXIT_USAGE)


def _add_point_args(p: argparse.ArgumentParser):
    p.add_argument("--theta1", type=float, required=True, help="Angle of the second measurement relative to the first (radians)")
    p.add_argument("--theta2", type=float, required=True, help="Angle of the third measurement relative to the second (radians)")
    p.add_argument("--epsilon", type=float, default=1.0, help="Strength of the middle measurement in [0, 1]. Default is 1 (strong)")
    p.add_argument("--degrees", action="store_true", default=False, help="Read --theta1/--theta2 in degrees")


def _angles(args):
    if args.degrees:
        return math.radians(args.theta1), math.radians(args.theta2)
    return args.theta1, args.theta2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lgsim", description="Consecutive-measurement Leggett-Garg simulator")
    sub = parser.add_subparsers(dest="command", metavar="{point,sweep,sample,check}")
    sub.required = True

    p = sub.add_parser("point", help="Evaluate one (theta1, theta2, epsilon) point")
    _add_point_args(p)
    p.add_argument("--json", action="store_true", default=False, help="Print the report as JSON")

    p = sub.add_parser("sweep", help="Run a config-driven parameter sweep")
    p.add_argument("-c", "--config", type=str, default="configs/sweep.conf", help="Path to the sweep config. Default is 'configs/sweep.conf'")
    p.add_argument("-o", "--output_path", type=str, default=None, help="Override the config's output_path")
    p.add_argument("-f", "--force", action="store_true", default=False, help="Force to overwrite the output file if it exists")
    p.add_argument("-v", "--verbose", action="store_true", default=False, help="Show progress and a summary")

    p = sub.add_parser("sample", help="Monte Carlo sampling of the detector record at one point")
    _add_point_args(p)
    p.add_argument("-n", "--n", type=int, default=100_000, help="Number of shots. Default is 100000")
    p.add_argument("--seed", type=int, default=42, help="Random seed. Default is 42")

    p = sub.add_parser("check", help="Run the invariant suite; exits 2 on any failure")
    p.add_argument("--steps", type=int, default=181, help="Angles per axis on the strong grid. Default is 181")
    p.add_argument("--weak-steps", type=int, default=181, help="Angles per axis on the weak grid. Default is 181")
    p.add_argument("--samples", type=int, default=1_000_000, help="Shots per Monte Carlo repetition. Default is 1000000")
    p.add_argument("--repetitions", type=int, default=100, help="Monte Carlo repetitions. Default is 100")
    p.add_argument("-v", "--verbose", action="store_true", default=False, help="Show progress")
    return parser


def _print_report(report):
    print(f">> theta1={report.theta1:.12g}, theta2={report.theta2:.12g}, epsilon={report.epsilon:.12g}")
    print(f"correlators:  K12={report.K12:.9f}  K23={report.K23:.9f}  K13={report.K13:.9f}")
    print(f"entropies:    S12={report.S12:.9f}  S23={report.S23:.9f}  S13={report.S13:.9f}  "
          f"S2={report.S2:.9f}  S123={report.S123:.9f}")
    print(f"standard:     B1={report.B1:.9f}  B2={report.B2:.9f}  B3={report.B3:.9f}  B4={report.B4:.9f}")
    print(f"entropic:     B1*={report.B1s:.9f}  B2*={report.B2s:.9f}  B3*={report.B3s:.9f}  B1'={report.B1p:.9f}")
    print(f"naive:        S13={report.naive_S13:.9f}  K13={report.naive_K13:.9f}  "
          f"B1*={report.naive_B1s:.9f}  B1={report.naive_B1:.9f}  "
          f"apparent violation: {'yes' if report.apparent_violation else 'no'}")
    print(f"unshared entropy of the system (1 - S2): {report.unshared_entropy:.9f}")
    venn = report.venn
    x, y, z = venn.labels
    print("venn:")
    for label in venn.labels:
        print(f"  S({label}|rest) = {venn.solo_of(label):.9f}")
    for a, b in ((x, y), (x, z), (y, z)):
        print(f"  S({a}:{b}|{next(c for c in venn.labels if c not in (a, b))}) = {venn.pair_cond_of(a, b):.9f}")
    print(f"  S({x}:{y}:{z}) = {venn.center:.9f}")
    if report.consistency_error:
        print(f"WARNING: {report.consistency_error}")


def _cmd_point(args) -> int:
    from lgsim.lgineq import evaluate_point

    theta1, theta2 = _angles(args)
    report = evaluate_point(theta1, theta2, args.epsilon)
    if args.json:
        payload = report.to_dict()
        payload["venn"] = report.venn_dict()
        payload["apparent_violation"] = report.apparent_violation
        print(json.dumps(payload, indent=2))
    else:
        _print_report(report)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    from lgsim.sweep import run_sweep, write_results
    from lgsim.utils.config import load_config

    if not os.path.exists(args.config):
        print(f"ERROR: Config file {args.config} does not exist.")
        return EXIT_IO
    cfg = load_config(args.config)
    if args.output_path:
        fmt = "json" if args.output_path.lower().endswith(".json") else cfg.format
        cfg = replace(cfg, output_path=args.output_path, format=fmt)
    if os.path.exists(cfg.output_path) and not args.force:
        print(f"ERROR: Output file {cfg.output_path} already exists. Use --force to overwrite.")
        return EXIT_USAGE
    rows = run_sweep(cfg, verbose=args.verbose)
    write_results(rows, cfg, verbose=args.verbose)
    return EXIT_OK


def _cmd_sample(args) -> int:
    from lgsim.lgineq import correlators
    from lgsim.quantum.measure import run_protocol
    from lgsim.sampling import RNG_ALGORITHM, sample_outcomes

    theta1, theta2 = _angles(args)
    rho123 = run_protocol(theta1, theta2, args.epsilon).rho123
    est = sample_outcomes(rho123, args.n, args.seed)
    exact = correlators(rho123)
    print(f">> {args.n} shots at theta1={theta1:.12g}, theta2={theta2:.12g}, epsilon={args.epsilon:.12g} "
          f"({RNG_ALGORITHM}, seed={args.seed})")
    print("counts: " + "  ".join(f"{cell:03b}={count}" for cell, count in enumerate(est.counts)))
    for name, k_hat, err, k in zip(("K12", "K23", "K13"), est.K_hat, est.stderr, exact):
        print(f"{name}: {k_hat:+.6f} +/- {err:.6f}  (exact {k:+.9f})")
    print("plug-in entropies: " + "  ".join(f"{k}={v:.6f}" for k, v in est.shannon_hat.items()))
    return EXIT_OK


def _cmd_check(args) -> int:
    from lgsim.checks import run_checks, summarize_checks

    results = run_checks(
        steps=args.steps,
        weak_steps=args.weak_steps,
        samples=args.samples,
        repetitions=args.repetitions,
        verbose=args.verbose,
    )
    if not args.verbose:
        for r in results:
            print(r)
    summary = summarize_checks(results)
    print(f">> {summary['passed']} passed, {summary['failed']} failed")
    return EXIT_OK if summary["failed"] == 0 else EXIT_INVARIANT


COMMANDS = {
    "point": _cmd_point,
    "sweep": _cmd_sweep,
    "sample": _cmd_sample,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    from lgsim.utils.common import InvariantError
    from lgsim.utils.config import ConfigError

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"ERROR: config: {e}")
        return EXIT_USAGE
    except InvariantError as e:
        print(f"ERROR: invariant violated: {e}")
        return EXIT_INVARIANT
    except ValueError as e:
        print(f"ERROR: {e}")
        return EXIT_USAGE
    except OSError as e:
        print(f"ERROR: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
