"""Command-line entry point: ``hapsrsma`` / ``python -m hapsrsma``."""

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config
from .montecarlo import (MAX_FAILURE_FRACTION, Scenario, antenna_sweep, run_campaign,
                         write_cdf_files, write_convergence, write_summary, write_sweep)

log = logging.getLogger("hapsrsma")


def parse_sizes(text):
    sizes = []
    for item in text.split(","):
        try:
            nx, ny = item.lower().strip().split("x")
            sizes.append((int(nx), int(ny)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad array size {item!r}, expected NxM") from None
    if not sizes:
        raise argparse.ArgumentTypeError("empty size list")
    return sizes


def build_parser():
    p = argparse.ArgumentParser(
        prog="hapsrsma",
        description="Monte Carlo evaluation of angular clustering, RB allocation and "
                    "RSMA max-min power allocation for a multi-beam HAPS downlink.",
    )
    p.add_argument("--config", type=Path, help="key = value file overriding ScenarioConfig defaults")
    p.add_argument("--scenario", choices=["1", "2", "3", "all"],
                   help="scenario to run (default: all, unless only --sweep is given)")
    p.add_argument("--realizations", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--rbs", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--sweep", type=parse_sizes, help="comma list of UPA sizes, e.g. 4x4,8x8,16x16")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--trace", action="store_true", help="write convergence.csv with SCA traces")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {
        "rng_seed": args.seed, "num_ues": args.users, "num_rbs": args.rbs,
        "array_nx": args.nx, "array_ny": args.ny,
    }
    return cfg.replace(**{k: v for k, v in overrides.items() if v is not None})


def _fmt(x):
    return "n/a" if x is None else f"{x:.4f}"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.realizations < 1:
        parser.error("--realizations must be >= 1")
    try:
        config = _config_from_args(args)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))

    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {args.out}: {exc}", file=sys.stderr)
        return 3

    scenario_arg = args.scenario or (None if args.sweep else "all")
    status = 0
    camp = sweep_rows = None
    try:
        if scenario_arg:
            camp = run_campaign(config, Scenario.parse(scenario_arg), args.realizations, args.workers)
            write_cdf_files(camp, args.out)
            if args.trace:
                write_convergence(camp, args.out)
            for sc in camp.scenarios:
                s = camp.summary(sc)
                print(f"scenario {sc.value} ({sc.name}): median SE {_fmt(s['median_se'])} b/s/Hz, "
                      f"mean min-SE {_fmt(s['mean_min_se'])}, converged "
                      f"{_fmt(s['converged_fraction'])}, mean iters {_fmt(s['mean_iterations'])}, "
                      f"failed {s['failed_realizations']}/{args.realizations}")
                if camp.failure_fraction(sc) > MAX_FAILURE_FRACTION:
                    status = 2
        if args.sweep:
            sweep_rows = antenna_sweep(config, args.sweep, args.realizations, args.workers)
            write_sweep(sweep_rows, args.out)
            for nx, ny, avg, failed in sweep_rows:
                print(f"sweep {nx}x{ny}: average min-SE {avg:.4f} b/s/Hz (failed {failed})")
                if failed / args.realizations > MAX_FAILURE_FRACTION:
                    status = 2
        write_summary(args.out / "summary.json", config, camp, sweep_rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if status:
        print(f"error: more than {MAX_FAILURE_FRACTION:.0%} of realizations failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
