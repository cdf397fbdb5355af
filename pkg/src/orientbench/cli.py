"""``orientbench`` command line: ``wahba | frame-ilqr | quad-ilqr | selftest``."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .bench import WORKERS_ENV, run_frame_ilqr, run_quad_ilqr, run_wahba
from .checks import run_all
from .config import load_config


def _reps(raw: str | None):
    if raw is None:
        return None
    return [r.strip() for r in raw.split(",") if r.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file overriding the defaults")
    p.add_argument("--replicates", type=int, help="number of seeded replicates")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--repr", dest="reps", help="comma-separated representations (default: all)")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or 1)")


def _ilqr_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, help="time step [s]")
    p.add_argument("--horizon", type=float, help="horizon length T [s]")
    p.add_argument("--max-iters", type=int, help="iLQR iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orientbench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wahba", help="Gauss-Newton on Wahba's problem in every parameterization")
    _common(p)
    p.add_argument("--n-points", type=int, help="vector pairs per instance")
    p.add_argument("--noise", type=float, help="Gaussian noise on world vectors")
    p.add_argument("--max-iters", type=int, help="Gauss-Newton iteration cap")

    p = sub.add_parser("frame-ilqr", help="iLQR rotating a rigid frame to a random goal")
    _common(p)
    _ilqr_flags(p)

    p = sub.add_parser("quad-ilqr", help="iLQR quadrotor flip")
    _common(p)
    _ilqr_flags(p)

    p = sub.add_parser("selftest", help="run the invariant and oracle checks")
    p.add_argument("--samples", type=int, default=1000, help="random samples for the algebra checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--inject-failure",
        action="store_true",
        help="zero every tolerance so the checks must fail (tests the exit path)",
    )
    return parser


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _apply_ilqr_flags(section, args, cfg) -> None:
    if args.replicates is not None:
        section.replicates = args.replicates
    if args.dt is not None:
        section.dt = args.dt
    if args.horizon is not None:
        section.horizon_s = args.horizon
    if args.max_iters is not None:
        section.max_iters = args.max_iters


def _print_report(report, elapsed: float) -> None:
    print(f"{report.scenario}: {report.replicates} replicates, seed {report.seed}, {elapsed:.1f}s")
    print(f"{'representation':<16}{'median final':>14}{'p25':>12}{'p75':>12}{'median iters':>14}{'converged':>11}")
    for rep in report.representations:
        finals = report.finals(rep)
        p25, p50, p75 = np.percentile(finals, [25, 50, 75])
        iters = np.median(report.iterations(rep))
        conv = np.mean(report.converged(rep))
        print(f"{rep.value:<16}{p50:>14.4e}{p25:>12.3e}{p75:>12.3e}{iters:>14.1f}{conv:>11.0%}")


def cmd_wahba(args) -> int:
    cfg = _config(args)
    wc = cfg.wahba
    for flag, attr in (("replicates", "replicates"), ("n_points", "n_points"), ("noise", "noise_sigma"), ("max_iters", "max_iters")):
        value = getattr(args, flag)
        if value is not None:
            setattr(wc, attr, value)
    t0 = time.perf_counter()
    report = run_wahba(cfg, _reps(args.reps), args.workers)
    return _finish(report, cfg, args, t0)


def cmd_frame(args) -> int:
    cfg = _config(args)
    _apply_ilqr_flags(cfg.frame, args, cfg)
    t0 = time.perf_counter()
    report = run_frame_ilqr(cfg, _reps(args.reps), args.workers)
    return _finish(report, cfg, args, t0)


def cmd_quad(args) -> int:
    cfg = _config(args)
    _apply_ilqr_flags(cfg.quad, args, cfg)
    t0 = time.perf_counter()
    report = run_quad_ilqr(cfg, _reps(args.reps), args.workers)
    return _finish(report, cfg, args, t0)


def _finish(report, cfg, args, t0) -> int:
    elapsed = time.perf_counter() - t0
    paths = report.write(args.out, cfg.record_wall_time)
    _print_report(report, elapsed)
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    t0 = time.perf_counter()
    results = run_all(algebra=args.samples, seed=args.seed)
    failed = 0
    for r in results:
        if args.inject_failure:
            r = type(r)(r.name, r.worst, 0.0, r.samples, r.seconds)
        failed += not r.passed
        print(r.line())
    print(f"{len(results) - failed}/{len(results)} checks passed in {time.perf_counter() - t0:.1f}s")
    return 1 if failed else 0


COMMANDS = {"wahba": cmd_wahba, "frame-ilqr": cmd_frame, "quad-ilqr": cmd_quad, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"orientbench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
