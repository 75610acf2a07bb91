"""Command-line entry point.

Subcommands::

    vesselnav run --scenario PATH|NAME [--out DIR] [--seed N] [--dt S]
                  [--duration S] [--disable-vessel] [--disable-mariner] [--threads N]
    vesselnav bench [--points N] [--needles M] [--iterations K] [--seed N] [--threads N]
    vesselnav scenarios [--out DIR]

Exit codes of ``run``:

    0  goal reached
    1  unexpected internal error
    2  configuration error (bad scenario file, bad flag value, no global path)
    3  collision
    4  stuck
    5  timeout

``bench`` and ``scenarios`` exit 0 on success and 2 on bad input or an
unwritable output directory. The default output directory is taken from
``$VESSELNAV_OUT`` and falls back to ``./vesselnav_out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import _kernels
from .bench import run_bench
from .planning import NoPathError
from .scenario import Scenario, ScenarioError
from .scenarios import BUILTIN, write_suite
from .sim import run_episode, write_outputs

log = logging.getLogger("vesselnav")

EXIT_REACHED = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CODES = {"reached": 0, "collision": 3, "stuck": 4, "timeout": 5}
OUT_ENV = "VESSELNAV_OUT"


def _default_out() -> str:
    return os.environ.get(OUT_ENV, "vesselnav_out")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vesselnav", description="Point-cloud barrier navigation simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one episode")
    run.add_argument("--scenario", required=True, help=f"scenario YAML file or built-in name {sorted(BUILTIN)}")
    run.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./vesselnav_out)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--dt", type=_positive_float, default=None, help="integrator step override [s]")
    run.add_argument("--duration", type=_positive_float, default=None, help="episode length override [s]")
    run.add_argument("--disable-vessel", action="store_true", help="skip the barrier filter")
    run.add_argument("--disable-mariner", action="store_true", help="track global waypoints directly")
    run.add_argument("--threads", type=_positive_int, default=None)

    bench = sub.add_parser("bench", help="time the point-cloud kernels")
    bench.add_argument("--points", type=_positive_int, default=57_600)
    bench.add_argument("--needles", type=_positive_int, default=100)
    bench.add_argument("--iterations", type=_positive_int, default=50)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--threads", type=_positive_int, default=None)
    bench.add_argument("--scaling", action="store_true", help="also time 2x points and report the ratio")
    bench.add_argument("--out", default=None, help="also write the report to this JSON file")

    sc = sub.add_parser("scenarios", help="write the built-in scenario files")
    sc.add_argument("--out", default=None)
    return p


def _load_scenario(spec: str) -> Scenario:
    path = Path(spec)
    if path.is_file():
        return Scenario.load(path)
    if spec in BUILTIN:
        return BUILTIN[spec]()
    raise ScenarioError("scenario", f"no such file or built-in scenario: {spec}")


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if args.seed is not None:
        sc.seed = args.seed
    if args.dt is not None:
        try:
            sc.rates = dataclasses.replace(sc.rates, sim_dt=args.dt)
        except ValueError as exc:
            raise ScenarioError("--dt", str(exc)) from exc
    if args.duration is not None:
        sc.duration_s = args.duration
    sc.validate()
    return sc


def cmd_run(args) -> int:
    try:
        sc = _apply_overrides(_load_scenario(args.scenario), args)
    except (ScenarioError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    vessel_on, mariner_on = not args.disable_vessel, not args.disable_mariner
    try:
        result = run_episode(sc, vessel_on, mariner_on, threads=args.threads)
    except NoPathError as exc:
        print(f"config error: no global path: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stem = sc.name + ("" if vessel_on else "_no_vessel") + ("" if mariner_on else "_no_mariner")
    csv_path, metrics_path = write_outputs(result, args.out or _default_out(), stem)
    m = result.metrics
    print(f"{sc.name}: {m['outcome']}  t={m['time_to_goal']}  path={m['path_length']:.3f} m  "
          f"min_alpha={m['min_true_clearance_alpha']:.4f}")
    print(f"wrote {csv_path} and {metrics_path}")
    return EXIT_CODES[m["outcome"]]


def cmd_bench(args) -> int:
    report = run_bench(args.points, args.needles, args.iterations, args.seed, args.threads)
    if args.scaling:
        big = run_bench(2 * args.points, args.needles, args.iterations, args.seed, args.threads)
        report["scaling"] = {
            "n_points_2x": 2 * args.points,
            "evaluate_cbf_ratio": big["evaluate_cbf"]["median_ms"] / report["evaluate_cbf"]["median_ms"],
            "mariner_ratio": big["mariner"]["median_ms"] / report["mariner"]["median_ms"],
        }
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    return 0


def cmd_scenarios(args) -> int:
    out = args.out or _default_out()
    try:
        paths = write_suite(out)
    except OSError as exc:
        print(f"error: cannot write scenarios to {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "threads", None) is not None:
        _kernels.set_threads(args.threads)
    handlers = {"run": cmd_run, "bench": cmd_bench, "scenarios": cmd_scenarios}
    try:
        return handlers[args.command](args)
    except Exception:  # noqa: BLE001 - last-resort handler maps to the documented exit code
        log.exception("unexpected error")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
