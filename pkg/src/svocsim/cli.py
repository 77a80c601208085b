"""Command line entry point: run a scenario, check the canonical suite, list scenarios."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import acceptance
from .errors import ConfigError, MissingScenario
from .runner import CONTROLLERS, load_scenario, run_scenario

EXIT_OK, EXIT_SIM, EXIT_ACCEPT, EXIT_CONFIG = 0, 1, 2, 3


def _resolve(ref: str):
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    if ref in acceptance.scenario_names():
        return acceptance.canonical_scenario(ref)
    raise ConfigError(f"no scenario file or packaged scenario named {ref!r}")


def cmd_run(args) -> int:
    s = _resolve(args.scenario)
    if args.controller:
        s.controller = args.controller
    if args.dt_plant is not None:
        s.dt_plant = args.dt_plant
        _ = s.substeps  # validates
    t0 = time.perf_counter()
    r = run_scenario(s)
    csv = r.write(args.out)
    print(f"{acceptance.key(s)}: {len(r.data)} ticks in {time.perf_counter() - t0:.1f} s -> {csv}")
    if r.error:
        print(f"simulation error: {r.error}", file=sys.stderr)
        return EXIT_SIM
    return EXIT_OK


def cmd_check(args) -> int:
    if args.suite != "canonical":
        raise ConfigError(f"unknown suite {args.suite!r}")
    out = Path(args.out)
    results = acceptance.run_canonical(progress=lambda k: print(f"running {k}", flush=True))
    for r in results.values():
        r.write(out)
    failed_runs = [k for k, r in results.items() if r.error]
    try:
        report = acceptance.check_acceptance(results)
    except MissingScenario as exc:
        print(f"cannot evaluate: {exc}", file=sys.stderr)
        return EXIT_SIM
    lines = [c.line() for c in report]
    (out / "acceptance.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    if failed_runs:
        return EXIT_SIM
    return EXIT_OK if all(c.passed for c in report) else EXIT_ACCEPT


def cmd_list(args) -> int:
    for name in acceptance.scenario_names():
        s = acceptance.canonical_scenario(name)
        events = ", ".join(f"{e.multipliers} {e.t_start:g}-{e.t_end:g} s" for e in s.grid_events) or "balanced grid"
        print(f"{name:14s} {s.duration:g} s, P* {sum(s.p_star):g} W, {events}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svocsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate one scenario file (or packaged scenario name)")
    run.add_argument("scenario")
    run.add_argument("--out", default="out")
    run.add_argument("--controller", choices=CONTROLLERS)
    run.add_argument("--dt-plant", type=float, dest="dt_plant")
    run.add_argument("--seed-free", action="store_true",
                     help="accepted for compatibility; runs use no random numbers")
    run.set_defaults(func=cmd_run)
    chk = sub.add_parser("check", help="run a scenario suite and evaluate the acceptance criteria")
    chk.add_argument("--suite", default="canonical")
    chk.add_argument("--out", default="out")
    chk.set_defaults(func=cmd_check)
    ls = sub.add_parser("list-scenarios", help="list packaged scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
